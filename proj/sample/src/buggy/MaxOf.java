public static int maxOf(int[] xs) {
    int best = xs[0];
    for (int i = 1; i < xs.length; i++) {
        if (xs[i] < best) {
            best = xs[i];
        }
    }
    return best;
}
