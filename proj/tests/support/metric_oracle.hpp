#pragma once

// Brute-force reference implementations over plain 0/1 tables, written
// without the library's matrix or set types.

#include <cmath>
#include <optional>
#include <random>
#include <vector>

#include "ragmut/execution.hpp"

namespace ragmut::oracle {

using Table = std::vector<std::vector<int>>; // [mutant][test]

struct Bug {
    Table kills;
    std::vector<int> revealing; // 0/1 per test column
};

inline double ms(const Table& k) {
    int killed = 0;
    for (const auto& row : k) {
        int any = 0;
        for (int c : row) any |= c;
        killed += any;
    }
    return double(killed) / double(k.size());
}

inline double ochiai_row(const std::vector<int>& row, const std::vector<int>& rev) {
    int a = 0, b = 0, both = 0;
    for (std::size_t t = 0; t < row.size(); ++t) {
        a += row[t];
        b += rev[t];
        both += row[t] & rev[t];
    }
    if (a == 0 || b == 0) return 0.0;
    return double(both) / std::sqrt(double(a) * double(b));
}

inline std::optional<double> bug_ochiai(const Bug& b) {
    if (b.kills.empty()) return std::nullopt;
    double s = 0;
    for (const auto& row : b.kills) s += ochiai_row(row, b.revealing);
    return s / double(b.kills.size());
}

inline std::optional<double> aoc(const std::vector<Bug>& bugs) {
    double s = 0;
    int n = 0;
    for (const auto& b : bugs)
        if (auto v = bug_ochiai(b)) {
            s += *v;
            ++n;
        }
    if (n == 0) return std::nullopt;
    return s / n;
}

inline double coupling(const Bug& b) {
    int c = 0;
    for (const auto& row : b.kills) {
        int hit = 0;
        for (std::size_t t = 0; t < row.size(); ++t) hit |= row[t] & b.revealing[t];
        c += hit;
    }
    return double(c) / double(b.kills.size());
}

inline std::pair<double, double> rbd(const std::vector<Bug>& bugs) {
    double macro = 0;
    int hit_all = 0, rev_all = 0;
    for (const auto& b : bugs) {
        int hit = 0, rev = 0;
        for (std::size_t t = 0; t < b.revealing.size(); ++t) {
            if (!b.revealing[t]) continue;
            ++rev;
            int any = 0;
            for (const auto& row : b.kills) any |= row[t];
            hit += any;
        }
        macro += double(hit) / double(rev);
        hit_all += hit;
        rev_all += rev;
    }
    return {macro / double(bugs.size()), double(hit_all) / double(rev_all)};
}

inline std::string col_id(std::size_t t) {
    std::string s = std::to_string(t);
    return "t" + std::string(3 - s.size(), '0') + s;
}
inline std::string row_id(std::size_t m) {
    std::string s = std::to_string(m);
    return "m" + std::string(3 - s.size(), '0') + s;
}

/// Zero-padded ids keep sorted order equal to table order.
inline KillMatrix to_matrix(const Table& k, std::size_t tests) {
    std::vector<std::string> ms, ts;
    for (std::size_t m = 0; m < k.size(); ++m) ms.push_back(row_id(m));
    for (std::size_t t = 0; t < tests; ++t) ts.push_back(col_id(t));
    KillMatrix km(ms, ts);
    for (std::size_t m = 0; m < k.size(); ++m)
        for (std::size_t t = 0; t < tests; ++t) km.set(m, t, k[m][t] != 0);
    return km;
}

inline Bug random_bug(std::mt19937& rng, int max_m, int max_t, bool allow_empty = false) {
    const int nm = std::uniform_int_distribution<int>(allow_empty ? 0 : 1, max_m)(rng);
    const int nt = std::uniform_int_distribution<int>(1, max_t)(rng);
    const double density = std::uniform_real_distribution<double>(0.0, 0.6)(rng);
    std::bernoulli_distribution cell(density);
    Bug b;
    b.kills.assign(static_cast<std::size_t>(nm), std::vector<int>(static_cast<std::size_t>(nt)));
    for (auto& row : b.kills)
        for (auto& c : row) c = cell(rng);
    b.revealing.assign(static_cast<std::size_t>(nt), 0);
    for (auto& r : b.revealing) r = std::bernoulli_distribution(0.3)(rng);
    b.revealing[std::uniform_int_distribution<std::size_t>(0, static_cast<std::size_t>(nt) - 1)(rng)] = 1;
    return b;
}

} // namespace ragmut::oracle
