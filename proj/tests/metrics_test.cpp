#include "ragmut/metrics.hpp"

#include <gtest/gtest.h>

#include "support/metric_oracle.hpp"

using namespace ragmut;

namespace {

BugContext ctx_of(const oracle::Bug& b, const std::string& id = "bug") {
    BugContext c;
    c.bug_id = id;
    c.matrix = oracle::to_matrix(b.kills, b.revealing.size());
    for (std::size_t t = 0; t < b.revealing.size(); ++t)
        if (b.revealing[t]) c.revealing_tests.insert(oracle::col_id(t));
    return c;
}

oracle::Bug bug(oracle::Table k, std::vector<int> rev) { return {std::move(k), std::move(rev)}; }

} // namespace

TEST(MutationScore, Examples) {
    EXPECT_DOUBLE_EQ(mutation_score(oracle::to_matrix({{1, 0}, {0, 1}, {1, 1}, {0, 0}}, 2)), 0.75);
    EXPECT_DOUBLE_EQ(mutation_score(oracle::to_matrix({{0, 0}, {0, 0}}, 2)), 0.0);
    EXPECT_DOUBLE_EQ(mutation_score(oracle::to_matrix({{1, 0}, {0, 1}}, 2)), 1.0);
    EXPECT_THROW(mutation_score(oracle::to_matrix({}, 2)), Error);
}

TEST(Ochiai, Examples) {
    EXPECT_DOUBLE_EQ(ochiai({"t1", "t2"}, {"t2", "t3"}), 0.5);
    EXPECT_DOUBLE_EQ(ochiai({"t1", "t2"}, {"t1", "t2"}), 1.0);
    EXPECT_DOUBLE_EQ(ochiai({"t1"}, {"t2"}), 0.0);
    EXPECT_DOUBLE_EQ(ochiai({}, {"t2"}), 0.0);
    EXPECT_DOUBLE_EQ(ochiai({"t1"}, {}), 0.0);
}

TEST(Ochiai, SymmetricAndBounded) {
    std::mt19937 rng(8);
    for (int i = 0; i < 300; ++i) {
        std::set<std::string> a, b;
        for (int t = 0; t < 8; ++t) {
            if (rng() % 2) a.insert("t" + std::to_string(t));
            if (rng() % 2) b.insert("t" + std::to_string(t));
        }
        EXPECT_EQ(ochiai(a, b), ochiai(b, a));
        EXPECT_GE(ochiai(a, b), 0.0);
        EXPECT_LE(ochiai(a, b), 1.0);
        if (!a.empty()) {
            EXPECT_DOUBLE_EQ(ochiai(a, a), 1.0);
        }
    }
}

TEST(BugOchiai, Examples) {
    EXPECT_DOUBLE_EQ(*bug_ochiai(ctx_of(bug({{1, 0}, {0, 1}}, {1, 0}))), 0.5);
    EXPECT_DOUBLE_EQ(*bug_ochiai(ctx_of(bug({{1, 1, 0}}, {1, 1, 0}))), 1.0);
    EXPECT_FALSE(bug_ochiai(ctx_of(bug({}, {1, 0}))));
}

TEST(BugOchiai, FiveRandomMutantsOnSixTests) {
    std::mt19937 rng(12);
    for (int i = 0; i < 50; ++i) {
        oracle::Bug b;
        b.kills.assign(5, std::vector<int>(6));
        for (auto& row : b.kills)
            for (auto& c : row) c = rng() % 2;
        b.revealing = {1, 0, 0, 1, 0, rng() % 2 ? 1 : 0};
        EXPECT_EQ(bug_ochiai(ctx_of(b)), oracle::bug_ochiai(b));
    }
}

TEST(Aoc, Examples) {
    EXPECT_NEAR(*aoc({0.2, 0.4}), 0.3, 1e-15);
    EXPECT_DOUBLE_EQ(*aoc({0.7}), 0.7);
    EXPECT_DOUBLE_EQ(*aoc({0.5, std::nullopt}), 0.5);
    EXPECT_FALSE(aoc({std::nullopt}));
}

TEST(Aoc, TenRandomBugs) {
    std::mt19937 rng(13);
    std::vector<oracle::Bug> bugs;
    std::vector<std::optional<double>> vals;
    for (int i = 0; i < 10; ++i) {
        bugs.push_back(oracle::random_bug(rng, 8, 8, true));
        vals.push_back(bug_ochiai(ctx_of(bugs.back())));
    }
    EXPECT_EQ(aoc(vals), oracle::aoc(bugs));
}

TEST(RealBugDetection, Examples) {
    // Two revealing tests, only one kills something.
    auto one = ctx_of(bug({{1, 0, 0}}, {1, 1, 0}));
    EXPECT_DOUBLE_EQ(real_bug_detection({one}).per_bug[0], 0.5);

    auto all = ctx_of(bug({{1, 1}}, {1, 1}));
    auto r = real_bug_detection({all});
    EXPECT_DOUBLE_EQ(r.macro, 1.0);
    EXPECT_DOUBLE_EQ(r.micro, 1.0);

    auto b1 = ctx_of(bug({{1, 0}}, {1, 1}), "b1");
    auto b2 = ctx_of(bug({{1, 1}}, {1, 1}), "b2");
    auto b3 = ctx_of(bug({{0, 0, 0, 0}}, {1, 1, 1, 1}), "b3");
    auto agg = real_bug_detection({b1, b2, b3});
    EXPECT_DOUBLE_EQ(agg.macro, 0.5);
    EXPECT_DOUBLE_EQ(agg.micro, 3.0 / 8.0);

    auto none = ctx_of(bug({{1}}, {0}));
    EXPECT_THROW(real_bug_detection({none}), Error);
}

TEST(Coupling, Examples) {
    EXPECT_DOUBLE_EQ(coupling_rate(ctx_of(bug({{0, 1}, {0, 0}}, {1, 0}))), 0.0);
    EXPECT_DOUBLE_EQ(coupling_rate(ctx_of(bug({{1, 1}, {1, 0}}, {1, 0}))), 1.0);
    auto c = ctx_of(bug({{1, 0}, {0, 1}, {1, 1}, {0, 0}, {0, 1}}, {1, 0}));
    EXPECT_DOUBLE_EQ(coupling_rate(c), 0.4);
    EXPECT_EQ(coupled_mutants(c), (std::vector<std::string>{"m000", "m002"}));
}

TEST(HighSimilarity, Examples) {
    EXPECT_EQ(high_similarity_count({0.79, 0.8, 0.95}), 2u);
    EXPECT_EQ(high_similarity_count({}), 0u);
    std::mt19937 rng(14);
    std::vector<std::optional<double>> vals;
    std::size_t expect = 0;
    for (int i = 0; i < 100; ++i) {
        const double v = std::uniform_real_distribution<double>(0, 1)(rng);
        vals.push_back(v);
        if (v >= 0.8) ++expect;
    }
    EXPECT_EQ(high_similarity_count(vals), expect);
}

TEST(MutationScore, ColumnPermutationInvariant) {
    std::mt19937 rng(15);
    for (int i = 0; i < 50; ++i) {
        auto b = oracle::random_bug(rng, 10, 10);
        auto base = mutation_score(oracle::to_matrix(b.kills, b.revealing.size()));
        std::vector<std::size_t> perm(b.revealing.size());
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        oracle::Table k2 = b.kills;
        for (std::size_t m = 0; m < k2.size(); ++m)
            for (std::size_t t = 0; t < perm.size(); ++t) k2[m][t] = b.kills[m][perm[t]];
        EXPECT_EQ(mutation_score(oracle::to_matrix(k2, perm.size())), base);
    }
}

TEST(Effectiveness, MatchesOracleOnRandomMatrices) {
    std::mt19937 rng(16);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<oracle::Bug> bugs;
        std::vector<BugContext> ctxs;
        const int nb = std::uniform_int_distribution<int>(1, 5)(rng);
        for (int i = 0; i < nb; ++i) {
            bugs.push_back(oracle::random_bug(rng, 50, 50));
            ctxs.push_back(ctx_of(bugs.back(), "b" + std::to_string(i)));
        }
        auto rep = effectiveness(ctxs);
        for (int i = 0; i < nb; ++i) {
            EXPECT_EQ(*rep.bugs[static_cast<std::size_t>(i)].mutation_score, oracle::ms(bugs[static_cast<std::size_t>(i)].kills));
            EXPECT_EQ(*rep.bugs[static_cast<std::size_t>(i)].coupling_rate, oracle::coupling(bugs[static_cast<std::size_t>(i)]));
            EXPECT_EQ(rep.bugs[static_cast<std::size_t>(i)].ochiai, oracle::bug_ochiai(bugs[static_cast<std::size_t>(i)]));
        }
        EXPECT_EQ(rep.aoc, oracle::aoc(bugs));
        auto [macro, micro] = oracle::rbd(bugs);
        EXPECT_EQ(rep.rbd.macro, macro);
        EXPECT_EQ(rep.rbd.micro, micro);
    }
}

TEST(Effectiveness, BugWithoutMutantsExcludedFromAoc) {
    auto a = ctx_of(bug({{1, 0}}, {1, 0}), "a");
    auto b = ctx_of(bug({}, {1, 0}), "b");
    auto rep = effectiveness({a, b});
    EXPECT_DOUBLE_EQ(*rep.aoc, 1.0);
    EXPECT_EQ(rep.bugs_without_mutants, 1u);
    EXPECT_FALSE(rep.bugs[1].mutation_score);
    EXPECT_DOUBLE_EQ(*rep.mutation_score, 1.0);
}

TEST(Effectiveness, RevealingTestMustBeInMatrix) {
    auto c = ctx_of(bug({{1}}, {1}));
    c.revealing_tests.insert("zzz");
    EXPECT_THROW(effectiveness({c}), Error);
}
