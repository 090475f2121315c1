#include "ragmut/tcp.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "support/metric_oracle.hpp"
#include "support/tcp_oracle.hpp"

using namespace ragmut;

namespace {

std::vector<int> columns(const PrioritizedSuite& s, const KillMatrix& km) {
    std::vector<int> out;
    for (const auto& t : s.order) out.push_back(static_cast<int>(km.test_index(t)));
    return out;
}

std::vector<bool> resets(const PrioritizedSuite& s) {
    std::vector<bool> out;
    for (const auto& st : s.steps) out.push_back(st.reset_before);
    return out;
}

std::vector<std::string> ids(std::initializer_list<int> cols) {
    std::vector<std::string> out;
    for (int c : cols) out.push_back(oracle::col_id(static_cast<std::size_t>(c)));
    return out;
}

oracle::Table random_table(std::mt19937& rng, std::size_t m, std::size_t t) {
    oracle::Table k(m, std::vector<int>(t));
    std::bernoulli_distribution cell(std::uniform_real_distribution<double>(0.1, 0.7)(rng));
    for (auto& row : k)
        for (auto& c : row) c = cell(rng);
    return k;
}

// Three mutants, three tests; scored by hand:
//   t0 kills {m0,m1}: 2 kills, 2 pairs
//   t1 kills {m0,m1,m2}: 3 kills, 0 pairs
//   t2 kills {m2}: 1 kill, 2 pairs
const oracle::Table kHand = {{1, 1, 0}, {1, 1, 0}, {0, 1, 1}};

} // namespace

TEST(Grk, IdentityTieBrokenById) {
    auto km = oracle::to_matrix({{1, 0}, {0, 1}}, 2);
    EXPECT_EQ(grk(km).order, ids({0, 1}));
}

TEST(Grk, KillAllFirst) {
    auto km = oracle::to_matrix({{0, 0, 1}, {1, 0, 1}, {0, 0, 1}}, 3);
    EXPECT_EQ(grk(km).order.front(), oracle::col_id(2));
}

TEST(Grk, AllZeroIsIdOrder) {
    auto km = oracle::to_matrix({{0, 0, 0}, {0, 0, 0}}, 3);
    EXPECT_EQ(grk(km).order, ids({0, 1, 2}));
    EXPECT_EQ(grd(km).order, ids({0, 1, 2}));
    EXPECT_EQ(hyb(km).order, ids({0, 1, 2}));
}

TEST(Grk, HandTraceWithReset) {
    auto s = grk(oracle::to_matrix(kHand, 3));
    EXPECT_EQ(s.order, ids({1, 0, 2}));
    EXPECT_EQ(s.steps[0].additional_kills, 3u);
    EXPECT_TRUE(s.steps[1].reset_before);
    EXPECT_EQ(s.steps[1].additional_kills, 2u);
}

TEST(Grd, ComplementaryColumnsSplitFirst) {
    // t0 kills both (splits nothing); t1 kills only m0 (splits the pair).
    auto km = oracle::to_matrix({{1, 1}, {1, 0}}, 2);
    auto s = grd(km);
    EXPECT_EQ(s.order.front(), oracle::col_id(1));
    EXPECT_EQ(s.steps[0].additional_pairs, 1u);
}

TEST(Grd, IdenticalRowsIdOrder) {
    auto km = oracle::to_matrix({{1, 0, 1}, {1, 0, 1}}, 3);
    EXPECT_EQ(grd(km).order, ids({0, 1, 2}));
}

TEST(Grd, DiffersFromGrkOnHandMatrix) {
    auto km = oracle::to_matrix(kHand, 3);
    EXPECT_EQ(grd(km).order, ids({0, 2, 1}));
    EXPECT_NE(grd(km).order, grk(km).order);
}

TEST(Grd, ExhaustiveThreeByThreeHasDisagreements) {
    int differing = 0;
    for (int bits = 0; bits < 512; ++bits) {
        oracle::Table k(3, std::vector<int>(3));
        for (int i = 0; i < 9; ++i) k[static_cast<std::size_t>(i / 3)][static_cast<std::size_t>(i % 3)] = (bits >> i) & 1;
        auto km = oracle::to_matrix(k, 3);
        differing += grd(km).order != grk(km).order;
    }
    EXPECT_GT(differing, 0);
}

TEST(Hyb, HandScoredHalfWeight) {
    auto km = oracle::to_matrix(kHand, 3);
    auto s = hyb(km, 0.5);
    EXPECT_EQ(s.order, ids({0, 1, 2}));
    EXPECT_DOUBLE_EQ(s.steps[0].score, 0.5 * 2.0 / 3.0 + 0.5 * 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(s.steps[1].score, 0.5 * 1.0 / 3.0);
}

TEST(Hyb, DegeneratesAtEndpoints) {
    std::mt19937 rng(21);
    for (int i = 0; i < 100; ++i) {
        auto km = oracle::to_matrix(random_table(rng, 10, 10), 10);
        EXPECT_EQ(hyb(km, 1.0).order, grk(km).order);
        EXPECT_EQ(hyb(km, 0.0).order, grd(km).order);
    }
}

TEST(Hyb, OmegaOutOfRange) {
    auto km = oracle::to_matrix(kHand, 3);
    EXPECT_THROW(hyb(km, 1.5), Error);
    EXPECT_THROW(hyb(km, -0.1), Error);
}

TEST(Greedy, EveryStepMaximalOnRandomMatrices) {
    std::mt19937 rng(22);
    for (int i = 0; i < 300; ++i) {
        const std::size_t m = std::uniform_int_distribution<std::size_t>(1, 6)(rng);
        const std::size_t t = std::uniform_int_distribution<std::size_t>(1, 6)(rng);
        auto k = random_table(rng, m, t);
        auto km = oracle::to_matrix(k, t);
        for (auto [s, w] : {std::pair{Strategy::GRK, 0.5}, {Strategy::GRD, 0.5}, {Strategy::HYB, 0.5}, {Strategy::HYB, 0.3}}) {
            auto suite = prioritize(km, s, w);
            EXPECT_EQ(oracle::check_greedy(s, w, k, t, columns(suite, km), resets(suite)), "");
            auto sorted = suite.order;
            std::sort(sorted.begin(), sorted.end());
            EXPECT_EQ(sorted, km.tests());
        }
    }
}

TEST(Apfd, HandCase) {
    std::vector<std::string> order{"a", "b", "c", "d", "e"};
    EXPECT_EQ(apfd(order, {{"a"}, {"c"}}), 0.7);
}

TEST(Apfd, Boundaries) {
    EXPECT_EQ(apfd({"a"}, {{"a"}}), 0.5);
    std::vector<std::string> order{"a", "b", "c", "d"};
    EXPECT_EQ(apfd(order, {{"a"}, {"a", "b"}, {"a"}}), 7.0 / 8.0);
    EXPECT_EQ(apfd(order, {{"d"}, {"d"}}), 1.0 / 8.0);
    EXPECT_THROW(apfd(order, {{"z"}}), Error);
    EXPECT_THROW(apfd({}, {{"a"}}), Error);
}

TEST(Apfd, WithinBoundsForRandomOrderings) {
    std::mt19937 rng(23);
    for (int i = 0; i < 500; ++i) {
        const int n = std::uniform_int_distribution<int>(1, 20)(rng);
        std::vector<std::string> order;
        for (int t = 0; t < n; ++t) order.push_back("t" + std::to_string(t));
        std::shuffle(order.begin(), order.end(), rng);
        std::vector<std::set<std::string>> det(static_cast<std::size_t>(std::uniform_int_distribution<int>(1, 5)(rng)));
        for (auto& d : det) d.insert("t" + std::to_string(std::uniform_int_distribution<int>(0, n - 1)(rng)));
        const double v = apfd(order, det);
        EXPECT_GE(v, 1.0 / (2.0 * n));
        EXPECT_LE(v, (2.0 * n - 1.0) / (2.0 * n));
    }
}
