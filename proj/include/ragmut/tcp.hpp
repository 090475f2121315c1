#pragma once

#include <limits>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ragmut/error.hpp"
#include "ragmut/execution.hpp"

namespace ragmut {

enum class Strategy { GRK, GRD, HYB };

inline std::string_view to_string(Strategy s) {
    switch (s) {
    case Strategy::GRK: return "grk";
    case Strategy::GRD: return "grd";
    case Strategy::HYB: return "hyb";
    }
    return "?";
}

struct PrioritizationStep {
    std::string test;
    std::size_t additional_kills = 0;
    std::size_t additional_pairs = 0;
    double score = 0;
    bool reset_before = false; // coverage was cleared before this pick
};

struct PrioritizedSuite {
    Strategy strategy = Strategy::GRK;
    double omega = 0.5;
    std::vector<std::string> order;
    std::vector<PrioritizationStep> steps;
};

/// Coverage state shared by the greedy strategies: which mutants are
/// already killed and which mutant pairs already distinguished.
class GreedyState {
public:
    explicit GreedyState(const KillMatrix& km)
        : km_(km), killed_(km.rows(), 0), split_(km.rows() * km.rows(), 0) {}

    std::size_t additional_kills(std::size_t t) const {
        std::size_t n = 0;
        for (std::size_t m = 0; m < km_.rows(); ++m) n += !killed_[m] && km_.kill(m, t);
        return n;
    }

    std::size_t additional_pairs(std::size_t t) const {
        std::size_t n = 0;
        for (std::size_t i = 0; i < km_.rows(); ++i)
            for (std::size_t j = i + 1; j < km_.rows(); ++j)
                n += !split_[i * km_.rows() + j] && km_.kill(i, t) != km_.kill(j, t);
        return n;
    }

    void apply(std::size_t t) {
        for (std::size_t m = 0; m < km_.rows(); ++m)
            if (km_.kill(m, t)) killed_[m] = 1;
        for (std::size_t i = 0; i < km_.rows(); ++i)
            for (std::size_t j = i + 1; j < km_.rows(); ++j)
                if (km_.kill(i, t) != km_.kill(j, t)) split_[i * km_.rows() + j] = 1;
    }

    void reset() {
        std::fill(killed_.begin(), killed_.end(), 0);
        std::fill(split_.begin(), split_.end(), 0);
    }

    bool empty() const {
        for (char c : killed_)
            if (c) return false;
        for (char c : split_)
            if (c) return false;
        return true;
    }

private:
    const KillMatrix& km_;
    std::vector<char> killed_;
    std::vector<char> split_;
};

inline std::size_t mutant_pair_count(const KillMatrix& km) { return km.rows() * (km.rows() - (km.rows() > 0)) / 2; }

/// Step score of a candidate. HYB scales both addends to [0, 1] before
/// weighting so omega is scale-free.
inline double step_score(Strategy s, double omega, std::size_t kills, std::size_t pairs, std::size_t n_mutants,
                         std::size_t n_pairs) {
    switch (s) {
    case Strategy::GRK: return static_cast<double>(kills);
    case Strategy::GRD: return static_cast<double>(pairs);
    case Strategy::HYB: {
        const double k = n_mutants ? static_cast<double>(kills) / static_cast<double>(n_mutants) : 0.0;
        const double p = n_pairs ? static_cast<double>(pairs) / static_cast<double>(n_pairs) : 0.0;
        return omega * k + (1.0 - omega) * p;
    }
    }
    return 0;
}

/// Additional-greedy prioritization. Ties go to the smallest test id; when
/// no remaining test scores above zero, coverage is reset and selection
/// continues, so every test is ordered.
inline PrioritizedSuite prioritize(const KillMatrix& km, Strategy s, double omega = 0.5) {
    if (km.cols() == 0) throw Error("cannot prioritize an empty test suite");
    if (s == Strategy::HYB && !(omega >= 0.0 && omega <= 1.0)) throw Error("omega must be within [0, 1]");
    PrioritizedSuite out;
    out.strategy = s;
    out.omega = omega;
    GreedyState st(km);
    const std::size_t n_pairs = mutant_pair_count(km);
    std::vector<char> used(km.cols(), 0);

    auto best_pick = [&](PrioritizationStep& step) {
        std::size_t best = km.cols();
        double best_score = -1;
        for (std::size_t t = 0; t < km.cols(); ++t) {
            if (used[t]) continue;
            const auto k = st.additional_kills(t), p = st.additional_pairs(t);
            const double sc = step_score(s, omega, k, p, km.rows(), n_pairs);
            if (sc > best_score) {
                best = t;
                best_score = sc;
                step.additional_kills = k;
                step.additional_pairs = p;
                step.score = sc;
            }
        }
        return best;
    };

    for (std::size_t i = 0; i < km.cols(); ++i) {
        PrioritizationStep step;
        std::size_t pick = best_pick(step);
        if (step.score <= 0 && !st.empty()) {
            st.reset();
            step = PrioritizationStep{};
            step.reset_before = true;
            pick = best_pick(step);
        }
        used[pick] = 1;
        st.apply(pick);
        step.test = km.tests()[pick];
        out.order.push_back(step.test);
        out.steps.push_back(std::move(step));
    }
    return out;
}

inline PrioritizedSuite grk(const KillMatrix& km) { return prioritize(km, Strategy::GRK); }
inline PrioritizedSuite grd(const KillMatrix& km) { return prioritize(km, Strategy::GRD); }
inline PrioritizedSuite hyb(const KillMatrix& km, double omega = 0.5) { return prioritize(km, Strategy::HYB, omega); }

/// APFD = 1 - sum(TF_i) / (n * r) + 1 / (2n), where TF_i is the 1-based
/// position of the first test detecting fault i. Evaluated as the single
/// fraction (2nr - 2 sum + r) / (2nr) so the result is rounded once.
inline double apfd(const std::vector<std::string>& order, const std::vector<std::set<std::string>>& detection) {
    if (order.empty()) throw Error("APFD of an empty ordering");
    if (detection.empty()) throw Error("APFD needs at least one fault");
    const long long n = static_cast<long long>(order.size());
    const long long r = static_cast<long long>(detection.size());
    long long sum = 0;
    for (std::size_t f = 0; f < detection.size(); ++f) {
        std::size_t pos = 0;
        for (std::size_t i = 0; i < order.size(); ++i)
            if (detection[f].count(order[i])) {
                pos = i + 1;
                break;
            }
        if (pos == 0) throw Error("fault " + std::to_string(f) + " is not detected by any test in the ordering");
        sum += static_cast<long long>(pos);
    }
    return static_cast<double>(2 * n * r - 2 * sum + r) / static_cast<double>(2 * n * r);
}

} // namespace ragmut
