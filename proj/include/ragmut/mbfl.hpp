#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ragmut/error.hpp"
#include "ragmut/execution.hpp"

namespace ragmut {

/// Flip counts of one mutant against the buggy original.
struct MutantFLStats {
    std::string mutant;
    int statement = 0;       // target line in the buggy source
    std::size_t failed = 0;  // failing on the original, passing on the mutant
    std::size_t passed = 0;  // passing on the original, failing on the mutant
};

struct FLGlobals {
    std::size_t total_failed = 0; // failing tests on the original
    std::size_t f2p = 0;          // sum of `failed` over mutants
    std::size_t p2f = 0;          // sum of `passed` over mutants
};

struct FLStats {
    std::vector<MutantFLStats> mutants;
    FLGlobals globals;
};

/// Flip counts from a buggy-mode kill matrix: a kill on an originally
/// failing test is a fail-to-pass flip, on a passing test a pass-to-fail.
inline FLStats fl_stats(const KillMatrix& km, const std::set<std::string>& original_failing,
                        const std::map<std::string, int>& statement_of) {
    if (original_failing.empty()) throw Error("fault localization needs at least one failing test on the original");
    std::vector<char> fails(km.cols(), 0);
    for (const auto& t : original_failing) fails[km.test_index(t)] = 1;
    FLStats out;
    out.globals.total_failed = original_failing.size();
    for (std::size_t m = 0; m < km.rows(); ++m) {
        const auto& id = km.mutants()[m];
        auto it = statement_of.find(id);
        if (it == statement_of.end()) throw Error("mutant " + id + " has no statement");
        MutantFLStats s{id, it->second, 0, 0};
        for (std::size_t t = 0; t < km.cols(); ++t) {
            if (!km.kill(m, t)) continue;
            if (fails[t]) ++s.failed;
            else ++s.passed;
        }
        out.globals.f2p += s.failed;
        out.globals.p2f += s.passed;
        out.mutants.push_back(std::move(s));
    }
    return out;
}

inline FLStats fl_stats(const TestOutcomeVector& original, const std::vector<TestOutcomeVector>& mutants,
                        const std::map<std::string, int>& statement_of) {
    return fl_stats(build_kill_matrix(original, mutants), original.failing(), statement_of);
}

/// failed - (f2p / p2f) * passed; the penalty is dropped when p2f == 0.
inline double muse_score(const MutantFLStats& s, const FLGlobals& g) {
    const double penalty =
        g.p2f == 0 ? 0.0 : static_cast<double>(g.f2p) / static_cast<double>(g.p2f) * static_cast<double>(s.passed);
    return static_cast<double>(s.failed) - penalty;
}

/// failed / sqrt(total_failed * (failed + passed)); 0 on a zero denominator.
inline double metallaxis_score(const MutantFLStats& s, std::size_t total_failed) {
    const double den = static_cast<double>(total_failed) * static_cast<double>(s.failed + s.passed);
    if (den == 0) return 0.0;
    return static_cast<double>(s.failed) / std::sqrt(den);
}

enum class FLMethod { Muse, Metallaxis };

inline std::string_view to_string(FLMethod m) { return m == FLMethod::Muse ? "muse" : "metallaxis"; }

/// Per-statement suspiciousness: mean (MUSE) or max (Metallaxis) over the
/// statement's mutants. Every statement in `statements` gets an entry;
/// those without mutants score 0.
inline std::map<int, double> aggregate(const FLStats& st, FLMethod method, const std::set<int>& statements = {}) {
    std::map<int, std::vector<double>> per;
    for (const auto& m : st.mutants)
        per[m.statement].push_back(method == FLMethod::Muse ? muse_score(m, st.globals)
                                                            : metallaxis_score(m, st.globals.total_failed));
    std::map<int, double> out;
    for (int s : statements) out[s] = 0.0;
    for (const auto& [s, v] : per) {
        if (method == FLMethod::Muse) {
            double sum = 0;
            for (double x : v) sum += x;
            out[s] = sum / static_cast<double>(v.size());
        } else {
            out[s] = *std::max_element(v.begin(), v.end());
        }
    }
    return out;
}

struct RankedStatement {
    int statement = 0;
    double score = 0;
    double expected_rank = 0;
};

/// Descending by score; a tie group of size g starting at 1-based
/// position a shares the expected rank a + (g - 1) / 2. Within a group,
/// statements are listed by line.
inline std::vector<RankedStatement> rank(const std::map<int, double>& scores) {
    std::vector<RankedStatement> r;
    for (const auto& [s, v] : scores) r.push_back({s, v, 0});
    std::stable_sort(r.begin(), r.end(), [](const auto& a, const auto& b) { return a.score > b.score; });
    for (std::size_t a = 0; a < r.size();) {
        std::size_t b = a;
        while (b < r.size() && r[b].score == r[a].score) ++b;
        const double er = static_cast<double>(a + 1) + static_cast<double>(b - a - 1) / 2.0;
        for (std::size_t i = a; i < b; ++i) r[i].expected_rank = er;
        a = b;
    }
    return r;
}

struct FLBugReport {
    std::string bug_id;
    std::vector<RankedStatement> ranking;
    std::set<int> faulty;
};

struct FLMetrics {
    std::map<int, std::size_t> top_k;
    std::optional<double> mfr;                 // mean of each bug's first faulty rank
    std::optional<double> mar;                 // mean of each bug's average faulty rank
    std::optional<double> mar_first_rank;      // the first-rank reading of MAR; equals mfr
    std::size_t bugs = 0;                      // bugs contributing
    std::size_t missing_faulty = 0;            // faulty statements absent from their ranking
    std::vector<std::string> excluded_bugs;    // no faulty statement ranked at all
};

inline FLMetrics fl_metrics(const std::vector<FLBugReport>& reports, const std::vector<int>& ks = {1, 3, 5}) {
    FLMetrics out;
    for (int k : ks) out.top_k[k] = 0;
    double first_sum = 0, avg_sum = 0;
    for (const auto& r : reports) {
        std::map<int, double> er;
        for (const auto& s : r.ranking) er[s.statement] = s.expected_rank;
        std::vector<double> ranks;
        for (int f : r.faulty) {
            auto it = er.find(f);
            if (it == er.end()) ++out.missing_faulty;
            else ranks.push_back(it->second);
        }
        if (ranks.empty()) {
            out.excluded_bugs.push_back(r.bug_id);
            continue;
        }
        const double first = *std::min_element(ranks.begin(), ranks.end());
        double sum = 0;
        for (double x : ranks) sum += x;
        first_sum += first;
        avg_sum += sum / static_cast<double>(ranks.size());
        for (int k : ks)
            if (first <= k) ++out.top_k[k];
        ++out.bugs;
    }
    if (out.bugs) {
        out.mfr = first_sum / static_cast<double>(out.bugs);
        out.mar = avg_sum / static_cast<double>(out.bugs);
        out.mar_first_rank = out.mfr;
    }
    return out;
}

} // namespace ragmut
