#pragma once

#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ragmut/error.hpp"
#include "ragmut/execution.hpp"

namespace ragmut {

/// One bug: its revealing tests and the kill matrix over its useful
/// (compilable, non-duplicate) mutants, measured on the fixed version.
struct BugContext {
    std::string bug_id;
    std::set<std::string> revealing_tests;
    KillMatrix matrix;

    void check() const {
        for (const auto& t : revealing_tests)
            if (!std::binary_search(matrix.tests().begin(), matrix.tests().end(), t))
                throw Error("bug " + bug_id + ": revealing test " + t + " is not in the matrix");
    }
};

inline double mutation_score(const KillMatrix& km) {
    if (km.rows() == 0) throw Error("mutation score of an empty mutant set");
    std::size_t killed = 0;
    for (std::size_t m = 0; m < km.rows(); ++m) killed += km.killed(m);
    return static_cast<double>(killed) / static_cast<double>(km.rows());
}

inline double mutation_score(const BugContext& ctx) { return mutation_score(ctx.matrix); }

/// |a ∩ b| / sqrt(|a|·|b|); 0 when either set is empty.
inline double ochiai(const std::set<std::string>& a, const std::set<std::string>& b) {
    if (a.empty() || b.empty()) return 0.0;
    std::size_t common = 0;
    for (const auto& x : a) common += b.count(x);
    return static_cast<double>(common) / std::sqrt(static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

/// Mean Ochiai between each mutant's killing tests and the revealing
/// tests; absent when the bug has no useful mutants.
inline std::optional<double> bug_ochiai(const BugContext& ctx) {
    if (ctx.matrix.rows() == 0) return std::nullopt;
    double sum = 0;
    for (std::size_t m = 0; m < ctx.matrix.rows(); ++m) sum += ochiai(ctx.matrix.killing_tests(m), ctx.revealing_tests);
    return sum / static_cast<double>(ctx.matrix.rows());
}

/// Mean over bugs with a defined value.
inline std::optional<double> aoc(const std::vector<std::optional<double>>& per_bug) {
    double sum = 0;
    std::size_t n = 0;
    for (const auto& v : per_bug)
        if (v) {
            sum += *v;
            ++n;
        }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
}

inline std::vector<std::string> coupled_mutants(const BugContext& ctx) {
    std::vector<std::string> out;
    for (std::size_t m = 0; m < ctx.matrix.rows(); ++m)
        for (const auto& t : ctx.revealing_tests)
            if (ctx.matrix.kill(m, ctx.matrix.test_index(t))) {
                out.push_back(ctx.matrix.mutants()[m]);
                break;
            }
    return out;
}

inline double coupling_rate(const BugContext& ctx) {
    if (ctx.matrix.rows() == 0) throw Error("coupling rate of an empty mutant set");
    return static_cast<double>(coupled_mutants(ctx).size()) / static_cast<double>(ctx.matrix.rows());
}

struct RealBugDetection {
    std::vector<double> per_bug;
    double macro = 0; // unweighted mean over bugs
    double micro = 0; // pooled over all revealing tests
    std::size_t detecting_tests = 0;
    std::size_t revealing_tests = 0;
};

/// Per bug, the fraction of revealing tests that kill at least one mutant.
inline RealBugDetection real_bug_detection(const std::vector<BugContext>& ctxs) {
    RealBugDetection r;
    if (ctxs.empty()) throw Error("real bug detection needs at least one bug");
    double sum = 0;
    for (const auto& ctx : ctxs) {
        if (ctx.revealing_tests.empty()) throw Error("bug " + ctx.bug_id + " has no revealing tests");
        std::size_t hit = 0;
        for (const auto& t : ctx.revealing_tests) {
            const auto col = ctx.matrix.test_index(t);
            for (std::size_t m = 0; m < ctx.matrix.rows(); ++m)
                if (ctx.matrix.kill(m, col)) {
                    ++hit;
                    break;
                }
        }
        const double v = static_cast<double>(hit) / static_cast<double>(ctx.revealing_tests.size());
        r.per_bug.push_back(v);
        sum += v;
        r.detecting_tests += hit;
        r.revealing_tests += ctx.revealing_tests.size();
    }
    r.macro = sum / static_cast<double>(ctxs.size());
    r.micro = static_cast<double>(r.detecting_tests) / static_cast<double>(r.revealing_tests);
    return r;
}

inline std::size_t high_similarity_count(const std::vector<std::optional<double>>& per_bug, double threshold = 0.8) {
    std::size_t n = 0;
    for (const auto& v : per_bug) n += v && *v >= threshold;
    return n;
}

struct BugEffectiveness {
    std::string bug_id;
    std::size_t useful_mutants = 0;
    std::optional<double> mutation_score;
    std::optional<double> coupling_rate;
    std::optional<double> ochiai;
    double rbd = 0;
};

struct EffectivenessReport {
    std::vector<BugEffectiveness> bugs;
    std::optional<double> mutation_score; // pooled |K| / |C - D| over all bugs
    std::optional<double> coupling_rate;  // pooled
    RealBugDetection rbd;
    std::optional<double> aoc;
    std::size_t high_similarity = 0;
    std::size_t bugs_without_mutants = 0;
};

inline EffectivenessReport effectiveness(const std::vector<BugContext>& ctxs, double threshold = 0.8) {
    EffectivenessReport r;
    std::size_t rows = 0, killed = 0, coupled = 0;
    std::vector<std::optional<double>> ochiais;
    for (const auto& ctx : ctxs) {
        ctx.check();
        BugEffectiveness b;
        b.bug_id = ctx.bug_id;
        b.useful_mutants = ctx.matrix.rows();
        if (ctx.matrix.rows() > 0) {
            b.mutation_score = mutation_score(ctx);
            b.coupling_rate = coupling_rate(ctx);
            rows += ctx.matrix.rows();
            for (std::size_t m = 0; m < ctx.matrix.rows(); ++m) killed += ctx.matrix.killed(m);
            coupled += coupled_mutants(ctx).size();
        } else {
            ++r.bugs_without_mutants;
        }
        b.ochiai = bug_ochiai(ctx);
        ochiais.push_back(b.ochiai);
        r.bugs.push_back(std::move(b));
    }
    if (rows > 0) {
        r.mutation_score = static_cast<double>(killed) / static_cast<double>(rows);
        r.coupling_rate = static_cast<double>(coupled) / static_cast<double>(rows);
    }
    if (!ctxs.empty()) {
        r.rbd = real_bug_detection(ctxs);
        for (std::size_t i = 0; i < r.bugs.size(); ++i) r.bugs[i].rbd = r.rbd.per_bug[i];
    }
    r.aoc = aoc(ochiais);
    r.high_similarity = high_similarity_count(ochiais, threshold);
    return r;
}

} // namespace ragmut
