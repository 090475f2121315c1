#pragma once

#include <algorithm>
#include <chrono>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ragmut/error.hpp"
#include "ragmut/process.hpp"
#include "ragmut/text.hpp"
#include "ragmut/validity.hpp"

namespace ragmut {

struct TestOutcomeVector {
    std::string program_id;
    std::map<std::string, bool> passed; // test id -> pass
    bool timed_out = false;
    std::vector<std::string> missing; // tests absent from the runner output, recorded as FAIL

    std::set<std::string> test_ids() const {
        std::set<std::string> s;
        for (const auto& [t, _] : passed) s.insert(t);
        return s;
    }
    std::set<std::string> failing() const {
        std::set<std::string> s;
        for (const auto& [t, p] : passed)
            if (!p) s.insert(t);
        return s;
    }
};

/// Reads `<test-id> PASS|FAIL` lines; any other line is ignored.
inline std::map<std::string, bool> parse_runner_output(std::string_view out) {
    std::map<std::string, bool> r;
    for (const auto& line : text::split_lines(out)) {
        const auto f = text::split_ws(line);
        if (f.size() != 2 || (f[1] != "PASS" && f[1] != "FAIL")) continue;
        if (!r.emplace(f[0], f[1] == "PASS").second) throw FormatError("ambiguous outcome for test " + f[0]);
    }
    return r;
}

/// Turns runner output into an outcome vector. With `expected` tests, any
/// not reported are recorded FAIL; without it (the original program), an
/// output with no status lines is a runner crash.
inline TestOutcomeVector outcome_from_output(const std::string& program_id, std::string_view out, bool timed_out,
                                             const std::set<std::string>* expected = nullptr) {
    TestOutcomeVector v;
    v.program_id = program_id;
    v.timed_out = timed_out;
    v.passed = parse_runner_output(out);
    if (!expected) {
        if (v.passed.empty()) throw Error("test runner produced no status lines for " + program_id);
        return v;
    }
    for (const auto& [t, _] : v.passed)
        if (!expected->count(t)) throw FormatError("unexpected test id " + t + " for " + program_id);
    for (const auto& t : *expected) {
        if (v.passed.count(t)) continue;
        v.passed[t] = false;
        v.missing.push_back(t);
    }
    return v;
}

/// Runs `test_command` (placeholders `{src}` and `{dir}`) against a
/// program source already on disk.
inline TestOutcomeVector run_suite(const std::string& program_id, const std::string& src_path,
                                   const std::string& test_command, std::chrono::milliseconds timeout,
                                   const std::set<std::string>* expected = nullptr,
                                   std::chrono::milliseconds* elapsed = nullptr) {
    const auto dir = std::filesystem::path(src_path).parent_path().string();
    auto pr = run_shell(expand_command(test_command, src_path), timeout, dir);
    if (elapsed) *elapsed = pr.elapsed;
    if (!pr.timed_out && pr.exit_code == 127 && parse_runner_output(pr.out).empty())
        throw Error("test command not found: " + test_command);
    return outcome_from_output(program_id, pr.out, pr.timed_out, expected);
}

/// Mutant timeout: twice the original suite's wall time, with a floor.
inline std::chrono::milliseconds mutant_timeout(std::chrono::milliseconds original,
                                                std::chrono::milliseconds floor = std::chrono::milliseconds(1000)) {
    return std::max(original * 2, floor);
}

/// Mutants x tests kill table, kept in canonical (sorted id) order.
class KillMatrix {
public:
    std::string bug_id;

    KillMatrix() = default;
    KillMatrix(std::vector<std::string> mutants, std::vector<std::string> tests)
        : mutants_(std::move(mutants)), tests_(std::move(tests)), cells_(mutants_.size() * tests_.size(), 0) {
        check_ids(mutants_, "mutant");
        check_ids(tests_, "test");
        canonicalize();
    }

    const std::vector<std::string>& mutants() const { return mutants_; }
    const std::vector<std::string>& tests() const { return tests_; }
    std::size_t rows() const { return mutants_.size(); }
    std::size_t cols() const { return tests_.size(); }

    bool kill(std::size_t m, std::size_t t) const { return cells_[m * tests_.size() + t] != 0; }
    void set(std::size_t m, std::size_t t, bool k) { cells_[m * tests_.size() + t] = k ? 1 : 0; }

    std::size_t mutant_index(const std::string& id) const { return index_of(mutants_, id, "mutant"); }
    std::size_t test_index(const std::string& id) const { return index_of(tests_, id, "test"); }
    bool kill(const std::string& m, const std::string& t) const { return kill(mutant_index(m), test_index(t)); }
    void set(const std::string& m, const std::string& t, bool k) { set(mutant_index(m), test_index(t), k); }

    /// Tests killing mutant row m.
    std::set<std::string> killing_tests(std::size_t m) const {
        std::set<std::string> s;
        for (std::size_t t = 0; t < cols(); ++t)
            if (kill(m, t)) s.insert(tests_[t]);
        return s;
    }
    bool killed(std::size_t m) const {
        for (std::size_t t = 0; t < cols(); ++t)
            if (kill(m, t)) return true;
        return false;
    }

    /// Keeps only the listed mutant rows (in canonical order).
    KillMatrix select_rows(const std::vector<std::string>& keep) const {
        KillMatrix out(keep, tests_);
        out.bug_id = bug_id;
        for (const auto& m : keep)
            for (std::size_t t = 0; t < cols(); ++t) out.set(m, tests_[t], kill(mutant_index(m), t));
        return out;
    }

    bool operator==(const KillMatrix& o) const {
        return mutants_ == o.mutants_ && tests_ == o.tests_ && cells_ == o.cells_;
    }

private:
    std::vector<std::string> mutants_;
    std::vector<std::string> tests_;
    std::vector<char> cells_;

    static void check_ids(const std::vector<std::string>& ids, const char* what) {
        std::set<std::string> seen;
        for (const auto& id : ids) {
            if (id.empty() || std::any_of(id.begin(), id.end(), text::is_space))
                throw FormatError(std::string("invalid ") + what + " id: '" + id + "'");
            if (!seen.insert(id).second) throw FormatError(std::string("duplicate ") + what + " id: " + id);
        }
    }

    static std::size_t index_of(const std::vector<std::string>& v, const std::string& id, const char* what) {
        auto it = std::lower_bound(v.begin(), v.end(), id);
        if (it == v.end() || *it != id) throw Error(std::string("unknown ") + what + " id: " + id);
        return static_cast<std::size_t>(it - v.begin());
    }

    void canonicalize() {
        std::sort(mutants_.begin(), mutants_.end());
        std::sort(tests_.begin(), tests_.end());
    }
};

/// Cell = pass/fail status of the test on the mutant XOR on the original.
inline KillMatrix build_kill_matrix(const TestOutcomeVector& original, const std::vector<TestOutcomeVector>& mutants,
                                    const std::string& bug_id = {}) {
    const auto tests = original.test_ids();
    std::vector<std::string> ids;
    for (const auto& m : mutants) {
        if (m.test_ids() != tests) throw Error("test-id mismatch between original and " + m.program_id);
        ids.push_back(m.program_id);
    }
    KillMatrix km(ids, std::vector<std::string>(tests.begin(), tests.end()));
    km.bug_id = bug_id;
    for (const auto& m : mutants)
        for (const auto& [t, p] : m.passed) km.set(m.program_id, t, p != original.passed.at(t));
    return km;
}

/// Text format:
///   MUTANTS <ids...>
///   TESTS <ids...>
///   one line of 0/1 per mutant, in MUTANTS order
inline std::string matrix_to_string(const KillMatrix& km) {
    std::string out = "MUTANTS";
    for (const auto& m : km.mutants()) out += " " + m;
    out += "\nTESTS";
    for (const auto& t : km.tests()) out += " " + t;
    out += "\n";
    for (std::size_t m = 0; m < km.rows(); ++m) {
        for (std::size_t t = 0; t < km.cols(); ++t) out += km.kill(m, t) ? '1' : '0';
        out += "\n";
    }
    return out;
}

inline KillMatrix matrix_from_string(std::string_view s) {
    auto lines = text::split_lines(s);
    while (!lines.empty() && text::is_blank(lines.back())) lines.pop_back();
    if (lines.size() < 2) throw FormatError("matrix file needs MUTANTS and TESTS header lines");
    auto mh = text::split_ws(lines[0]), th = text::split_ws(lines[1]);
    if (mh.empty() || mh[0] != "MUTANTS") throw FormatError("matrix file must start with MUTANTS");
    if (th.empty() || th[0] != "TESTS") throw FormatError("second matrix line must start with TESTS");
    std::vector<std::string> mids(mh.begin() + 1, mh.end()), tids(th.begin() + 1, th.end());
    if (lines.size() - 2 != mids.size())
        throw FormatError("matrix has " + std::to_string(lines.size() - 2) + " rows for " +
                          std::to_string(mids.size()) + " mutants");
    KillMatrix km(mids, tids);
    for (std::size_t r = 0; r < mids.size(); ++r) {
        const auto row = text::trim(lines[r + 2]);
        if (row.size() != tids.size()) throw FormatError("matrix row " + std::to_string(r + 1) + " has wrong width");
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (row[c] != '0' && row[c] != '1') throw FormatError("matrix cells must be 0 or 1");
            km.set(mids[r], tids[c], row[c] == '1');
        }
    }
    return km;
}

inline void save_matrix(const KillMatrix& km, const std::string& path) { text::write_file(path, matrix_to_string(km)); }

inline KillMatrix load_matrix(const std::string& path) { return matrix_from_string(text::read_file(path)); }

} // namespace ragmut
