#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ragmut/error.hpp"
#include "ragmut/process.hpp"
#include "ragmut/prompt.hpp"
#include "ragmut/text.hpp"

namespace ragmut {

enum class DedupMode { Normalized, Exact };

inline std::string dedup_normalize(std::string_view line, DedupMode mode) {
    return mode == DedupMode::Normalized ? text::collapse_whitespace(line) : std::string(line);
}

struct DedupResult {
    std::vector<bool> duplicate;     // parallel to the input
    std::vector<std::string> reason; // "identical-to-original", "duplicate-of:<id>", or empty
    std::size_t count() const {
        std::size_t n = 0;
        for (bool d : duplicate) n += d;
        return n;
    }
};

/// Flags mutants equal to the original line or to an earlier mutant on the
/// same line. The first occurrence of each key is canonical.
inline DedupResult dedup(const std::vector<Mutant>& mutants, DedupMode mode = DedupMode::Normalized) {
    DedupResult r;
    std::map<std::pair<int, std::string>, std::string> seen;
    for (const auto& m : mutants) {
        const auto after = dedup_normalize(m.mutated_line_text, mode);
        if (after == dedup_normalize(m.original_line_text, mode)) {
            r.duplicate.push_back(true);
            r.reason.push_back("identical-to-original");
            continue;
        }
        auto [it, fresh] = seen.emplace(std::make_pair(m.target_line, after), m.id);
        r.duplicate.push_back(!fresh);
        r.reason.push_back(fresh ? std::string() : "duplicate-of:" + it->second);
    }
    return r;
}

struct CompileResult {
    bool compilable = false;
    bool timed_out = false;
    int exit_code = -1;
    std::string stderr_text;
};

/// Expands `{src}` (quoted mutant source path) and `{dir}` (quoted
/// directory holding it) in a command template.
inline std::string expand_command(const std::string& tmpl, const std::string& src_path) {
    const auto dir = std::filesystem::path(src_path).parent_path().string();
    return text::replace_all(text::replace_all(tmpl, "{src}", shell_quote(src_path)), "{dir}", shell_quote(dir));
}

/// Runs the compile command on an already-written source file. Exit 127
/// from the shell means the command itself was not found.
inline CompileResult check_compile(const std::string& src_path, const std::string& compile_command,
                                   std::chrono::milliseconds timeout) {
    const auto dir = std::filesystem::path(src_path).parent_path().string();
    auto pr = run_shell(expand_command(compile_command, src_path), timeout, dir);
    if (!pr.timed_out && pr.exit_code == 127) throw Error("compile command not found: " + compile_command);
    return {pr.ok(), pr.timed_out, pr.exit_code, std::move(pr.err)};
}

/// Writes the mutant into its own directory and compiles it there.
inline CompileResult check_compile(const Mutant& m, const std::string& file_name, const std::string& compile_command,
                                   const std::filesystem::path& work_root, std::chrono::milliseconds timeout) {
    const auto dir = work_root / m.id;
    std::filesystem::create_directories(dir);
    const auto path = (dir / file_name).string();
    text::write_file(path, m.source);
    return check_compile(path, compile_command, timeout);
}

/// Sets A (generated), D (duplicates) and C (compilable) for one bug.
struct ValidityLedger {
    std::string bug_id;
    long expected = 0;
    std::vector<std::string> generated;
    std::set<std::string> duplicates;
    std::set<std::string> compilable;
    std::set<std::string> timed_out;

    /// Ids in C - D, in generation order.
    std::vector<std::string> useful() const {
        std::vector<std::string> out;
        for (const auto& id : generated)
            if (compilable.count(id) && !duplicates.count(id)) out.push_back(id);
        return out;
    }

    void check() const {
        std::set<std::string> a(generated.begin(), generated.end());
        if (a.size() != generated.size()) throw Error("duplicate mutant ids in ledger " + bug_id);
        for (const auto& id : duplicates)
            if (!a.count(id)) throw Error("duplicate set not within generated set: " + id);
        for (const auto& id : compilable)
            if (!a.count(id)) throw Error("compilable set not within generated set: " + id);
        if (expected < 0) throw Error("negative expected count");
    }
};

struct ValidityRates {
    long expected = 0;
    long generated = 0;
    std::optional<double> generation_rate;
    std::optional<double> nonduplicate_rate;
    std::optional<double> compilable_rate;
};

inline std::optional<double> generation_rate(long expected, long generated) {
    if (expected <= 0) return std::nullopt;
    return static_cast<double>(generated) / static_cast<double>(expected);
}

inline ValidityRates validity_metrics(long expected, long generated, long duplicates, long compilable) {
    ValidityRates r;
    r.expected = expected;
    r.generated = generated;
    r.generation_rate = generation_rate(expected, generated);
    if (generated > 0) {
        r.nonduplicate_rate = static_cast<double>(generated - duplicates) / static_cast<double>(generated);
        r.compilable_rate = static_cast<double>(compilable) / static_cast<double>(generated);
    }
    return r;
}

inline ValidityRates validity_metrics(const ValidityLedger& l) {
    return validity_metrics(l.expected, static_cast<long>(l.generated.size()), static_cast<long>(l.duplicates.size()),
                            static_cast<long>(l.compilable.size()));
}

/// Pools several ledgers (dataset-level row).
inline ValidityRates validity_metrics(const std::vector<ValidityLedger>& ls) {
    long e = 0, a = 0, d = 0, c = 0;
    for (const auto& l : ls) {
        e += l.expected;
        a += static_cast<long>(l.generated.size());
        d += static_cast<long>(l.duplicates.size());
        c += static_cast<long>(l.compilable.size());
    }
    return validity_metrics(e, a, d, c);
}

} // namespace ragmut
