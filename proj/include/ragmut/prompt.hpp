#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ragmut/chunker.hpp"
#include "ragmut/corpus.hpp"
#include "ragmut/error.hpp"
#include "ragmut/text.hpp"

namespace ragmut {

struct FewShotExample {
    std::string precode;
    std::string aftercode;
    std::string source_pair_id;

    bool operator==(const FewShotExample&) const = default;
};

struct MutationPair {
    std::string precode;
    std::string aftercode;

    bool operator==(const MutationPair&) const = default;
};

struct SkippedExample {
    std::string pair_id;
    std::string reason;
};

struct RenderedExamples {
    std::vector<FewShotExample> examples;
    std::vector<SkippedExample> skipped;
};

/// Turns retrieved bug-fix pairs into demonstrations in the fixed->buggy
/// direction: precode is the fixed line, aftercode the buggy one. Only
/// one-line-to-one-line hunks qualify.
inline RenderedExamples render_examples(const std::vector<const BugFixPair*>& pairs) {
    RenderedExamples out;
    for (const BugFixPair* p : pairs) {
        if (!p->hunk.is_one_line_replacement()) {
            out.skipped.push_back({p->id, "not a one-line replacement"});
            continue;
        }
        const auto& fixed = p->hunk.post_lines.front().text;
        const auto& buggy = p->hunk.pre_lines.front().text;
        if (text::is_blank(fixed)) {
            out.skipped.push_back({p->id, "empty fixed line"});
            continue;
        }
        out.examples.push_back({std::string(text::trim(fixed)), std::string(text::trim(buggy)), p->id});
    }
    return out;
}

/// The JSON array form used both in prompts and in fine-tuning responses.
inline std::string pairs_to_json(const std::vector<MutationPair>& pairs) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& p : pairs) arr.push_back({{"precode", p.precode}, {"aftercode", p.aftercode}});
    return arr.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

inline std::vector<MutationPair> as_pairs(const std::vector<FewShotExample>& examples) {
    std::vector<MutationPair> out;
    for (const auto& e : examples) out.push_back({e.precode, e.aftercode});
    return out;
}

struct PromptInstance {
    std::string focal_method;
    std::string chunk;
    std::vector<FewShotExample> examples;
    int requested_n = 1;

    std::string instruction() const {
        return "Below is the original Java method, followed by a specific code chunk extracted from it. Your task is "
               "to generate " +
               std::to_string(requested_n) +
               " mutant versions by applying single-line mutations only within the code chunk.\n"
               "Note: In software engineering, a mutant refers to a variant of the original program created by "
               "introducing small syntactic changes, which are typically used for mutation testing.";
    }

    static std::string output_instructions() {
        return "1. A mutation can only occur on one line.\n"
               "2. Your output must be like: <json> [ { \"precode\": \"\", \"aftercode\": \"\" } ] </json>. The "
               "\"precode\" represents the line of code before mutation, and it can't be empty, \"aftercode\" "
               "represents the line of code after mutation. Note that you may need to generate multiple pairs of "
               "\"precode\" and \"aftercode\".\n"
               "3. Prohibit generating mutants that are identical to the original code (precode) or duplicate any "
               "previously generated mutants.\n"
               "4. Output all mutations in JSON format, ensuring they are wrapped in <json></json> tags.";
    }

    std::string text() const {
        std::string out;
        out += "[Instruction]: " + instruction() + "\n\n";
        out += "[Entire Focal Method]:\n" + focal_method + "\n\n";
        out += "[The Current Chunk]: Only mutate these lines:\n" + chunk + "\n\n";
        out += "[Few-Shot Examples]: <json> " + pairs_to_json(as_pairs(examples)) + " </json>\n\n";
        out += "[Output Instructions]:\n" + output_instructions() + "\n";
        return out;
    }
};

inline std::string strip_trailing_newlines(std::string s) {
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
    return s;
}

/// Builds the generation prompt. `n` is normally the chunk's line count.
inline PromptInstance make_prompt(const FocalMethod& m, const CodeChunk& chunk, std::vector<FewShotExample> examples,
                                  int n) {
    if (n < 1) throw Error("requested mutant count must be at least 1");
    for (int l : chunk.line_numbers)
        if (!m.lines.count(l)) throw Error("chunk line " + std::to_string(l) + " is outside the method");
    return PromptInstance{strip_trailing_newlines(m.source), chunk.text, std::move(examples), n};
}

inline std::string render_prompt(const FocalMethod& m, const CodeChunk& chunk,
                                 const std::vector<FewShotExample>& examples, int n) {
    return make_prompt(m, chunk, examples, n).text();
}

struct ParsedResponse {
    std::vector<MutationPair> pairs;
    int dropped = 0;           // objects violating the schema
    bool parse_failed = false; // no tag pair, or the region is not a JSON array
    std::string failure;
};

/// Extracts the first <json>...</json> region and reads its array of
/// {"precode", "aftercode"} objects. Invalid objects are dropped one by one.
inline ParsedResponse parse_response(std::string_view reply) {
    ParsedResponse out;
    const auto open = reply.find("<json>");
    const auto close = open == std::string_view::npos ? open : reply.find("</json>", open + 6);
    if (close == std::string_view::npos) {
        out.parse_failed = true;
        out.failure = "no <json></json> region";
        return out;
    }
    auto region = text::trim(reply.substr(open + 6, close - open - 6));
    if (region.starts_with("```")) {
        const auto nl = region.find('\n');
        region = nl == std::string_view::npos ? std::string_view{} : region.substr(nl + 1);
        if (const auto fence = region.rfind("```"); fence != std::string_view::npos) region = region.substr(0, fence);
    }
    auto arr = nlohmann::json::parse(region, nullptr, false);
    if (arr.is_discarded() || !arr.is_array()) {
        out.parse_failed = true;
        out.failure = arr.is_discarded() ? "invalid JSON" : "JSON is not an array";
        return out;
    }
    for (const auto& item : arr) {
        const bool ok = item.is_object() && item.contains("precode") && item["precode"].is_string() &&
                        item.contains("aftercode") && item["aftercode"].is_string() &&
                        !text::is_blank(item["precode"].get_ref<const std::string&>());
        if (!ok) {
            ++out.dropped;
            continue;
        }
        out.pairs.push_back({item["precode"].get<std::string>(), item["aftercode"].get<std::string>()});
    }
    return out;
}

struct Mutant {
    std::string id;
    std::string bug_id;
    std::string chunk_id;
    int target_line = 0;
    std::string original_line_text;
    std::string mutated_line_text;
    MutationPair pair;
    std::string source;
};

struct Materialized {
    std::optional<Mutant> mutant;
    std::string rejection; // "out-of-chunk" or "multi-line" when mutant is empty
};

inline bool has_line_break(std::string_view s) { return s.find('\n') != std::string_view::npos || s.find('\r') != std::string_view::npos; }

/// Applies one pair to a pristine copy of `original_source`. Chunk line
/// numbers index into `original_source` (1-based).
inline Materialized materialize(const std::string& original_source, const CodeChunk& chunk, const MutationPair& pair) {
    Materialized out;
    if (has_line_break(text::trim(pair.aftercode)) || has_line_break(text::trim(pair.precode))) {
        out.rejection = "multi-line";
        return out;
    }
    auto lines = text::split_lines(original_source);
    const auto want = text::trim(pair.precode);
    for (int l : chunk.line_numbers) {
        if (l < 1 || l > static_cast<int>(lines.size())) continue;
        auto& line = lines[static_cast<std::size_t>(l - 1)];
        if (text::trim(line) != want) continue;
        Mutant m;
        m.target_line = l;
        m.original_line_text = line;
        m.pair = pair;
        const bool cr = !line.empty() && line.back() == '\r';
        line = text::leading_whitespace(line) + std::string(text::trim(pair.aftercode)) + (cr ? "\r" : "");
        m.mutated_line_text = line;
        m.source = text::join_lines(lines, text::ends_with_newline(original_source));
        out.mutant = std::move(m);
        return out;
    }
    out.rejection = "out-of-chunk";
    return out;
}

} // namespace ragmut
