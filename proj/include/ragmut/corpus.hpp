#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ragmut/error.hpp"
#include "ragmut/text.hpp"

namespace ragmut {

struct NumberedLine {
    int number; // 1-based
    std::string text;

    bool operator==(const NumberedLine&) const = default;
};

/// A single contiguous line-level edit turning pre-fix text into post-fix text.
///
/// `pre_start` is the 1-based line in the pre-fix text where the edit begins
/// (the insertion point when `pre_lines` is empty); `post_start` likewise for
/// the post-fix text.
struct Hunk {
    int pre_start = 1;
    int post_start = 1;
    std::vector<NumberedLine> pre_lines;
    std::vector<NumberedLine> post_lines;
    std::vector<std::string> context_before;
    std::vector<std::string> context_after;
    bool post_trailing_newline = true;

    bool is_one_line_replacement() const { return pre_lines.size() == 1 && post_lines.size() == 1; }
};

struct BugFixPair {
    std::string id;
    std::string project;
    std::string pre_fix_code;
    std::string post_fix_code;
    Hunk hunk;
    std::map<std::string, std::string> metadata;
};

class DiffError : public Error {
public:
    enum class Kind { Identical, MultiHunk, EmptyInput };

    DiffError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

namespace detail {

inline std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    if (a.empty() || b.empty()) return 0;
    std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j)
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

} // namespace detail

/// Line-level diff of a bug-fix pair. The shared prefix and suffix are the
/// unchanged context; whatever lies between must contain no common line,
/// otherwise the LCS alignment splits it into more than one hunk.
inline Hunk diff_hunk(const std::string& pre_fix_code, const std::string& post_fix_code) {
    if (pre_fix_code.empty() || post_fix_code.empty())
        throw DiffError(DiffError::Kind::EmptyInput, "empty pre-fix or post-fix text");
    if (pre_fix_code == post_fix_code) throw DiffError(DiffError::Kind::Identical, "no change");

    const auto pre = text::split_lines(pre_fix_code);
    const auto post = text::split_lines(post_fix_code);
    if (pre == post) throw DiffError(DiffError::Kind::Identical, "no change (line endings only)");

    const std::size_t limit = std::min(pre.size(), post.size());
    std::size_t prefix = 0;
    while (prefix < limit && pre[prefix] == post[prefix]) ++prefix;
    std::size_t suffix = 0;
    while (suffix < limit - prefix && pre[pre.size() - 1 - suffix] == post[post.size() - 1 - suffix])
        ++suffix;

    std::vector<std::string> pre_mid(pre.begin() + prefix, pre.end() - suffix);
    std::vector<std::string> post_mid(post.begin() + prefix, post.end() - suffix);
    if (detail::lcs_length(pre_mid, post_mid) != 0)
        throw DiffError(DiffError::Kind::MultiHunk, "multi-hunk");

    Hunk h;
    h.pre_start = static_cast<int>(prefix) + 1;
    h.post_start = static_cast<int>(prefix) + 1;
    for (std::size_t i = 0; i < pre_mid.size(); ++i)
        h.pre_lines.push_back({static_cast<int>(prefix + i) + 1, pre_mid[i]});
    for (std::size_t i = 0; i < post_mid.size(); ++i)
        h.post_lines.push_back({static_cast<int>(prefix + i) + 1, post_mid[i]});
    for (std::size_t i = prefix >= 3 ? prefix - 3 : 0; i < prefix; ++i) h.context_before.push_back(pre[i]);
    for (std::size_t i = pre.size() - suffix; i < pre.size() - suffix + std::min<std::size_t>(suffix, 3); ++i)
        h.context_after.push_back(pre[i]);
    h.post_trailing_newline = text::ends_with_newline(post_fix_code);
    return h;
}

inline Hunk diff_hunk(const BugFixPair& pair) { return diff_hunk(pair.pre_fix_code, pair.post_fix_code); }

/// Removes the hunk's pre lines from `pre_fix_code` and inserts its post lines.
inline std::string apply_hunk(const Hunk& h, const std::string& pre_fix_code) {
    auto lines = text::split_lines(pre_fix_code);
    const auto at = static_cast<std::size_t>(h.pre_start - 1);
    if (at + h.pre_lines.size() > lines.size()) throw Error("hunk does not fit the text");
    for (std::size_t i = 0; i < h.pre_lines.size(); ++i)
        if (lines[at + i] != h.pre_lines[i].text) throw Error("hunk does not match the text");
    lines.erase(lines.begin() + static_cast<std::ptrdiff_t>(at),
                lines.begin() + static_cast<std::ptrdiff_t>(at + h.pre_lines.size()));
    std::vector<std::string> inserted;
    for (const auto& l : h.post_lines) inserted.push_back(l.text);
    lines.insert(lines.begin() + static_cast<std::ptrdiff_t>(at), inserted.begin(), inserted.end());
    return text::join_lines(lines, h.post_trailing_newline);
}

/// Ordered, immutable-after-ingestion collection of bug-fix pairs.
class Corpus {
public:
    Corpus() = default;

    void add(BugFixPair pair) {
        if (index_.count(pair.id)) throw FormatError("duplicate id: " + pair.id);
        index_.emplace(pair.id, pairs_.size());
        pairs_.push_back(std::move(pair));
    }

    const std::vector<BugFixPair>& pairs() const { return pairs_; }
    std::size_t size() const { return pairs_.size(); }
    bool empty() const { return pairs_.empty(); }

    const BugFixPair* find(const std::string& id) const {
        auto it = index_.find(id);
        return it == index_.end() ? nullptr : &pairs_[it->second];
    }

private:
    std::vector<BugFixPair> pairs_;
    std::unordered_map<std::string, std::size_t> index_;
};

struct SkippedRecord {
    int line_number; // 1-based line in the corpus file
    std::string id;  // empty when the record had none
    std::string reason;
};

struct IngestResult {
    Corpus corpus;
    std::vector<SkippedRecord> skipped;
};

/// Validates one parsed JSON record. Returns the reason it fails, if any.
inline std::optional<std::string> parse_corpus_record(const nlohmann::json& rec, BugFixPair& out) {
    if (!rec.is_object()) return "record is not a JSON object";
    for (const char* f : {"id", "pre_fix_code", "post_fix_code"}) {
        if (!rec.contains(f)) return std::string("missing field ") + f;
        if (!rec[f].is_string()) return std::string("field ") + f + " is not a string";
    }
    out = BugFixPair{};
    out.id = rec["id"].get<std::string>();
    if (out.id.empty()) return "empty id";
    out.project = rec.contains("project") && rec["project"].is_string() ? rec["project"].get<std::string>() : "";
    out.pre_fix_code = rec["pre_fix_code"].get<std::string>();
    out.post_fix_code = rec["post_fix_code"].get<std::string>();
    if (rec.contains("metadata")) {
        if (!rec["metadata"].is_object()) return "metadata is not an object";
        for (const auto& [k, v] : rec["metadata"].items()) {
            if (!v.is_string()) return "metadata value for " + k + " is not a string";
            out.metadata[k] = v.get<std::string>();
        }
    }
    try {
        out.hunk = diff_hunk(out.pre_fix_code, out.post_fix_code);
    } catch (const DiffError& e) {
        return std::string(e.what());
    }
    return std::nullopt;
}

/// Reads a line-delimited JSON corpus. Invalid records are skipped with a
/// reason; duplicate ids and an empty result are fatal.
inline IngestResult ingest_corpus_stream(std::istream& in) {
    IngestResult result;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::is_blank(line)) continue;
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error&) {
            result.skipped.push_back({line_no, "", "malformed JSON"});
            continue;
        }
        BugFixPair pair;
        if (auto why = parse_corpus_record(rec, pair)) {
            std::string id = rec.is_object() && rec.contains("id") && rec["id"].is_string()
                                 ? rec["id"].get<std::string>()
                                 : "";
            result.skipped.push_back({line_no, id, *why});
            continue;
        }
        if (result.corpus.find(pair.id))
            throw FormatError("duplicate id " + pair.id + " at line " + std::to_string(line_no));
        result.corpus.add(std::move(pair));
    }
    if (result.corpus.empty()) throw FormatError("corpus has zero valid records");
    return result;
}

inline IngestResult ingest_corpus(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read corpus file: " + path);
    return ingest_corpus_stream(in);
}

inline nlohmann::json to_json(const BugFixPair& p) {
    nlohmann::json j{{"id", p.id},
                     {"project", p.project},
                     {"pre_fix_code", p.pre_fix_code},
                     {"post_fix_code", p.post_fix_code}};
    j["metadata"] = nlohmann::json::object();
    for (const auto& [k, v] : p.metadata) j["metadata"][k] = v;
    return j;
}

} // namespace ragmut
