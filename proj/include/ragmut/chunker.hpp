#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ragmut/error.hpp"
#include "ragmut/java_parser.hpp"
#include "ragmut/text.hpp"

namespace ragmut {

using LineSet = std::set<int>;

/// A method under mutation. Line numbers are absolute: the first line of
/// `source` is `start_line`.
struct FocalMethod {
    std::string source;
    int start_line = 1;
    std::vector<std::string> line_texts;
    LineSet lines;
    java::SyntaxTree ast;

    const std::string& line_text(int line) const {
        return line_texts.at(static_cast<std::size_t>(line - start_line));
    }
    int last_line() const { return start_line + static_cast<int>(line_texts.size()) - 1; }
};

enum class ChunkKind { ControlFlow, Segment };

inline std::string_view to_string(ChunkKind k) { return k == ChunkKind::ControlFlow ? "control_flow" : "segment"; }

struct CodeChunk {
    LineSet line_numbers;
    std::string text;
    ChunkKind kind = ChunkKind::Segment;
    int claiming_node = -1; // tree node that claimed a control-flow chunk

    int loc() const { return static_cast<int>(line_numbers.size()); }
};

inline constexpr std::string_view kJavaGrammar = "java";

/// Parses a method (or a bare statement sequence). Blank lines, including
/// trailing ones, belong to the method's line set.
inline FocalMethod parse_method(std::string source, int start_line = 1, std::string_view grammar = kJavaGrammar) {
    if (grammar != kJavaGrammar) throw Error("unsupported grammar: " + std::string(grammar));
    FocalMethod m;
    m.start_line = start_line;
    m.line_texts = text::split_lines(source);
    if (m.line_texts.empty() || text::is_blank(source)) throw SyntaxError("empty method", start_line);
    for (int i = 0; i < static_cast<int>(m.line_texts.size()); ++i) m.lines.insert(start_line + i);
    m.ast = java::parse_java(source, start_line, m.last_line());
    m.source = std::move(source);
    return m;
}

inline bool is_target_kind(java::NodeKind k) {
    using java::NodeKind;
    return k == NodeKind::If || k == NodeKind::For || k == NodeKind::While || k == NodeKind::DoWhile ||
           k == NodeKind::Try;
}

inline LineSet node_lines(const java::Node& n) {
    LineSet s;
    for (int l = n.first_line; l <= n.last_line; ++l) s.insert(l);
    return s;
}

/// All if/for/while/do-while/try nodes, ordered by starting line descending;
/// nodes sharing a starting line are ordered deepest first.
inline std::vector<int> collect_target_nodes(const FocalMethod& m) {
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(m.ast.nodes.size()); ++i)
        if (is_target_kind(m.ast[i].kind)) out.push_back(i);
    std::stable_sort(out.begin(), out.end(), [&](int a, int b) {
        const auto& na = m.ast[a];
        const auto& nb = m.ast[b];
        if (na.first_line != nb.first_line) return na.first_line > nb.first_line;
        return na.depth > nb.depth;
    });
    return out;
}

/// Lines of the contiguous run of local variable declarations directly
/// preceding `node` in its enclosing block, restricted to `remaining`.
inline LineSet preceding_decl_stmts(const FocalMethod& m, int node, const LineSet& remaining) {
    LineSet out;
    const auto& n = m.ast[node];
    if (n.parent < 0 || !java::is_sequence(m.ast[n.parent].kind)) return out;
    const auto& siblings = m.ast[n.parent].children;
    for (int i = m.ast.position_in_parent(node) - 1; i >= 0; --i) {
        const auto& s = m.ast[siblings[static_cast<std::size_t>(i)]];
        if (s.kind != java::NodeKind::LocalVarDecl) break;
        for (int l = s.first_line; l <= s.last_line; ++l)
            if (remaining.count(l)) out.insert(l);
    }
    return out;
}

inline std::string text_of_lines(const FocalMethod& m, const LineSet& lines) {
    std::string out;
    bool first = true;
    for (int l : lines) {
        if (!first) out += '\n';
        out += m.line_text(l);
        first = false;
    }
    return out;
}

/// Splits an ordered line set into maximal runs of consecutive numbers.
inline std::vector<LineSet> consecutive_segments(const LineSet& lines) {
    std::vector<LineSet> out;
    int prev = 0;
    for (int l : lines) {
        if (out.empty() || l != prev + 1) out.emplace_back();
        out.back().insert(l);
        prev = l;
    }
    return out;
}

/// Logic-based chunking: control-flow nodes claim their unclaimed lines
/// bottom-up together with their preceding declarations; whatever is left
/// becomes consecutive segments. Chunks are returned in claim order followed
/// by segments in ascending line order.
inline std::vector<CodeChunk> chunk_method(const FocalMethod& m) {
    std::vector<CodeChunk> chunks;
    LineSet remaining = m.lines;
    for (int node : collect_target_nodes(m)) {
        LineSet claimed;
        for (int l : node_lines(m.ast[node]))
            if (remaining.count(l)) claimed.insert(l);
        if (claimed.empty()) continue;
        LineSet decls = preceding_decl_stmts(m, node, remaining);
        claimed.insert(decls.begin(), decls.end());
        for (int l : claimed) remaining.erase(l);
        CodeChunk c;
        c.kind = ChunkKind::ControlFlow;
        c.text = text_of_lines(m, claimed);
        c.line_numbers = std::move(claimed);
        c.claiming_node = node;
        chunks.push_back(std::move(c));
    }
    for (auto& seg : consecutive_segments(remaining)) {
        CodeChunk c;
        c.kind = ChunkKind::Segment;
        c.text = text_of_lines(m, seg);
        c.line_numbers = std::move(seg);
        chunks.push_back(std::move(c));
    }
    return chunks;
}

/// The whole method as one chunk, used when chunking is disabled.
inline CodeChunk whole_method_chunk(const FocalMethod& m) {
    CodeChunk c;
    c.kind = ChunkKind::Segment;
    c.line_numbers = m.lines;
    c.text = text_of_lines(m, m.lines);
    return c;
}

} // namespace ragmut
