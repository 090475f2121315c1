#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "ragmut/error.hpp"
#include "ragmut/java_lexer.hpp"

namespace ragmut::java {

enum class NodeKind {
    Body,          // method body or bare statement list (root)
    Block,
    CaseGroup,     // statements under one or more `case`/`default` labels
    If,
    For,
    While,
    DoWhile,
    Try,
    Switch,
    Synchronized,
    Labeled,
    LocalVarDecl,
    LocalClassDecl,
    Statement,     // expression, return, throw, break, continue, assert, yield
    Empty,
};

inline std::string_view to_string(NodeKind k) {
    switch (k) {
    case NodeKind::Body: return "Body";
    case NodeKind::Block: return "Block";
    case NodeKind::CaseGroup: return "CaseGroup";
    case NodeKind::If: return "IfStmt";
    case NodeKind::For: return "ForStmt";
    case NodeKind::While: return "WhileStmt";
    case NodeKind::DoWhile: return "DoWhileStmt";
    case NodeKind::Try: return "TryStmt";
    case NodeKind::Switch: return "SwitchStmt";
    case NodeKind::Synchronized: return "SynchronizedStmt";
    case NodeKind::Labeled: return "LabeledStmt";
    case NodeKind::LocalVarDecl: return "LocalVarDecl";
    case NodeKind::LocalClassDecl: return "LocalClassDecl";
    case NodeKind::Statement: return "Statement";
    case NodeKind::Empty: return "Empty";
    }
    return "?";
}

/// Nodes whose children form an ordered statement sequence.
inline bool is_sequence(NodeKind k) {
    return k == NodeKind::Body || k == NodeKind::Block || k == NodeKind::CaseGroup;
}

struct Node {
    NodeKind kind;
    int first_line;
    int last_line;
    int depth;  // 0 for the root
    int parent; // -1 for the root
    std::vector<int> children;
};

/// Statement-level syntax tree stored as an arena; node 0 is the root.
struct SyntaxTree {
    std::vector<Node> nodes;
    bool has_header = false; // true when the input was a full method declaration

    const Node& root() const { return nodes.front(); }
    const Node& operator[](int i) const { return nodes[static_cast<std::size_t>(i)]; }

    /// Index of `id` within its parent's children, or -1.
    int position_in_parent(int id) const {
        const Node& n = (*this)[id];
        if (n.parent < 0) return -1;
        const auto& sib = (*this)[n.parent].children;
        for (std::size_t i = 0; i < sib.size(); ++i)
            if (sib[i] == id) return static_cast<int>(i);
        return -1;
    }
};

namespace detail {

inline bool is_primitive(const Token& t) {
    if (t.kind != TokenKind::Keyword) return false;
    for (auto p : {"int", "long", "short", "byte", "char", "boolean", "float", "double"})
        if (t.text == p) return true;
    return false;
}

/// Checks that (), [] and {} pair up, reporting the offending line.
inline void check_balance(const std::vector<Token>& toks) {
    std::vector<const Token*> stack;
    for (const auto& t : toks) {
        if (t.kind != TokenKind::Operator) continue;
        if (t.text == "(" || t.text == "[" || t.text == "{") {
            stack.push_back(&t);
        } else if (t.text == ")" || t.text == "]" || t.text == "}") {
            const char want = t.text == ")" ? '(' : t.text == "]" ? '[' : '{';
            if (stack.empty()) throw SyntaxError("unmatched '" + t.text + "'", t.line);
            if (stack.back()->text[0] != want)
                throw SyntaxError("'" + t.text + "' closes '" + stack.back()->text + "' opened at line " +
                                      std::to_string(stack.back()->line),
                                  t.line);
            stack.pop_back();
        }
    }
    if (!stack.empty()) throw SyntaxError("unbalanced '" + stack.back()->text + "'", stack.back()->line);
}

class Parser {
public:
    explicit Parser(std::vector<Token> toks) : t_(std::move(toks)) {}

    SyntaxTree parse(int first_line, int last_line) {
        check_balance(t_);
        tree_.nodes.push_back({NodeKind::Body, first_line, last_line, 0, -1, {}});
        std::size_t body_open = 0;
        if (looks_like_method_header(body_open)) {
            tree_.has_header = true;
            pos_ = body_open;
            expect("{");
            while (!cur().is("}")) add_child(0, statement(0));
            expect("}");
        } else {
            while (cur().kind != TokenKind::End) add_child(0, statement(0));
        }
        if (cur().kind != TokenKind::End) throw SyntaxError("unexpected '" + cur().text + "' after method body", cur().line);
        return std::move(tree_);
    }

private:
    std::vector<Token> t_;
    std::size_t pos_ = 0;
    SyntaxTree tree_;
    int last_line_ = 0;

    const Token& cur() const { return t_[pos_]; }
    const Token& at(std::size_t k) const { return t_[std::min(pos_ + k, t_.size() - 1)]; }
    const Token& advance() {
        const Token& tk = t_[pos_];
        if (tk.kind != TokenKind::End) {
            last_line_ = tk.end_line;
            ++pos_;
        }
        return tk;
    }
    void expect(std::string_view s) {
        if (!cur().is(s)) {
            std::string got = cur().kind == TokenKind::End ? "end of input" : "'" + cur().text + "'";
            throw SyntaxError("expected '" + std::string(s) + "' but found " + got, cur().line);
        }
        advance();
    }

    int new_node(NodeKind k, int first_line, int depth) {
        tree_.nodes.push_back({k, first_line, first_line, depth, -1, {}});
        return static_cast<int>(tree_.nodes.size()) - 1;
    }
    Node& node(int id) { return tree_.nodes[static_cast<std::size_t>(id)]; }
    void add_child(int parent, int child) {
        node(child).parent = parent;
        node(parent).children.push_back(child);
    }
    void finish(int id) { node(id).last_line = last_line_; }

    static bool starts_statement_keyword(const Token& t) {
        for (auto k : {"if", "for", "while", "do", "try", "switch", "return", "throw", "break", "continue",
                       "synchronized", "assert", "this", "super", "new", "final"})
            if (t.is(k)) return true;
        return false;
    }

    // Method header: anything up to the first top-level `{`, ending with a
    // parameter list and an optional throws clause, with no `=`, `;` or `->`.
    bool looks_like_method_header(std::size_t& body_open) const {
        if (t_.empty() || starts_statement_keyword(t_[0]) || t_[0].is("{")) return false;
        int depth = 0;
        std::size_t close_paren = std::string::npos;
        bool saw_call = false;
        for (std::size_t i = 0; i < t_.size(); ++i) {
            const Token& tk = t_[i];
            if (tk.kind == TokenKind::End) return false;
            if (tk.is("(") || tk.is("[")) {
                if (depth == 0 && tk.is("(") && i > 0 && t_[i - 1].is_ident() && !(i > 1 && t_[i - 2].is("@")))
                    saw_call = true;
                ++depth;
                continue;
            }
            if (tk.is(")") || tk.is("]")) {
                --depth;
                if (depth == 0 && tk.is(")")) close_paren = i;
                continue;
            }
            if (depth > 0) continue;
            if (tk.is("=") || tk.is(";") || tk.is("->") || tk.is("new")) return false;
            if (tk.is("{")) {
                if (!saw_call || close_paren == std::string::npos) return false;
                std::size_t j = close_paren + 1;
                if (j < i && t_[j].is("throws")) {
                    for (++j; j < i; ++j)
                        if (!(t_[j].is_ident() || t_[j].is(",") || t_[j].is(".") || t_[j].is("<") ||
                              t_[j].is(">") || t_[j].is(">>")))
                            return false;
                }
                if (j != i) return false;
                body_open = i;
                return true;
            }
        }
        return false;
    }

    // Skips a balanced group starting at an opener.
    void skip_group() {
        const std::string open = cur().text;
        const std::string close = open == "(" ? ")" : open == "[" ? "]" : "}";
        int depth = 0;
        do {
            if (cur().kind == TokenKind::End) throw SyntaxError("unbalanced '" + open + "'", cur().line);
            if (cur().is(open)) ++depth;
            else if (cur().is(close)) --depth;
            advance();
        } while (depth > 0);
    }

    void paren_group() {
        if (!cur().is("(")) expect("(");
        skip_group();
    }

    // Consumes tokens up to and including the terminating top-level `;`.
    void skip_to_semicolon() {
        while (!cur().is(";")) {
            if (cur().kind == TokenKind::End) throw SyntaxError("expected ';' but found end of input", cur().line);
            if (cur().is("}")) throw SyntaxError("expected ';' before '}'", cur().line);
            if (cur().is("(") || cur().is("[") || cur().is("{")) skip_group();
            else advance();
        }
        advance();
    }

    bool skip_annotation(std::size_t& i) const {
        if (!t_[i].is("@") || t_[i + 1].is("interface")) return false;
        ++i;
        while (t_[i].is_ident() && t_[i + 1].is(".")) i += 2;
        if (!t_[i].is_ident()) return false;
        ++i;
        if (t_[i].is("(")) {
            int depth = 0;
            do {
                if (t_[i].kind == TokenKind::End) return false;
                if (t_[i].is("(")) ++depth;
                else if (t_[i].is(")")) --depth;
                ++i;
            } while (depth > 0);
        }
        return true;
    }

    // Type arguments starting at `<`; advances past the matching `>`.
    bool skip_type_args(std::size_t& i) const {
        int depth = 0;
        do {
            const Token& tk = t_[i];
            if (tk.is("<")) depth += 1;
            else if (tk.is(">")) depth -= 1;
            else if (tk.is(">>")) depth -= 2;
            else if (tk.is(">>>")) depth -= 3;
            else if (!(tk.is_ident() || is_primitive(tk) || tk.is(",") || tk.is(".") || tk.is("?") ||
                       tk.is("extends") || tk.is("super") || tk.is("&") || tk.is("[") || tk.is("]") || tk.is("@")))
                return false;
            ++i;
        } while (depth > 0);
        return depth == 0;
    }

    bool is_local_var_decl() const {
        std::size_t i = pos_;
        bool modifiers = false;
        for (;;) {
            if (t_[i].is("final")) {
                ++i;
                modifiers = true;
            } else if (t_[i].is("@")) {
                if (!skip_annotation(i)) return false;
                modifiers = true;
            } else {
                break;
            }
        }
        (void)modifiers;
        if (is_primitive(t_[i])) {
            ++i;
        } else if (t_[i].is_ident()) {
            for (;;) {
                ++i;
                if (t_[i].is("<") && !skip_type_args(i)) return false;
                if (t_[i].is(".") && t_[i + 1].is_ident()) {
                    ++i;
                    continue;
                }
                break;
            }
        } else {
            return false;
        }
        while (t_[i].is("[") && t_[i + 1].is("]")) i += 2;
        if (!t_[i].is_ident()) return false;
        ++i;
        const Token& after = t_[i];
        return after.is("=") || after.is(";") || after.is(",") || after.is("[");
    }

    bool is_local_class_decl() const {
        std::size_t i = pos_;
        for (;;) {
            if (t_[i].is("final") || t_[i].is("abstract") || t_[i].is("static") || t_[i].is("strictfp")) {
                ++i;
            } else if (t_[i].is("@") && !t_[i + 1].is("interface")) {
                if (!skip_annotation(i)) return false;
            } else {
                break;
            }
        }
        if (t_[i].is("class") || t_[i].is("interface") || t_[i].is("enum")) return true;
        if (t_[i].is("@") && t_[i + 1].is("interface")) return true;
        return t_[i].is_ident() && t_[i].text == "record" && t_[i + 1].is_ident() &&
               (t_[i + 2].is("(") || t_[i + 2].is("<"));
    }

    int block(int depth, NodeKind kind = NodeKind::Block) {
        const int id = new_node(kind, cur().line, depth);
        expect("{");
        while (!cur().is("}")) {
            if (cur().kind == TokenKind::End) throw SyntaxError("expected '}' but found end of input", cur().line);
            add_child(id, statement(depth + 1));
        }
        expect("}");
        finish(id);
        return id;
    }

    int statement(int depth) {
        const Token& tk = cur();
        if (tk.kind == TokenKind::End) throw SyntaxError("expected a statement but found end of input", tk.line);
        if (tk.is("{")) return block(depth);
        if (tk.is("}")) throw SyntaxError("unexpected '}'", tk.line);

        if (tk.is(";")) {
            const int id = new_node(NodeKind::Empty, tk.line, depth);
            advance();
            finish(id);
            return id;
        }
        if (tk.is("if")) {
            const int id = new_node(NodeKind::If, tk.line, depth);
            advance();
            paren_group();
            add_child(id, statement(depth + 1));
            if (cur().is("else")) {
                advance();
                add_child(id, statement(depth + 1));
            }
            finish(id);
            return id;
        }
        if (tk.is("for") || tk.is("while")) {
            const int id = new_node(tk.is("for") ? NodeKind::For : NodeKind::While, tk.line, depth);
            advance();
            paren_group();
            add_child(id, statement(depth + 1));
            finish(id);
            return id;
        }
        if (tk.is("do")) {
            const int id = new_node(NodeKind::DoWhile, tk.line, depth);
            advance();
            add_child(id, statement(depth + 1));
            expect("while");
            paren_group();
            expect(";");
            finish(id);
            return id;
        }
        if (tk.is("try")) {
            const int id = new_node(NodeKind::Try, tk.line, depth);
            advance();
            const bool resources = cur().is("(");
            if (resources) skip_group();
            add_child(id, block(depth + 1));
            bool handlers = false;
            while (cur().is("catch")) {
                advance();
                paren_group();
                add_child(id, block(depth + 1));
                handlers = true;
            }
            if (cur().is("finally")) {
                advance();
                add_child(id, block(depth + 1));
                handlers = true;
            }
            if (!handlers && !resources) throw SyntaxError("'try' without 'catch' or 'finally'", cur().line);
            finish(id);
            return id;
        }
        if (tk.is("switch")) return switch_statement(depth);
        if (tk.is("synchronized")) {
            const int id = new_node(NodeKind::Synchronized, tk.line, depth);
            advance();
            paren_group();
            add_child(id, block(depth + 1));
            finish(id);
            return id;
        }
        if (tk.is("else")) throw SyntaxError("'else' without 'if'", tk.line);
        if (tk.is("catch") || tk.is("finally")) throw SyntaxError("'" + tk.text + "' without 'try'", tk.line);
        if (tk.is("case") || tk.is("default")) {
            if (!(tk.is("default") && at(1).is(".")))
                throw SyntaxError("'" + tk.text + "' outside of switch", tk.line);
        }
        if (tk.is_ident() && at(1).is(":")) {
            const int id = new_node(NodeKind::Labeled, tk.line, depth);
            advance();
            advance();
            add_child(id, statement(depth + 1));
            finish(id);
            return id;
        }
        if (is_local_class_decl()) {
            const int id = new_node(NodeKind::LocalClassDecl, tk.line, depth);
            while (!cur().is("{")) {
                if (cur().kind == TokenKind::End || cur().is(";"))
                    throw SyntaxError("malformed local type declaration", cur().line);
                if (cur().is("(") || cur().is("[")) skip_group();
                else advance();
            }
            skip_group();
            finish(id);
            return id;
        }
        const bool yield_stmt = tk.is_ident() && tk.text == "yield" &&
                                !(at(1).is("=") || at(1).is("(") || at(1).is(".") || at(1).is("[") ||
                                  at(1).is("++") || at(1).is("--") || at(1).is(";"));
        const int id = new_node(!yield_stmt && is_local_var_decl() ? NodeKind::LocalVarDecl : NodeKind::Statement,
                                tk.line, depth);
        skip_to_semicolon();
        finish(id);
        return id;
    }

    int switch_statement(int depth) {
        const int id = new_node(NodeKind::Switch, cur().line, depth);
        advance();
        paren_group();
        expect("{");
        int group = -1;
        while (!cur().is("}")) {
            if (cur().kind == TokenKind::End) throw SyntaxError("expected '}' but found end of input", cur().line);
            if (cur().is("case") || cur().is("default")) {
                const int label_line = cur().line;
                advance();
                int d = 0;
                while (!(d == 0 && (cur().is(":") || cur().is("->")))) {
                    if (cur().kind == TokenKind::End || (d == 0 && (cur().is(";") || cur().is("}"))))
                        throw SyntaxError("malformed switch label", label_line);
                    if (cur().is("(") || cur().is("[") || cur().is("{")) {
                        skip_group();
                        continue;
                    }
                    advance();
                }
                if (cur().is("->")) {
                    advance();
                    const int rule = new_node(NodeKind::CaseGroup, label_line, depth + 1);
                    add_child(id, rule);
                    add_child(rule, statement(depth + 2));
                    finish(rule);
                    group = -1;
                } else {
                    advance();
                    if (group < 0) {
                        group = new_node(NodeKind::CaseGroup, label_line, depth + 1);
                        add_child(id, group);
                    }
                    finish(group);
                }
                continue;
            }
            if (group < 0) throw SyntaxError("statement before first switch label", cur().line);
            add_child(group, statement(depth + 2));
            finish(group);
            if (cur().is("case") || cur().is("default") || cur().is("}")) {
                if (!cur().is("}")) group = -1;
            }
        }
        expect("}");
        finish(id);
        return id;
    }
};

} // namespace detail

/// Parses a Java method declaration, or a bare statement sequence, into a
/// statement-level tree. Expressions, lambda bodies and anonymous classes
/// are kept opaque. `first_line` numbers the first line of `src`.
inline SyntaxTree parse_java(std::string_view src, int first_line, int last_line) {
    detail::Parser p(tokenize(src, first_line));
    return p.parse(first_line, last_line);
}

} // namespace ragmut::java
