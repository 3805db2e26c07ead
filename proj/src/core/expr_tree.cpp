#include "alphaforge/expr_tree.hpp"

#include <algorithm>
#include <charconv>
#include <stdexcept>
#include <unordered_set>

#include "alphaforge/errors.hpp"

namespace alphaforge {

Node::Node(Symbol label, std::vector<NodePtr> children)
    : label_(std::move(label)), children_(std::move(children)), size_(1), open_(0) {
    if (const auto* op = std::get_if<Op>(&label_)) {
        const auto& info = op_info(*op);
        if (static_cast<int>(children_.size()) != info.arity)
            throw std::invalid_argument(std::string(info.name) + " node needs " +
                                        std::to_string(info.arity) + " children");
    } else if (!children_.empty()) {
        throw std::invalid_argument("only operator nodes may have children");
    }
    if (is_nonterminal(label_)) open_ = 1;
    for (const auto& c : children_) {
        if (!c) throw std::invalid_argument("null child");
        size_ += c->size();
        open_ += c->open_count();
    }
}

NodePtr make_node(Symbol label, std::vector<NodePtr> children) {
    return std::make_shared<const Node>(std::move(label), std::move(children));
}

ExprTree::ExprTree(NodePtr root) : root_(std::move(root)) {
    if (!root_) throw std::invalid_argument("ExprTree needs a root");
}

ExprTree ExprTree::leaf(Symbol label) { return ExprTree(make_node(std::move(label))); }

ExprTree ExprTree::op(Op op, std::vector<ExprTree> children) {
    std::vector<NodePtr> kids;
    kids.reserve(children.size());
    for (auto& c : children) kids.push_back(c.root_ptr());
    return ExprTree(make_node(op, std::move(kids)));
}

namespace {

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    ExprTree run() {
        auto root = expr();
        skip_ws();
        if (pos_ != text_.size()) fail("unexpected trailing input");
        return ExprTree(std::move(root));
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError(what + " at position " + std::to_string(pos_), pos_);
    }

    void skip_ws() {
        while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' ||
                                       text_[pos_] == '\n' || text_[pos_] == '\r'))
            ++pos_;
    }

    bool at_end() const { return pos_ >= text_.size(); }
    char peek() const { return at_end() ? '\0' : text_[pos_]; }

    static bool ident_char(char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
               c == '_';
    }

    NodePtr expr() {
        skip_ws();
        if (at_end()) fail("expected expression");
        char c = peek();
        if (c == '<') return placeholder();
        if (c == '-' || c == '+' || c == '.' || (c >= '0' && c <= '9')) return number();
        if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z')) return identifier();
        fail(std::string("unexpected character '") + c + "'");
    }

    NodePtr placeholder() {
        const std::size_t start = pos_;
        auto close = text_.find('>', pos_);
        if (close == std::string_view::npos) fail("unterminated placeholder");
        auto name = text_.substr(pos_ + 1, close - pos_ - 1);
        for (std::size_t i = 0; i < kNumNonTerminals; ++i) {
            auto nt = static_cast<NonTerminal>(i);
            if (nonterminal_name(nt) == name) {
                pos_ = close + 1;
                return make_node(nt);
            }
        }
        pos_ = start;
        fail("unknown placeholder <" + std::string(name) + ">");
    }

    NodePtr number() {
        const std::size_t start = pos_;
        std::size_t end = pos_;
        if (text_[end] == '-' || text_[end] == '+') ++end;
        bool integral = true;
        bool digits = false;
        while (end < text_.size()) {
            char c = text_[end];
            if (c >= '0' && c <= '9') {
                digits = true;
                ++end;
            } else if (c == '.') {
                integral = false;
                ++end;
            } else if ((c == 'e' || c == 'E') && digits) {
                integral = false;
                ++end;
                if (end < text_.size() && (text_[end] == '-' || text_[end] == '+')) ++end;
            } else {
                break;
            }
        }
        if (!digits) fail("malformed number");
        std::string_view tok = text_.substr(start, end - start);
        if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
        if (integral) {
            int v = 0;
            auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
            if (ec != std::errc() || p != tok.data() + tok.size()) fail("malformed integer");
            pos_ = end;
            return make_node(NumLiteral{v});
        }
        double v = 0.0;
        auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc() || p != tok.data() + tok.size()) fail("malformed number");
        pos_ = end;
        return make_node(ConstLiteral{v});
    }

    NodePtr identifier() {
        const std::size_t start = pos_;
        while (!at_end() && ident_char(peek())) ++pos_;
        std::string name(text_.substr(start, pos_ - start));
        skip_ws();
        if (peek() != '(') {
            if (auto f = feature_from_name(name)) return make_node(*f);
            if (auto op = op_from_name(name)) throw ArityError(name, op_info(*op).arity, 0, start);
            pos_ = start;
            fail("unknown feature '" + name + "'");
        }
        auto op = op_from_name(name);
        if (!op) {
            pos_ = start;
            fail("unknown operator '" + name + "'");
        }
        ++pos_;  // '('
        std::vector<NodePtr> args;
        skip_ws();
        if (peek() == ')') {
            ++pos_;
        } else {
            while (true) {
                args.push_back(expr());
                skip_ws();
                if (peek() == ',') {
                    ++pos_;
                    continue;
                }
                if (peek() == ')') {
                    ++pos_;
                    break;
                }
                fail(at_end() ? "expected ')' before end of input" : "expected ',' or ')'");
            }
        }
        const auto& info = op_info(*op);
        if (static_cast<int>(args.size()) != info.arity)
            throw ArityError(name, info.arity, static_cast<int>(args.size()), start);
        return make_node(*op, std::move(args));
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

void write_text(const Node& n, std::string& out) {
    out += symbol_text(n.label());
    if (n.children().empty()) return;
    out += '(';
    bool first = true;
    for (const auto& c : n.children()) {
        if (!first) out += ',';
        first = false;
        write_text(*c, out);
    }
    out += ')';
}

Symmetry symmetry_of(const Node& n) {
    if (const auto* op = std::get_if<Op>(&n.label())) return op_info(*op).symmetry;
    return Symmetry::None;
}

void collect_forms(const Node& n, std::vector<std::pair<std::string, std::size_t>>& out,
                   std::string& form) {
    // Post-order: children forms first, then this node's.
    std::vector<std::string> kids;
    kids.reserve(n.children().size());
    for (const auto& c : n.children()) {
        std::string f;
        collect_forms(*c, out, f);
        kids.push_back(std::move(f));
    }
    switch (symmetry_of(n)) {
        case Symmetry::Full: std::sort(kids.begin(), kids.end()); break;
        case Symmetry::FirstTwo:
            if (kids[1] < kids[0]) std::swap(kids[0], kids[1]);
            break;
        case Symmetry::None: break;
    }
    form = symbol_text(n.label());
    if (!kids.empty()) {
        form += '(';
        for (std::size_t i = 0; i < kids.size(); ++i) {
            if (i) form += ',';
            form += kids[i];
        }
        form += ')';
    }
    out.emplace_back(form, n.size());
}

}  // namespace

ExprTree parse_prefix(std::string_view text) { return Parser(text).run(); }

std::string to_text(const Node& node) {
    std::string out;
    write_text(node, out);
    return out;
}

std::string to_text(const ExprTree& tree) { return to_text(tree.root()); }

bool isomorphic(const Node& a, const Node& b) {
    if (!(a.label() == b.label())) return false;
    auto ca = a.children();
    auto cb = b.children();
    if (ca.size() != cb.size()) return false;
    if (a.size() != b.size()) return false;
    switch (symmetry_of(a)) {
        case Symmetry::Full:
            return (isomorphic(*ca[0], *cb[0]) && isomorphic(*ca[1], *cb[1])) ||
                   (isomorphic(*ca[0], *cb[1]) && isomorphic(*ca[1], *cb[0]));
        case Symmetry::FirstTwo:
            return isomorphic(*ca[2], *cb[2]) &&
                   ((isomorphic(*ca[0], *cb[0]) && isomorphic(*ca[1], *cb[1])) ||
                    (isomorphic(*ca[0], *cb[1]) && isomorphic(*ca[1], *cb[0])));
        case Symmetry::None:
            for (std::size_t i = 0; i < ca.size(); ++i)
                if (!isomorphic(*ca[i], *cb[i])) return false;
            return true;
    }
    return false;
}

std::size_t subtree_count(const ExprTree& tree) { return tree.size(); }

std::string canonical_form(const Node& node) {
    std::vector<std::pair<std::string, std::size_t>> all;
    std::string form;
    collect_forms(node, all, form);
    return form;
}

std::size_t largest_common_subtree(const ExprTree& a, const ExprTree& b) {
    std::vector<std::pair<std::string, std::size_t>> fa, fb;
    std::string root_form;
    collect_forms(a.root(), fa, root_form);
    collect_forms(b.root(), fb, root_form);
    std::unordered_set<std::string> in_b;
    for (auto& [form, size] : fb) in_b.insert(form);
    std::size_t best = 0;
    for (const auto& [form, size] : fa)
        if (size > best && in_b.contains(form)) best = size;
    return best;
}

double similarity(const ExprTree& a, const ExprTree& b) {
    const auto denom = std::max(a.size(), b.size());
    return static_cast<double>(largest_common_subtree(a, b)) / static_cast<double>(denom);
}

std::vector<const Node*> preorder(const Node& root) {
    std::vector<const Node*> out;
    std::vector<const Node*> stack{&root};
    while (!stack.empty()) {
        const Node* n = stack.back();
        stack.pop_back();
        out.push_back(n);
        auto kids = n->children();
        for (auto it = kids.rbegin(); it != kids.rend(); ++it) stack.push_back(it->get());
    }
    return out;
}

}  // namespace alphaforge
