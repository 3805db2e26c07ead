#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "alphaforge/symbols.hpp"

namespace alphaforge {

class Node;
using NodePtr = std::shared_ptr<const Node>;

// Immutable tree node. Subtrees are shared between trees, which keeps
// derivation states cheap to branch.
class Node {
public:
    Node(Symbol label, std::vector<NodePtr> children);

    const Symbol& label() const noexcept { return label_; }
    std::span<const NodePtr> children() const noexcept { return children_; }
    const Node& child(std::size_t i) const { return *children_.at(i); }

    std::size_t size() const noexcept { return size_; }
    std::size_t open_count() const noexcept { return open_; }
    bool complete() const noexcept { return open_ == 0; }

private:
    Symbol label_;
    std::vector<NodePtr> children_;
    std::size_t size_;
    std::size_t open_;
};

// Rooted ordered expression tree; partial trees carry nonterminal leaves.
class ExprTree {
public:
    explicit ExprTree(NodePtr root);

    static ExprTree leaf(Symbol label);
    static ExprTree op(Op op, std::vector<ExprTree> children);

    const Node& root() const noexcept { return *root_; }
    const NodePtr& root_ptr() const noexcept { return root_; }

    bool is_complete() const noexcept { return root_->complete(); }
    std::size_t size() const noexcept { return root_->size(); }

private:
    NodePtr root_;
};

NodePtr make_node(Symbol label, std::vector<NodePtr> children = {});

// Function-call syntax, e.g. "Cov(volume,vwap,40)". Whitespace between tokens
// is ignored. Integer tokens become window literals, decimal tokens
// constants; "<Expr>", "<Num>", "<Constant>", "<Start>" are placeholders.
ExprTree parse_prefix(std::string_view text);

// Canonical text: no whitespace, comma-separated arguments.
std::string to_text(const ExprTree& tree);
std::string to_text(const Node& node);

bool isomorphic(const Node& a, const Node& b);
inline bool isomorphic(const ExprTree& a, const ExprTree& b) { return isomorphic(a.root(), b.root()); }

// Number of nodes, i.e. the number of subtrees rooted in the tree.
std::size_t subtree_count(const ExprTree& tree);

// A string that is equal for two subtrees iff they are isomorphic: children
// of symmetric operators are emitted in sorted order.
std::string canonical_form(const Node& node);

// Node count of the largest complete subtree of `a` isomorphic to some
// subtree of `b` (0 when there is none).
std::size_t largest_common_subtree(const ExprTree& a, const ExprTree& b);

// largest_common_subtree / max(N(a), N(b)), in [0, 1].
double similarity(const ExprTree& a, const ExprTree& b);

// Pre-order list of the nodes of a tree.
std::vector<const Node*> preorder(const Node& root);

}  // namespace alphaforge
