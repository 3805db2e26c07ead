#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "alphaforge/expr_tree.hpp"
#include "alphaforge/symbols.hpp"

namespace alphaforge {

enum class GrammarLevel { Syn, Sem, SemK };

std::string_view grammar_level_name(GrammarLevel level);
std::optional<GrammarLevel> grammar_level_from_name(std::string_view name);

enum class RuleShape {
    Unary,          // Op(Expr)
    Binary,         // Op(Expr, Expr)
    BinaryConst,    // Op(Expr, Constant)
    BinaryAsym,     // Op(Constant, Expr)
    Rolling,        // Op(Expr, Num)
    PairedRolling,  // Op(Expr, Expr, Num)
    TerminalChoice,
};

std::string_view rule_shape_name(RuleShape shape);

struct ProductionRule {
    int id;
    NonTerminal lhs;
    // rhs[0] is the label of the new node; the rest are its children (all
    // leaves). Terminal choices have a single-element rhs.
    std::vector<Symbol> rhs;
    RuleShape shape;
    int delta_k;
};

// Length increment of a rule shape.
int delta_k_for(RuleShape shape);

// One grammar level with its fully instantiated rule vocabulary. Rule ids are
// assigned in canonical order: operators in registry order (each operator's
// forms consecutively), then features, then constants, then window sizes.
class Grammar {
public:
    // max_length is the K bound. It gates rule choice only for SemK; the other
    // levels keep it as a post-hoc length limit for the miner.
    explicit Grammar(GrammarLevel level, int max_length = 10);

    GrammarLevel level() const noexcept { return level_; }
    int max_length() const noexcept { return max_length_; }
    bool gated() const noexcept { return level_ == GrammarLevel::SemK; }

    const std::vector<ProductionRule>& rules() const noexcept { return rules_; }
    const ProductionRule& rule(int id) const { return rules_.at(static_cast<std::size_t>(id)); }
    std::size_t vocabulary_size() const noexcept { return rules_.size(); }

    // Rule id that expands `lhs` into `rhs` exactly, if any.
    std::optional<int> find_rule(NonTerminal lhs, const std::vector<Symbol>& rhs) const;

    // Text table with columns id, lhs, rhs, delta_k.
    std::string dump() const;

private:
    void add(NonTerminal lhs, std::vector<Symbol> rhs, RuleShape shape);

    GrammarLevel level_;
    int max_length_;
    std::vector<ProductionRule> rules_;
};

// A point in a leftmost derivation: an immutable tree plus the accumulated
// length counter.
class DerivationState {
public:
    static DerivationState initial(const Grammar& grammar);
    DerivationState(const Grammar& grammar, ExprTree tree, int k);

    const Grammar& grammar() const noexcept { return *grammar_; }
    const ExprTree& tree() const noexcept { return tree_; }
    int k() const noexcept { return k_; }

    // Pre-order first nonterminal, nullptr when complete.
    const Node* leftmost_open() const;

private:
    const Grammar* grammar_;
    ExprTree tree_;
    int k_;
};

bool is_complete(const DerivationState& state);

// Applicable rule ids in ascending order. Throws GrammarError on a complete state.
std::vector<int> valid_actions(const DerivationState& state);

// New state with the leftmost nonterminal expanded. Throws GrammarError when
// the rule is not applicable.
DerivationState apply_rule(const DerivationState& state, int rule_id);

// Leftmost derivation that produces `tree` under `grammar`, as rule ids.
// Returns nullopt if the tree is not derivable (ignoring the K gate).
std::optional<std::vector<int>> derivation_of(const Grammar& grammar, const ExprTree& tree);

// Sum of rule increments along the derivation of a complete tree.
std::optional<int> derivation_length(const Grammar& grammar, const ExprTree& tree);

}  // namespace alphaforge
