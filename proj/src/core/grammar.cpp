#include "alphaforge/grammar.hpp"

#include <sstream>

#include "alphaforge/errors.hpp"

namespace alphaforge {

std::string_view grammar_level_name(GrammarLevel level) {
    switch (level) {
        case GrammarLevel::Syn: return "syn";
        case GrammarLevel::Sem: return "sem";
        case GrammarLevel::SemK: return "semk";
    }
    return "?";
}

std::optional<GrammarLevel> grammar_level_from_name(std::string_view name) {
    if (name == "syn") return GrammarLevel::Syn;
    if (name == "sem") return GrammarLevel::Sem;
    if (name == "semk") return GrammarLevel::SemK;
    return std::nullopt;
}

std::string_view rule_shape_name(RuleShape shape) {
    switch (shape) {
        case RuleShape::Unary: return "unary";
        case RuleShape::Binary: return "binary";
        case RuleShape::BinaryConst: return "binary_const";
        case RuleShape::BinaryAsym: return "binary_asym";
        case RuleShape::Rolling: return "rolling";
        case RuleShape::PairedRolling: return "paired_rolling";
        case RuleShape::TerminalChoice: return "terminal";
    }
    return "?";
}

int delta_k_for(RuleShape shape) {
    switch (shape) {
        case RuleShape::TerminalChoice: return 0;
        case RuleShape::Unary: return 1;
        case RuleShape::Binary:
        case RuleShape::BinaryConst:
        case RuleShape::BinaryAsym:
        case RuleShape::Rolling: return 2;
        case RuleShape::PairedRolling: return 3;
    }
    return 0;
}

Grammar::Grammar(GrammarLevel level, int max_length) : level_(level), max_length_(max_length) {
    using NT = NonTerminal;
    const bool syn = level == GrammarLevel::Syn;
    for (const auto& info : all_ops()) {
        const Op op = info.op;
        switch (info.category) {
            case OpCategory::Unary:
                add(NT::Expr, {op, NT::Expr}, RuleShape::Unary);
                break;
            case OpCategory::Binary:
                add(NT::Expr, {op, NT::Expr, NT::Expr}, RuleShape::Binary);
                if (!syn) add(NT::Expr, {op, NT::Expr, NT::Constant}, RuleShape::BinaryConst);
                break;
            case OpCategory::BinaryAsym:
                add(NT::Expr, {op, NT::Expr, NT::Expr}, RuleShape::Binary);
                if (!syn) {
                    add(NT::Expr, {op, NT::Expr, NT::Constant}, RuleShape::BinaryConst);
                    add(NT::Expr, {op, NT::Constant, NT::Expr}, RuleShape::BinaryAsym);
                }
                break;
            case OpCategory::Rolling:
                if (info.arity == 1)
                    add(NT::Expr, {op, NT::Expr}, RuleShape::Unary);
                else
                    add(NT::Expr, {op, NT::Expr, NT::Num}, RuleShape::Rolling);
                break;
            case OpCategory::PairedRolling:
                add(NT::Expr, {op, NT::Expr, NT::Expr, NT::Num}, RuleShape::PairedRolling);
                break;
        }
    }
    for (Feature f : all_features()) add(NT::Expr, {f}, RuleShape::TerminalChoice);
    for (double c : kConstantValues)
        add(syn ? NT::Expr : NT::Constant, {ConstLiteral{c}}, RuleShape::TerminalChoice);
    for (int n : kWindowValues) add(NT::Num, {NumLiteral{n}}, RuleShape::TerminalChoice);
}

void Grammar::add(NonTerminal lhs, std::vector<Symbol> rhs, RuleShape shape) {
    rules_.push_back(ProductionRule{static_cast<int>(rules_.size()), lhs, std::move(rhs), shape,
                                    delta_k_for(shape)});
}

std::optional<int> Grammar::find_rule(NonTerminal lhs, const std::vector<Symbol>& rhs) const {
    for (const auto& r : rules_)
        if (r.lhs == lhs && r.rhs == rhs) return r.id;
    return std::nullopt;
}

std::string Grammar::dump() const {
    std::ostringstream out;
    out << "id\tlhs\trhs\tdelta_k\n";
    for (const auto& r : rules_) {
        out << r.id << '\t' << nonterminal_name(r.lhs) << '\t';
        std::vector<NodePtr> kids;
        for (std::size_t i = 1; i < r.rhs.size(); ++i) kids.push_back(make_node(r.rhs[i]));
        out << to_text(*make_node(r.rhs[0], std::move(kids))) << '\t' << r.delta_k << '\n';
    }
    return out.str();
}

DerivationState DerivationState::initial(const Grammar& grammar) {
    return DerivationState(grammar, ExprTree::leaf(NonTerminal::Start), 0);
}

DerivationState::DerivationState(const Grammar& grammar, ExprTree tree, int k)
    : grammar_(&grammar), tree_(std::move(tree)), k_(k) {}

const Node* DerivationState::leftmost_open() const {
    const Node* n = &tree_.root();
    if (n->complete()) return nullptr;
    while (!is_nonterminal(n->label())) {
        for (const auto& c : n->children()) {
            if (!c->complete()) {
                n = c.get();
                break;
            }
        }
    }
    return n;
}

bool is_complete(const DerivationState& state) { return state.tree().is_complete(); }

namespace {

// The start symbol expands exactly like Expr.
NonTerminal effective_lhs(NonTerminal nt) {
    return nt == NonTerminal::Start ? NonTerminal::Expr : nt;
}

NodePtr replace_leftmost(const NodePtr& n, const NodePtr& replacement) {
    if (is_nonterminal(n->label())) return replacement;
    std::vector<NodePtr> kids(n->children().begin(), n->children().end());
    for (auto& c : kids) {
        if (!c->complete()) {
            c = replace_leftmost(c, replacement);
            break;
        }
    }
    return make_node(n->label(), std::move(kids));
}

bool applicable(const DerivationState& state, NonTerminal target, const ProductionRule& rule) {
    if (rule.lhs != effective_lhs(target)) return false;
    const auto& g = state.grammar();
    return !g.gated() || state.k() + rule.delta_k <= g.max_length();
}

bool derive(const Grammar& g, const Node& node, NonTerminal expected, std::vector<int>& out) {
    const NonTerminal lhs = effective_lhs(expected);
    for (const auto& rule : g.rules()) {
        if (rule.lhs != lhs || !(rule.rhs[0] == node.label())) continue;
        if (rule.rhs.size() - 1 != node.children().size()) continue;
        const std::size_t mark = out.size();
        out.push_back(rule.id);
        bool ok = true;
        for (std::size_t i = 0; ok && i < node.children().size(); ++i) {
            const auto* nt = std::get_if<NonTerminal>(&rule.rhs[i + 1]);
            ok = nt ? derive(g, node.child(i), *nt, out) : rule.rhs[i + 1] == node.child(i).label();
        }
        if (ok) return true;
        out.resize(mark);
    }
    return false;
}

}  // namespace

std::vector<int> valid_actions(const DerivationState& state) {
    const Node* open = state.leftmost_open();
    if (!open) throw GrammarError("valid_actions on a complete expression");
    const auto target = std::get<NonTerminal>(open->label());
    std::vector<int> ids;
    for (const auto& rule : state.grammar().rules())
        if (applicable(state, target, rule)) ids.push_back(rule.id);
    return ids;
}

DerivationState apply_rule(const DerivationState& state, int rule_id) {
    const Node* open = state.leftmost_open();
    if (!open) throw GrammarError("cannot apply a rule to a complete expression");
    const auto& g = state.grammar();
    if (rule_id < 0 || static_cast<std::size_t>(rule_id) >= g.vocabulary_size())
        throw GrammarError("unknown rule id " + std::to_string(rule_id));
    const auto& rule = g.rule(rule_id);
    if (!applicable(state, std::get<NonTerminal>(open->label()), rule))
        throw GrammarError("rule " + std::to_string(rule_id) + " is not applicable here");

    std::vector<NodePtr> kids;
    kids.reserve(rule.rhs.size() - 1);
    for (std::size_t i = 1; i < rule.rhs.size(); ++i) kids.push_back(make_node(rule.rhs[i]));
    auto replacement = make_node(rule.rhs[0], std::move(kids));
    return DerivationState(g, ExprTree(replace_leftmost(state.tree().root_ptr(), replacement)),
                           state.k() + rule.delta_k);
}

std::optional<std::vector<int>> derivation_of(const Grammar& grammar, const ExprTree& tree) {
    if (!tree.is_complete()) return std::nullopt;
    std::vector<int> out;
    if (!derive(grammar, tree.root(), NonTerminal::Start, out)) return std::nullopt;
    return out;
}

std::optional<int> derivation_length(const Grammar& grammar, const ExprTree& tree) {
    auto d = derivation_of(grammar, tree);
    if (!d) return std::nullopt;
    int k = 0;
    for (int id : *d) k += grammar.rule(id).delta_k;
    return k;
}

}  // namespace alphaforge
