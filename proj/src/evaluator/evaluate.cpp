#include <string>

#include "alphaforge/errors.hpp"
#include "alphaforge/evaluator.hpp"

namespace alphaforge {

namespace {

int window_argument(const Node& node, const OpInfo& info) {
    const auto* num = std::get_if<NumLiteral>(&node.label());
    if (!num)
        throw EvalError(std::string(info.name) + " needs an integer window, got " +
                        symbol_text(node.label()));
    return num->days;
}

Series2D broadcast(double v, const Panel& panel) {
    return Series2D::filled(panel.days(), panel.stocks(), v, panel.index());
}

}  // namespace

Series2D evaluate(const Node& node, const Panel& panel) {
    const auto& label = node.label();
    if (const auto* f = std::get_if<Feature>(&label)) return panel.feature(*f);
    if (const auto* c = std::get_if<ConstLiteral>(&label)) return broadcast(c->value, panel);
    if (const auto* n = std::get_if<NumLiteral>(&label)) return broadcast(n->days, panel);
    if (is_nonterminal(label))
        throw EvalError("cannot evaluate a partial expression (" + symbol_text(label) + ")");

    const Op op = std::get<Op>(label);
    const auto& info = op_info(op);
    switch (info.category) {
        case OpCategory::Unary: return kernels::unary(op, evaluate(node.child(0), panel));
        case OpCategory::Binary:
        case OpCategory::BinaryAsym:
            return kernels::binary(op, evaluate(node.child(0), panel),
                                   evaluate(node.child(1), panel));
        case OpCategory::Rolling:
            if (op == Op::CSRank) return kernels::cs_rank(evaluate(node.child(0), panel));
            return kernels::rolling(op, evaluate(node.child(0), panel),
                                    window_argument(node.child(1), info));
        case OpCategory::PairedRolling:
            return kernels::paired(op, evaluate(node.child(0), panel),
                                   evaluate(node.child(1), panel),
                                   window_argument(node.child(2), info));
    }
    throw EvalError("unknown operator");
}

Series2D evaluate(const ExprTree& tree, const Panel& panel) {
    if (!tree.is_complete()) throw EvalError("cannot evaluate a partial expression");
    return evaluate(tree.root(), panel);
}

}  // namespace alphaforge
