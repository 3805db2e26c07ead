#include "alphaforge/grammar_mdp.hpp"

namespace alphaforge {

bool GrammarMdp::is_dead(const State& s) const {
    return !grammar_->gated() && s.k() > grammar_->max_length();
}

std::vector<int> GrammarMdp::legal_actions(const State& s) const {
    if (is_terminal(s)) return {};
    return valid_actions(s);
}

Prediction NetworkEvaluator::evaluate(const DerivationState& s,
                                      const std::vector<int>& legal) const {
    if (mdp_->is_dead(s)) return {};
    return net_->predict(s.tree().root(), legal);
}

}  // namespace alphaforge
