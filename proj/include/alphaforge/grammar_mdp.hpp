#pragma once

#include <vector>

#include "alphaforge/grammar.hpp"
#include "alphaforge/mcts.hpp"
#include "alphaforge/network.hpp"

namespace alphaforge {

// Leftmost-derivation MDP over a grammar. Under the ungated levels a partial
// state whose length counter already exceeds K cannot yield an admissible
// factor; such states (complete or not) are dead terminals worth 0.
class GrammarMdp {
public:
    using State = DerivationState;

    explicit GrammarMdp(const Grammar& grammar) : grammar_(&grammar) {}

    const Grammar& grammar() const noexcept { return *grammar_; }
    State initial() const { return DerivationState::initial(*grammar_); }

    bool is_dead(const State& s) const;
    bool is_terminal(const State& s) const { return is_complete(s) || is_dead(s); }
    std::vector<int> legal_actions(const State& s) const;
    State step(const State& s, int action) const { return apply_rule(s, action); }

private:
    const Grammar* grammar_;
};

// Policy and value heads of a network as a search leaf evaluator. Dead
// states are worth 0; complete states use the value head.
class NetworkEvaluator {
public:
    NetworkEvaluator(const GrammarMdp& mdp, const Network& net) : mdp_(&mdp), net_(&net) {}

    Prediction evaluate(const DerivationState& s, const std::vector<int>& legal) const;

private:
    const GrammarMdp* mdp_;
    const Network* net_;
};

using GrammarSearch = Mcts<GrammarMdp, NetworkEvaluator>;

}  // namespace alphaforge
