#include <cmath>
#include <map>
#include <string>

#include "alphaforge/errors.hpp"
#include "alphaforge/evaluator.hpp"
#include "alphaforge/metrics.hpp"
#include "alphaforge/miner.hpp"
#include "learning_loop.hpp"

namespace alphaforge {

MaskedSeed mask_seed(const Grammar& grammar, const ExprTree& seed) {
    const auto derivation = derivation_of(grammar, seed);
    if (!derivation)
        throw GrammarError("seed " + to_text(seed) + " is not derivable under the " +
                           std::string(grammar_level_name(grammar.level())) + " grammar");
    int length = 0;
    for (int id : *derivation) length += grammar.rule(id).delta_k;
    if (length > grammar.max_length())
        throw GrammarError("seed length " + std::to_string(length) + " exceeds max_length " +
                           std::to_string(grammar.max_length()) + "; raise max_length to at least " +
                           std::to_string(length));
    const int budget = (length + 1) / 2;
    MaskedSeed out{DerivationState::initial(grammar), {}, length};
    int used = 0;
    for (int id : *derivation) {
        const int dk = grammar.rule(id).delta_k;
        if (used + dk > budget) break;
        used += dk;
        out.state = apply_rule(out.state, id);
        out.kept_rules.push_back(id);
    }
    return out;
}

bool extends(const Node& partial, const Node& full) {
    if (const auto* nt = std::get_if<NonTerminal>(&partial.label())) {
        switch (*nt) {
            case NonTerminal::Num: return std::holds_alternative<NumLiteral>(full.label());
            case NonTerminal::Constant: return std::holds_alternative<ConstLiteral>(full.label());
            default: return full.complete();
        }
    }
    if (!(partial.label() == full.label())) return false;
    if (partial.children().size() != full.children().size()) return false;
    for (std::size_t i = 0; i < partial.children().size(); ++i)
        if (!extends(partial.child(i), full.child(i))) return false;
    return true;
}

RefineResult refine(const ExprTree& seed, const Panel& panel, const Series2D& targets,
                    const MinerConfig& config, const EpochCallback& on_epoch) {
    const Grammar grammar(config.level, config.max_length);
    const GrammarMdp mdp(grammar);
    const MaskedSeed masked = mask_seed(grammar, seed);

    RefineResult result{seed, 0.0, 0.0, masked.state.tree(), {}};
    double best_abs = -1.0;
    try {
        result.seed_ic = mean_ic(evaluate(seed, panel), targets);
        result.best_ic = result.seed_ic;
        best_abs = std::abs(result.seed_ic);
    } catch (const EvalError&) {
    }
    if (is_complete(masked.state)) return result;

    std::map<std::string, std::optional<double>> seen;
    auto single_ic = [&](const ExprTree& f) -> std::optional<double> {
        const std::string key = to_text(f);
        if (auto it = seen.find(key); it != seen.end()) return it->second;
        std::optional<double> ic;
        try {
            ic = mean_ic(evaluate(f, panel), targets);
        } catch (const EvalError&) {
        }
        seen.emplace(key, ic);
        return ic;
    };

    detail::LearningLoop loop(config, grammar);
    auto commit = [&](const Trajectory& t, EpochMetrics& m, double& reward_sum,
                      double& factor_ic_sum) {
        if (t.dead) return 0.0;
        const ExprTree& f = t.terminal().tree();
        const auto ic = single_ic(f);
        if (!ic) return 0.0;
        ++m.evaluable;
        factor_ic_sum += *ic;
        const double reward = std::abs(*ic);
        reward_sum += reward;
        if (reward > best_abs) {
            best_abs = reward;
            result.best = f;
            result.best_ic = *ic;
        }
        return reward;
    };
    auto score = [&](EpochMetrics& m) {
        m.train_ic = std::max(best_abs, 0.0);
        return m.train_ic;
    };
    auto history = loop.run(mdp, masked.state, commit, score, [&](const EpochMetrics& m) {
        return !on_epoch || on_epoch(m, FactorPool{});
    });
    result.history = std::move(history.epochs);
    return result;
}

}  // namespace alphaforge
