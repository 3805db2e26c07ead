#include <chrono>
#include <cmath>
#include <exception>
#include <sstream>

#include "alphaforge/errors.hpp"
#include "alphaforge/evaluator.hpp"
#include "alphaforge/metrics.hpp"
#include "alphaforge/miner.hpp"
#include "learning_loop.hpp"

namespace alphaforge {

namespace detail {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    auto step = [](std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    };
    return step(step(step(seed) ^ a) ^ b);
}

int patience_epochs(const MinerConfig& config) {
    return std::max(1, static_cast<int>(std::ceil(config.early_stop_fraction * config.epochs)));
}

std::vector<Trajectory> generate_epoch(const MinerConfig& config, const GrammarMdp& mdp,
                                       const Network& snapshot, const DerivationState& root,
                                       int epoch) {
    const int n = config.trajectories_per_epoch;
    const int n_sampled =
        static_cast<int>(std::llround(config.sample_fraction * static_cast<double>(n)));
    NetworkEvaluator eval(mdp, snapshot);
    std::vector<Trajectory> out(static_cast<std::size_t>(n));
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, config.workers)) \
    if (config.workers > 1)
    for (int i = 0; i < n; ++i) {
        try {
            std::mt19937_64 rng(mix_seed(config.seed, static_cast<std::uint64_t>(epoch),
                                         static_cast<std::uint64_t>(i)));
            out[static_cast<std::size_t>(i)] =
                play_trajectory(mdp, eval, config.search, root, i < n_sampled, rng);
        } catch (...) {
#pragma omp critical(alphaforge_miner_failure)
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

void push_trajectory(ReplayBuffer& replay, const Trajectory& t, double z) {
    for (std::size_t j = 0; j + 1 < t.states.size(); ++j)
        replay.push(TrainingSample{t.states[j].tree(), t.actions[j], t.pi[j], z});
}

void train_epoch(const MinerConfig& config, Trainer& trainer, const ReplayBuffer& replay,
                 std::mt19937_64& rng, EpochMetrics& m) {
    if (replay.empty() || config.updates_per_epoch <= 0) return;
    double value = 0.0, policy = 0.0;
    for (int u = 0; u < config.updates_per_epoch; ++u) {
        const auto batch = replay.sample(config.batch_size, rng);
        const auto r = trainer.step(batch);
        value += r.loss.value;
        policy += r.loss.policy;
    }
    m.value_loss = value / config.updates_per_epoch;
    m.policy_loss = policy / config.updates_per_epoch;
}

}  // namespace detail

Trajectory play_trajectory(const GrammarMdp& mdp, const NetworkEvaluator& eval,
                           const SearchConfig& search, const DerivationState& root, bool sample,
                           std::mt19937_64& rng) {
    Trajectory t;
    t.states.push_back(root);
    GrammarSearch tree(mdp, eval, search, root);
    while (!mdp.is_terminal(t.states.back())) {
        auto legal = mdp.legal_actions(t.states.back());
        std::vector<double> pi;
        int action = 0;
        if (legal.size() == 1) {
            pi = {1.0};
            action = legal[0];
        } else {
            tree.search();
            const auto& r = tree.root();
            pi = visit_distribution(r.actions, r.visits, 1.0);
            std::size_t j = 0;
            if (sample) {
                const auto weights = visit_distribution(r.actions, r.visits, search.temperature);
                std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
                j = pick(rng);
            } else {
                const auto greedy = visit_distribution(r.actions, r.visits, 0.0);
                j = static_cast<std::size_t>(
                    std::max_element(greedy.begin(), greedy.end()) - greedy.begin());
            }
            action = r.actions[j];
        }
        tree.advance(action);
        t.actions.push_back(std::move(legal));
        t.pi.push_back(std::move(pi));
        t.chosen.push_back(action);
        t.states.push_back(tree.root().state);
    }
    t.dead = mdp.is_dead(t.states.back());
    return t;
}

double value_target(const ExprTree& f_new, const FactorPool& pool, double ic_f,
                    std::optional<std::size_t> exclude) {
    double max_sim = 0.0;
    const auto& members = pool.members();
    for (std::size_t i = 0; i < members.size(); ++i) {
        if (exclude && *exclude == i) continue;
        max_sim = std::max(max_sim, similarity(members[i].expr, f_new));
    }
    return (1.0 - max_sim) * ic_f;
}

double pool_ic_on(const FactorPool& pool, const Panel& panel, const Series2D& targets) {
    if (pool.empty()) return 0.0;
    std::vector<Series2D> z;
    for (const auto& m : pool.members()) z.push_back(zscore_by_day(evaluate(m.expr, panel)));
    std::vector<const Series2D*> ptrs;
    for (const auto& s : z) ptrs.push_back(&s);
    try {
        return mean_ic(combine_zscores(ptrs, pool.weights()), targets);
    } catch (const EvalError&) {
        return 0.0;
    }
}

std::string format_metrics_csv(const std::vector<EpochMetrics>& history) {
    std::ostringstream out;
    out.precision(10);
    out << "epoch,train_ic,valid_ic,mean_reward,mean_factor_ic,pool_size,evaluable,replay_size,"
           "value_loss,policy_loss,seconds\n";
    for (const auto& m : history) {
        out << m.epoch << ',' << m.train_ic << ',';
        if (m.valid_ic) out << *m.valid_ic;
        out << ',' << m.mean_reward << ',' << m.mean_factor_ic << ',' << m.pool_size << ','
            << m.evaluable << ',' << m.replay_size << ',' << m.value_loss << ',' << m.policy_loss
            << ',' << m.seconds << '\n';
    }
    return out.str();
}

MiningResult mine(const MinerConfig& config, const Panel& train, const Series2D& train_targets,
                  const Panel* valid, const Series2D* valid_targets,
                  const EpochCallback& on_epoch) {
    if ((valid == nullptr) != (valid_targets == nullptr))
        throw std::invalid_argument("validation panel and targets go together");
    const Grammar grammar(config.level, config.max_length);
    const GrammarMdp mdp(grammar);
    detail::LearningLoop loop(config, grammar);
    FactorPool pool(config.pool, detail::mix_seed(config.seed, 3, 0));

    auto commit = [&](const Trajectory& t, EpochMetrics& m, double& reward_sum,
                      double& factor_ic_sum) {
        double ic_f = pool.combined_ic();
        double z = 0.0;
        if (!t.dead) {
            const ExprTree& f = t.terminal().tree();
            try {
                const Series2D raw = evaluate(f, train);
                const double single = mean_ic(raw, train_targets);
                bool duplicate = false;
                for (const auto& member : pool.members())
                    if (isomorphic(member.expr, f)) duplicate = true;
                if (!duplicate) {
                    const auto r = pool.add_values(f, raw, train_targets);
                    ic_f = r.combined_ic;
                    std::optional<std::size_t> self;
                    if (r.kept_new) self = pool.size() - 1;
                    z = value_target(f, pool, ic_f, self);
                }
                ++m.evaluable;
                factor_ic_sum += single;
            } catch (const EvalError&) {
                z = 0.0;
            }
        }
        reward_sum += ic_f;
        return z;
    };

    auto score = [&](EpochMetrics& m) {
        m.train_ic = pool.combined_ic();
        m.pool_size = pool.size();
        if (valid) m.valid_ic = pool_ic_on(pool, *valid, *valid_targets);
        return m.valid_ic ? *m.valid_ic : m.train_ic;
    };

    auto history = loop.run(mdp, mdp.initial(), commit, score,
                            [&](const EpochMetrics& m) { return !on_epoch || on_epoch(m, pool); });
    return MiningResult{std::move(pool), std::move(history.epochs), std::move(loop.network()),
                        history.early_stopped};
}

}  // namespace alphaforge
