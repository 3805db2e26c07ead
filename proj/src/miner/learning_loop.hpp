#pragma once

#include <chrono>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "alphaforge/grammar_mdp.hpp"
#include "alphaforge/miner.hpp"

namespace alphaforge::detail {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b);
int patience_epochs(const MinerConfig& config);
std::vector<Trajectory> generate_epoch(const MinerConfig& config, const GrammarMdp& mdp,
                                       const Network& snapshot, const DerivationState& root,
                                       int epoch);
void push_trajectory(ReplayBuffer& replay, const Trajectory& t, double z);
void train_epoch(const MinerConfig& config, Trainer& trainer, const ReplayBuffer& replay,
                 std::mt19937_64& rng, EpochMetrics& m);

struct LoopHistory {
    std::vector<EpochMetrics> epochs;
    bool early_stopped = false;
};

inline NetworkShape shape_for(const MinerConfig& config, const Grammar& grammar) {
    NetworkShape s = config.network;
    s.actions = grammar.vocabulary_size();
    return s;
}

// Generate, commit, train; shared by mining and refinement.
class LearningLoop {
public:
    LearningLoop(const MinerConfig& config, const Grammar& grammar)
        : config_(config),
          net_(shape_for(config, grammar), mix_seed(config.seed, 1, 0)),
          trainer_(net_, config.trainer, mix_seed(config.seed, 2, 0)),
          replay_(config.replay_capacity),
          rng_(mix_seed(config.seed, 4, 0)) {}

    Network& network() noexcept { return net_; }

    // commit(trajectory, metrics, reward_sum, factor_ic_sum) -> value target
    // score(metrics) -> early-stopping metric (fills the IC fields)
    // keep_going(metrics) -> false to stop
    template <class Commit, class Score, class KeepGoing>
    LoopHistory run(const GrammarMdp& mdp, const DerivationState& root, Commit&& commit,
                    Score&& score, KeepGoing&& keep_going) {
        LoopHistory h;
        const int patience = patience_epochs(config_);
        double best = -std::numeric_limits<double>::infinity();
        int since = 0;
        for (int epoch = 1; epoch <= config_.epochs; ++epoch) {
            const auto t0 = std::chrono::steady_clock::now();
            EpochMetrics m;
            m.epoch = epoch;
            const Network snapshot = net_;
            const auto trajectories = generate_epoch(config_, mdp, snapshot, root, epoch);
            double reward = 0.0, factor_ic = 0.0;
            for (const auto& t : trajectories)
                push_trajectory(replay_, t, commit(t, m, reward, factor_ic));
            if (!trajectories.empty()) m.mean_reward = reward / static_cast<double>(trajectories.size());
            if (m.evaluable > 0) m.mean_factor_ic = factor_ic / static_cast<double>(m.evaluable);
            train_epoch(config_, trainer_, replay_, rng_, m);
            m.replay_size = replay_.size();
            const double metric = score(m);
            m.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            h.epochs.push_back(m);
            bool stop = false;
            if (metric > best) {
                best = metric;
                since = 0;
            } else if (++since >= patience) {
                h.early_stopped = true;
                stop = true;
            }
            if (!keep_going(m)) stop = true;
            if (stop) break;
        }
        return h;
    }

private:
    MinerConfig config_;
    Network net_;
    Trainer trainer_;
    ReplayBuffer replay_;
    std::mt19937_64 rng_;
};

}  // namespace alphaforge::detail
