#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "alphaforge/grammar.hpp"
#include "alphaforge/grammar_mdp.hpp"
#include "alphaforge/mcts.hpp"
#include "alphaforge/network.hpp"
#include "alphaforge/panel.hpp"
#include "alphaforge/pool.hpp"

namespace alphaforge {

// FIFO ring of training tuples with uniform sampling.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity = 20000);

    std::size_t capacity() const noexcept { return capacity_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }
    // Total pushes so far, including evicted ones.
    std::uint64_t pushed() const noexcept { return pushed_; }

    void push(TrainingSample sample);
    // i-th oldest retained sample.
    const TrainingSample& at(std::size_t i) const;
    // n draws with replacement.
    std::vector<TrainingSample> sample(std::size_t n, std::mt19937_64& rng) const;

private:
    std::size_t capacity_;
    std::size_t head_ = 0;  // index of the oldest sample once full
    std::uint64_t pushed_ = 0;
    std::vector<TrainingSample> data_;
};

// z = (1 - max(0, max_t sim(f_t, f_new))) * ic_f over the pool members, with
// the member at `exclude` (the new factor itself when it was kept) skipped.
// An empty pool gives no penalty.
double value_target(const ExprTree& f_new, const FactorPool& pool, double ic_f,
                    std::optional<std::size_t> exclude = std::nullopt);

struct MinerConfig {
    GrammarLevel level = GrammarLevel::SemK;
    int max_length = 10;
    SearchConfig search;
    NetworkShape network;  // actions is filled from the grammar
    TrainerConfig trainer;
    PoolConfig pool;
    int epochs = 100;
    int trajectories_per_epoch = 100;
    // Leading share of each epoch's trajectories that sample from the visit
    // distribution; the rest pick its argmax.
    double sample_fraction = 0.5;
    int updates_per_epoch = 16;
    std::size_t batch_size = 64;
    std::size_t replay_capacity = 20000;
    // Stop after ceil(fraction * epochs) epochs without improvement.
    double early_stop_fraction = 0.2;
    int workers = 1;
    std::uint64_t seed = 0;
};

struct Trajectory {
    std::vector<DerivationState> states;    // s_0 .. s_n; s_n is terminal
    std::vector<std::vector<int>> actions;  // valid actions at s_0 .. s_{n-1}
    std::vector<std::vector<double>> pi;    // visit distribution at T = 1
    std::vector<int> chosen;
    bool dead = false;  // exceeded the length bound under an ungated grammar

    const DerivationState& terminal() const { return states.back(); }
};

struct EpochMetrics {
    int epoch = 0;
    double train_ic = 0.0;              // combined IC of the pool
    std::optional<double> valid_ic;     // same pool on the validation window
    double mean_reward = 0.0;           // epoch mean of IC_F
    double mean_factor_ic = 0.0;        // epoch mean single-factor IC
    std::size_t pool_size = 0;
    std::size_t evaluable = 0;          // trajectories that produced a usable factor
    std::size_t replay_size = 0;
    double value_loss = 0.0;
    double policy_loss = 0.0;
    double seconds = 0.0;
};

// Header `epoch,train_ic,valid_ic,mean_reward,mean_factor_ic,pool_size,
// evaluable,replay_size,value_loss,policy_loss,seconds`; valid_ic is empty
// without a validation window.
std::string format_metrics_csv(const std::vector<EpochMetrics>& history);

// Return false to stop after the current epoch.
using EpochCallback = std::function<bool(const EpochMetrics&, const FactorPool&)>;

struct MiningResult {
    FactorPool pool;
    std::vector<EpochMetrics> history;
    Network network;
    bool early_stopped = false;
};

// Search, learn, search. Trajectories of an epoch are generated against a
// fixed parameter snapshot (possibly concurrently, each with its own seeded
// generator) and committed to the pool and replay buffer in index order, so
// results do not depend on the worker count.
MiningResult mine(const MinerConfig& config, const Panel& train, const Series2D& train_targets,
                  const Panel* valid = nullptr, const Series2D* valid_targets = nullptr,
                  const EpochCallback& on_epoch = {});

// Plays one trajectory from `root`.
Trajectory play_trajectory(const GrammarMdp& mdp, const NetworkEvaluator& eval,
                           const SearchConfig& search, const DerivationState& root, bool sample,
                           std::mt19937_64& rng);

// Mean daily IC on another window of a pool's weighted combination.
double pool_ic_on(const FactorPool& pool, const Panel& panel, const Series2D& targets);

// Partial state keeping the longest leading run of the seed's leftmost
// derivation whose cumulative length stays within ceil(L / 2).
struct MaskedSeed {
    DerivationState state;
    std::vector<int> kept_rules;
    int seed_length = 0;
};
MaskedSeed mask_seed(const Grammar& grammar, const ExprTree& seed);

// True if `full` is obtained from `partial` by expanding its nonterminals.
bool extends(const Node& partial, const Node& full);

struct RefineResult {
    ExprTree best;
    double best_ic = 0.0;  // signed mean IC of `best`
    double seed_ic = 0.0;
    ExprTree masked;
    std::vector<EpochMetrics> history;
};

// Re-mines the masked seed with single-factor |IC| as the reward and returns
// the best completion seen (the seed itself if nothing beats it). Throws
// GrammarError if the seed is not derivable or longer than max_length.
RefineResult refine(const ExprTree& seed, const Panel& panel, const Series2D& targets,
                    const MinerConfig& config, const EpochCallback& on_epoch = {});

}  // namespace alphaforge
