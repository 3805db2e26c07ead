#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "alphaforge/expr_tree.hpp"
#include "alphaforge/panel.hpp"
#include "alphaforge/series.hpp"

namespace alphaforge {

struct PoolConfig {
    std::size_t capacity = 10;
    int gradient_steps = 200;
    double learning_rate = 1e-2;
};

// Cross-sectional z-score per day (population std over valid cells). A day
// whose valid cells are all equal becomes 0; a day with one valid cell too.
Series2D zscore_by_day(const Series2D& x);

// Upper end of the uniform draw for a new factor's starting weight. Kept
// well below typical fitted weights so pruning reflects the optimization
// rather than the draw.
inline constexpr double kInitialWeightScale = 1e-3;

// sum_j w_j z_j per cell, a missing z_j counting as 0. A cell is valid when
// at least one input is.
Series2D combine_zscores(const std::vector<const Series2D*>& z, std::span<const double> w);

// Weighted set of factors combined linearly on their per-day z-scores.
class FactorPool {
public:
    struct Member {
        ExprTree expr;
        Series2D z;  // z-scored factor values
    };

    struct AddResult {
        double combined_ic = 0.0;
        // Position (in the enlarged list) of the factor dropped for capacity.
        std::optional<std::size_t> pruned;
        bool kept_new = true;
        // Optimized weights of the enlarged list, before pruning.
        std::vector<double> optimized_weights;
    };

    explicit FactorPool(PoolConfig config = {}, std::uint64_t seed = 0);

    std::size_t size() const noexcept { return members_.size(); }
    bool empty() const noexcept { return members_.empty(); }
    const PoolConfig& config() const noexcept { return config_; }
    const std::vector<Member>& members() const noexcept { return members_; }
    const std::vector<double>& weights() const noexcept { return weights_; }
    double combined_ic() const noexcept { return combined_ic_; }
    // Loss before the first step and after every accepted step of the last
    // optimization.
    const std::vector<double>& loss_trace() const noexcept { return loss_trace_; }

    // Alg. 1: append with a random weight, descend on the loss, prune the
    // smallest |w| if over capacity, then recompute the combined IC. Throws
    // EvalError (pool unchanged) when the factor has no defined daily IC.
    AddResult add_and_optimize(const ExprTree& expr, const Panel& panel, const Series2D& targets);
    // Same with precomputed raw factor values.
    AddResult add_values(const ExprTree& expr, const Series2D& raw, const Series2D& targets);

    // Mean IC of the weighted combination, 0 for an empty pool.
    double evaluate_ic(const Series2D& targets) const;
    // combine_zscores over the members.
    Series2D combination() const;

    void set_weights(std::vector<double> w);

    // `weight<TAB>expression` lines.
    std::string to_tsv() const;
    static FactorPool from_tsv(const std::string& text, const Panel& panel,
                               const Series2D& targets, PoolConfig config = {},
                               std::uint64_t seed = 0);

private:
    void optimize(const Series2D& targets);

    PoolConfig config_;
    std::mt19937_64 rng_;
    std::vector<Member> members_;
    std::vector<double> weights_;
    double combined_ic_ = 0.0;
    std::vector<double> loss_trace_;
};

// Quadratic form of L(w) = (1/T) sum_t ||y_t - r_t||^2 over cells with a
// valid target, missing factor values counting as 0; T counts days with at
// least one valid target.
class CombinationLoss {
public:
    CombinationLoss(const std::vector<const Series2D*>& factors, const Series2D& targets);

    double operator()(std::span<const double> w) const;
    std::vector<double> gradient(std::span<const double> w) const;
    std::size_t days_used() const noexcept { return days_; }

private:
    std::size_t n_;
    std::vector<double> gram_;  // n x n
    std::vector<double> cross_;
    double target_sq_ = 0.0;
    std::size_t days_ = 0;
};

double combination_loss(const FactorPool& pool, const Series2D& targets);
std::vector<double> combination_gradient(const FactorPool& pool, const Series2D& targets,
                                         std::span<const double> w);

}  // namespace alphaforge
