#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "alphaforge/expr_tree.hpp"

namespace alphaforge {

struct NetworkShape {
    std::size_t d_emb = 128;
    std::size_t d_h = 128;
    std::size_t policy_hidden = 64;
    std::size_t value_hidden = 64;
    std::size_t actions = 0;  // grammar vocabulary size

    friend bool operator==(const NetworkShape&, const NetworkShape&) = default;
};

// Max children an N-ary cell has position-specific weights for.
inline constexpr std::size_t kMaxPositions = 3;

// All trainable tensors in a fixed order. Vectors are stored as n x 1 matrices.
struct Parameters {
    std::vector<Eigen::MatrixXd> tensors;

    static Parameters zeros_like(const Parameters& p);
    std::size_t count() const;  // scalar parameters
    double squared_norm() const;
    bool all_finite() const;
    void add_scaled(const Parameters& other, double scale);
};

// Tensor slots.
namespace slot {
inline constexpr std::size_t kEmbedding = 0;
// N-ary cell: gates in order i, f, o, u.
inline constexpr std::size_t kNaryW = 1;
inline constexpr std::size_t kNaryB = 5;
inline constexpr std::size_t kNaryU = 9;  // + gate * kMaxPositions + position
// Child-Sum cell.
inline constexpr std::size_t kSumW = 21;
inline constexpr std::size_t kSumB = 25;
inline constexpr std::size_t kSumU = 29;
inline constexpr std::size_t kPolicy1 = 33, kPolicy1b = 34, kPolicy2 = 35, kPolicy2b = 36;
inline constexpr std::size_t kValue1 = 37, kValue1b = 38, kValue2 = 39, kValue2b = 40;
inline constexpr std::size_t kValue3 = 41, kValue3b = 42;
inline constexpr std::size_t kCount = 43;
}  // namespace slot

enum Gate : std::size_t { kInput = 0, kForget = 1, kOutput = 2, kUpdate = 3 };

std::string tensor_name(std::size_t slot);

struct Prediction {
    std::vector<double> priors;  // aligned with the valid action list
    double value = 0.0;
};

// One replay tuple: the state tree, its valid actions and the search
// distribution over them, plus the value target.
struct TrainingSample {
    ExprTree tree;
    std::vector<int> valid;
    std::vector<double> pi;
    double z = 0.0;
};

struct LossBreakdown {
    double value = 0.0;   // batch mean of (z - V)^2
    double policy = 0.0;  // batch mean of -sum pi log P
    double l2 = 0.0;      // c * ||theta||^2
    double total() const { return value + policy + l2; }
};

// Tree-LSTM encoder with policy and value heads. Symmetric binary operators
// use the Child-Sum cell, Cov/Corr aggregate their operands with Child-Sum
// and then combine the aggregate with the window through the N-ary cell, and
// every other node uses the N-ary cell (leaves with no children).
class Network {
public:
    Network(NetworkShape shape, std::uint64_t seed);
    Network(NetworkShape shape, Parameters params);

    const NetworkShape& shape() const noexcept { return shape_; }
    const Parameters& params() const noexcept { return params_; }
    Parameters& params() noexcept { return params_; }

    Eigen::VectorXd encode(const Node& tree) const;
    Prediction predict(const Node& tree, std::span<const int> valid) const;

    // Batch loss and, when grad is non-null, its gradient. Dropout is applied
    // to node inputs when rng is non-null.
    LossBreakdown loss(std::span<const TrainingSample> batch, double l2, Parameters* grad,
                       std::mt19937_64* dropout_rng = nullptr, double dropout = 0.0) const;

private:
    NetworkShape shape_;
    Parameters params_;
};

struct TrainerConfig {
    double learning_rate = 1e-4;
    double l2 = 1e-4;
    double dropout = 0.1;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct StepResult {
    LossBreakdown loss;
    bool rejected = false;  // non-finite loss or update; learning rate halved
};

// Adam on the combined value / policy / L2 loss.
class Trainer {
public:
    Trainer(Network& net, TrainerConfig config, std::uint64_t seed);

    StepResult step(std::span<const TrainingSample> batch);
    double learning_rate() const noexcept { return config_.learning_rate; }
    std::size_t rejected_steps() const noexcept { return rejected_; }

private:
    Network& net_;
    TrainerConfig config_;
    Parameters m_, v_;
    std::uint64_t t_ = 0;
    std::size_t rejected_ = 0;
    std::mt19937_64 rng_;
};

// Binary layout: "AFNN", u32 version, u64 d_emb, d_h, policy_hidden,
// value_hidden, actions, u32 tensor count, then per tensor u64 rows, u64
// cols and rows*cols row-major little-endian doubles.
void save_network(const Network& net, const std::filesystem::path& path);
Network load_network(const std::filesystem::path& path);

}  // namespace alphaforge
