#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "alphaforge/network.hpp"

namespace alphaforge {

// A deterministic MDP the search can plan over.
template <class M>
concept SearchMdp = requires(const M& m, const typename M::State& s, int a) {
    { m.legal_actions(s) } -> std::convertible_to<std::vector<int>>;
    { m.step(s, a) } -> std::convertible_to<typename M::State>;
    { m.is_terminal(s) } -> std::convertible_to<bool>;
};

// Supplies priors over the legal actions (empty for terminal states) and a
// value estimate. Must be safe to call concurrently.
template <class E, class State>
concept LeafEvaluator = requires(const E& e, const State& s, const std::vector<int>& legal) {
    { e.evaluate(s, legal) } -> std::convertible_to<Prediction>;
};

struct SearchConfig {
    int simulations = 64;
    double c_puct = 1.0;
    double b_ref = 40.0;
    double temperature = 1.0;
    // Leaves collected per evaluation wave. 1 runs simulations one at a
    // time; larger values descend with virtual loss and evaluate the wave
    // as a batch.
    int parallelism = 1;
    // Leaves handed to one evaluator task within a wave.
    int eval_batch = 2;
};

// Below this temperature the visit distribution is replaced by an argmax.
inline constexpr double kGreedyTemperature = 1e-3;

template <class State>
struct SearchNode {
    explicit SearchNode(State s) : state(std::move(s)) {}

    State state;
    bool expanded = false;
    bool terminal = false;
    double value = 0.0;  // evaluator value at expansion
    std::vector<int> actions;
    std::vector<double> prior;
    std::vector<int> visits;
    std::vector<double> total;     // W
    std::vector<int> virtual_loss;
    std::vector<std::unique_ptr<SearchNode>> children;

    double q(std::size_t j) const { return visits[j] > 0 ? total[j] / visits[j] : 0.0; }
    int visit_sum() const {
        int n = 0;
        for (int v : visits) n += v;
        return n;
    }
};

// PUCT score of every edge of an expanded node:
//   Q + c * sqrt(b / b_ref) * P * sqrt(sum_b N) / (1 + N),
// with b the number of legal actions. sum_b N is floored at 1 so that an
// unvisited node ranks its edges by prior.
template <class State>
std::vector<double> puct_scores(const SearchNode<State>& node, double c_puct, double b_ref) {
    const double b = static_cast<double>(node.actions.size());
    double n_sum = 0.0;
    for (std::size_t j = 0; j < node.actions.size(); ++j)
        n_sum += node.visits[j] + node.virtual_loss[j];
    const double explore = c_puct * std::sqrt(b / b_ref) * std::sqrt(std::max(n_sum, 1.0));
    std::vector<double> scores(node.actions.size());
    for (std::size_t j = 0; j < scores.size(); ++j) {
        const int n = node.visits[j] + node.virtual_loss[j];
        const double q = n > 0 ? node.total[j] / n : 0.0;
        scores[j] = q + explore * node.prior[j] / (1.0 + n);
    }
    return scores;
}

// Index into node.actions of the best edge; ties go to the lowest action id.
template <class State>
std::size_t puct_select(const SearchNode<State>& node, double c_puct, double b_ref) {
    if (node.actions.empty()) throw std::logic_error("puct_select on a node without actions");
    const auto scores = puct_scores(node, c_puct, b_ref);
    std::size_t best = 0;
    for (std::size_t j = 1; j < scores.size(); ++j)
        if (scores[j] > scores[best] ||
            (scores[j] == scores[best] && node.actions[j] < node.actions[best]))
            best = j;
    return best;
}

// pi(a) proportional to N(a)^(1/T) over the root's actions; argmax of N (ties
// to the lowest id) when T < kGreedyTemperature.
inline std::vector<double> visit_distribution(std::span<const int> actions,
                                              std::span<const int> visits, double temperature) {
    std::vector<double> pi(visits.size(), 0.0);
    if (pi.empty()) return pi;
    const int n_max = *std::max_element(visits.begin(), visits.end());
    if (temperature < kGreedyTemperature || n_max == 0) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < visits.size(); ++j)
            if (visits[j] > visits[best] || (visits[j] == visits[best] && actions[j] < actions[best]))
                best = j;
        if (n_max == 0) {
            std::fill(pi.begin(), pi.end(), 1.0 / static_cast<double>(pi.size()));
        } else {
            pi[best] = 1.0;
        }
        return pi;
    }
    double total = 0.0;
    for (std::size_t j = 0; j < visits.size(); ++j) {
        pi[j] = visits[j] > 0 ? std::pow(static_cast<double>(visits[j]) / n_max, 1.0 / temperature)
                              : 0.0;
        total += pi[j];
    }
    for (auto& p : pi) p /= total;
    return pi;
}

// Search tree with a movable root. Simulation count convention: the root is
// expanded by an evaluation that is not counted, and each of the I
// simulations adds exactly one visit to one root edge, so after a search on a
// fresh tree sum_a N(root, a) = I.
template <SearchMdp Mdp, class Eval>
    requires LeafEvaluator<Eval, typename Mdp::State>
class Mcts {
public:
    using State = typename Mdp::State;
    using NodeT = SearchNode<State>;

    Mcts(const Mdp& mdp, const Eval& eval, SearchConfig config, State root)
        : mdp_(mdp), eval_(eval), config_(config), root_(std::make_unique<NodeT>(std::move(root))) {}

    const NodeT& root() const { return *root_; }
    const SearchConfig& config() const { return config_; }
    void set_temperature(double t) { config_.temperature = t; }

    // Runs I simulations from the current root and returns the temperature
    // scaled visit distribution over root.actions.
    std::vector<double> search() {
        if (mdp_.is_terminal(root_->state)) throw std::logic_error("search from a terminal state");
        if (!root_->expanded) {
            NodeT* r = root_.get();
            expand_batch(std::span<NodeT*>(&r, 1));
        }
        const int waves = std::max(1, config_.parallelism);
        int done = 0;
        while (done < config_.simulations) {
            const int wave = std::min(waves, config_.simulations - done);
            run_wave(wave);
            done += wave;
        }
        return visit_distribution(root_->actions, root_->visits, config_.temperature);
    }

    // Keeps the child reached by `action` as the new root and drops siblings.
    void advance(int action) {
        const auto it = std::find(root_->actions.begin(), root_->actions.end(), action);
        if (it == root_->actions.end()) {
            if (!root_->expanded && !mdp_.is_terminal(root_->state)) {
                const auto legal = mdp_.legal_actions(root_->state);
                if (std::find(legal.begin(), legal.end(), action) == legal.end())
                    throw std::invalid_argument("advance with an illegal action");
                root_ = std::make_unique<NodeT>(mdp_.step(root_->state, action));
                return;
            }
            throw std::invalid_argument("advance with an illegal action");
        }
        const auto j = static_cast<std::size_t>(it - root_->actions.begin());
        std::unique_ptr<NodeT> next = std::move(root_->children[j]);
        if (!next) next = std::make_unique<NodeT>(mdp_.step(root_->state, action));
        root_ = std::move(next);
    }

private:
    struct Path {
        std::vector<std::pair<NodeT*, std::size_t>> edges;
        NodeT* leaf = nullptr;
    };

    NodeT* child(NodeT& node, std::size_t j) {
        if (!node.children[j])
            node.children[j] = std::make_unique<NodeT>(mdp_.step(node.state, node.actions[j]));
        return node.children[j].get();
    }

    Path descend() {
        Path path;
        NodeT* node = root_.get();
        while (node->expanded && !node->terminal) {
            const std::size_t j = puct_select(*node, config_.c_puct, config_.b_ref);
            path.edges.emplace_back(node, j);
            node = child(*node, j);
        }
        path.leaf = node;
        return path;
    }

    void expand_batch(std::span<NodeT*> leaves) {
        std::vector<std::vector<int>> legal(leaves.size());
        for (std::size_t i = 0; i < leaves.size(); ++i) {
            leaves[i]->terminal = mdp_.is_terminal(leaves[i]->state);
            if (!leaves[i]->terminal) legal[i] = mdp_.legal_actions(leaves[i]->state);
        }
        std::vector<Prediction> preds(leaves.size());
        const auto n = static_cast<std::ptrdiff_t>(leaves.size());
        const int chunk = std::max(1, config_.eval_batch);
#pragma omp parallel for schedule(dynamic, chunk) if (n > 1)
        for (std::ptrdiff_t i = 0; i < n; ++i)
            preds[static_cast<std::size_t>(i)] =
                eval_.evaluate(leaves[static_cast<std::size_t>(i)]->state,
                               legal[static_cast<std::size_t>(i)]);
        for (std::size_t i = 0; i < leaves.size(); ++i) {
            NodeT& node = *leaves[i];
            node.value = preds[i].value;
            node.expanded = true;
            if (node.terminal) continue;
            if (preds[i].priors.size() != legal[i].size())
                throw std::logic_error("evaluator returned priors for the wrong action count");
            node.actions = std::move(legal[i]);
            node.prior = std::move(preds[i].priors);
            node.visits.assign(node.actions.size(), 0);
            node.total.assign(node.actions.size(), 0.0);
            node.virtual_loss.assign(node.actions.size(), 0);
            node.children.resize(node.actions.size());
        }
    }

    void run_wave(int wave) {
        std::vector<Path> paths;
        std::vector<NodeT*> pending;
        for (int w = 0; w < wave; ++w) {
            Path p = descend();
            for (auto& [node, j] : p.edges) ++node->virtual_loss[j];
            if (!p.leaf->expanded &&
                std::find(pending.begin(), pending.end(), p.leaf) == pending.end())
                pending.push_back(p.leaf);
            paths.push_back(std::move(p));
        }
        expand_batch(pending);
        for (auto& p : paths) {
            const double v = p.leaf->value;
            for (auto& [node, j] : p.edges) {
                --node->virtual_loss[j];
                ++node->visits[j];
                node->total[j] += v;
            }
        }
    }

    const Mdp& mdp_;
    const Eval& eval_;
    SearchConfig config_;
    std::unique_ptr<NodeT> root_;
};

}  // namespace alphaforge
