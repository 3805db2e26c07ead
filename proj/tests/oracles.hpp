#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "alphaforge/expr_tree.hpp"
#include "alphaforge/spacecount.hpp"
#include "alphaforge/symbols.hpp"

namespace oracle {

using namespace alphaforge;

// Tree isomorphism by trying every allowed child permutation.
inline bool iso(const Node& a, const Node& b) {
    if (!(a.label() == b.label())) return false;
    const auto ca = a.children();
    const auto cb = b.children();
    if (ca.size() != cb.size()) return false;
    auto positional = [&]() {
        for (std::size_t i = 0; i < ca.size(); ++i)
            if (!iso(*ca[i], *cb[i])) return false;
        return true;
    };
    if (positional()) return true;
    if (const auto* op = std::get_if<Op>(&a.label())) {
        const auto sym = op_info(*op).symmetry;
        if (sym == Symmetry::Full || sym == Symmetry::FirstTwo) {
            if (!iso(*ca[0], *cb[1]) || !iso(*ca[1], *cb[0])) return false;
            for (std::size_t i = 2; i < ca.size(); ++i)
                if (!iso(*ca[i], *cb[i])) return false;
            return true;
        }
    }
    return false;
}

inline void collect(const Node& n, std::vector<const Node*>& out) {
    out.push_back(&n);
    for (const auto& c : n.children()) collect(*c, out);
}

// Largest node count over all isomorphic pairs of complete subtrees.
inline std::size_t brute_css(const ExprTree& a, const ExprTree& b) {
    std::vector<const Node*> sa, sb;
    collect(a.root(), sa);
    collect(b.root(), sb);
    std::size_t best = 0;
    for (const Node* x : sa)
        for (const Node* y : sb)
            if (x->size() > best && iso(*x, *y)) best = x->size();
    return best;
}

inline double brute_similarity(const ExprTree& a, const ExprTree& b) {
    return static_cast<double>(brute_css(a, b)) /
           static_cast<double>(std::max(a.size(), b.size()));
}

// Exhaustive generation over a census grammar. Every label is enumerated
// individually, so the count is the number of distinct derivations with
// exactly n nodes.
//   Syn: E -> T | U(E) | Q(E,E) | R(E,E) | P(E,E,E)
//   Sem: E -> F | U(E) | B(E,E) | B(E,C) | Basym(C,E) | R(E,N) | Rpair(E,E,N)
class Enumerator {
public:
    enum Slot : std::uint8_t { E, C, N };

    Enumerator(const GrammarCensus& census, bool sem) : g_(census), sem_(sem) {}

    std::uint64_t count(int n) {
        n_ = n;
        found_ = 0;
        std::vector<Slot> pending{E};
        walk(pending, 0);
        return found_;
    }

private:
    void walk(std::vector<Slot>& pending, int used) {
        if (pending.empty()) {
            if (used == n_) ++found_;
            return;
        }
        if (used + static_cast<int>(pending.size()) > n_) return;
        const Slot s = pending.back();
        pending.pop_back();
        auto expand = [&](unsigned labels, std::initializer_list<Slot> kids) {
            for (unsigned l = 0; l < labels; ++l) {
                const std::size_t mark = pending.size();
                // Children pushed in reverse so the leftmost is expanded first.
                for (auto it = std::rbegin(kids); it != std::rend(kids); ++it) pending.push_back(*it);
                walk(pending, used + 1);
                pending.resize(mark);
            }
        };
        if (!sem_) {
            expand(g_.features + g_.constants + g_.windows, {});
            expand(g_.unary, {E});
            expand(g_.binary + g_.binary_asym + g_.rolling, {E, E});
            expand(g_.rolling_pair, {E, E, E});
        } else if (s == C) {
            expand(g_.constants, {});
        } else if (s == N) {
            expand(g_.windows, {});
        } else {
            expand(g_.features, {});
            expand(g_.unary, {E});
            expand(g_.binary, {E, E});
            expand(g_.binary, {E, C});
            expand(g_.binary_asym, {C, E});
            expand(g_.rolling, {E, N});
            expand(g_.rolling_pair, {E, E, N});
        }
        pending.push_back(s);
    }

    GrammarCensus g_;
    bool sem_;
    int n_ = 0;
    std::uint64_t found_ = 0;
};

// Selection score Q + c sqrt(b / b_ref) P sqrt(max(sum N, 1)) / (1 + N),
// evaluated term by term.
inline std::vector<double> puct_by_hand(const std::vector<double>& prior,
                                        const std::vector<int>& visits,
                                        const std::vector<double>& total, double c, double b_ref) {
    const double b = static_cast<double>(prior.size());
    int sum = 0;
    for (int v : visits) sum += v;
    std::vector<double> out;
    for (std::size_t j = 0; j < prior.size(); ++j) {
        const double q = visits[j] == 0 ? 0.0 : total[j] / visits[j];
        const double u = c * std::sqrt(b / b_ref) * prior[j] *
                         std::sqrt(static_cast<double>(std::max(sum, 1))) / (1.0 + visits[j]);
        out.push_back(q + u);
    }
    return out;
}

inline std::size_t argmax_lowest_id(const std::vector<double>& scores, const std::vector<int>& ids) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < scores.size(); ++j)
        if (scores[j] > scores[best] || (scores[j] == scores[best] && ids[j] < ids[best])) best = j;
    return best;
}

}  // namespace oracle
