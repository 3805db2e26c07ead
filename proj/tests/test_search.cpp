#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>

#include "alphaforge/grammar.hpp"
#include "alphaforge/grammar_mdp.hpp"
#include "alphaforge/mcts.hpp"
#include "oracles.hpp"

using namespace alphaforge;

namespace {

// Complete binary tree of depth 3 in heap numbering: root 1, children 2c
// and 2c+1, leaves 8..15. The arm is the first action taken.
struct TwoArmMdp {
    using State = int;
    std::vector<int> legal_actions(int s) const { return s >= 8 ? std::vector<int>{} : std::vector<int>{0, 1}; }
    int step(int s, int a) const { return 2 * s + a; }
    bool is_terminal(int s) const { return s >= 8; }
};

int arm_of(int s) {
    while (s >= 4) s /= 2;
    return s - 2;
}

double unit(std::uint64_t seed, int s, int salt) {
    std::mt19937_64 g(seed * 1000003ULL + static_cast<std::uint64_t>(s) * 31ULL + static_cast<std::uint64_t>(salt));
    return std::uniform_real_distribution<double>(0.0, 1.0)(g);
}

// Arm 1 values lie in [0, 0.5), arm 0 values in [-0.5, 0).
struct TwoArmEval {
    std::uint64_t seed;
    Prediction evaluate(int s, const std::vector<int>& legal) const {
        Prediction p;
        if (!legal.empty()) {
            const double a = 0.1 + unit(seed, s, 1), b = 0.1 + unit(seed, s, 2);
            p.priors = {a / (a + b), b / (a + b)};
        }
        p.value = s == 1 ? 0.0 : 0.5 * unit(seed, s, 3) - (arm_of(s) == 1 ? 0.0 : 0.5);
        return p;
    }
};

template <class NodeT>
void check_visit_accounting(const NodeT& node, bool exact) {
    for (std::size_t j = 0; j < node.actions.size(); ++j) {
        ASSERT_EQ(node.virtual_loss[j], 0);
        ASSERT_NEAR(node.q(j) * node.visits[j], node.total[j], 1e-12);
        const auto* child = node.children[j].get();
        if (node.visits[j] == 0) continue;
        ASSERT_NE(child, nullptr);
        ASSERT_TRUE(child->expanded);
        if (child->terminal) continue;
        if (exact)
            ASSERT_EQ(node.visits[j], 1 + child->visit_sum());
        else
            ASSERT_GE(node.visits[j], 1 + child->visit_sum());
        check_visit_accounting(*child, exact);
    }
}

SearchNode<int> table(std::vector<int> ids, std::vector<double> prior, std::vector<int> visits,
                      std::vector<double> total) {
    SearchNode<int> n(0);
    n.expanded = true;
    n.actions = std::move(ids);
    n.prior = std::move(prior);
    n.visits = std::move(visits);
    n.total = std::move(total);
    n.virtual_loss.assign(n.actions.size(), 0);
    return n;
}

}  // namespace

TEST(Puct, WorkedExample) {
    const auto n = table({0, 1}, {0.5, 0.5}, {1, 0}, {0.5, 0.0});
    const auto s = puct_scores(n, 1.0, 40.0);
    EXPECT_NEAR(s[0], 0.5 + std::sqrt(2.0 / 40.0) * 0.5 * 1.0 / 2.0, 1e-15);
    EXPECT_NEAR(s[0], 0.5559, 1e-4);
    EXPECT_NEAR(s[1], 0.1118, 1e-4);
    EXPECT_EQ(puct_select(n, 1.0, 40.0), 0u);
}

TEST(Puct, ZeroStatisticsPickMaxPrior) {
    const auto n = table({3, 7, 9}, {0.2, 0.5, 0.3}, {0, 0, 0}, {0, 0, 0});
    EXPECT_EQ(puct_select(n, 1.0, 40.0), 1u);
    const auto tie = table({3, 7, 9}, {0.4, 0.2, 0.4}, {0, 0, 0}, {0, 0, 0});
    EXPECT_EQ(puct_select(tie, 1.0, 40.0), 0u);
    const auto tie_ids = table({9, 7, 3}, {0.4, 0.2, 0.4}, {0, 0, 0}, {0, 0, 0});
    EXPECT_EQ(puct_select(tie_ids, 1.0, 40.0), 2u);
}

TEST(Puct, ClassicReductionAtReferenceBranching) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<int> ids(40), visits(40);
    std::vector<double> prior(40), total(40);
    double ps = 0.0;
    int vs = 0;
    for (int j = 0; j < 40; ++j) {
        ids[static_cast<std::size_t>(j)] = j;
        ps += prior[static_cast<std::size_t>(j)] = u(rng);
        vs += visits[static_cast<std::size_t>(j)] = static_cast<int>(rng() % 5);
        total[static_cast<std::size_t>(j)] = visits[static_cast<std::size_t>(j)] * (u(rng) - 0.5);
    }
    for (auto& p : prior) p /= ps;
    const auto n = table(ids, prior, visits, total);
    const auto s = puct_scores(n, 1.3, 40.0);
    for (std::size_t j = 0; j < 40; ++j) {
        const double q = visits[j] ? total[j] / visits[j] : 0.0;
        EXPECT_NEAR(s[j], q + 1.3 * prior[j] * std::sqrt(static_cast<double>(vs)) / (1 + visits[j]), 1e-14);
    }
}

TEST(Puct, MatchesHandOracleOnRandomTables) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 1000; ++t) {
        const std::size_t b = 1 + rng() % 60;
        std::vector<int> ids(b), visits(b);
        std::vector<double> prior(b), total(b);
        double ps = 0.0;
        for (std::size_t j = 0; j < b; ++j) {
            ids[j] = static_cast<int>(j * 3 + rng() % 3);
            ps += prior[j] = u(rng);
            visits[j] = t % 10 == 0 ? 0 : static_cast<int>(rng() % 20);
            total[j] = visits[j] * (2.0 * u(rng) - 1.0);
        }
        for (auto& p : prior) p /= ps;
        const double c = 0.5 + 2.0 * u(rng), b_ref = t % 7 == 0 ? static_cast<double>(b) : 40.0;
        const auto n = table(ids, prior, visits, total);
        const auto want = oracle::puct_by_hand(prior, visits, total, c, b_ref);
        const auto got = puct_scores(n, c, b_ref);
        for (std::size_t j = 0; j < b; ++j) ASSERT_NEAR(got[j], want[j], 1e-12 * (1 + std::fabs(want[j])));
        ASSERT_EQ(puct_select(n, c, b_ref), oracle::argmax_lowest_id(want, ids));
    }
}

TEST(VisitDistribution, TemperatureAndGreedy) {
    const std::vector<int> ids{4, 2, 9};
    const std::vector<int> n{2, 4, 4};
    const auto t1 = visit_distribution(ids, n, 1.0);
    EXPECT_NEAR(t1[0], 0.2, 1e-15);
    EXPECT_NEAR(t1[1], 0.4, 1e-15);
    const auto greedy = visit_distribution(ids, n, 1e-4);
    EXPECT_EQ(greedy, (std::vector<double>{0.0, 1.0, 0.0}));
    const auto t2 = visit_distribution(ids, n, 0.5);
    EXPECT_NEAR(t2[0], 4.0 / 36.0, 1e-15);
    EXPECT_EQ(visit_distribution(ids, std::vector<int>{0, 0, 0}, 1.0), (std::vector<double>(3, 1.0 / 3.0)));
}

TEST(Search, SimulationCountConvention) {
    const TwoArmMdp mdp;
    for (int sims : {1, 2, 16, 64}) {
        TwoArmEval eval{3};
        Mcts<TwoArmMdp, TwoArmEval> search(mdp, eval, {sims, 1.0, 40.0, 1.0, 1, 2}, 1);
        const auto pi = search.search();
        EXPECT_EQ(search.root().visit_sum(), sims);
        EXPECT_NEAR(pi[0] + pi[1], 1.0, 1e-15);
        check_visit_accounting(search.root(), true);
    }
}

TEST(Search, SingleSimulationFollowsPrior) {
    const TwoArmMdp mdp;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        TwoArmEval eval{seed};
        Mcts<TwoArmMdp, TwoArmEval> search(mdp, eval, {1, 1.0, 40.0, 1.0, 1, 2}, 1);
        const auto pi = search.search();
        const auto pr = eval.evaluate(1, {0, 1}).priors;
        const std::size_t best = pr[1] > pr[0] ? 1 : 0;
        EXPECT_EQ(pi[best], 1.0);
    }
}

TEST(Search, PrefersTheBetterArm) {
    const TwoArmMdp mdp;
    for (int sims : {16, 64}) {
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            TwoArmEval eval{seed};
            Mcts<TwoArmMdp, TwoArmEval> search(mdp, eval, {sims, 1.0, 40.0, 1.0, 1, 2}, 1);
            search.search();
            const auto& r = search.root();
            EXPECT_GT(static_cast<double>(r.visits[1]) / r.visit_sum(), 0.5) << "seed " << seed;
        }
    }
}

TEST(Search, ParallelWavesKeepInvariants) {
    const TwoArmMdp mdp;
    for (int par : {2, 4, 8}) {
        TwoArmEval eval{5};
        Mcts<TwoArmMdp, TwoArmEval> search(mdp, eval, {64, 1.0, 40.0, 1.0, par, 2}, 1);
        const auto pi = search.search();
        EXPECT_EQ(search.root().visit_sum(), 64);
        EXPECT_NEAR(pi[0] + pi[1], 1.0, 1e-15);
        check_visit_accounting(search.root(), false);
    }
}

TEST(Search, TerminalRootIsAnError) {
    const TwoArmMdp mdp;
    TwoArmEval eval{1};
    Mcts<TwoArmMdp, TwoArmEval> search(mdp, eval, {}, 9);
    EXPECT_THROW(search.search(), std::logic_error);
}

TEST(Search, AdvanceReusesTheSubtree) {
    const TwoArmMdp mdp;
    TwoArmEval eval{7};
    Mcts<TwoArmMdp, TwoArmEval> search(mdp, eval, {32, 1.0, 40.0, 1.0, 1, 2}, 1);
    search.search();
    const int n1 = search.root().visits[1];
    ASSERT_GT(n1, 1);
    const auto* child = search.root().children[1].get();
    search.advance(1);
    EXPECT_EQ(&search.root(), child);
    EXPECT_EQ(search.root().state, 3);
    EXPECT_EQ(search.root().visit_sum(), n1 - 1);
    search.search();
    EXPECT_EQ(search.root().visit_sum(), n1 - 1 + 32);
    EXPECT_THROW(search.advance(5), std::invalid_argument);
}

TEST(GrammarSearch, DeterministicAndLegal) {
    const Grammar g(GrammarLevel::SemK, 10);
    const GrammarMdp mdp(g);
    const Network net({16, 16, 16, 16, g.vocabulary_size()}, 11);
    const NetworkEvaluator eval(mdp, net);
    const SearchConfig cfg{64, 1.0, 40.0, 1.0, 1, 2};
    GrammarSearch a(mdp, eval, cfg, mdp.initial());
    GrammarSearch b(mdp, eval, cfg, mdp.initial());
    const auto pa = a.search();
    const auto pb = b.search();
    EXPECT_EQ(pa, pb);
    EXPECT_EQ(a.root().visits, b.root().visits);
    EXPECT_EQ(a.root().visit_sum(), 64);
    EXPECT_EQ(a.root().actions, valid_actions(mdp.initial()));
    double total = 0.0;
    for (double p : a.root().prior) total += p;
    EXPECT_NEAR(total, 1.0, 1e-12);
    check_visit_accounting(a.root(), true);
    // Every expanded state below the root is reached by legal rules.
    std::function<void(const SearchNode<DerivationState>&)> walk = [&](const auto& node) {
        if (!node.expanded || node.terminal) return;
        ASSERT_EQ(node.actions, valid_actions(node.state));
        ASSERT_LE(node.state.k(), 10);
        for (const auto& c : node.children)
            if (c) walk(*c);
    };
    walk(a.root());
}

TEST(GrammarMdp, DeadStatesUnderUngatedGrammar) {
    const Grammar g(GrammarLevel::Syn, 3);
    const GrammarMdp mdp(g);
    auto s = mdp.initial();
    s = mdp.step(s, 26);  // Cov, length 3
    EXPECT_FALSE(mdp.is_dead(s));
    s = mdp.step(s, 0);  // Abs, length 4
    EXPECT_TRUE(mdp.is_dead(s));
    EXPECT_TRUE(mdp.is_terminal(s));
    EXPECT_TRUE(mdp.legal_actions(s).empty());
    const Network net({4, 4, 4, 4, g.vocabulary_size()}, 1);
    EXPECT_EQ(NetworkEvaluator(mdp, net).evaluate(s, {}).value, 0.0);
}
