#include <gtest/gtest.h>

#include <random>

#include "alphaforge/errors.hpp"
#include "alphaforge/evaluator.hpp"
#include "alphaforge/grammar.hpp"
#include "test_util.hpp"

using namespace alphaforge;

namespace {

int rule_id(const Grammar& g, const std::string& rhs) {
    for (const auto& r : g.rules()) {
        std::string text = symbol_text(r.rhs[0]);
        if (r.rhs.size() > 1) {
            text += '(';
            for (std::size_t i = 1; i < r.rhs.size(); ++i) {
                if (i > 1) text += ',';
                text += symbol_text(r.rhs[i]);
            }
            text += ')';
        }
        if (text == rhs) return r.id;
    }
    ADD_FAILURE() << "no rule " << rhs;
    return -1;
}

bool has_feature(const Node& n) {
    if (std::holds_alternative<Feature>(n.label())) return true;
    for (const auto& c : n.children())
        if (has_feature(*c)) return true;
    return false;
}

void check_arity(const Node& n) {
    if (const auto* op = std::get_if<Op>(&n.label()))
        ASSERT_EQ(static_cast<int>(n.children().size()), op_info(*op).arity);
    else
        ASSERT_TRUE(n.children().empty());
    for (const auto& c : n.children()) check_arity(*c);
}

void check_semantics(const Node& n) {
    if (const auto* op = std::get_if<Op>(&n.label())) {
        const auto& info = op_info(*op);
        if (info.windowed) {
            ASSERT_TRUE(std::holds_alternative<NumLiteral>(n.children().back()->label()));
        }
        if (info.category == OpCategory::PairedRolling) {
            ASSERT_FALSE(std::holds_alternative<ConstLiteral>(n.child(0).label()));
            ASSERT_FALSE(std::holds_alternative<ConstLiteral>(n.child(1).label()));
        }
    }
    for (const auto& c : n.children()) check_semantics(*c);
}

}  // namespace

TEST(Grammar, RuleCounts) {
    EXPECT_EQ(Grammar(GrammarLevel::Sem).vocabulary_size(), 53u);
    EXPECT_EQ(Grammar(GrammarLevel::SemK).vocabulary_size(), 53u);
    EXPECT_EQ(Grammar(GrammarLevel::Syn).vocabulary_size(), 43u);
}

TEST(Grammar, IdsAreDenseAndOrdered) {
    for (auto level : {GrammarLevel::Syn, GrammarLevel::Sem}) {
        const Grammar g(level);
        for (std::size_t i = 0; i < g.rules().size(); ++i) EXPECT_EQ(g.rules()[i].id, static_cast<int>(i));
    }
}

TEST(Grammar, LengthIncrements) {
    const Grammar g(GrammarLevel::Sem);
    EXPECT_EQ(g.rule(rule_id(g, "Abs(<Expr>)")).delta_k, 1);
    EXPECT_EQ(g.rule(rule_id(g, "Add(<Expr>,<Expr>)")).delta_k, 2);
    EXPECT_EQ(g.rule(rule_id(g, "Add(<Expr>,<Constant>)")).delta_k, 2);
    EXPECT_EQ(g.rule(rule_id(g, "Sub(<Constant>,<Expr>)")).delta_k, 2);
    EXPECT_EQ(g.rule(rule_id(g, "Mean(<Expr>,<Num>)")).delta_k, 2);
    EXPECT_EQ(g.rule(rule_id(g, "Corr(<Expr>,<Expr>,<Num>)")).delta_k, 3);
    EXPECT_EQ(g.rule(rule_id(g, "close")).delta_k, 0);
    EXPECT_EQ(g.rule(rule_id(g, "0.01")).delta_k, 0);
    EXPECT_EQ(g.rule(rule_id(g, "20")).delta_k, 0);
}

TEST(Grammar, SemHasNoConstantOperandsForRollingOps) {
    const Grammar g(GrammarLevel::Sem);
    for (const auto& r : g.rules()) {
        if (r.shape == RuleShape::PairedRolling || r.shape == RuleShape::Rolling) {
            EXPECT_TRUE(std::holds_alternative<NonTerminal>(r.rhs[1]));
            EXPECT_EQ(std::get<NonTerminal>(r.rhs[1]), NonTerminal::Expr);
        }
    }
}

TEST(ValidActions, StartUnderSemKIncludesPairedRolling) {
    const Grammar g(GrammarLevel::SemK, 5);
    const auto acts = valid_actions(DerivationState::initial(g));
    for (const auto& r : g.rules()) {
        const bool expr_rule = r.lhs == NonTerminal::Expr;
        const bool present = std::find(acts.begin(), acts.end(), r.id) != acts.end();
        EXPECT_EQ(present, expr_rule && r.delta_k <= 5) << r.id;
    }
    EXPECT_NE(std::find(acts.begin(), acts.end(), rule_id(g, "Corr(<Expr>,<Expr>,<Num>)")), acts.end());
    EXPECT_TRUE(std::is_sorted(acts.begin(), acts.end()));
}

TEST(ValidActions, AtBoundOnlyTerminalChoicesRemain) {
    const Grammar g(GrammarLevel::SemK, 5);
    auto s = DerivationState::initial(g);
    s = apply_rule(s, rule_id(g, "Corr(<Expr>,<Expr>,<Num>)"));
    s = apply_rule(s, rule_id(g, "Abs(<Expr>)"));
    s = apply_rule(s, rule_id(g, "Sign(<Expr>)"));
    ASSERT_EQ(s.k(), 5);
    for (int a : valid_actions(s)) EXPECT_EQ(g.rule(a).delta_k, 0);
    EXPECT_EQ(valid_actions(s).size(), 6u);
}

TEST(ValidActions, NumHasThreeChoices) {
    const Grammar g(GrammarLevel::Sem);
    auto s = DerivationState::initial(g);
    s = apply_rule(s, rule_id(g, "Mean(<Expr>,<Num>)"));
    s = apply_rule(s, rule_id(g, "close"));
    const auto acts = valid_actions(s);
    ASSERT_EQ(acts.size(), 3u);
    EXPECT_EQ(acts[0], rule_id(g, "20"));
    EXPECT_EQ(acts[1], rule_id(g, "30"));
    EXPECT_EQ(acts[2], rule_id(g, "40"));
}

TEST(ApplyRule, Examples) {
    const Grammar g(GrammarLevel::SemK, 10);
    auto s0 = DerivationState::initial(g);
    EXPECT_FALSE(is_complete(s0));
    auto s1 = apply_rule(s0, rule_id(g, "Mean(<Expr>,<Num>)"));
    EXPECT_EQ(to_text(s1.tree()), "Mean(<Expr>,<Num>)");
    EXPECT_EQ(s1.k(), 2);
    EXPECT_EQ(to_text(s0.tree()), "<Start>");
    auto s2 = apply_rule(s1, rule_id(g, "close"));
    EXPECT_EQ(to_text(s2.tree()), "Mean(close,<Num>)");
    EXPECT_EQ(s2.k(), 2);
    EXPECT_FALSE(is_complete(s2));
    auto s3 = apply_rule(s2, rule_id(g, "20"));
    EXPECT_TRUE(is_complete(s3));
    EXPECT_THROW(apply_rule(s3, rule_id(g, "close")), GrammarError);
    EXPECT_THROW(valid_actions(s3), GrammarError);
    EXPECT_THROW(apply_rule(s2, rule_id(g, "close")), GrammarError);
}

TEST(ApplyRule, Deterministic) {
    const Grammar g(GrammarLevel::Sem);
    std::mt19937_64 rng(3);
    for (int i = 0; i < 200; ++i) {
        auto s = DerivationState::initial(g);
        while (!is_complete(s)) {
            const auto acts = valid_actions(s);
            const int a = acts[rng() % acts.size()];
            const auto x = apply_rule(s, a);
            const auto y = apply_rule(s, a);
            ASSERT_EQ(to_text(x.tree()), to_text(y.tree()));
            ASSERT_EQ(x.k(), y.k());
            ASSERT_EQ(is_complete(x), is_complete(y));
            if (!is_complete(x)) ASSERT_EQ(valid_actions(x), valid_actions(y));
            s = x;
            if (s.k() > 30) break;
        }
    }
}

TEST(Derivation, RecoversRules) {
    const Grammar g(GrammarLevel::Sem);
    const auto t = parse_prefix("Sub(Corr(close,open,20),0.01)");
    const auto d = derivation_of(g, t);
    ASSERT_TRUE(d.has_value());
    auto s = DerivationState::initial(g);
    for (int id : *d) s = apply_rule(s, id);
    EXPECT_EQ(to_text(s.tree()), to_text(t));
    EXPECT_EQ(derivation_length(g, t), 5);
    EXPECT_FALSE(derivation_of(g, parse_prefix("Corr(close,0.01,20)")).has_value());
    EXPECT_TRUE(derivation_of(Grammar(GrammarLevel::Syn), parse_prefix("Sub(0.01,0.05)")).has_value());
    EXPECT_FALSE(derivation_of(g, parse_prefix("Sub(0.01,0.05)")).has_value());
}

TEST(Rollouts, SemKAreValidEvaluableAndBounded) {
    std::mt19937_64 rng(5);
    std::mt19937_64 prng(6);
    const Panel panel = testutil::random_panel(prng, 60, 6, 0.0);
    for (int K : {5, 10, 20}) {
        const Grammar g(GrammarLevel::SemK, K);
        for (int i = 0; i < 500; ++i) {
            const auto s = testutil::random_rollout(g, rng);
            ASSERT_LE(s.k(), K);
            ASSERT_EQ(derivation_length(g, s.tree()), s.k());
            ASSERT_TRUE(has_feature(s.tree().root()));
            check_semantics(s.tree().root());
            const auto back = parse_prefix(to_text(s.tree()));
            ASSERT_EQ(to_text(back), to_text(s.tree()));
            const auto v = evaluate(back, panel);
            ASSERT_EQ(v.days(), panel.days());
        }
    }
}

TEST(Rollouts, SynNeverViolatesArity) {
    std::mt19937_64 rng(8);
    const Grammar g(GrammarLevel::Syn);
    for (int i = 0; i < 2000; ++i) {
        auto s = DerivationState::initial(g);
        while (!is_complete(s) && s.tree().size() < 300) {
            const auto acts = valid_actions(s);
            s = apply_rule(s, acts[rng() % acts.size()]);
        }
        if (!is_complete(s)) continue;
        check_arity(s.tree().root());
        ASSERT_EQ(to_text(parse_prefix(to_text(s.tree()))), to_text(s.tree()));
    }
}
