#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "alphaforge/errors.hpp"
#include "alphaforge/evaluator.hpp"
#include "reference_eval.hpp"
#include "test_util.hpp"

using namespace alphaforge;

namespace {

constexpr double NA = std::numeric_limits<double>::quiet_NaN();

ExprTree P(const char* s) { return parse_prefix(s); }

bool close_enough(double a, double b) {
    return std::fabs(a - b) <= 1e-9 * std::max(std::fabs(a), std::fabs(b)) + 1e-12;
}

void expect_matches_reference(const ExprTree& t, const Panel& panel) {
    const auto got = evaluate(t, panel);
    const auto want = reference::evaluate(t, panel);
    ASSERT_EQ(got.days(), want.days());
    ASSERT_EQ(got.stocks(), want.stocks());
    for (std::size_t d = 0; d < got.days(); ++d)
        for (std::size_t s = 0; s < got.stocks(); ++s) {
            ASSERT_EQ(got.valid(d, s), want.valid(d, s)) << to_text(t) << " day " << d << " stock " << s;
            if (got.valid(d, s))
                ASSERT_TRUE(close_enough(got.value(d, s), want.value(d, s)))
                    << to_text(t) << " day " << d << " stock " << s << ": " << got.value(d, s)
                    << " vs " << want.value(d, s);
        }
}

}  // namespace

TEST(Evaluate, VwapSumWorkedExample) {
    const auto panel = testutil::panel_from({{Feature::Vwap, {{NA}, {2.0}, {3.0}}}}, {{1.0}, {1.0}, {1.0}});
    const auto v = evaluate(P("Sum(Sub(vwap,1.0),2)"), panel);
    EXPECT_FALSE(v.valid(1, 0));
    ASSERT_TRUE(v.valid(2, 0));
    EXPECT_EQ(v.value(2, 0), 3.0);
}

TEST(Evaluate, TrailingMean) {
    const auto panel = testutil::panel_from({{Feature::Close, {{1}, {2}, {3}, {4}}}}, {{1}, {1}, {1}, {1}});
    const auto v = evaluate(P("Mean(close,3)"), panel);
    EXPECT_FALSE(v.valid(0, 0));
    EXPECT_FALSE(v.valid(1, 0));
    EXPECT_DOUBLE_EQ(v.value(2, 0), 2.0);
    EXPECT_DOUBLE_EQ(v.value(3, 0), 3.0);
}

TEST(Evaluate, DeltaIsDifferenceOfRef) {
    std::mt19937_64 rng(1);
    const auto panel = testutil::random_panel(rng, 50, 10);
    for (int t : {1, 5, 20}) {
        const std::string n = std::to_string(t);
        const auto delta = evaluate(P(("Delta(close," + n + ")").c_str()), panel);
        const auto ref = evaluate(P(("Ref(close," + n + ")").c_str()), panel);
        const auto& close = panel.feature(Feature::Close);
        for (std::size_t i = 0; i < delta.cells(); ++i) {
            const bool ok = ref.mask()[i] && close.mask()[i];
            ASSERT_EQ(delta.mask()[i] != 0, ok);
            if (ok) ASSERT_EQ(delta.values()[i], close.values()[i] - ref.values()[i]);
        }
    }
}

TEST(Evaluate, SelfCorrelationIsOne) {
    std::mt19937_64 rng(2);
    const auto panel = testutil::random_panel(rng, 50, 10);
    const auto v = evaluate(P("Corr(close,close,20)"), panel);
    std::size_t defined = 0;
    for (std::size_t i = 0; i < v.cells(); ++i)
        if (v.mask()[i]) {
            ++defined;
            EXPECT_NEAR(v.values()[i], 1.0, 1e-12);
        }
    EXPECT_GT(defined, 0u);
}

TEST(Evaluate, DomainViolationsAreMissing) {
    const auto panel = testutil::panel_from({{Feature::Open, {{-1.0, 0.0}}}}, {{2.0, 0.0}});
    const auto lg = evaluate(P("Log(open)"), panel);
    EXPECT_FALSE(lg.valid(0, 0));
    EXPECT_FALSE(lg.valid(0, 1));
    const auto dv = evaluate(P("Div(close,open)"), panel);
    EXPECT_TRUE(dv.valid(0, 0));
    EXPECT_FALSE(dv.valid(0, 1));
    EXPECT_FALSE(evaluate(P("Pow(open,0.5)"), panel).valid(0, 0));
}

TEST(Evaluate, PartialTreeIsAnError) {
    std::mt19937_64 rng(2);
    const auto panel = testutil::random_panel(rng, 10, 3);
    EXPECT_THROW(evaluate(P("Mean(<Expr>,20)"), panel), EvalError);
}

TEST(Evaluate, MatchesReferenceOnEveryOperator) {
    std::mt19937_64 rng(3);
    for (int rep = 0; rep < 3; ++rep) {
        const auto panel = testutil::random_panel(rng, 50, 10, rep == 0 ? 0.0 : 0.02);
        for (const char* e : testutil::kOperatorCases) expect_matches_reference(P(e), panel);
    }
}

TEST(Evaluate, MatchesReferenceOnRandomTrees) {
    std::mt19937_64 rng(4);
    const auto panel = testutil::random_panel(rng, 50, 10);
    for (int i = 0; i < 300; ++i) expect_matches_reference(testutil::random_tree(rng, 10), panel);
}

TEST(Properties, AddIsSymmetricAndExtremaBound) {
    std::mt19937_64 rng(5);
    const auto panel = testutil::random_panel(rng, 50, 10);
    for (int i = 0; i < 50; ++i) {
        const auto a = testutil::random_tree(rng, 6);
        const auto b = testutil::random_tree(rng, 6);
        const auto ab = evaluate(ExprTree::op(Op::Add, {a, b}), panel);
        const auto ba = evaluate(ExprTree::op(Op::Add, {b, a}), panel);
        ASSERT_TRUE(ab == ba);
        const auto va = evaluate(a, panel);
        const auto vb = evaluate(b, panel);
        const auto g = evaluate(ExprTree::op(Op::Greater, {a, b}), panel);
        const auto l = evaluate(ExprTree::op(Op::Less, {a, b}), panel);
        for (std::size_t c = 0; c < g.cells(); ++c) {
            if (!g.mask()[c]) continue;
            ASSERT_GE(g.values()[c], va.values()[c]);
            ASSERT_GE(g.values()[c], vb.values()[c]);
            ASSERT_LE(l.values()[c], va.values()[c]);
            ASSERT_LE(l.values()[c], vb.values()[c]);
        }
    }
}

TEST(Properties, CsRankRange) {
    std::mt19937_64 rng(6);
    const auto panel = testutil::random_panel(rng, 50, 10, 0.0);
    const auto r = evaluate(P("CSRank(close)"), panel);
    const auto& close = panel.feature(Feature::Close);
    for (std::size_t d = 0; d < r.days(); ++d) {
        std::size_t top = 0;
        for (std::size_t s = 0; s < r.stocks(); ++s) {
            ASSERT_GT(r.value(d, s), 0.0);
            ASSERT_LE(r.value(d, s), 1.0);
            if (close.value(d, s) > close.value(d, top)) top = s;
        }
        EXPECT_EQ(r.value(d, top), 1.0);
    }
}

TEST(Properties, StdSquaredIsVar) {
    std::mt19937_64 rng(7);
    const auto panel = testutil::random_panel(rng, 50, 10);
    const auto sd = evaluate(P("Std(close,20)"), panel);
    const auto var = evaluate(P("Var(close,20)"), panel);
    for (std::size_t i = 0; i < sd.cells(); ++i)
        if (sd.mask()[i] && var.mask()[i])
            ASSERT_NEAR(sd.values()[i] * sd.values()[i], var.values()[i], 1e-9 * var.values()[i] + 1e-15);
}

TEST(Properties, NoLookahead) {
    std::mt19937_64 rng(8);
    const auto panel = testutil::random_panel(rng, 40, 5, 0.0);
    const std::size_t cut = 25;
    // Same history up to `cut`, different afterwards.
    std::mt19937_64 rng2(9);
    const auto other = testutil::random_panel(rng2, 40, 5, 0.0);
    std::array<Series2D, kNumFeatures> mixed;
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
        mixed[f] = panel.feature(static_cast<Feature>(f));
        for (std::size_t d = cut + 1; d < 40; ++d)
            for (std::size_t s = 0; s < 5; ++s)
                mixed[f].set(d, s, other.feature(static_cast<Feature>(f)).value(d, s));
    }
    const Panel perturbed(panel.index(), std::move(mixed));
    for (int i = 0; i < 100; ++i) {
        const auto t = testutil::random_tree(rng, 10);
        const auto a = evaluate(t, panel);
        const auto b = evaluate(t, perturbed);
        for (std::size_t d = 0; d <= cut; ++d)
            for (std::size_t s = 0; s < 5; ++s) {
                ASSERT_EQ(a.valid(d, s), b.valid(d, s)) << to_text(t);
                if (a.valid(d, s)) ASSERT_EQ(a.value(d, s), b.value(d, s)) << to_text(t);
            }
    }
}
