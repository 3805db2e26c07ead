#include <gtest/gtest.h>

#include <random>

#include "alphaforge/errors.hpp"
#include "alphaforge/expr_tree.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace alphaforge;

namespace {

ExprTree P(const char* s) { return parse_prefix(s); }

const char* kTopAlphas[] = {
    "Mean(Corr(Sum(open,40),Sub(high,volume),20),20)",
    "volume",
    "Std(close,40)",
    "Pow(Med(Cov(high,low,30),30),0.1)",
    "Delta(Log(Abs(Div(Min(high,30),0.01))),30)",
    "Add(Cov(Sub(-0.1,Sum(close,40)),volume,20),low)",
    "Mul(Greater(Div(-0.1,Corr(high,close,30)),volume),0.01)",
    "Log(Abs(Std(Sub(0.05,volume),40)))",
    "Greater(-0.01,Log(Abs(Log(Abs(low)))))",
    "Cov(volume,vwap,40)",
};

}  // namespace

TEST(Parse, PairedRollingNode) {
    const auto t = P("Cov(volume,vwap,40)");
    ASSERT_EQ(std::get<Op>(t.root().label()), Op::Cov);
    ASSERT_EQ(t.root().children().size(), 3u);
    EXPECT_EQ(std::get<Feature>(t.root().child(0).label()), Feature::Volume);
    EXPECT_EQ(std::get<Feature>(t.root().child(1).label()), Feature::Vwap);
    EXPECT_EQ(std::get<NumLiteral>(t.root().child(2).label()).days, 40);
}

TEST(Parse, SingleFeatureLeaf) {
    const auto t = P("close");
    EXPECT_EQ(t.size(), 1u);
    EXPECT_EQ(std::get<Feature>(t.root().label()), Feature::Close);
}

TEST(Parse, ArityErrorNamesOperator) {
    try {
        P("Mean(close)");
        FAIL() << "expected an arity error";
    } catch (const ArityError& e) {
        EXPECT_EQ(e.op(), "Mean");
    }
}

TEST(Parse, SyntaxErrorCarriesPosition) {
    try {
        P("Mean(close");
        FAIL() << "expected a parse error";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.position(), 10u);
    }
    EXPECT_THROW(P("Foo(close)"), ParseError);
    EXPECT_THROW(P("close,"), ParseError);
    EXPECT_THROW(P(""), ParseError);
}

TEST(Text, CanonicalForms) {
    EXPECT_EQ(to_text(P("Sub( close , 0.01 )")), "Sub(close,0.01)");
    EXPECT_EQ(to_text(P("Mean(<Expr>,20)")), "Mean(<Expr>,20)");
    EXPECT_FALSE(P("Mean(<Expr>,20)").is_complete());
}

TEST(Text, TopAlphasRoundTrip) {
    for (const char* s : kTopAlphas) {
        const auto t = P(s);
        EXPECT_EQ(to_text(t), s);
        EXPECT_EQ(to_text(P(to_text(t).c_str())), s);
    }
}

TEST(Text, RandomTreesRoundTrip) {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 10000; ++i) {
        const auto t = testutil::random_tree(rng, 1 + i % 20);
        const auto text = to_text(t);
        const auto back = parse_prefix(text);
        ASSERT_EQ(to_text(back), text);
        ASSERT_TRUE(isomorphic(t, back));
        ASSERT_EQ(back.size(), t.size());
    }
}

TEST(Isomorphism, SymmetricOperators) {
    EXPECT_TRUE(isomorphic(P("Add(open,close)"), P("Add(close,open)")));
    EXPECT_FALSE(isomorphic(P("Sub(open,close)"), P("Sub(close,open)")));
    EXPECT_TRUE(isomorphic(P("Corr(high,low,20)"), P("Corr(low,high,20)")));
    EXPECT_FALSE(isomorphic(P("Corr(high,low,20)"), P("Corr(high,low,30)")));
    EXPECT_FALSE(isomorphic(P("Abs(Sign(close))"), P("Sign(Abs(close))")));
}

TEST(Isomorphism, ReflexiveSymmetricAndPermutationInvariant) {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 2000; ++i) {
        const auto a = testutil::random_tree(rng, 12);
        const ExprTree b(testutil::shuffle_symmetric(a.root(), rng));
        ASSERT_TRUE(isomorphic(a, a));
        ASSERT_TRUE(isomorphic(a, b));
        ASSERT_TRUE(isomorphic(b, a));
        ASSERT_EQ(canonical_form(a.root()), canonical_form(b.root()));
        const auto c = testutil::random_tree(rng, 12);
        ASSERT_EQ(isomorphic(a, c), oracle::iso(a.root(), c.root()));
        ASSERT_EQ(isomorphic(a, c), isomorphic(c, a));
    }
}

TEST(SubtreeCount, Examples) {
    EXPECT_EQ(subtree_count(P("close")), 1u);
    EXPECT_EQ(subtree_count(P("Mean(close,20)")), 3u);
    EXPECT_EQ(subtree_count(P("Cov(volume,vwap,40)")), 4u);
}

TEST(Similarity, Examples) {
    EXPECT_DOUBLE_EQ(similarity(P("Mean(close,20)"), P("Mean(close,20)")), 1.0);
    EXPECT_DOUBLE_EQ(similarity(P("Abs(open)"), P("Sign(close)")), 0.0);
    EXPECT_DOUBLE_EQ(similarity(P("Mean(close,20)"), P("Sub(Mean(close,20),open)")), 0.6);
    EXPECT_DOUBLE_EQ(oracle::brute_similarity(P("Mean(close,20)"), P("Sub(Mean(close,20),open)")),
                     0.6);
}

TEST(Similarity, MatchesBruteForce) {
    std::mt19937_64 rng(13);
    for (int i = 0; i < 1000; ++i) {
        const auto a = testutil::random_tree(rng, 12);
        auto b = testutil::random_tree(rng, 12);
        if (i % 3 == 0) b = ExprTree(testutil::shuffle_symmetric(a.root(), rng));
        ASSERT_EQ(largest_common_subtree(a, b), oracle::brute_css(a, b)) << to_text(a) << " " << to_text(b);
        ASSERT_DOUBLE_EQ(similarity(a, b), similarity(b, a));
        ASSERT_DOUBLE_EQ(similarity(a, a), 1.0);
        const bool full = similarity(a, b) == 1.0;
        ASSERT_EQ(full, isomorphic(a, b) && a.size() == b.size());
    }
}
