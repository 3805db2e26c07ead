#include <gtest/gtest.h>

#include <random>

#include "alphaforge/grammar.hpp"
#include "alphaforge/spacecount.hpp"
#include "oracles.hpp"

using namespace alphaforge;

namespace {

GrammarCensus toy(unsigned u, unsigned b, unsigned ba, unsigned r, unsigned rp, unsigned f, unsigned c,
                  unsigned n) {
    return {u, b, ba, r, rp, f, c, n};
}

}  // namespace

TEST(Sigma, PowersAndCumulativeSums) {
    const auto two = toy(0, 0, 0, 0, 0, 2, 0, 0);
    EXPECT_EQ(count_sigma(two, 3).count, 8);
    EXPECT_EQ(count_sigma(two, 3).cumulative, 14);
    EXPECT_EQ(GrammarCensus::paper().alphabet(), 43u);
    EXPECT_THROW(count_sigma(two, 0), std::invalid_argument);
}

TEST(Syn, ToyRecurrence) {
    // h1 = 2, h2 = 2, h3 = 1 * 2 + 1 * 2 * 2.
    const auto h = syn_sequence(toy(1, 1, 0, 0, 0, 2, 0, 0), 3);
    EXPECT_EQ(h[1], 2);
    EXPECT_EQ(h[2], 2);
    EXPECT_EQ(h[3], 6);
}

TEST(Sem, ToyRecurrence) {
    // Only B(E,E) and B(E,C) with one feature and one constant.
    const auto f = sem_sequence(toy(0, 1, 0, 0, 0, 1, 1, 0), 3);
    EXPECT_EQ(f[1], 1);
    EXPECT_EQ(f[2], 0);
    EXPECT_EQ(f[3], 2);
}

TEST(Counts, MatchExhaustiveEnumeration) {
    std::mt19937_64 rng(1);
    std::vector<GrammarCensus> censuses{GrammarCensus::paper()};
    while (censuses.size() < 8) {
        auto d = [&] { return static_cast<unsigned>(rng() % 3); };
        censuses.push_back(toy(d(), d(), d(), d(), d(), 1 + d(), d(), d()));
    }
    for (const auto& c : censuses) {
        const auto h = syn_sequence(c, 5);
        const auto f = sem_sequence(c, 5);
        for (int n = 1; n <= 5; ++n) {
            EXPECT_EQ(h[static_cast<std::size_t>(n)], oracle::Enumerator(c, false).count(n)) << "syn n=" << n;
            EXPECT_EQ(f[static_cast<std::size_t>(n)], oracle::Enumerator(c, true).count(n)) << "sem n=" << n;
        }
    }
}

TEST(Counts, PublishedTable) {
    const auto rows = cumulative_table(GrammarCensus::paper(), 6, 10);
    const char* sigma[] = {"43", "1892", "81399", "3500200", "150508643", "6471871692"};
    const char* syn[] = {"15", "60", "5370", "59100", "3991515", "71204910"};
    const char* sem[] = {"6", "24", "762", "5676", "124854", "1321872"};
    for (std::size_t i = 0; i < 6; ++i) {
        EXPECT_EQ(rows[i].sigma, BigInt(sigma[i])) << i + 1;
        EXPECT_EQ(rows[i].syn, BigInt(syn[i])) << i + 1;
        EXPECT_EQ(rows[i].sem, BigInt(sem[i])) << i + 1;
        EXPECT_EQ(rows[i].semk, rows[i].sem);
    }
    EXPECT_NE(format_count_csv(rows).find("6,6471871692,71204910,1321872,1321872\n"), std::string::npos);
}

TEST(Counts, OrderingAndSemkSaturation) {
    const auto rows = cumulative_table(GrammarCensus::paper(), 50, 10);
    for (const auto& r : rows) {
        ASSERT_GE(r.sigma, r.syn) << r.n;
        ASSERT_GE(r.syn, r.sem) << r.n;
        ASSERT_GE(r.sem, r.semk) << r.n;
        if (r.n >= 10) ASSERT_EQ(r.semk, rows[9].semk);
    }
    EXPECT_GT(rows[49].sigma, BigInt("1000000000000000000000000000000000000000000000000000000000000000000000000000"));
}

TEST(Census, ReadFromGrammar) {
    EXPECT_EQ(GrammarCensus::from_grammar(Grammar(GrammarLevel::Sem, 10)), GrammarCensus::paper());
    EXPECT_EQ(GrammarCensus::from_grammar(Grammar(GrammarLevel::Syn, 10)), GrammarCensus::paper());
    EXPECT_EQ(GrammarCensus::paper().terminals(), 15u);
}
