#include <gtest/gtest.h>

#include <stdexcept>

#include "alphaforge/config.hpp"

using namespace alphaforge;

TEST(Config, Defaults) {
    const RunConfig c;
    EXPECT_EQ(c.integer("mcts.simulations"), 64);
    EXPECT_EQ(c.real("mcts.c_puct"), 1.0);
    EXPECT_EQ(c.real("mcts.b_ref"), 40.0);
    EXPECT_EQ(c.integer("max_length"), 10);
    EXPECT_EQ(c.integer("pool.capacity"), 10);
    EXPECT_EQ(c.integer("nn.hidden_dim"), 128);
    EXPECT_EQ(c.real("nn.learning_rate"), 1e-4);
    EXPECT_EQ(c.integer("miner.replay_capacity"), 20000);
    EXPECT_EQ(c.integer("target.horizon"), 20);
    EXPECT_EQ(c.text("grammar"), "semk");
    EXPECT_EQ(c.values().size(), config_keys().size());
}

TEST(Config, JsonRoundTrip) {
    RunConfig c;
    c.set("mcts.simulations", "12");
    c.set("data.exclude_ranges", "2020-01-01..2020-02-01");
    c.apply_override("grammar=syn");
    const auto back = RunConfig::from_json_text(c.to_json());
    EXPECT_EQ(back.values(), c.values());
    const auto nested = RunConfig::from_json_text(R"({"mcts": {"simulations": 8}, "seed": 3})");
    EXPECT_EQ(nested.integer("mcts.simulations"), 8);
    EXPECT_EQ(nested.integer("seed"), 3);
}

TEST(Config, RejectsBadInput) {
    RunConfig c;
    EXPECT_THROW(c.set("mcts.simulations", "many"), std::invalid_argument);
    EXPECT_THROW(c.set("mcts.c_puct", "x1"), std::invalid_argument);
    EXPECT_THROW(c.set("no.such_key", "1"), std::invalid_argument);
    EXPECT_THROW(c.apply_override("mcts.simulations"), std::invalid_argument);
    EXPECT_THROW(RunConfig::from_json_text(R"({"mcts": {"bogus": 1}})"), std::invalid_argument);
    EXPECT_THROW(RunConfig::from_json_text("{"), std::invalid_argument);
    EXPECT_EQ(c.integer("mcts.simulations"), 64);
}

TEST(Config, DeskProfile) {
    RunConfig c;
    apply_desk_profile(c);
    EXPECT_EQ(c.integer("nn.hidden_dim"), 16);
    EXPECT_EQ(c.integer("mcts.parallelism"), 1);
    EXPECT_EQ(c.integer("mcts.simulations"), 64);
    const auto m = miner_config_of(c);
    EXPECT_EQ(m.network.d_h, 16u);
    EXPECT_EQ(m.search.simulations, 64);
    EXPECT_EQ(m.search.parallelism, 1);
    EXPECT_EQ(m.level, GrammarLevel::SemK);
}

TEST(Config, DescribeListsEveryKey) {
    const auto text = describe_config_keys();
    for (const auto& k : config_keys()) EXPECT_NE(text.find(std::string(k.key)), std::string::npos) << k.key;
    EXPECT_NE(text.find("mcts.simulations = 64 [published]"), std::string::npos);
}
