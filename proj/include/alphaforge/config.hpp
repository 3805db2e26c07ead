#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "alphaforge/miner.hpp"
#include "alphaforge/metrics.hpp"
#include "alphaforge/panel.hpp"

namespace alphaforge {

enum class ValueKind { Integer, Real, Text, Boolean };

struct ConfigKey {
    std::string_view key;
    ValueKind kind;
    std::string_view default_value;
    std::string_view description;
    bool published;  // default taken from the published parameter settings
};

// Every recognized key in documentation order.
std::span<const ConfigKey> config_keys();

// Flat dotted-key configuration. JSON files nest sections as objects
// ({"mcts": {"simulations": 64}}); top-level scalars are `seed`, `grammar`
// and `max_length`. data.exclude_ranges is written as "start..end" items
// separated by commas (a JSON array of two-element arrays is also read).
class RunConfig {
public:
    RunConfig();  // all defaults

    static RunConfig from_json_text(const std::string& text);
    static RunConfig load(const std::filesystem::path& path);
    // Overwrites the keys present in a JSON document.
    void merge_json_text(const std::string& text);
    void merge_file(const std::filesystem::path& path);
    std::string to_json() const;
    void save(const std::filesystem::path& path) const;

    // Validates the key and the value's type. Throws std::invalid_argument.
    void set(std::string_view key, std::string_view value);
    // "key=value".
    void apply_override(std::string_view assignment);

    const std::string& text(std::string_view key) const;
    long long integer(std::string_view key) const;
    double real(std::string_view key) const;
    bool boolean(std::string_view key) const;

    const std::map<std::string, std::string, std::less<>>& values() const noexcept { return values_; }

private:
    std::map<std::string, std::string, std::less<>> values_;
};

// Small networks, fewer simulations and trajectories: a profile that trains
// in minutes on one core.
void apply_desk_profile(RunConfig& config);
// Single-threaded search without virtual loss and one trajectory worker.
void apply_deterministic_profile(RunConfig& config);

// `--help` text: every key with its default, published defaults tagged.
std::string describe_config_keys();

GrammarLevel grammar_level_of(const RunConfig& config);
MinerConfig miner_config_of(const RunConfig& config);
BacktestConfig backtest_config_of(const RunConfig& config);
DateFilter train_filter_of(const RunConfig& config);
// Empty optional when no validation window is configured.
std::optional<DateFilter> valid_filter_of(const RunConfig& config);

}  // namespace alphaforge
