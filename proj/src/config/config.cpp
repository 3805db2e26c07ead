#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "alphaforge/config.hpp"
#include "alphaforge/errors.hpp"

namespace alphaforge {

namespace {

using Kind = ValueKind;

constexpr ConfigKey kKeys[] = {
    {"seed", Kind::Integer, "0", "global random seed", false},
    {"grammar", Kind::Text, "semk", "grammar level: syn, sem or semk", false},
    {"max_length", Kind::Integer, "10", "length bound K", true},
    {"data.path", Kind::Text, "", "market CSV", false},
    {"data.start", Kind::Text, "", "first training date (inclusive)", false},
    {"data.end", Kind::Text, "", "last training date (inclusive)", false},
    {"data.exclude_ranges", Kind::Text, "", "excluded date ranges, start..end[,start..end]", false},
    {"data.valid_start", Kind::Text, "", "first validation date; empty disables validation", false},
    {"data.valid_end", Kind::Text, "", "last validation date", false},
    {"target.horizon", Kind::Integer, "20", "forward-return horizon in days", true},
    {"pool.capacity", Kind::Integer, "10", "factor pool size", true},
    {"pool.gradient_steps", Kind::Integer, "200", "weight descent steps per insertion", false},
    {"pool.learning_rate", Kind::Real, "0.01", "weight descent step size", false},
    {"nn.embedding_dim", Kind::Integer, "128", "symbol embedding size", true},
    {"nn.hidden_dim", Kind::Integer, "128", "Tree-LSTM hidden size", true},
    {"nn.policy_hidden", Kind::Integer, "64", "policy head hidden width", true},
    {"nn.value_hidden", Kind::Integer, "64", "value head hidden width", true},
    {"nn.dropout", Kind::Real, "0.1", "dropout on node inputs during training", true},
    {"nn.learning_rate", Kind::Real, "0.0001", "Adam learning rate", true},
    {"nn.batch_size", Kind::Integer, "64", "training minibatch size", true},
    {"nn.l2", Kind::Real, "0.0001", "L2 penalty coefficient", false},
    {"mcts.simulations", Kind::Integer, "64", "simulations per decision", true},
    {"mcts.c_puct", Kind::Real, "1", "exploration constant", true},
    {"mcts.b_ref", Kind::Real, "40", "branch balance coefficient", true},
    {"mcts.temperature", Kind::Real, "1", "sampling temperature", false},
    {"mcts.parallelism", Kind::Integer, "8", "leaves per virtual-loss wave", true},
    {"mcts.eval_batch", Kind::Integer, "2", "leaves per evaluator task", true},
    {"mcts.root_noise", Kind::Boolean, "false", "reserved; root noise is not implemented", false},
    {"miner.epochs", Kind::Integer, "100", "training iterations", true},
    {"miner.trajectories_per_iter", Kind::Integer, "100", "trajectories per iteration", true},
    {"miner.sample_fraction", Kind::Real, "0.5", "share of trajectories sampled at temperature", false},
    {"miner.updates_per_epoch", Kind::Integer, "16", "gradient steps per iteration", false},
    {"miner.replay_capacity", Kind::Integer, "20000", "replay buffer size", true},
    {"miner.early_stop_fraction", Kind::Real, "0.2", "patience as a share of iterations", true},
    {"miner.workers", Kind::Integer, "1", "concurrent trajectory workers", false},
    {"backtest.k", Kind::Integer, "60", "portfolio size", true},
    {"backtest.n", Kind::Integer, "5", "max trades per side per day", true},
    {"backtest.fee_rate", Kind::Real, "0", "proportional fee on traded notional", false},
    {"backtest.risk_free", Kind::Real, "0", "annual risk-free rate", false},
};

const ConfigKey* find_key(std::string_view key) {
    for (const auto& k : kKeys)
        if (k.key == key) return &k;
    return nullptr;
}

bool parse_integer(std::string_view s, long long& out) {
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && p == s.data() + s.size() && !s.empty();
}

// Shortest text that reads back to the same double.
std::string real_text(double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

bool parse_real(std::string_view s, double& out) {
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && p == s.data() + s.size() && !s.empty();
}

std::string validated(const ConfigKey& k, std::string_view value) {
    long long i = 0;
    double d = 0.0;
    switch (k.kind) {
        case Kind::Integer:
            if (!parse_integer(value, i))
                throw std::invalid_argument(std::string(k.key) + " expects an integer, got '" +
                                            std::string(value) + "'");
            break;
        case Kind::Real:
            if (!parse_real(value, d))
                throw std::invalid_argument(std::string(k.key) + " expects a number, got '" +
                                            std::string(value) + "'");
            return real_text(d);
        case Kind::Boolean:
            if (value != "true" && value != "false")
                throw std::invalid_argument(std::string(k.key) + " expects true or false");
            break;
        case Kind::Text:
            break;
    }
    if (k.key == "grammar" && !grammar_level_from_name(value))
        throw std::invalid_argument("grammar must be syn, sem or semk");
    return std::string(value);
}

std::string scalar_text(const nlohmann::json& v, std::string_view key) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number()) return real_text(v.get<double>());
    if (key == "data.exclude_ranges" && v.is_array()) {
        std::string out;
        for (const auto& r : v) {
            if (!r.is_array() || r.size() != 2 || !r[0].is_string() || !r[1].is_string())
                throw std::invalid_argument("data.exclude_ranges items must be [start, end]");
            if (!out.empty()) out += ',';
            out += r[0].get<std::string>() + ".." + r[1].get<std::string>();
        }
        return out;
    }
    throw std::invalid_argument(std::string(key) + " has an unsupported JSON value");
}

void flatten(const nlohmann::json& j, const std::string& prefix, RunConfig& out) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
        if (it->is_object()) {
            flatten(*it, key, out);
        } else {
            out.set(key, scalar_text(*it, key));
        }
    }
}

}  // namespace

std::span<const ConfigKey> config_keys() { return kKeys; }

RunConfig::RunConfig() {
    for (const auto& k : kKeys) values_.emplace(std::string(k.key), validated(k, k.default_value));
}

void RunConfig::set(std::string_view key, std::string_view value) {
    const ConfigKey* k = find_key(key);
    if (!k) throw std::invalid_argument("unknown config key '" + std::string(key) + "'");
    values_[std::string(key)] = validated(*k, value);
}

void RunConfig::apply_override(std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos)
        throw std::invalid_argument("override '" + std::string(assignment) + "' is not key=value");
    set(assignment.substr(0, eq), assignment.substr(eq + 1));
}

RunConfig RunConfig::from_json_text(const std::string& text) {
    RunConfig out;
    out.merge_json_text(text);
    return out;
}

void RunConfig::merge_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
    flatten(j, "", *this);
}

void RunConfig::merge_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    merge_json_text(buf.str());
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    RunConfig out;
    out.merge_file(path);
    return out;
}

std::string RunConfig::to_json() const {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& k : kKeys) {
        const std::string& v = values_.at(std::string(k.key));
        nlohmann::ordered_json value;
        switch (k.kind) {
            case Kind::Integer: value = std::stoll(v); break;
            case Kind::Real: value = std::stod(v); break;
            case Kind::Boolean: value = (v == "true"); break;
            case Kind::Text: value = v; break;
        }
        const auto dot = k.key.find('.');
        if (dot == std::string_view::npos) {
            j[std::string(k.key)] = value;
        } else {
            j[std::string(k.key.substr(0, dot))][std::string(k.key.substr(dot + 1))] = value;
        }
    }
    return j.dump(2) + "\n";
}

void RunConfig::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << to_json();
}

const std::string& RunConfig::text(std::string_view key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw std::invalid_argument("unknown config key '" + std::string(key) + "'");
    return it->second;
}

long long RunConfig::integer(std::string_view key) const { return std::stoll(text(key)); }
double RunConfig::real(std::string_view key) const { return std::stod(text(key)); }
bool RunConfig::boolean(std::string_view key) const { return text(key) == "true"; }

void apply_desk_profile(RunConfig& c) {
    c.set("nn.embedding_dim", "16");
    c.set("nn.hidden_dim", "16");
    c.set("nn.policy_hidden", "16");
    c.set("nn.value_hidden", "16");
    c.set("nn.learning_rate", "0.003");
    c.set("nn.batch_size", "32");
    c.set("mcts.parallelism", "1");
    c.set("miner.updates_per_epoch", "8");
}

void apply_deterministic_profile(RunConfig& c) {
    c.set("mcts.parallelism", "1");
    c.set("miner.workers", "1");
}

std::string describe_config_keys() {
    std::ostringstream out;
    out << "Config keys (JSON sections or --set key=value):\n";
    for (const auto& k : kKeys) {
        out << "  " << k.key << " = " << (k.default_value.empty() ? "\"\"" : k.default_value);
        if (k.published) out << " [published]";
        out << "\n      " << k.description << "\n";
    }
    return out.str();
}

GrammarLevel grammar_level_of(const RunConfig& c) { return *grammar_level_from_name(c.text("grammar")); }

MinerConfig miner_config_of(const RunConfig& c) {
    MinerConfig m;
    m.level = grammar_level_of(c);
    m.max_length = static_cast<int>(c.integer("max_length"));
    m.search.simulations = static_cast<int>(c.integer("mcts.simulations"));
    m.search.c_puct = c.real("mcts.c_puct");
    m.search.b_ref = c.real("mcts.b_ref");
    m.search.temperature = c.real("mcts.temperature");
    m.search.parallelism = static_cast<int>(c.integer("mcts.parallelism"));
    m.search.eval_batch = static_cast<int>(c.integer("mcts.eval_batch"));
    m.network.d_emb = static_cast<std::size_t>(c.integer("nn.embedding_dim"));
    m.network.d_h = static_cast<std::size_t>(c.integer("nn.hidden_dim"));
    m.network.policy_hidden = static_cast<std::size_t>(c.integer("nn.policy_hidden"));
    m.network.value_hidden = static_cast<std::size_t>(c.integer("nn.value_hidden"));
    m.trainer.learning_rate = c.real("nn.learning_rate");
    m.trainer.l2 = c.real("nn.l2");
    m.trainer.dropout = c.real("nn.dropout");
    m.batch_size = static_cast<std::size_t>(c.integer("nn.batch_size"));
    m.pool.capacity = static_cast<std::size_t>(c.integer("pool.capacity"));
    m.pool.gradient_steps = static_cast<int>(c.integer("pool.gradient_steps"));
    m.pool.learning_rate = c.real("pool.learning_rate");
    m.epochs = static_cast<int>(c.integer("miner.epochs"));
    m.trajectories_per_epoch = static_cast<int>(c.integer("miner.trajectories_per_iter"));
    m.sample_fraction = c.real("miner.sample_fraction");
    m.updates_per_epoch = static_cast<int>(c.integer("miner.updates_per_epoch"));
    m.replay_capacity = static_cast<std::size_t>(c.integer("miner.replay_capacity"));
    m.early_stop_fraction = c.real("miner.early_stop_fraction");
    m.workers = static_cast<int>(c.integer("miner.workers"));
    m.seed = static_cast<std::uint64_t>(c.integer("seed"));
    if (m.max_length < 1 || m.search.simulations < 1 || m.epochs < 1 ||
        m.trajectories_per_epoch < 1 || m.batch_size < 1 || m.pool.capacity < 1 ||
        m.network.d_emb < 1 || m.network.d_h < 1)
        throw std::invalid_argument("config sizes must be positive");
    return m;
}

BacktestConfig backtest_config_of(const RunConfig& c) {
    BacktestConfig b;
    b.k = static_cast<std::size_t>(c.integer("backtest.k"));
    b.n = static_cast<std::size_t>(c.integer("backtest.n"));
    b.fee_rate = c.real("backtest.fee_rate");
    b.risk_free = c.real("backtest.risk_free");
    return b;
}

DateFilter train_filter_of(const RunConfig& c) {
    DateFilter f{c.text("data.start"), c.text("data.end"), {}};
    std::string_view rest = c.text("data.exclude_ranges");
    while (!rest.empty()) {
        const auto comma = rest.find(',');
        const std::string_view item = rest.substr(0, comma);
        const auto sep = item.find("..");
        if (sep == std::string_view::npos)
            throw std::invalid_argument("data.exclude_ranges item '" + std::string(item) +
                                        "' is not start..end");
        f.exclude_ranges.emplace_back(std::string(item.substr(0, sep)),
                                      std::string(item.substr(sep + 2)));
        rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    }
    return f;
}

std::optional<DateFilter> valid_filter_of(const RunConfig& c) {
    if (c.text("data.valid_start").empty() && c.text("data.valid_end").empty()) return std::nullopt;
    DateFilter f = train_filter_of(c);
    f.start = c.text("data.valid_start");
    f.end = c.text("data.valid_end");
    return f;
}

}  // namespace alphaforge
