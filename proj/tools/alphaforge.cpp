#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "alphaforge/config.hpp"
#include "alphaforge/errors.hpp"
#include "alphaforge/evaluator.hpp"
#include "alphaforge/grammar.hpp"
#include "alphaforge/metrics.hpp"
#include "alphaforge/miner.hpp"
#include "alphaforge/panel.hpp"
#include "alphaforge/pool.hpp"
#include "alphaforge/spacecount.hpp"

namespace fs = std::filesystem;
using namespace alphaforge;

namespace {

#ifndef ALPHAFORGE_VERSION
#define ALPHAFORGE_VERSION "dev"
#endif

enum Exit { kOk = 0, kOther = 1, kParse = 2, kData = 3, kEval = 4 };

struct Common {
    std::string config_path;
    std::vector<std::string> overrides;
    std::optional<long long> seed;
    std::string out_dir;
    bool deterministic = false;
    std::string profile;

    void attach(CLI::App* cmd, bool with_seed = true) {
        cmd->add_option("--config", config_path, "JSON config file");
        cmd->add_option("--set", overrides, "override a config key (key=value), repeatable");
        if (with_seed) cmd->add_option("--seed", seed, "random seed (overrides the config)");
        cmd->add_option("--out-dir", out_dir, "output directory");
        cmd->add_flag("--deterministic", deterministic,
                      "single-threaded search and one trajectory worker");
        cmd->add_option("--profile", profile, "preset: desk")->check(CLI::IsMember({"desk"}));
    }

    RunConfig resolve() const {
        RunConfig c;
        if (profile == "desk") apply_desk_profile(c);
        if (!config_path.empty()) c.merge_file(config_path);
        for (const auto& o : overrides) c.apply_override(o);
        if (seed) c.set("seed", std::to_string(*seed));
        if (deterministic) apply_deterministic_profile(c);
        return c;
    }
};

// Thrown after a parse error has been printed with its caret.
struct ReportedParseError {};

ExprTree parse_or_report(const std::string& text) {
    try {
        return parse_prefix(text);
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n  " << text << "\n  "
                  << std::string(std::min(e.position(), text.size()), ' ') << "^\n";
        throw ReportedParseError{};
    }
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << text;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

struct Windows {
    Panel train;
    Series2D train_targets;
    std::optional<Panel> valid;
    std::optional<Series2D> valid_targets;
};

Windows load_windows(const RunConfig& c) {
    if (c.text("data.path").empty()) throw DataError("data.path is not set");
    const Panel all = load_csv(c.text("data.path"));
    for (const auto& w : all.warnings()) std::cerr << "warning: " << w << "\n";
    const Series2D returns = forward_return(all, static_cast<int>(c.integer("target.horizon")));
    const DateFilter tf = train_filter_of(c);
    Windows w{filter_dates(all, tf), filter_dates(returns, all.dates(), tf), {}, {}};
    if (const auto vf = valid_filter_of(c)) {
        w.valid = filter_dates(all, *vf);
        w.valid_targets = filter_dates(returns, all.dates(), *vf);
    }
    if (w.train.days() == 0) throw DataError("training window is empty");
    return w;
}

fs::path prepare_run_dir(const std::string& out_dir, const RunConfig& c) {
    const fs::path dir = out_dir.empty() ? fs::path("run") : fs::path(out_dir);
    fs::create_directories(dir);
    c.save(dir / "config.json");
    write_file(dir / "VERSION", std::string("alphaforge ") + ALPHAFORGE_VERSION + "\n");
    return dir;
}

void print_epoch(const EpochMetrics& m) {
    std::fprintf(stderr, "epoch %d  ic %.4f", m.epoch, m.train_ic);
    if (m.valid_ic) std::fprintf(stderr, "  valid %.4f", *m.valid_ic);
    std::fprintf(stderr, "  reward %.4f  pool %zu  loss %.4f/%.4f  %.1fs\n", m.mean_reward,
                 m.pool_size, m.value_loss, m.policy_loss, m.seconds);
}

int cmd_mine(const Common& common) {
    const RunConfig c = common.resolve();
    const MinerConfig mc = miner_config_of(c);
    const Windows w = load_windows(c);
    const fs::path dir = prepare_run_dir(common.out_dir, c);
    const auto result = mine(mc, w.train, w.train_targets, w.valid ? &*w.valid : nullptr,
                             w.valid_targets ? &*w.valid_targets : nullptr,
                             [](const EpochMetrics& m, const FactorPool&) {
                                 print_epoch(m);
                                 return true;
                             });
    write_file(dir / "pool.tsv", result.pool.to_tsv());
    write_file(dir / "metrics.csv", format_metrics_csv(result.history));
    save_network(result.network, dir / "network.bin");
    std::cout << result.pool.to_tsv();
    std::cout << "combined_ic=" << result.pool.combined_ic() << "\n";
    return kOk;
}

int cmd_refine(const Common& common, const std::string& seed_text) {
    const RunConfig c = common.resolve();
    const MinerConfig mc = miner_config_of(c);
    const ExprTree seed = parse_or_report(seed_text);
    const Windows w = load_windows(c);
    const fs::path dir = prepare_run_dir(common.out_dir, c);
    const auto r = refine(seed, w.train, w.train_targets, mc, [](const EpochMetrics& m, const FactorPool&) {
        print_epoch(m);
        return true;
    });
    write_file(dir / "metrics.csv", format_metrics_csv(r.history));
    std::ostringstream out;
    out.precision(10);
    out << "seed=" << to_text(seed) << "\nmasked=" << to_text(r.masked)
        << "\nrefined=" << to_text(r.best) << "\nseed_ic=" << r.seed_ic << "\nrefined_ic=" << r.best_ic
        << "\n";
    write_file(dir / "refined.txt", out.str());
    std::cout << out.str();
    return kOk;
}

int cmd_eval(const std::string& expr_text, const std::string& data, int horizon) {
    const ExprTree expr = parse_or_report(expr_text);
    const Panel panel = load_csv(data);
    const Series2D returns = forward_return(panel, horizon);
    const auto report = ic_report(evaluate(expr, panel), returns);
    std::printf("ic=%.10g\nrank_ic=%.10g\nicir=%.10g\nrank_icir=%.10g\n", report.ic, report.rank_ic,
                report.icir, report.rank_icir);
    return kOk;
}

int cmd_backtest(const Common& common, const std::string& expr_text, const std::string& pool_path,
                 const std::string& data, const std::string& nav_path) {
    const RunConfig c = common.resolve();
    const Panel panel = load_csv(data);
    const Series2D returns = forward_return(panel, static_cast<int>(c.integer("target.horizon")));
    Series2D scores;
    if (!pool_path.empty()) {
        const FactorPool pool = FactorPool::from_tsv(read_file(pool_path), panel, returns);
        scores = pool.combination();
    } else {
        scores = evaluate(parse_or_report(expr_text), panel);
    }
    const auto bt = backtest_topk(scores, panel.feature(Feature::Close), backtest_config_of(c));
    auto report = ic_report(scores, returns);
    report.sharpe = bt.sharpe;
    report.max_drawdown = bt.max_drawdown;
    report.nav = bt.nav;
    report.buys = bt.buys;
    report.sells = bt.sells;
    report.carried_days = bt.carried_days;
    std::cout << format_report(report);
    if (!nav_path.empty()) write_file(nav_path, format_nav_csv(report, panel.dates()));
    return kOk;
}

int cmd_count_space(const std::string& level, int max_n, int k, const std::string& out) {
    const auto lvl = grammar_level_from_name(level);
    if (!lvl) throw std::invalid_argument("unknown grammar '" + level + "'");
    const auto census = GrammarCensus::from_grammar(Grammar(*lvl, k));
    const std::string csv = format_count_csv(cumulative_table(census, max_n, k));
    if (out.empty()) std::cout << csv;
    else write_file(out, csv);
    return kOk;
}

int cmd_gen_synth(const std::string& out, std::uint64_t seed, std::size_t stocks, std::size_t days,
                  const std::string& planted, double strength, int horizon) {
    const ExprTree factor = parse_or_report(planted);
    const auto m = synth_market(seed, stocks, days, factor, strength, horizon);
    save_csv(m.panel, out);
    std::cout << "planted=" << to_text(factor) << "\nplanted_ic=" << m.planted_ic
              << "\nsub_seed=" << m.sub_seed << "\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"alphaforge: grammar-guided alpha-factor discovery"};
    app.set_version_flag("--version", ALPHAFORGE_VERSION);
    app.require_subcommand(1);
    app.footer(describe_config_keys());

    Common common;

    auto* mine_cmd = app.add_subcommand("mine", "mine a factor pool");
    common.attach(mine_cmd);

    auto* refine_cmd = app.add_subcommand("refine", "refine a seed factor");
    std::string seed_expr;
    refine_cmd->add_option("--seed", seed_expr, "seed factor expression")->required();
    common.attach(refine_cmd, false);
    refine_cmd->add_option("--random-seed", common.seed, "random seed (overrides the config)");

    auto* eval_cmd = app.add_subcommand("eval", "IC metrics of one factor");
    std::string expr_text, data_path;
    int horizon = 20;
    eval_cmd->add_option("expr", expr_text, "factor expression")->required();
    eval_cmd->add_option("data", data_path, "market CSV")->required();
    eval_cmd->add_option("--horizon", horizon, "forward-return horizon")->check(CLI::PositiveNumber);

    auto* bt_cmd = app.add_subcommand("backtest", "top-k/drop-n backtest");
    std::string bt_expr, bt_pool, bt_data, nav_path;
    auto* bt_expr_opt = bt_cmd->add_option("--expr", bt_expr, "factor expression");
    auto* bt_pool_opt = bt_cmd->add_option("--pool", bt_pool, "pool file (weight<TAB>expr)");
    bt_expr_opt->excludes(bt_pool_opt);
    bt_cmd->add_option("data", bt_data, "market CSV")->required();
    bt_cmd->add_option("--nav", nav_path, "write the NAV series as CSV");
    common.attach(bt_cmd);

    auto* count_cmd = app.add_subcommand("count-space", "exact search-space sizes as CSV");
    std::string count_level = "sem", count_out;
    int max_n = 50, count_k = 10;
    count_cmd->add_option("--grammar", count_level, "syn, sem or semk");
    count_cmd->add_option("--max-n", max_n, "largest n")->check(CLI::PositiveNumber);
    count_cmd->add_option("--k", count_k, "length bound for the semk column")->check(CLI::PositiveNumber);
    count_cmd->add_option("--out", count_out, "output file (default stdout)");

    auto* synth_cmd = app.add_subcommand("gen-synth", "write a synthetic market CSV");
    std::string synth_out, planted = "Corr(close,volume,20)";
    std::uint64_t synth_seed = 0;
    std::size_t stocks = 10, days = 300;
    double strength = 0.9;
    int synth_horizon = 20;
    synth_cmd->add_option("--out", synth_out, "output CSV")->required();
    synth_cmd->add_option("--seed", synth_seed, "random seed");
    synth_cmd->add_option("--stocks", stocks, "number of stocks");
    synth_cmd->add_option("--days", days, "number of days");
    synth_cmd->add_option("--planted", planted, "planted factor expression");
    synth_cmd->add_option("--strength", strength, "signal strength in [0, 1]")->check(CLI::Range(0.0, 1.0));
    synth_cmd->add_option("--horizon", synth_horizon, "target horizon")->check(CLI::PositiveNumber);

    auto* grammar_cmd = app.add_subcommand("grammar", "grammar inspection");
    auto* dump_cmd = grammar_cmd->add_subcommand("dump", "print the rule table");
    grammar_cmd->require_subcommand(1);
    std::string dump_level = "semk";
    int dump_k = 10;
    dump_cmd->add_option("--grammar", dump_level, "syn, sem or semk");
    dump_cmd->add_option("--k", dump_k, "length bound")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kOther;
    }

    try {
        if (*mine_cmd) return cmd_mine(common);
        if (*refine_cmd) return cmd_refine(common, seed_expr);
        if (*eval_cmd) return cmd_eval(expr_text, data_path, horizon);
        if (*bt_cmd) {
            if (bt_expr.empty() && bt_pool.empty()) throw std::invalid_argument("give --expr or --pool");
            return cmd_backtest(common, bt_expr, bt_pool, bt_data, nav_path);
        }
        if (*count_cmd) return cmd_count_space(count_level, max_n, count_k, count_out);
        if (*synth_cmd)
            return cmd_gen_synth(synth_out, synth_seed, stocks, days, planted, strength, synth_horizon);
        if (*dump_cmd) {
            const auto lvl = grammar_level_from_name(dump_level);
            if (!lvl) throw std::invalid_argument("unknown grammar '" + dump_level + "'");
            std::cout << Grammar(*lvl, dump_k).dump();
            return kOk;
        }
    } catch (const ReportedParseError&) {
        return kParse;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kParse;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kData;
    } catch (const EvalError& e) {
        std::cerr << "evaluation error: " << e.what() << "\n";
        return kEval;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kOther;
    }
    return kOther;
}
