#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <random>

#include "alphaforge/errors.hpp"
#include "alphaforge/evaluator.hpp"
#include "alphaforge/metrics.hpp"
#include "alphaforge/panel.hpp"

namespace alphaforge {

namespace {

constexpr double kReturnScale = 0.05;
constexpr int kMaxAttempts = 32;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::string synthetic_date(std::size_t day) {
    // Consecutive calendar days starting 2000-01-03; weekends are not skipped.
    static constexpr int kDaysIn[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    int y = 2000, m = 1, d = 3;
    for (std::size_t i = 0; i < day; ++i) {
        const bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
        const int len = kDaysIn[m - 1] + (m == 2 && leap ? 1 : 0);
        if (++d > len) {
            d = 1;
            if (++m > 12) {
                m = 1;
                ++y;
            }
        }
    }
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, m, d);
    return buf;
}

void check_features_only(const Node& n) {
    if (is_nonterminal(n.label())) throw EvalError("planted expression must be complete");
    for (const auto& c : n.children()) check_features_only(*c);
}

struct Generated {
    Panel panel;
    Series2D targets;
};

Generated generate(std::uint64_t sub_seed, std::size_t n_stocks, std::size_t n_days,
                   const ExprTree& planted, double strength, std::size_t h) {
    std::mt19937_64 rng(sub_seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);

    auto idx = std::make_shared<PanelIndex>();
    for (std::size_t d = 0; d < n_days; ++d) idx->dates.push_back(synthetic_date(d));
    for (std::size_t s = 0; s < n_stocks; ++s) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "S%03zu", s);
        idx->tickers.emplace_back(buf);
    }

    std::array<Series2D, kNumFeatures> f;
    for (auto& m : f) m = Series2D(n_days, n_stocks, idx);
    auto& open = f[static_cast<std::size_t>(Feature::Open)];
    auto& high = f[static_cast<std::size_t>(Feature::High)];
    auto& low = f[static_cast<std::size_t>(Feature::Low)];
    auto& close = f[static_cast<std::size_t>(Feature::Close)];
    auto& volume = f[static_cast<std::size_t>(Feature::Volume)];
    auto& vwap = f[static_cast<std::size_t>(Feature::Vwap)];

    Series2D targets(n_days, n_stocks, idx);
    std::vector<double> base(n_stocks);
    for (auto& b : base) b = 50.0 * std::exp(0.3 * normal(rng));

    // Fills the non-close features of day d once its close is known.
    auto finish_day = [&](std::size_t d) {
        for (std::size_t s = 0; s < n_stocks; ++s) {
            const double c = close.value(d, s);
            const double prev = d == 0 ? base[s] : close.value(d - 1, s);
            const double o = prev * std::exp(0.005 * normal(rng));
            const double hi = std::max(o, c) * std::exp(std::fabs(0.01 * normal(rng)));
            const double lo = std::min(o, c) * std::exp(-std::fabs(0.01 * normal(rng)));
            open.set(d, s, o);
            high.set(d, s, hi);
            low.set(d, s, lo);
            vwap.set(d, s, lo + uniform(rng) * (hi - lo));
            volume.set(d, s, std::exp(13.0 + 0.5 * normal(rng)));
        }
    };

    // The first h closes are a free random walk. Afterwards each block of h
    // days is chained from the targets of the block before it, so the
    // planted factor only ever sees days that are already generated.
    for (std::size_t d = 0; d < std::min(h, n_days); ++d) {
        for (std::size_t s = 0; s < n_stocks; ++s) {
            const double prev = d == 0 ? base[s] : close.value(d - 1, s);
            close.set(d, s, prev * std::exp(0.02 * normal(rng)));
        }
        finish_day(d);
    }
    for (std::size_t block = 0; block * h < n_days; ++block) {
        const std::size_t lo = block * h, hi = std::min(n_days, lo + h);
        const Panel prefix = Panel(idx, f).slice_days(0, hi);
        const Series2D signal = evaluate(planted, prefix);
        for (std::size_t d = lo; d < hi; ++d) {
            const auto row = signal.row(d);
            double mean = 0.0, count = 0.0;
            for (std::size_t s = 0; s < n_stocks; ++s)
                if (row.valid[s]) {
                    mean += row.values[s];
                    count += 1.0;
                }
            mean = count > 0 ? mean / count : 0.0;
            double var = 0.0;
            for (std::size_t s = 0; s < n_stocks; ++s)
                if (row.valid[s]) var += (row.values[s] - mean) * (row.values[s] - mean);
            const double sd = count > 1 ? std::sqrt(var / count) : 0.0;
            for (std::size_t s = 0; s < n_stocks; ++s) {
                const double noise = normal(rng);
                double z = 0.0;
                bool has_signal = sd > kEpsilon && row.valid[s];
                if (has_signal) z = (row.values[s] - mean) / sd;
                const double mix = has_signal ? strength * z + (1.0 - strength) * noise : noise;
                const double r = std::max(kReturnScale * mix, -0.5);
                if (d + h >= n_days) continue;
                targets.set(d, s, r);
                close.set(d + h, s, close.value(d, s) * (1.0 + r));
            }
            if (d + h < n_days) finish_day(d + h);
        }
    }
    return {Panel(idx, std::move(f)), std::move(targets)};
}

}  // namespace

SyntheticMarket synth_market(std::uint64_t seed, std::size_t n_stocks, std::size_t n_days,
                             const ExprTree& planted, double signal_strength, int horizon) {
    if (horizon < 1) throw DataError("horizon must be >= 1");
    if (n_stocks < 2 || n_days <= static_cast<std::size_t>(horizon))
        throw DataError("synthetic market needs >= 2 stocks and more days than the horizon");
    if (signal_strength < 0.0 || signal_strength > 1.0)
        throw DataError("signal strength must lie in [0, 1]");
    check_features_only(planted.root());
    const auto h = static_cast<std::size_t>(horizon);

    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        const std::uint64_t sub_seed = splitmix64(seed + static_cast<std::uint64_t>(attempt));
        auto g = generate(sub_seed, n_stocks, n_days, planted, signal_strength, h);
        const auto daily = ic_series(evaluate(planted, g.panel), g.targets);
        bool any = false;
        for (const auto& x : daily) any = any || x.has_value();
        const double ic = any ? summarize_ic(daily).mean : 0.0;
        if (any && ic > signal_strength - 0.1)
            return {std::move(g.panel), std::move(g.targets), ic, sub_seed};
    }
    throw DataError("could not plant the signal; the planted factor may be degenerate");
}

}  // namespace alphaforge
