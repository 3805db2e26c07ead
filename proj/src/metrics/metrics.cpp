#include "alphaforge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "alphaforge/errors.hpp"
#include "alphaforge/evaluator.hpp"

namespace alphaforge {

namespace {

std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n < 2) return std::nullopt;
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    const double scale = static_cast<double>(n - 1);
    if (std::sqrt(sxx / scale) < kEpsilon || std::sqrt(syy / scale) < kEpsilon) return std::nullopt;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

void paired_finite(std::span<const double> a, std::span<const double> b, std::vector<double>& x,
                   std::vector<double>& y) {
    if (a.size() != b.size()) throw EvalError("score and return vectors differ in length");
    x.clear();
    y.clear();
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::isfinite(a[i]) && std::isfinite(b[i])) {
            x.push_back(a[i]);
            y.push_back(b[i]);
        }
    }
}

void paired_valid(const RowView& a, const RowView& b, std::vector<double>& x,
                  std::vector<double>& y) {
    if (a.size() != b.size()) throw EvalError("score and return rows differ in length");
    x.clear();
    y.clear();
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a.valid[i] && b.valid[i]) {
            x.push_back(a.values[i]);
            y.push_back(b.values[i]);
        }
    }
}

// Averaged 1-based ranks.
std::vector<double> ranks(const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j + 2);
        for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
        i = j + 1;
    }
    return r;
}

void check_shapes(const Series2D& a, const Series2D& b) {
    if (a.days() != b.days() || a.stocks() != b.stocks())
        throw EvalError("score and return matrices differ in shape");
}

template <class DailyFn>
std::vector<std::optional<double>> per_day(const Series2D& scores, const Series2D& returns,
                                           DailyFn fn) {
    check_shapes(scores, returns);
    std::vector<std::optional<double>> out(scores.days());
    const auto days = static_cast<std::ptrdiff_t>(scores.days());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t d = 0; d < days; ++d) {
        const auto day = static_cast<std::size_t>(d);
        out[day] = fn(scores.row(day), returns.row(day));
    }
    return out;
}

}  // namespace

std::optional<double> daily_ic(std::span<const double> scores, std::span<const double> returns) {
    std::vector<double> x, y;
    paired_finite(scores, returns, x, y);
    return pearson(x, y);
}

std::optional<double> daily_ic(const RowView& scores, const RowView& returns) {
    std::vector<double> x, y;
    paired_valid(scores, returns, x, y);
    return pearson(x, y);
}

std::optional<double> daily_rank_ic(std::span<const double> scores,
                                    std::span<const double> returns) {
    std::vector<double> x, y;
    paired_finite(scores, returns, x, y);
    return pearson(ranks(x), ranks(y));
}

std::optional<double> daily_rank_ic(const RowView& scores, const RowView& returns) {
    std::vector<double> x, y;
    paired_valid(scores, returns, x, y);
    return pearson(ranks(x), ranks(y));
}

std::vector<std::optional<double>> ic_series(const Series2D& scores, const Series2D& returns) {
    return per_day(scores, returns,
                   [](const RowView& a, const RowView& b) { return daily_ic(a, b); });
}

std::vector<std::optional<double>> rank_ic_series(const Series2D& scores,
                                                  const Series2D& returns) {
    return per_day(scores, returns,
                   [](const RowView& a, const RowView& b) { return daily_rank_ic(a, b); });
}

IcSummary summarize_ic(const std::vector<std::optional<double>>& daily) {
    std::vector<double> v;
    for (const auto& d : daily)
        if (d) v.push_back(*d);
    if (v.empty()) throw EvalError("no day yields a defined IC");
    IcSummary s;
    s.days = v.size();
    s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    if (v.size() >= 2) {
        double ss = 0.0;
        for (double x : v) ss += (x - s.mean) * (x - s.mean);
        const double sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
        s.ir = sd > kEpsilon ? s.mean / sd : 0.0;
    }
    return s;
}

double mean_ic(const Series2D& scores, const Series2D& returns) {
    return summarize_ic(ic_series(scores, returns)).mean;
}

double mean_ic(const ExprTree& expr, const Panel& panel, const Series2D& returns) {
    return mean_ic(evaluate(expr, panel), returns);
}

RankMetrics rank_metrics(const Series2D& scores, const Series2D& returns) {
    const auto s = summarize_ic(rank_ic_series(scores, returns));
    return {s.mean, s.ir};
}

RankMetrics rank_metrics(const ExprTree& expr, const Panel& panel, const Series2D& returns) {
    return rank_metrics(evaluate(expr, panel), returns);
}

MetricsReport ic_report(const Series2D& scores, const Series2D& returns) {
    MetricsReport r;
    const auto ic = summarize_ic(ic_series(scores, returns));
    const auto rank = summarize_ic(rank_ic_series(scores, returns));
    r.ic = ic.mean;
    r.icir = ic.ir;
    r.rank_ic = rank.mean;
    r.rank_icir = rank.ir;
    return r;
}

double max_drawdown(std::span<const double> nav) {
    double peak = 0.0, worst = 0.0;
    for (double v : nav) {
        peak = std::max(peak, v);
        if (peak > 0.0) worst = std::max(worst, (peak - v) / peak);
    }
    return worst;
}

double sharpe_ratio(std::span<const double> nav, double risk_free_annual) {
    if (nav.size() < 3) return 0.0;
    std::vector<double> r;
    for (std::size_t i = 1; i < nav.size(); ++i) r.push_back(nav[i] / nav[i - 1] - 1.0);
    const double n = static_cast<double>(r.size());
    const double mean = std::accumulate(r.begin(), r.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : r) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    if (sd < kEpsilon) return 0.0;
    return (mean - risk_free_annual / 252.0) / sd * std::sqrt(252.0);
}

MetricsReport backtest_topk(const Series2D& scores, const Series2D& prices,
                            const BacktestConfig& config) {
    if (scores.days() != prices.days() || scores.stocks() != prices.stocks())
        throw DataError("scores and prices differ in shape");
    const std::size_t days = prices.days(), stocks = prices.stocks();
    const std::size_t k = config.k, n = config.n;
    if (k < 1 || k > stocks) throw DataError("backtest k must be in [1, number of stocks]");
    if (n > k) throw DataError("backtest n must not exceed k");

    MetricsReport report;
    std::vector<double> shares(stocks, 0.0), last_price(stocks, 0.0);
    std::vector<bool> held(stocks, false);
    double cash = 1.0;

    for (std::size_t d = 0; d < days; ++d) {
        // Mark to market.
        bool carried = false;
        double value = cash;
        for (std::size_t s = 0; s < stocks; ++s) {
            if (prices.valid(d, s) && prices.value(d, s) > 0.0) last_price[s] = prices.value(d, s);
            if (!held[s]) continue;
            if (!prices.valid(d, s)) carried = true;
            value += shares[s] * last_price[s];
        }
        if (carried) report.carried_days.push_back(d);
        report.nav.push_back(value);
        report.buys.push_back(0);
        report.sells.push_back(0);
        if (d + 1 == days) break;

        // Rank today's scores, best first; ties by lower stock index.
        std::vector<std::size_t> order;
        for (std::size_t s = 0; s < stocks; ++s)
            if (scores.valid(d, s)) order.push_back(s);
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
            return scores.value(d, a) > scores.value(d, b);
        });
        std::vector<std::size_t> position(stocks, stocks);  // stocks = unranked
        for (std::size_t i = 0; i < order.size(); ++i) position[order[i]] = i;
        auto tradable = [&](std::size_t s) {
            return prices.valid(d, s) && prices.value(d, s) > 0.0;
        };

        // Sell the worst-ranked holdings that left the top k.
        std::vector<std::size_t> leaving;
        for (std::size_t s = 0; s < stocks; ++s)
            if (held[s] && position[s] >= k && tradable(s)) leaving.push_back(s);
        std::stable_sort(leaving.begin(), leaving.end(),
                         [&](auto a, auto b) { return position[a] > position[b]; });
        if (leaving.size() > n) leaving.resize(n);
        for (std::size_t s : leaving) {
            cash += shares[s] * prices.value(d, s) * (1.0 - config.fee_rate);
            shares[s] = 0.0;
            held[s] = false;
        }
        report.sells[d] = leaving.size();

        // Buy the best-ranked unheld top-k names.
        const auto holding = static_cast<std::size_t>(std::count(held.begin(), held.end(), true));
        std::vector<std::size_t> entering;
        for (std::size_t i = 0; i < std::min(k, order.size()); ++i)
            if (!held[order[i]] && tradable(order[i])) entering.push_back(order[i]);
        const std::size_t room = k > holding ? k - holding : 0;
        entering.resize(std::min({entering.size(), n, room}));
        if (!entering.empty()) {
            const double budget = value / static_cast<double>(k);
            const double cap =
                cash / (static_cast<double>(entering.size()) * (1.0 + config.fee_rate));
            const double notional = std::min(budget, cap);
            for (std::size_t s : entering) {
                if (notional <= 0.0) break;
                shares[s] = notional / prices.value(d, s);
                cash -= notional * (1.0 + config.fee_rate);
                held[s] = true;
                ++report.buys[d];
            }
        }
    }
    report.max_drawdown = max_drawdown(report.nav);
    report.sharpe = sharpe_ratio(report.nav, config.risk_free);
    return report;
}

std::string format_report(const MetricsReport& r) {
    std::ostringstream out;
    out.precision(10);
    out << "ic=" << r.ic << '\n'
        << "rank_ic=" << r.rank_ic << '\n'
        << "icir=" << r.icir << '\n'
        << "rank_icir=" << r.rank_icir << '\n';
    if (!r.nav.empty()) {
        out << "sharpe=" << r.sharpe << '\n'
            << "max_drawdown=" << r.max_drawdown << '\n'
            << "final_nav=" << r.nav.back() << '\n'
            << "carried_days=" << r.carried_days.size() << '\n';
    }
    return out.str();
}

std::string format_nav_csv(const MetricsReport& r, const std::vector<std::string>& dates) {
    std::ostringstream out;
    out.precision(17);
    out << "day,nav\n";
    for (std::size_t i = 0; i < r.nav.size(); ++i) {
        if (i < dates.size())
            out << dates[i];
        else
            out << i;
        out << ',' << r.nav[i] << '\n';
    }
    return out.str();
}

}  // namespace alphaforge
