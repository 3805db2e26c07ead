#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "alphaforge/expr_tree.hpp"
#include "alphaforge/panel.hpp"
#include "alphaforge/series.hpp"

namespace alphaforge {

// Pearson correlation over the pairs where both sides are finite. Undefined
// with fewer than two pairs or when either side has (near) zero variance.
std::optional<double> daily_ic(std::span<const double> scores, std::span<const double> returns);
std::optional<double> daily_ic(const RowView& scores, const RowView& returns);

// Spearman: Pearson on averaged ranks of the surviving pairs.
std::optional<double> daily_rank_ic(std::span<const double> scores,
                                    std::span<const double> returns);
std::optional<double> daily_rank_ic(const RowView& scores, const RowView& returns);

// One entry per day.
std::vector<std::optional<double>> ic_series(const Series2D& scores, const Series2D& returns);
std::vector<std::optional<double>> rank_ic_series(const Series2D& scores,
                                                  const Series2D& returns);

struct IcSummary {
    double mean = 0.0;
    double ir = 0.0;  // mean / sample std; 0 when the std vanishes
    std::size_t days = 0;
};

// Skips undefined days. Throws EvalError when no day is defined.
IcSummary summarize_ic(const std::vector<std::optional<double>>& daily);

double mean_ic(const Series2D& scores, const Series2D& returns);
double mean_ic(const ExprTree& expr, const Panel& panel, const Series2D& returns);

struct RankMetrics {
    double rank_ic = 0.0;
    double rank_icir = 0.0;
};
RankMetrics rank_metrics(const Series2D& scores, const Series2D& returns);
RankMetrics rank_metrics(const ExprTree& expr, const Panel& panel, const Series2D& returns);

struct BacktestConfig {
    std::size_t k = 60;
    std::size_t n = 5;
    double fee_rate = 0.0;
    double risk_free = 0.0;  // annual
};

struct MetricsReport {
    double ic = 0.0;
    double rank_ic = 0.0;
    double icir = 0.0;
    double rank_icir = 0.0;
    double sharpe = 0.0;
    double max_drawdown = 0.0;
    std::vector<double> nav;
    std::vector<std::size_t> buys;   // per day
    std::vector<std::size_t> sells;  // per day
    // Days on which a held position had no price and was carried at its last
    // known price.
    std::vector<std::size_t> carried_days;
};

// IC family of a score matrix against forward returns.
MetricsReport ic_report(const Series2D& scores, const Series2D& returns);

// Long-only top-k / drop-n simulation. Positions are marked at each day's
// close; on every day but the last the book is rebalanced from that day's
// scores: at most n of the worst held names outside the top k are sold, then
// at most n of the best unheld top-k names are bought, each with an equal
// NAV/k allocation capped by the available cash. Fees are charged on traded
// notional. Throws DataError on shape mismatch or k < 1, n > k, k > stocks.
MetricsReport backtest_topk(const Series2D& scores, const Series2D& prices,
                            const BacktestConfig& config);

// max_t (peak_t - nav_t) / peak_t.
double max_drawdown(std::span<const double> nav);

// mean(r - rf/252) / std(r) * sqrt(252) over simple daily returns of the NAV
// series; 0 when the std vanishes.
double sharpe_ratio(std::span<const double> nav, double risk_free_annual);

// Flat `key=value` lines.
std::string format_report(const MetricsReport& report);
// `day,nav` rows, with dates when provided.
std::string format_nav_csv(const MetricsReport& report, const std::vector<std::string>& dates = {});

}  // namespace alphaforge
