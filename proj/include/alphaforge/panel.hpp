#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "alphaforge/expr_tree.hpp"
#include "alphaforge/series.hpp"
#include "alphaforge/symbols.hpp"

namespace alphaforge {

// The six raw features over a shared calendar and universe.
class Panel {
public:
    Panel(IndexPtr index, std::array<Series2D, kNumFeatures> features);

    const Series2D& feature(Feature f) const { return features_[static_cast<std::size_t>(f)]; }
    const IndexPtr& index() const noexcept { return index_; }
    std::size_t days() const noexcept { return index_->dates.size(); }
    std::size_t stocks() const noexcept { return index_->tickers.size(); }
    const std::vector<std::string>& dates() const noexcept { return index_->dates; }
    const std::vector<std::string>& tickers() const noexcept { return index_->tickers; }

    Panel slice_days(std::size_t begin, std::size_t end) const;

    // Non-fatal findings from ingestion (e.g. OHLC ordering violations).
    const std::vector<std::string>& warnings() const noexcept { return warnings_; }
    void add_warning(std::string w) { warnings_.push_back(std::move(w)); }

    friend bool operator==(const Panel& a, const Panel& b);

private:
    IndexPtr index_;
    std::array<Series2D, kNumFeatures> features_;
    std::vector<std::string> warnings_;
};

inline constexpr const char* kCsvHeader = "date,ticker,open,high,low,close,volume,vwap";

// Rows are `date,ticker,open,high,low,close,volume,vwap` with ISO dates.
// Empty value fields are missing. Absent (date, ticker) rows become missing.
// Throws DataError naming the line on malformed or duplicate rows.
Panel load_csv(const std::filesystem::path& path);
Panel parse_csv(const std::string& text);

// Writes every (date, ticker) pair; missing cells are empty fields.
void save_csv(const Panel& panel, const std::filesystem::path& path);
std::string format_csv(const Panel& panel);

struct DateFilter {
    std::string start;  // inclusive, empty = unbounded
    std::string end;    // inclusive, empty = unbounded
    std::vector<std::pair<std::string, std::string>> exclude_ranges;  // inclusive
};

Panel filter_dates(const Panel& panel, const DateFilter& filter);
Series2D filter_dates(const Series2D& series, const std::vector<std::string>& dates,
                      const DateFilter& filter);

// r[t][i] = close[t + tau][i] / close[t][i] - 1; the last tau days are missing.
Series2D forward_return(const Panel& panel, int tau);

struct SyntheticMarket {
    Panel panel;
    Series2D targets;      // equals forward_return(panel, horizon) up to rounding
    double planted_ic;     // mean daily IC of the planted factor against targets
    std::uint64_t sub_seed;
};

// Seeded synthetic market whose horizon-day forward returns carry a planted
// factor: target = scale * (strength * zscore(planted) + (1 - strength) * noise).
// Prices are chained so the CSV's own forward returns reproduce the targets.
// Regenerates with a derived sub-seed until the planted IC exceeds
// strength - 0.1.
SyntheticMarket synth_market(std::uint64_t seed, std::size_t n_stocks, std::size_t n_days,
                             const ExprTree& planted, double signal_strength, int horizon = 20);

}  // namespace alphaforge
