#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace alphaforge {

// Trading calendar and ticker universe shared by every matrix of a panel.
struct PanelIndex {
    std::vector<std::string> dates;
    std::vector<std::string> tickers;
};

using IndexPtr = std::shared_ptr<const PanelIndex>;

// One day's cross-section: values plus validity flags.
struct RowView {
    std::span<const double> values;
    std::span<const std::uint8_t> valid;
    std::size_t size() const noexcept { return values.size(); }
};

// Days x stocks matrix with an explicit validity mask. Valid cells always
// hold finite values; writing a non-finite value stores a missing cell.
class Series2D {
public:
    Series2D() = default;
    Series2D(std::size_t days, std::size_t stocks, IndexPtr index = nullptr);

    static Series2D filled(std::size_t days, std::size_t stocks, double value,
                           IndexPtr index = nullptr);

    std::size_t days() const noexcept { return days_; }
    std::size_t stocks() const noexcept { return stocks_; }
    std::size_t cells() const noexcept { return values_.size(); }
    const IndexPtr& index() const noexcept { return index_; }
    void set_index(IndexPtr index) { index_ = std::move(index); }

    bool valid(std::size_t day, std::size_t stock) const {
        return valid_[day * stocks_ + stock] != 0;
    }
    double value(std::size_t day, std::size_t stock) const { return values_[day * stocks_ + stock]; }
    std::optional<double> at(std::size_t day, std::size_t stock) const {
        const auto i = day * stocks_ + stock;
        if (!valid_[i]) return std::nullopt;
        return values_[i];
    }

    void set(std::size_t day, std::size_t stock, double v) { set_flat(day * stocks_ + stock, v); }
    void set_missing(std::size_t day, std::size_t stock) { set_missing_flat(day * stocks_ + stock); }

    void set_flat(std::size_t i, double v);
    void set_missing_flat(std::size_t i) {
        values_[i] = 0.0;
        valid_[i] = 0;
    }

    RowView row(std::size_t day) const {
        return {std::span<const double>(values_).subspan(day * stocks_, stocks_),
                std::span<const std::uint8_t>(valid_).subspan(day * stocks_, stocks_)};
    }

    std::span<const double> values() const noexcept { return values_; }
    std::span<const std::uint8_t> mask() const noexcept { return valid_; }
    std::span<double> values_mut() noexcept { return values_; }
    std::span<std::uint8_t> mask_mut() noexcept { return valid_; }

    std::size_t missing_count() const;

    // Rows [begin, end) as a new matrix.
    Series2D slice_days(std::size_t begin, std::size_t end) const;

    friend bool operator==(const Series2D& a, const Series2D& b);

private:
    std::size_t days_ = 0;
    std::size_t stocks_ = 0;
    std::vector<double> values_;
    std::vector<std::uint8_t> valid_;
    IndexPtr index_;
};

}  // namespace alphaforge
