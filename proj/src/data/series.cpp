#include "alphaforge/series.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace alphaforge {

Series2D::Series2D(std::size_t days, std::size_t stocks, IndexPtr index)
    : days_(days),
      stocks_(stocks),
      values_(days * stocks, 0.0),
      valid_(days * stocks, 0),
      index_(std::move(index)) {}

Series2D Series2D::filled(std::size_t days, std::size_t stocks, double value, IndexPtr index) {
    if (!std::isfinite(value)) throw std::invalid_argument("fill value must be finite");
    Series2D s(days, stocks, std::move(index));
    std::fill(s.values_.begin(), s.values_.end(), value);
    std::fill(s.valid_.begin(), s.valid_.end(), std::uint8_t{1});
    return s;
}

void Series2D::set_flat(std::size_t i, double v) {
    if (std::isfinite(v)) {
        values_[i] = v;
        valid_[i] = 1;
    } else {
        set_missing_flat(i);
    }
}

std::size_t Series2D::missing_count() const {
    return static_cast<std::size_t>(std::count(valid_.begin(), valid_.end(), std::uint8_t{0}));
}

Series2D Series2D::slice_days(std::size_t begin, std::size_t end) const {
    if (begin > end || end > days_) throw std::out_of_range("slice_days");
    IndexPtr idx;
    if (index_) {
        auto sliced = std::make_shared<PanelIndex>();
        sliced->dates.assign(index_->dates.begin() + static_cast<std::ptrdiff_t>(begin),
                             index_->dates.begin() + static_cast<std::ptrdiff_t>(end));
        sliced->tickers = index_->tickers;
        idx = std::move(sliced);
    }
    Series2D out(end - begin, stocks_, std::move(idx));
    std::copy(values_.begin() + static_cast<std::ptrdiff_t>(begin * stocks_),
              values_.begin() + static_cast<std::ptrdiff_t>(end * stocks_), out.values_.begin());
    std::copy(valid_.begin() + static_cast<std::ptrdiff_t>(begin * stocks_),
              valid_.begin() + static_cast<std::ptrdiff_t>(end * stocks_), out.valid_.begin());
    return out;
}

bool operator==(const Series2D& a, const Series2D& b) {
    if (a.days_ != b.days_ || a.stocks_ != b.stocks_ || a.valid_ != b.valid_) return false;
    for (std::size_t i = 0; i < a.values_.size(); ++i)
        if (a.valid_[i] && a.values_[i] != b.values_[i]) return false;
    return true;
}

}  // namespace alphaforge
