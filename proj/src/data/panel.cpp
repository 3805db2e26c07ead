#include "alphaforge/panel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "alphaforge/errors.hpp"

namespace alphaforge {

Panel::Panel(IndexPtr index, std::array<Series2D, kNumFeatures> features)
    : index_(std::move(index)), features_(std::move(features)) {
    if (!index_) throw DataError("panel needs an index");
    for (auto& f : features_) {
        if (f.days() != index_->dates.size() || f.stocks() != index_->tickers.size())
            throw DataError("feature matrix shape does not match panel index");
        f.set_index(index_);
    }
}

Panel Panel::slice_days(std::size_t begin, std::size_t end) const {
    auto idx = std::make_shared<PanelIndex>();
    idx->dates.assign(index_->dates.begin() + static_cast<std::ptrdiff_t>(begin),
                      index_->dates.begin() + static_cast<std::ptrdiff_t>(end));
    idx->tickers = index_->tickers;
    std::array<Series2D, kNumFeatures> feats;
    for (std::size_t i = 0; i < kNumFeatures; ++i) feats[i] = features_[i].slice_days(begin, end);
    return Panel(std::move(idx), std::move(feats));
}

bool operator==(const Panel& a, const Panel& b) {
    if (a.dates() != b.dates() || a.tickers() != b.tickers()) return false;
    for (std::size_t i = 0; i < kNumFeatures; ++i)
        if (!(a.features_[i] == b.features_[i])) return false;
    return true;
}

namespace {

bool iso_date(std::string_view s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
    for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
        if (s[i] < '0' || s[i] > '9') return false;
    int month = (s[5] - '0') * 10 + (s[6] - '0');
    int day = (s[8] - '0') * 10 + (s[9] - '0');
    return month >= 1 && month <= 12 && day >= 1 && day <= 31;
}

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::string format_value(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, end);
}

}  // namespace

Panel parse_csv(const std::string& text) {
    struct Row {
        std::string date, ticker;
        std::array<std::optional<double>, kNumFeatures> v;
    };
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw DataError("empty CSV: missing header");
    ++line_no;
    if (trim(line) != kCsvHeader)
        throw DataError(std::string("line 1: header must be '") + kCsvHeader + "'");

    std::vector<Row> rows;
    std::map<std::pair<std::string, std::string>, std::size_t> seen;
    while (std::getline(in, line)) {
        ++line_no;
        auto body = trim(line);
        if (body.empty()) continue;
        auto fields = split_commas(body);
        const std::string where = "line " + std::to_string(line_no) + ": ";
        if (fields.size() != 8)
            throw DataError(where + "expected 8 fields, got " + std::to_string(fields.size()));
        Row r;
        r.date = std::string(trim(fields[0]));
        r.ticker = std::string(trim(fields[1]));
        if (!iso_date(r.date)) throw DataError(where + "bad ISO-8601 date '" + r.date + "'");
        if (r.ticker.empty()) throw DataError(where + "empty ticker");
        for (std::size_t i = 0; i < kNumFeatures; ++i) {
            auto f = trim(fields[2 + i]);
            if (f.empty()) continue;
            double v = 0.0;
            auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
            if (ec != std::errc() || p != f.data() + f.size())
                throw DataError(where + "bad number '" + std::string(f) + "'");
            if (std::isfinite(v)) r.v[i] = v;
        }
        auto [it, inserted] = seen.emplace(std::make_pair(r.date, r.ticker), line_no);
        if (!inserted)
            throw DataError(where + "duplicate row for (" + r.date + ", " + r.ticker +
                            "), first seen on line " + std::to_string(it->second));
        rows.push_back(std::move(r));
    }

    auto idx = std::make_shared<PanelIndex>();
    for (const auto& r : rows) {
        idx->dates.push_back(r.date);
        idx->tickers.push_back(r.ticker);
    }
    for (auto* v : {&idx->dates, &idx->tickers}) {
        std::sort(v->begin(), v->end());
        v->erase(std::unique(v->begin(), v->end()), v->end());
    }
    const std::size_t days = idx->dates.size(), stocks = idx->tickers.size();
    std::array<Series2D, kNumFeatures> feats;
    for (auto& f : feats) f = Series2D(days, stocks);
    std::size_t ordering_violations = 0;
    for (const auto& r : rows) {
        auto d = static_cast<std::size_t>(
            std::lower_bound(idx->dates.begin(), idx->dates.end(), r.date) - idx->dates.begin());
        auto s = static_cast<std::size_t>(
            std::lower_bound(idx->tickers.begin(), idx->tickers.end(), r.ticker) -
            idx->tickers.begin());
        for (std::size_t i = 0; i < kNumFeatures; ++i)
            if (r.v[i]) feats[i].set(d, s, *r.v[i]);
        const auto& [o, h, l, c, vol, vw] = r.v;
        if (o && h && l && c && !(*h >= std::max(*o, *c) && std::min(*o, *c) >= *l))
            ++ordering_violations;
        if (vol && *vol < 0) ++ordering_violations;
    }
    Panel panel(std::move(idx), std::move(feats));
    if (ordering_violations)
        panel.add_warning(std::to_string(ordering_violations) +
                          " row(s) violate high >= max(open, close) >= min(open, close) >= low "
                          "or volume >= 0");
    return panel;
}

Panel load_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str());
}

std::string format_csv(const Panel& panel) {
    std::string out = kCsvHeader;
    out += '\n';
    for (std::size_t d = 0; d < panel.days(); ++d) {
        for (std::size_t s = 0; s < panel.stocks(); ++s) {
            out += panel.dates()[d];
            out += ',';
            out += panel.tickers()[s];
            for (Feature f : all_features()) {
                out += ',';
                if (auto v = panel.feature(f).at(d, s)) out += format_value(*v);
            }
            out += '\n';
        }
    }
    return out;
}

void save_csv(const Panel& panel, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << format_csv(panel);
}

namespace {

std::vector<std::size_t> kept_days(const std::vector<std::string>& dates, const DateFilter& f) {
    std::vector<std::size_t> keep;
    for (std::size_t d = 0; d < dates.size(); ++d) {
        const auto& day = dates[d];
        if (!f.start.empty() && day < f.start) continue;
        if (!f.end.empty() && day > f.end) continue;
        bool excluded = false;
        for (const auto& [lo, hi] : f.exclude_ranges)
            if (day >= lo && day <= hi) excluded = true;
        if (!excluded) keep.push_back(d);
    }
    return keep;
}

Series2D take_days(const Series2D& s, const std::vector<std::size_t>& keep, IndexPtr idx) {
    Series2D out(keep.size(), s.stocks(), std::move(idx));
    for (std::size_t i = 0; i < keep.size(); ++i)
        for (std::size_t j = 0; j < s.stocks(); ++j)
            if (auto v = s.at(keep[i], j)) out.set(i, j, *v);
    return out;
}

}  // namespace

Panel filter_dates(const Panel& panel, const DateFilter& filter) {
    auto keep = kept_days(panel.dates(), filter);
    auto idx = std::make_shared<PanelIndex>();
    for (auto d : keep) idx->dates.push_back(panel.dates()[d]);
    idx->tickers = panel.tickers();
    std::array<Series2D, kNumFeatures> feats;
    for (Feature f : all_features())
        feats[static_cast<std::size_t>(f)] = take_days(panel.feature(f), keep, idx);
    return Panel(std::move(idx), std::move(feats));
}

Series2D filter_dates(const Series2D& series, const std::vector<std::string>& dates,
                      const DateFilter& filter) {
    return take_days(series, kept_days(dates, filter), nullptr);
}

Series2D forward_return(const Panel& panel, int tau) {
    if (tau < 1) throw DataError("forward return horizon must be >= 1");
    const auto& close = panel.feature(Feature::Close);
    Series2D out(panel.days(), panel.stocks(), panel.index());
    const auto h = static_cast<std::size_t>(tau);
    for (std::size_t d = 0; d + h < panel.days(); ++d) {
        for (std::size_t s = 0; s < panel.stocks(); ++s) {
            auto now = close.at(d, s);
            auto later = close.at(d + h, s);
            if (now && later && *now != 0.0) out.set(d, s, *later / *now - 1.0);
        }
    }
    return out;
}

}  // namespace alphaforge
