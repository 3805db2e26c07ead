#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "alphaforge/errors.hpp"
#include "alphaforge/evaluator.hpp"

namespace alphaforge::kernels {

namespace {

void check_same_shape(const Series2D& x, const Series2D& y) {
    if (x.days() != y.days() || x.stocks() != y.stocks())
        throw EvalError("operand shapes differ");
}

double apply_unary(Op op, double x) {
    switch (op) {
        case Op::Abs: return std::fabs(x);
        case Op::Sign: return static_cast<double>((x > 0.0) - (x < 0.0));
        case Op::Log: return x > 0.0 ? std::log(x) : NAN;
        default: throw EvalError("not a unary operator");
    }
}

double apply_binary(Op op, double x, double y) {
    switch (op) {
        case Op::Add: return x + y;
        case Op::Mul: return x * y;
        case Op::Greater: return std::max(x, y);
        case Op::Less: return std::min(x, y);
        case Op::Sub: return x - y;
        case Op::Div: return std::fabs(y) < kEpsilon ? NAN : x / y;
        case Op::Pow: return x > 0.0 ? std::exp(y * std::log(x)) : NAN;
        default: throw EvalError("not a binary operator");
    }
}

double mean_of(std::span<const double> w) {
    double s = 0.0;
    for (double v : w) s += v;
    return s / static_cast<double>(w.size());
}

// Central moment sum of order 2..4 around the window mean.
struct Moments {
    double mean, m2, m3, m4;
};

Moments moments(std::span<const double> w) {
    Moments m{mean_of(w), 0.0, 0.0, 0.0};
    for (double v : w) {
        const double d = v - m.mean, d2 = d * d;
        m.m2 += d2;
        m.m3 += d2 * d;
        m.m4 += d2 * d2;
    }
    return m;
}

double window_stat(Op op, std::span<const double> w, std::vector<double>& scratch) {
    const std::size_t t = w.size();
    const double n = static_cast<double>(t);
    switch (op) {
        case Op::Mean: return mean_of(w);
        case Op::Sum: return std::accumulate(w.begin(), w.end(), 0.0);
        case Op::Var:
        case Op::Std: {
            if (t < 2) return NAN;
            const double var = moments(w).m2 / (n - 1.0);
            return op == Op::Var ? var : std::sqrt(var);
        }
        case Op::Skew:
        case Op::Kurt: {
            const auto m = moments(w);
            const double var = m.m2 / n;
            if (std::sqrt(var) < kEpsilon) return NAN;
            if (op == Op::Skew) return (m.m3 / n) / (var * std::sqrt(var));
            return (m.m4 / n) / (var * var) - 3.0;
        }
        case Op::Max: return *std::max_element(w.begin(), w.end());
        case Op::Min: return *std::min_element(w.begin(), w.end());
        case Op::Med: {
            scratch.assign(w.begin(), w.end());
            auto mid = scratch.begin() + static_cast<std::ptrdiff_t>(t / 2);
            std::nth_element(scratch.begin(), mid, scratch.end());
            if (t % 2 == 1) return *mid;
            const double upper = *mid;
            const double lower = *std::max_element(scratch.begin(), mid);
            return 0.5 * (lower + upper);
        }
        case Op::Mad: {
            const double mu = mean_of(w);
            double s = 0.0;
            for (double v : w) s += std::fabs(v - mu);
            return s / n;
        }
        case Op::Rank: {
            const double today = w.back();
            std::size_t less = 0, equal = 0;
            for (double v : w) {
                less += v < today;
                equal += v == today;
            }
            return (static_cast<double>(less) + 0.5 * static_cast<double>(equal + 1)) / n;
        }
        case Op::WMA: {
            double num = 0.0, den = 0.0;
            for (std::size_t j = 0; j < t; ++j) {
                const double weight = static_cast<double>(j + 1);  // oldest gets 1
                num += weight * w[j];
                den += weight;
            }
            return num / den;
        }
        case Op::EMA: {
            const double alpha = 2.0 / (n + 1.0);
            double e = w[0];
            for (std::size_t j = 1; j < t; ++j) e = alpha * w[j] + (1.0 - alpha) * e;
            return e;
        }
        default: throw EvalError("not a window statistic");
    }
}

// Copies column `s` into contiguous buffers and returns, for each day, the
// number of missing cells on days [0, d).
void load_column(const Series2D& x, std::size_t s, std::vector<double>& col,
                 std::vector<std::size_t>& missing_before) {
    const std::size_t days = x.days();
    col.resize(days);
    missing_before.assign(days + 1, 0);
    for (std::size_t d = 0; d < days; ++d) {
        col[d] = x.value(d, s);
        missing_before[d + 1] = missing_before[d] + (x.valid(d, s) ? 0 : 1);
    }
}

Series2D shift(const Series2D& x, int offset) {
    Series2D out(x.days(), x.stocks(), x.index());
    const auto days = static_cast<std::ptrdiff_t>(x.days());
    const std::size_t stocks = x.stocks();
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t d = 0; d < days; ++d) {
        const std::ptrdiff_t src = d - offset;
        if (src < 0 || src >= days) continue;
        for (std::size_t s = 0; s < stocks; ++s)
            if (x.valid(static_cast<std::size_t>(src), s))
                out.set(static_cast<std::size_t>(d), s, x.value(static_cast<std::size_t>(src), s));
    }
    return out;
}

}  // namespace

Series2D unary(Op op, const Series2D& x) {
    Series2D out(x.days(), x.stocks(), x.index());
    const auto n = static_cast<std::ptrdiff_t>(x.cells());
    const auto vals = x.values();
    const auto mask = x.mask();
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        if (mask[k]) out.set_flat(k, apply_unary(op, vals[k]));
    }
    return out;
}

Series2D binary(Op op, const Series2D& x, const Series2D& y) {
    check_same_shape(x, y);
    Series2D out(x.days(), x.stocks(), x.index() ? x.index() : y.index());
    const auto n = static_cast<std::ptrdiff_t>(x.cells());
    const auto xv = x.values(), yv = y.values();
    const auto xm = x.mask(), ym = y.mask();
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        if (xm[k] && ym[k]) out.set_flat(k, apply_binary(op, xv[k], yv[k]));
    }
    return out;
}

Series2D cs_rank(const Series2D& x) {
    Series2D out(x.days(), x.stocks(), x.index());
    const auto days = static_cast<std::ptrdiff_t>(x.days());
#pragma omp parallel
    {
        std::vector<std::size_t> order;
#pragma omp for schedule(static)
        for (std::ptrdiff_t di = 0; di < days; ++di) {
            const auto d = static_cast<std::size_t>(di);
            const auto row = x.row(d);
            order.clear();
            for (std::size_t s = 0; s < row.size(); ++s)
                if (row.valid[s]) order.push_back(s);
            if (order.empty()) continue;
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                return row.values[a] < row.values[b];
            });
            const double count = static_cast<double>(order.size());
            for (std::size_t i = 0; i < order.size();) {
                std::size_t j = i;
                while (j + 1 < order.size() && row.values[order[j + 1]] == row.values[order[i]]) ++j;
                // 1-based ranks i+1 .. j+1 share their average.
                const double rank = 0.5 * static_cast<double>(i + j + 2);
                for (std::size_t k = i; k <= j; ++k) out.set(d, order[k], rank / count);
                i = j + 1;
            }
        }
    }
    return out;
}

Series2D rolling(Op op, const Series2D& x, int window) {
    if (op == Op::Ref) return shift(x, window);
    if (op == Op::Delta) return binary(Op::Sub, x, shift(x, window));
    if (window < 1) throw EvalError("window must be a positive integer");
    Series2D out(x.days(), x.stocks(), x.index());
    const auto t = static_cast<std::size_t>(window);
    const std::size_t days = x.days();
    const auto stocks = static_cast<std::ptrdiff_t>(x.stocks());
#pragma omp parallel
    {
        std::vector<double> col, scratch;
        std::vector<std::size_t> missing_before;
#pragma omp for schedule(static)
        for (std::ptrdiff_t si = 0; si < stocks; ++si) {
            const auto s = static_cast<std::size_t>(si);
            load_column(x, s, col, missing_before);
            for (std::size_t d = t - 1; d < days; ++d) {
                const std::size_t lo = d + 1 - t;
                if (missing_before[d + 1] != missing_before[lo]) continue;
                const std::span<const double> w(col.data() + lo, t);
                out.set(d, s, window_stat(op, w, scratch));
            }
        }
    }
    return out;
}

Series2D paired(Op op, const Series2D& x, const Series2D& y, int window) {
    check_same_shape(x, y);
    if (op != Op::Cov && op != Op::Corr) throw EvalError("not a paired rolling operator");
    if (window < 1) throw EvalError("window must be a positive integer");
    Series2D out(x.days(), x.stocks(), x.index() ? x.index() : y.index());
    const auto t = static_cast<std::size_t>(window);
    if (t < 2) return out;
    const double n = static_cast<double>(t);
    const std::size_t days = x.days();
    const auto stocks = static_cast<std::ptrdiff_t>(x.stocks());
#pragma omp parallel
    {
        std::vector<double> xc, yc;
        std::vector<std::size_t> xmiss, ymiss;
#pragma omp for schedule(static)
        for (std::ptrdiff_t si = 0; si < stocks; ++si) {
            const auto s = static_cast<std::size_t>(si);
            load_column(x, s, xc, xmiss);
            load_column(y, s, yc, ymiss);
            for (std::size_t d = t - 1; d < days; ++d) {
                const std::size_t lo = d + 1 - t;
                if (xmiss[d + 1] != xmiss[lo] || ymiss[d + 1] != ymiss[lo]) continue;
                const std::span<const double> a(xc.data() + lo, t), b(yc.data() + lo, t);
                const double ma = mean_of(a), mb = mean_of(b);
                double sab = 0.0, saa = 0.0, sbb = 0.0;
                for (std::size_t j = 0; j < t; ++j) {
                    const double da = a[j] - ma, db = b[j] - mb;
                    sab += da * db;
                    saa += da * da;
                    sbb += db * db;
                }
                if (op == Op::Cov) {
                    out.set(d, s, sab / (n - 1.0));
                    continue;
                }
                const double sa = std::sqrt(saa / (n - 1.0)), sb = std::sqrt(sbb / (n - 1.0));
                if (sa < kEpsilon || sb < kEpsilon) continue;
                out.set(d, s, sab / std::sqrt(saa * sbb));
            }
        }
    }
    return out;
}

}  // namespace alphaforge::kernels
