#include "reference_eval.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

namespace alphaforge::reference {

namespace {

using Cell = std::optional<double>;
using Grid = std::vector<std::vector<Cell>>;  // [day][stock]

constexpr double kTiny = 1e-12;

Cell finite(double v) {
    if (std::isfinite(v)) return v;
    return std::nullopt;
}

Grid from_series(const Series2D& s) {
    Grid g(s.days(), std::vector<Cell>(s.stocks()));
    for (std::size_t d = 0; d < s.days(); ++d)
        for (std::size_t i = 0; i < s.stocks(); ++i) g[d][i] = s.at(d, i);
    return g;
}

Grid constant(double v, std::size_t days, std::size_t stocks) {
    return Grid(days, std::vector<Cell>(stocks, Cell(v)));
}

// The t values ending at day d (oldest first), or nothing if any is missing
// or the window starts before day 0.
std::optional<std::vector<double>> window(const Grid& g, std::size_t d, std::size_t s, long t) {
    if (t < 1 || static_cast<long>(d) + 1 < t) return std::nullopt;
    std::vector<double> w;
    for (long back = t - 1; back >= 0; --back) {
        const auto& c = g[d - static_cast<std::size_t>(back)][s];
        if (!c) return std::nullopt;
        w.push_back(*c);
    }
    return w;
}

double avg(const std::vector<double>& w) {
    double total = 0.0;
    for (double v : w) total += v;
    return total / static_cast<double>(w.size());
}

double central(const std::vector<double>& w, int power) {
    const double mu = avg(w);
    double total = 0.0;
    for (double v : w) total += std::pow(v - mu, power);
    return total;
}

Cell stat(Op op, const std::vector<double>& w) {
    const double n = static_cast<double>(w.size());
    switch (op) {
        case Op::Mean: return avg(w);
        case Op::Sum: {
            double total = 0.0;
            for (double v : w) total += v;
            return total;
        }
        case Op::Var:
            if (w.size() < 2) return std::nullopt;
            return central(w, 2) / (n - 1);
        case Op::Std:
            if (w.size() < 2) return std::nullopt;
            return std::sqrt(central(w, 2) / (n - 1));
        case Op::Skew: {
            const double sd = std::sqrt(central(w, 2) / n);
            if (sd < kTiny) return std::nullopt;
            return (central(w, 3) / n) / std::pow(sd, 3);
        }
        case Op::Kurt: {
            const double sd = std::sqrt(central(w, 2) / n);
            if (sd < kTiny) return std::nullopt;
            return (central(w, 4) / n) / std::pow(sd, 4) - 3.0;
        }
        case Op::Max: return *std::max_element(w.begin(), w.end());
        case Op::Min: return *std::min_element(w.begin(), w.end());
        case Op::Med: {
            auto sorted = w;
            std::sort(sorted.begin(), sorted.end());
            const std::size_t m = sorted.size();
            return m % 2 ? sorted[m / 2] : (sorted[m / 2 - 1] + sorted[m / 2]) / 2.0;
        }
        case Op::Mad: {
            const double mu = avg(w);
            double total = 0.0;
            for (double v : w) total += std::abs(v - mu);
            return total / n;
        }
        case Op::Rank: {
            // Average of the 1-based sorted positions holding today's value.
            auto sorted = w;
            std::sort(sorted.begin(), sorted.end());
            double pos_sum = 0.0, hits = 0.0;
            for (std::size_t i = 0; i < sorted.size(); ++i)
                if (sorted[i] == w.back()) {
                    pos_sum += static_cast<double>(i + 1);
                    hits += 1.0;
                }
            return pos_sum / hits / n;
        }
        case Op::WMA: {
            double num = 0.0, den = 0.0;
            for (std::size_t age = 0; age < w.size(); ++age) {
                const double weight = n - static_cast<double>(age);
                num += weight * w[w.size() - 1 - age];
                den += weight;
            }
            return num / den;
        }
        case Op::EMA: {
            const double a = 2.0 / (n + 1.0);
            double e = w.front();
            for (std::size_t i = 1; i < w.size(); ++i) e = a * w[i] + (1.0 - a) * e;
            return e;
        }
        default: throw std::logic_error("not a window statistic");
    }
}

long window_of(const Node& n) {
    return std::get<NumLiteral>(n.label()).days;
}

Grid eval(const Node& node, const Panel& panel);

Grid eval_op(Op op, const Node& node, const Panel& panel) {
    const std::size_t D = panel.days(), S = panel.stocks();
    Grid out(D, std::vector<Cell>(S));
    const auto& info = op_info(op);

    if (info.category == OpCategory::Unary) {
        const Grid x = eval(node.child(0), panel);
        for (std::size_t d = 0; d < D; ++d)
            for (std::size_t s = 0; s < S; ++s) {
                if (!x[d][s]) continue;
                const double v = *x[d][s];
                if (op == Op::Abs) out[d][s] = std::abs(v);
                if (op == Op::Sign) out[d][s] = v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0);
                if (op == Op::Log && v > 0) out[d][s] = finite(std::log(v));
            }
        return out;
    }

    if (info.category == OpCategory::Binary || info.category == OpCategory::BinaryAsym) {
        const Grid x = eval(node.child(0), panel);
        const Grid y = eval(node.child(1), panel);
        for (std::size_t d = 0; d < D; ++d)
            for (std::size_t s = 0; s < S; ++s) {
                if (!x[d][s] || !y[d][s]) continue;
                const double a = *x[d][s], b = *y[d][s];
                Cell r;
                switch (op) {
                    case Op::Add: r = a + b; break;
                    case Op::Sub: r = a - b; break;
                    case Op::Mul: r = a * b; break;
                    case Op::Greater: r = a > b ? a : b; break;
                    case Op::Less: r = a < b ? a : b; break;
                    case Op::Div: if (std::abs(b) >= kTiny) r = a / b; break;
                    case Op::Pow: if (a > 0) r = std::exp(b * std::log(a)); break;
                    default: break;
                }
                if (r) out[d][s] = finite(*r);
            }
        return out;
    }

    if (op == Op::CSRank) {
        const Grid x = eval(node.child(0), panel);
        for (std::size_t d = 0; d < D; ++d) {
            double count = 0.0;
            for (std::size_t s = 0; s < S; ++s) count += x[d][s] ? 1.0 : 0.0;
            for (std::size_t s = 0; s < S; ++s) {
                if (!x[d][s]) continue;
                double below = 0.0, same = 0.0;
                for (std::size_t o = 0; o < S; ++o) {
                    if (!x[d][o]) continue;
                    below += *x[d][o] < *x[d][s];
                    same += *x[d][o] == *x[d][s];
                }
                out[d][s] = (below + (same + 1.0) / 2.0) / count;
            }
        }
        return out;
    }

    if (op == Op::Ref || op == Op::Delta) {
        const Grid x = eval(node.child(0), panel);
        const long t = window_of(node.child(1));
        for (std::size_t d = 0; d < D; ++d)
            for (std::size_t s = 0; s < S; ++s) {
                const long src = static_cast<long>(d) - t;
                if (src < 0 || src >= static_cast<long>(D)) continue;
                const Cell past = x[static_cast<std::size_t>(src)][s];
                if (!past) continue;
                if (op == Op::Ref) {
                    out[d][s] = past;
                } else if (x[d][s]) {
                    out[d][s] = *x[d][s] - *past;
                }
            }
        return out;
    }

    if (info.category == OpCategory::Rolling) {
        const Grid x = eval(node.child(0), panel);
        const long t = window_of(node.child(1));
        for (std::size_t d = 0; d < D; ++d)
            for (std::size_t s = 0; s < S; ++s)
                if (auto w = window(x, d, s, t)) {
                    if (auto v = stat(op, *w)) out[d][s] = finite(*v);
                }
        return out;
    }

    // Cov / Corr
    const Grid x = eval(node.child(0), panel);
    const Grid y = eval(node.child(1), panel);
    const long t = window_of(node.child(2));
    for (std::size_t d = 0; d < D; ++d)
        for (std::size_t s = 0; s < S; ++s) {
            auto a = window(x, d, s, t);
            auto b = window(y, d, s, t);
            if (!a || !b || t < 2) continue;
            const double ma = avg(*a), mb = avg(*b), n = static_cast<double>(t);
            double cov = 0.0;
            for (long i = 0; i < t; ++i) cov += ((*a)[i] - ma) * ((*b)[i] - mb);
            cov /= n - 1;
            if (op == Op::Cov) {
                out[d][s] = finite(cov);
                continue;
            }
            const double sa = std::sqrt(central(*a, 2) / (n - 1));
            const double sb = std::sqrt(central(*b, 2) / (n - 1));
            if (sa < kTiny || sb < kTiny) continue;
            out[d][s] = finite(cov / (sa * sb));
        }
    return out;
}

Grid eval(const Node& node, const Panel& panel) {
    const auto& label = node.label();
    if (auto f = std::get_if<Feature>(&label)) return from_series(panel.feature(*f));
    if (auto c = std::get_if<ConstLiteral>(&label))
        return constant(c->value, panel.days(), panel.stocks());
    if (auto n = std::get_if<NumLiteral>(&label))
        return constant(n->days, panel.days(), panel.stocks());
    if (auto op = std::get_if<Op>(&label)) return eval_op(*op, node, panel);
    throw std::invalid_argument("partial expression");
}

}  // namespace

Series2D evaluate(const ExprTree& tree, const Panel& panel) {
    const Grid g = eval(tree.root(), panel);
    Series2D out(panel.days(), panel.stocks(), panel.index());
    for (std::size_t d = 0; d < panel.days(); ++d)
        for (std::size_t s = 0; s < panel.stocks(); ++s)
            if (g[d][s]) out.set(d, s, *g[d][s]);
    return out;
}

}  // namespace alphaforge::reference
