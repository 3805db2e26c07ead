#include "alphaforge/pool.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "alphaforge/errors.hpp"
#include "alphaforge/evaluator.hpp"
#include "alphaforge/metrics.hpp"

namespace alphaforge {

Series2D zscore_by_day(const Series2D& x) {
    Series2D out(x.days(), x.stocks(), x.index());
    for (std::size_t d = 0; d < x.days(); ++d) {
        const auto row = x.row(d);
        double sum = 0.0, count = 0.0;
        for (std::size_t s = 0; s < row.size(); ++s)
            if (row.valid[s]) {
                sum += row.values[s];
                count += 1.0;
            }
        if (count == 0.0) continue;
        const double mean = sum / count;
        double ss = 0.0;
        for (std::size_t s = 0; s < row.size(); ++s)
            if (row.valid[s]) ss += (row.values[s] - mean) * (row.values[s] - mean);
        const double sd = std::sqrt(ss / count);
        for (std::size_t s = 0; s < row.size(); ++s)
            if (row.valid[s]) out.set(d, s, sd > kEpsilon ? (row.values[s] - mean) / sd : 0.0);
    }
    return out;
}

CombinationLoss::CombinationLoss(const std::vector<const Series2D*>& factors,
                                 const Series2D& targets)
    : n_(factors.size()), gram_(n_ * n_, 0.0), cross_(n_, 0.0) {
    for (const auto* f : factors)
        if (f->days() != targets.days() || f->stocks() != targets.stocks())
            throw EvalError("factor and target shapes differ");
    std::vector<double> z(n_);
    for (std::size_t d = 0; d < targets.days(); ++d) {
        bool day_used = false;
        for (std::size_t s = 0; s < targets.stocks(); ++s) {
            if (!targets.valid(d, s)) continue;
            // A missing factor value is neutral: it contributes 0 to the combination.
            for (std::size_t j = 0; j < n_; ++j)
                z[j] = factors[j]->valid(d, s) ? factors[j]->value(d, s) : 0.0;
            day_used = true;
            const double r = targets.value(d, s);
            target_sq_ += r * r;
            for (std::size_t j = 0; j < n_; ++j) {
                cross_[j] += z[j] * r;
                for (std::size_t k = 0; k < n_; ++k) gram_[j * n_ + k] += z[j] * z[k];
            }
        }
        days_ += day_used;
    }
    if (days_ == 0) throw EvalError("combination loss: every target is missing");
}

double CombinationLoss::operator()(std::span<const double> w) const {
    if (w.size() != n_) throw std::invalid_argument("weight vector size mismatch");
    double quad = 0.0, lin = 0.0;
    for (std::size_t j = 0; j < n_; ++j) {
        lin += w[j] * cross_[j];
        for (std::size_t k = 0; k < n_; ++k) quad += w[j] * gram_[j * n_ + k] * w[k];
    }
    return (quad - 2.0 * lin + target_sq_) / static_cast<double>(days_);
}

std::vector<double> CombinationLoss::gradient(std::span<const double> w) const {
    if (w.size() != n_) throw std::invalid_argument("weight vector size mismatch");
    std::vector<double> g(n_);
    for (std::size_t j = 0; j < n_; ++j) {
        double gw = 0.0;
        for (std::size_t k = 0; k < n_; ++k) gw += gram_[j * n_ + k] * w[k];
        g[j] = 2.0 * (gw - cross_[j]) / static_cast<double>(days_);
    }
    return g;
}

namespace {

std::vector<const Series2D*> member_values(const std::vector<FactorPool::Member>& members) {
    std::vector<const Series2D*> out;
    for (const auto& m : members) out.push_back(&m.z);
    return out;
}

}  // namespace

double combination_loss(const FactorPool& pool, const Series2D& targets) {
    if (pool.empty()) throw EvalError("combination loss of an empty pool");
    return CombinationLoss(member_values(pool.members()), targets)(pool.weights());
}

std::vector<double> combination_gradient(const FactorPool& pool, const Series2D& targets,
                                         std::span<const double> w) {
    if (pool.empty()) throw EvalError("combination loss of an empty pool");
    return CombinationLoss(member_values(pool.members()), targets).gradient(w);
}

FactorPool::FactorPool(PoolConfig config, std::uint64_t seed) : config_(config), rng_(seed) {
    if (config_.capacity < 1) throw std::invalid_argument("pool capacity must be >= 1");
}

FactorPool::AddResult FactorPool::add_and_optimize(const ExprTree& expr, const Panel& panel,
                                                   const Series2D& targets) {
    return add_values(expr, evaluate(expr, panel), targets);
}

FactorPool::AddResult FactorPool::add_values(const ExprTree& expr, const Series2D& raw,
                                             const Series2D& targets) {
    const auto daily = ic_series(raw, targets);
    if (std::none_of(daily.begin(), daily.end(), [](const auto& x) { return x.has_value(); }))
        throw EvalError("factor " + to_text(expr) + " has no defined daily IC");

    const auto saved_members = members_;
    const auto saved_weights = weights_;
    const double saved_ic = combined_ic_;
    try {
        members_.push_back({expr, zscore_by_day(raw)});
        std::uniform_real_distribution<double> init(0.0, kInitialWeightScale);
        weights_.push_back(init(rng_));
        optimize(targets);

        AddResult result;
        result.optimized_weights = weights_;
        if (members_.size() > config_.capacity) {
            std::size_t p = 0;
            for (std::size_t i = 1; i < weights_.size(); ++i)
                if (std::fabs(weights_[i]) < std::fabs(weights_[p])) p = i;
            result.pruned = p;
            result.kept_new = p + 1 != members_.size();
            members_.erase(members_.begin() + static_cast<std::ptrdiff_t>(p));
            weights_.erase(weights_.begin() + static_cast<std::ptrdiff_t>(p));
        }
        combined_ic_ = evaluate_ic(targets);
        result.combined_ic = combined_ic_;
        return result;
    } catch (...) {
        members_ = saved_members;
        weights_ = saved_weights;
        combined_ic_ = saved_ic;
        throw;
    }
}

void FactorPool::optimize(const Series2D& targets) {
    const CombinationLoss loss(member_values(members_), targets);
    double lr = config_.learning_rate;
    double current = loss(weights_);
    loss_trace_.assign(1, current);
    std::vector<double> trial(weights_.size());
    for (int step = 0; step < config_.gradient_steps; ++step) {
        const auto g = loss.gradient(weights_);
        for (std::size_t j = 0; j < trial.size(); ++j) trial[j] = weights_[j] - lr * g[j];
        const double next = loss(trial);
        if (next > current) {
            lr *= 0.5;
            continue;
        }
        weights_ = trial;
        current = next;
        loss_trace_.push_back(current);
    }
}

Series2D combine_zscores(const std::vector<const Series2D*>& z, std::span<const double> w) {
    if (z.empty()) throw EvalError("empty pool has no combination");
    if (z.size() != w.size()) throw std::invalid_argument("weight vector size mismatch");
    const auto& first = *z.front();
    Series2D out(first.days(), first.stocks(), first.index());
    for (std::size_t i = 0; i < out.cells(); ++i) {
        double v = 0.0;
        bool any = false;
        for (std::size_t j = 0; j < z.size(); ++j) {
            if (!z[j]->mask()[i]) continue;
            any = true;
            v += w[j] * z[j]->values()[i];
        }
        if (any) out.set_flat(i, v);
    }
    return out;
}

Series2D FactorPool::combination() const {
    return combine_zscores(member_values(members_), weights_);
}

double FactorPool::evaluate_ic(const Series2D& targets) const {
    if (members_.empty()) return 0.0;
    const auto daily = ic_series(combination(), targets);
    if (std::none_of(daily.begin(), daily.end(), [](const auto& x) { return x.has_value(); }))
        return 0.0;
    return summarize_ic(daily).mean;
}

void FactorPool::set_weights(std::vector<double> w) {
    if (w.size() != members_.size()) throw std::invalid_argument("weight vector size mismatch");
    weights_ = std::move(w);
}

std::string FactorPool::to_tsv() const {
    std::string out;
    for (std::size_t i = 0; i < members_.size(); ++i) {
        char buf[64];
        auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), weights_[i]);
        out.append(buf, end);
        out += '\t';
        out += to_text(members_[i].expr);
        out += '\n';
    }
    return out;
}

FactorPool FactorPool::from_tsv(const std::string& text, const Panel& panel,
                                const Series2D& targets, PoolConfig config, std::uint64_t seed) {
    FactorPool pool(config, seed);
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw DataError("pool line " + std::to_string(line_no) + ": expected weight<TAB>expr");
        double w = 0.0;
        auto [p, ec] = std::from_chars(line.data(), line.data() + tab, w);
        if (ec != std::errc() || p != line.data() + tab)
            throw DataError("pool line " + std::to_string(line_no) + ": bad weight");
        auto expr = parse_prefix(std::string_view(line).substr(tab + 1));
        pool.members_.push_back({expr, zscore_by_day(evaluate(expr, panel))});
        pool.weights_.push_back(w);
    }
    if (pool.members_.size() > config.capacity)
        throw DataError("pool file holds more factors than the configured capacity");
    pool.combined_ic_ = pool.evaluate_ic(targets);
    return pool;
}

}  // namespace alphaforge
