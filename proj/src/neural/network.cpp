#include "alphaforge/network.hpp"

#include <cmath>
#include <stdexcept>

namespace alphaforge {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string tensor_name(std::size_t s) {
    static constexpr const char* kGates[] = {"i", "f", "o", "u"};
    if (s == slot::kEmbedding) return "embedding";
    if (s >= slot::kNaryW && s < slot::kNaryB) return std::string("nary.W_") + kGates[s - slot::kNaryW];
    if (s >= slot::kNaryB && s < slot::kNaryU) return std::string("nary.b_") + kGates[s - slot::kNaryB];
    if (s >= slot::kNaryU && s < slot::kSumW) {
        const std::size_t r = s - slot::kNaryU;
        return std::string("nary.U_") + kGates[r / kMaxPositions] + std::to_string(r % kMaxPositions);
    }
    if (s >= slot::kSumW && s < slot::kSumB) return std::string("sum.W_") + kGates[s - slot::kSumW];
    if (s >= slot::kSumB && s < slot::kSumU) return std::string("sum.b_") + kGates[s - slot::kSumB];
    if (s >= slot::kSumU && s < slot::kPolicy1) return std::string("sum.U_") + kGates[s - slot::kSumU];
    static constexpr const char* kHeads[] = {"policy.W1", "policy.b1", "policy.W2", "policy.b2",
                                             "value.W1",  "value.b1",  "value.W2",  "value.b2",
                                             "value.W3",  "value.b3"};
    if (s >= slot::kPolicy1 && s < slot::kCount) return kHeads[s - slot::kPolicy1];
    throw std::out_of_range("tensor slot");
}

Parameters Parameters::zeros_like(const Parameters& p) {
    Parameters z;
    for (const auto& t : p.tensors) z.tensors.push_back(MatrixXd::Zero(t.rows(), t.cols()));
    return z;
}

std::size_t Parameters::count() const {
    std::size_t n = 0;
    for (const auto& t : tensors) n += static_cast<std::size_t>(t.size());
    return n;
}

double Parameters::squared_norm() const {
    double s = 0.0;
    for (const auto& t : tensors) s += t.squaredNorm();
    return s;
}

bool Parameters::all_finite() const {
    for (const auto& t : tensors)
        if (!t.allFinite()) return false;
    return true;
}

void Parameters::add_scaled(const Parameters& other, double scale) {
    for (std::size_t i = 0; i < tensors.size(); ++i) tensors[i] += scale * other.tensors[i];
}

namespace {

VectorXd sigmoid(const VectorXd& a) {
    return a.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

VectorXd tanh_of(const VectorXd& a) {
    return a.unaryExpr([](double v) { return std::tanh(v); });
}

Parameters init_params(const NetworkShape& s, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(s.d_h));
    std::uniform_real_distribution<double> u(-bound, bound);
    auto rand = [&](std::size_t r, std::size_t c) {
        MatrixXd m(r, c);
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = u(rng);
        return m;
    };
    Parameters p;
    p.tensors.resize(slot::kCount);
    p.tensors[slot::kEmbedding] = rand(s.d_emb, kSymbolVocabSize);
    for (std::size_t g = 0; g < 4; ++g) {
        p.tensors[slot::kNaryW + g] = rand(s.d_h, s.d_emb);
        p.tensors[slot::kNaryB + g] = rand(s.d_h, 1);
        for (std::size_t k = 0; k < kMaxPositions; ++k)
            p.tensors[slot::kNaryU + g * kMaxPositions + k] = rand(s.d_h, s.d_h);
        p.tensors[slot::kSumW + g] = rand(s.d_h, s.d_emb);
        p.tensors[slot::kSumB + g] = rand(s.d_h, 1);
        p.tensors[slot::kSumU + g] = rand(s.d_h, s.d_h);
    }
    p.tensors[slot::kNaryB + kForget].setConstant(1.0);
    p.tensors[slot::kSumB + kForget].setConstant(1.0);
    p.tensors[slot::kPolicy1] = rand(s.policy_hidden, s.d_h);
    p.tensors[slot::kPolicy1b] = rand(s.policy_hidden, 1);
    p.tensors[slot::kPolicy2] = rand(s.actions, s.policy_hidden);
    p.tensors[slot::kPolicy2b] = rand(s.actions, 1);
    p.tensors[slot::kValue1] = rand(s.value_hidden, s.d_h);
    p.tensors[slot::kValue1b] = rand(s.value_hidden, 1);
    p.tensors[slot::kValue2] = rand(s.value_hidden, s.value_hidden);
    p.tensors[slot::kValue2b] = rand(s.value_hidden, 1);
    p.tensors[slot::kValue3] = rand(1, s.value_hidden);
    p.tensors[slot::kValue3b] = rand(1, 1);
    return p;
}

// One cell application recorded for the backward pass.
struct CellRecord {
    bool child_sum = false;
    std::size_t symbol = 0;
    VectorXd x;
    VectorXd drop;  // dropout multipliers, empty when disabled
    std::vector<std::size_t> kids;
    VectorXd i, o, u, c, h, hbar;
    std::vector<VectorXd> f;
};

class Encoder {
public:
    Encoder(const Parameters& p, std::mt19937_64* rng, double dropout)
        : p_(p), rng_(rng), dropout_(dropout) {}

    std::vector<CellRecord> cells;

    std::size_t encode(const Node& node) {
        const auto& label = node.label();
        const std::size_t sym = symbol_vocab_index(label);
        if (const auto* op = std::get_if<Op>(&label)) {
            const auto sym_kind = op_info(*op).symmetry;
            if (sym_kind == Symmetry::Full && node.children().size() == 2) {
                const std::size_t a = encode(node.child(0));
                const std::size_t b = encode(node.child(1));
                return apply(true, sym, {a, b});
            }
            if (sym_kind == Symmetry::FirstTwo && node.children().size() == 3) {
                const std::size_t a = encode(node.child(0));
                const std::size_t b = encode(node.child(1));
                const std::size_t agg = apply(true, sym, {a, b});
                const std::size_t w = encode(node.child(2));
                return apply(false, sym, {agg, w});
            }
        }
        std::vector<std::size_t> kids;
        for (const auto& c : node.children()) kids.push_back(encode(*c));
        if (kids.size() > kMaxPositions) throw std::invalid_argument("node has too many children");
        return apply(false, sym, std::move(kids));
    }

private:
    std::size_t apply(bool child_sum, std::size_t symbol, std::vector<std::size_t> kids) {
        CellRecord r;
        r.child_sum = child_sum;
        r.symbol = symbol;
        r.x = p_.tensors[slot::kEmbedding].col(static_cast<Eigen::Index>(symbol));
        if (rng_ && dropout_ > 0.0) {
            std::bernoulli_distribution keep(1.0 - dropout_);
            r.drop.resize(r.x.size());
            for (Eigen::Index j = 0; j < r.drop.size(); ++j)
                r.drop(j) = keep(*rng_) ? 1.0 / (1.0 - dropout_) : 0.0;
            r.x = r.x.cwiseProduct(r.drop);
        }
        r.kids = std::move(kids);
        const std::size_t W = child_sum ? slot::kSumW : slot::kNaryW;
        const std::size_t B = child_sum ? slot::kSumB : slot::kNaryB;
        auto pre = [&](std::size_t g) -> VectorXd {
            return p_.tensors[W + g] * r.x + p_.tensors[B + g].col(0);
        };
        VectorXd ai = pre(kInput), ao = pre(kOutput), au = pre(kUpdate);
        const VectorXd af_base = pre(kForget);
        if (child_sum) {
            r.hbar = VectorXd::Zero(ai.size());
            for (std::size_t k : r.kids) r.hbar += cells[k].h;
            if (!r.kids.empty()) r.hbar /= static_cast<double>(r.kids.size());
            ai += p_.tensors[slot::kSumU + kInput] * r.hbar;
            ao += p_.tensors[slot::kSumU + kOutput] * r.hbar;
            au += p_.tensors[slot::kSumU + kUpdate] * r.hbar;
        } else {
            for (std::size_t k = 0; k < r.kids.size(); ++k) {
                const VectorXd& hk = cells[r.kids[k]].h;
                ai += p_.tensors[slot::kNaryU + kInput * kMaxPositions + k] * hk;
                ao += p_.tensors[slot::kNaryU + kOutput * kMaxPositions + k] * hk;
                au += p_.tensors[slot::kNaryU + kUpdate * kMaxPositions + k] * hk;
            }
        }
        r.i = sigmoid(ai);
        r.o = sigmoid(ao);
        r.u = tanh_of(au);
        // Forget terms are summed on their own first so that swapping the two
        // children of a Child-Sum cell gives a bit-identical cell state.
        VectorXd carried = VectorXd::Zero(r.i.size());
        for (std::size_t k = 0; k < r.kids.size(); ++k) {
            const auto& child = cells[r.kids[k]];
            const MatrixXd& U = child_sum ? p_.tensors[slot::kSumU + kForget]
                                          : p_.tensors[slot::kNaryU + kForget * kMaxPositions + k];
            r.f.push_back(sigmoid(af_base + U * child.h));
            carried += r.f.back().cwiseProduct(child.c);
        }
        r.c = r.i.cwiseProduct(r.u) + carried;
        r.h = r.o.cwiseProduct(tanh_of(r.c));
        cells.push_back(std::move(r));
        return cells.size() - 1;
    }

    const Parameters& p_;
    std::mt19937_64* rng_;
    double dropout_;
};

void backward_tree(const Parameters& p, std::vector<CellRecord>& cells, const VectorXd& dh_root,
                   Parameters& g) {
    const std::size_t n = cells.size();
    std::vector<VectorXd> dh(n), dc(n);
    const auto d_h = dh_root.size();
    for (std::size_t j = 0; j < n; ++j) {
        dh[j] = VectorXd::Zero(d_h);
        dc[j] = VectorXd::Zero(d_h);
    }
    dh[n - 1] = dh_root;
    auto& demb = g.tensors[slot::kEmbedding];
    for (std::size_t jj = n; jj-- > 0;) {
        const CellRecord& r = cells[jj];
        const VectorXd tc = tanh_of(r.c);
        const VectorXd d_o = dh[jj].cwiseProduct(tc);
        const VectorXd dcell =
            dc[jj] + dh[jj].cwiseProduct(r.o).cwiseProduct((1.0 - tc.array().square()).matrix());
        const VectorXd da_i = dcell.cwiseProduct(r.u).cwiseProduct(
            r.i.cwiseProduct((1.0 - r.i.array()).matrix()));
        const VectorXd da_o = d_o.cwiseProduct(r.o.cwiseProduct((1.0 - r.o.array()).matrix()));
        const VectorXd da_u =
            dcell.cwiseProduct(r.i).cwiseProduct((1.0 - r.u.array().square()).matrix());

        const std::size_t W = r.child_sum ? slot::kSumW : slot::kNaryW;
        const std::size_t B = r.child_sum ? slot::kSumB : slot::kNaryB;
        VectorXd dx = VectorXd::Zero(r.x.size());
        auto gate_grad = [&](std::size_t gate, const VectorXd& da) {
            g.tensors[W + gate].noalias() += da * r.x.transpose();
            g.tensors[B + gate].col(0) += da;
            dx.noalias() += p.tensors[W + gate].transpose() * da;
        };
        gate_grad(kInput, da_i);
        gate_grad(kOutput, da_o);
        gate_grad(kUpdate, da_u);

        if (r.child_sum) {
            VectorXd dhbar = VectorXd::Zero(d_h);
            const std::size_t gates[] = {kInput, kOutput, kUpdate};
            const VectorXd* das[] = {&da_i, &da_o, &da_u};
            for (int q = 0; q < 3; ++q) {
                g.tensors[slot::kSumU + gates[q]].noalias() += *das[q] * r.hbar.transpose();
                dhbar.noalias() += p.tensors[slot::kSumU + gates[q]].transpose() * *das[q];
            }
            if (!r.kids.empty()) dhbar /= static_cast<double>(r.kids.size());
            for (std::size_t k : r.kids) dh[k] += dhbar;
        } else {
            for (std::size_t k = 0; k < r.kids.size(); ++k) {
                const VectorXd& hk = cells[r.kids[k]].h;
                const std::size_t gates[] = {kInput, kOutput, kUpdate};
                const VectorXd* das[] = {&da_i, &da_o, &da_u};
                for (int q = 0; q < 3; ++q) {
                    const std::size_t s = slot::kNaryU + gates[q] * kMaxPositions + k;
                    g.tensors[s].noalias() += *das[q] * hk.transpose();
                    dh[r.kids[k]].noalias() += p.tensors[s].transpose() * *das[q];
                }
            }
        }
        for (std::size_t k = 0; k < r.kids.size(); ++k) {
            const std::size_t kid = r.kids[k];
            const VectorXd& f = r.f[k];
            const VectorXd da_f = dcell.cwiseProduct(cells[kid].c).cwiseProduct(
                f.cwiseProduct((1.0 - f.array()).matrix()));
            dc[kid] += dcell.cwiseProduct(f);
            const std::size_t s = r.child_sum ? slot::kSumU + kForget
                                              : slot::kNaryU + kForget * kMaxPositions + k;
            g.tensors[s].noalias() += da_f * cells[kid].h.transpose();
            dh[kid].noalias() += p.tensors[s].transpose() * da_f;
            gate_grad(kForget, da_f);
        }
        if (r.drop.size() > 0) dx = dx.cwiseProduct(r.drop);
        demb.col(static_cast<Eigen::Index>(r.symbol)) += dx;
    }
}

struct HeadOutputs {
    VectorXd z1, logits, a1, a2;
    double value = 0.0;
    std::vector<double> probs;  // aligned with valid
    std::vector<double> log_probs;
};

HeadOutputs run_heads(const Parameters& p, const VectorXd& h, std::span<const int> valid) {
    HeadOutputs o;
    o.a1 = p.tensors[slot::kValue1] * h + p.tensors[slot::kValue1b].col(0);
    const VectorXd r1 = o.a1.cwiseMax(0.0);
    o.a2 = p.tensors[slot::kValue2] * r1 + p.tensors[slot::kValue2b].col(0);
    const VectorXd r2 = o.a2.cwiseMax(0.0);
    o.value = (p.tensors[slot::kValue3] * r2)(0) + p.tensors[slot::kValue3b](0, 0);
    if (valid.empty()) return o;
    o.z1 = p.tensors[slot::kPolicy1] * h + p.tensors[slot::kPolicy1b].col(0);
    o.logits = p.tensors[slot::kPolicy2] * o.z1 + p.tensors[slot::kPolicy2b].col(0);
    const auto actions = o.logits.size();
    double mx = -INFINITY;
    for (int a : valid) {
        if (a < 0 || a >= actions) throw std::out_of_range("action id outside the vocabulary");
        mx = std::max(mx, o.logits(a));
    }
    double total = 0.0;
    for (int a : valid) total += std::exp(o.logits(a) - mx);
    const double log_total = std::log(total) + mx;
    for (int a : valid) {
        o.log_probs.push_back(o.logits(a) - log_total);
        o.probs.push_back(std::exp(o.log_probs.back()));
    }
    return o;
}

}  // namespace

Network::Network(NetworkShape shape, std::uint64_t seed)
    : shape_(shape), params_(init_params(shape, seed)) {
    if (shape_.actions == 0) throw std::invalid_argument("network needs a non-empty action set");
}

Network::Network(NetworkShape shape, Parameters params)
    : shape_(shape), params_(std::move(params)) {
    const Parameters ref = init_params(shape_, 0);
    if (params_.tensors.size() != ref.tensors.size())
        throw std::invalid_argument("parameter tensor count does not match the network shape");
    for (std::size_t i = 0; i < ref.tensors.size(); ++i)
        if (params_.tensors[i].rows() != ref.tensors[i].rows() ||
            params_.tensors[i].cols() != ref.tensors[i].cols())
            throw std::invalid_argument("tensor " + tensor_name(i) + " has the wrong shape");
}

Eigen::VectorXd Network::encode(const Node& tree) const {
    Encoder enc(params_, nullptr, 0.0);
    enc.encode(tree);
    return enc.cells.back().h;
}

Prediction Network::predict(const Node& tree, std::span<const int> valid) const {
    const auto heads = run_heads(params_, encode(tree), valid);
    return {heads.probs, heads.value};
}

LossBreakdown Network::loss(std::span<const TrainingSample> batch, double l2, Parameters* grad,
                            std::mt19937_64* dropout_rng, double dropout) const {
    if (batch.empty()) throw std::invalid_argument("empty training batch");
    LossBreakdown out;
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    if (grad) *grad = Parameters::zeros_like(params_);
    const auto& p = params_;

    for (const auto& sample : batch) {
        if (sample.pi.size() != sample.valid.size())
            throw std::invalid_argument("policy target does not match the valid action list");
        Encoder enc(p, dropout_rng, dropout);
        enc.encode(sample.tree.root());
        const VectorXd h = enc.cells.back().h;
        const auto heads = run_heads(p, h, sample.valid);

        const double err = sample.z - heads.value;
        out.value += err * err * inv_b;
        double pi_total = 0.0;
        for (std::size_t j = 0; j < sample.valid.size(); ++j) {
            out.policy -= sample.pi[j] * heads.log_probs[j] * inv_b;
            pi_total += sample.pi[j];
        }
        if (!grad) continue;
        auto& g = *grad;

        // Value head.
        const double dv = -2.0 * err * inv_b;
        const VectorXd r1 = heads.a1.cwiseMax(0.0), r2 = heads.a2.cwiseMax(0.0);
        g.tensors[slot::kValue3b](0, 0) += dv;
        g.tensors[slot::kValue3].noalias() += dv * r2.transpose();
        VectorXd da2 = (p.tensors[slot::kValue3].transpose() * dv).col(0);
        for (Eigen::Index j = 0; j < da2.size(); ++j)
            if (heads.a2(j) <= 0.0) da2(j) = 0.0;
        g.tensors[slot::kValue2].noalias() += da2 * r1.transpose();
        g.tensors[slot::kValue2b].col(0) += da2;
        VectorXd da1 = p.tensors[slot::kValue2].transpose() * da2;
        for (Eigen::Index j = 0; j < da1.size(); ++j)
            if (heads.a1(j) <= 0.0) da1(j) = 0.0;
        g.tensors[slot::kValue1].noalias() += da1 * h.transpose();
        g.tensors[slot::kValue1b].col(0) += da1;
        VectorXd dh = p.tensors[slot::kValue1].transpose() * da1;

        // Policy head through the masked softmax.
        if (!sample.valid.empty()) {
            VectorXd dlogits = VectorXd::Zero(heads.logits.size());
            for (std::size_t j = 0; j < sample.valid.size(); ++j)
                dlogits(sample.valid[j]) = (heads.probs[j] * pi_total - sample.pi[j]) * inv_b;
            g.tensors[slot::kPolicy2].noalias() += dlogits * heads.z1.transpose();
            g.tensors[slot::kPolicy2b].col(0) += dlogits;
            const VectorXd dz1 = p.tensors[slot::kPolicy2].transpose() * dlogits;
            g.tensors[slot::kPolicy1].noalias() += dz1 * h.transpose();
            g.tensors[slot::kPolicy1b].col(0) += dz1;
            dh.noalias() += p.tensors[slot::kPolicy1].transpose() * dz1;
        }
        backward_tree(p, enc.cells, dh, g);
    }

    out.l2 = l2 * p.squared_norm();
    if (grad) grad->add_scaled(p, 2.0 * l2);
    return out;
}

Trainer::Trainer(Network& net, TrainerConfig config, std::uint64_t seed)
    : net_(net),
      config_(config),
      m_(Parameters::zeros_like(net.params())),
      v_(Parameters::zeros_like(net.params())),
      rng_(seed) {}

StepResult Trainer::step(std::span<const TrainingSample> batch) {
    StepResult res;
    Parameters grad;
    res.loss = net_.loss(batch, config_.l2, &grad, &rng_, config_.dropout);
    auto reject = [&] {
        res.rejected = true;
        ++rejected_;
        config_.learning_rate *= 0.5;
        return res;
    };
    if (!std::isfinite(res.loss.total()) || !grad.all_finite()) return reject();

    ++t_;
    const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    Parameters next = net_.params();
    Parameters m = m_, v = v_;
    for (std::size_t i = 0; i < next.tensors.size(); ++i) {
        m.tensors[i] = config_.beta1 * m.tensors[i] + (1.0 - config_.beta1) * grad.tensors[i];
        v.tensors[i] = config_.beta2 * v.tensors[i] +
                       (1.0 - config_.beta2) * grad.tensors[i].cwiseProduct(grad.tensors[i]);
        const auto mhat = m.tensors[i].array() / c1;
        const auto vhat = v.tensors[i].array() / c2;
        next.tensors[i].array() -= config_.learning_rate * mhat / (vhat.sqrt() + config_.epsilon);
    }
    if (!next.all_finite()) {
        --t_;
        return reject();
    }
    net_.params() = std::move(next);
    m_ = std::move(m);
    v_ = std::move(v);
    return res;
}

}  // namespace alphaforge
