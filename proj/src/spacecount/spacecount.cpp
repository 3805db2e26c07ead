#include <set>
#include <sstream>
#include <stdexcept>

#include "alphaforge/spacecount.hpp"

namespace alphaforge {

GrammarCensus GrammarCensus::paper() { return {3, 4, 3, 16, 2, 6, 6, 3}; }

GrammarCensus GrammarCensus::from_grammar(const Grammar& grammar) {
    std::set<Op> ops;
    GrammarCensus c;
    for (const auto& rule : grammar.rules()) {
        const auto& head = rule.rhs[0];
        if (const auto* op = std::get_if<Op>(&head)) {
            ops.insert(*op);
        } else if (std::holds_alternative<Feature>(head)) {
            ++c.features;
        } else if (std::holds_alternative<ConstLiteral>(head)) {
            ++c.constants;
        } else if (std::holds_alternative<NumLiteral>(head)) {
            ++c.windows;
        }
    }
    for (Op op : ops) {
        switch (op_info(op).category) {
            case OpCategory::Unary: ++c.unary; break;
            case OpCategory::Binary: ++c.binary; break;
            case OpCategory::BinaryAsym: ++c.binary_asym; break;
            case OpCategory::Rolling: ++c.rolling; break;
            case OpCategory::PairedRolling: ++c.rolling_pair; break;
        }
    }
    return c;
}

unsigned GrammarCensus::alphabet() const {
    return features + constants + windows + unary + binary + binary_asym + rolling + rolling_pair;
}

unsigned GrammarCensus::terminals() const { return features + constants + windows; }

SigmaCount count_sigma(const GrammarCensus& census, int n) {
    if (n < 1) throw std::invalid_argument("n must be at least 1");
    SigmaCount out;
    BigInt power = 1;
    for (int i = 1; i <= n; ++i) {
        power *= census.alphabet();
        out.cumulative += power;
    }
    out.count = power;
    return out;
}

namespace {

// sum_{i+j=m, i,j>=1} a_i a_j
BigInt convolve2(const std::vector<BigInt>& a, int m) {
    BigInt s = 0;
    for (int i = 1; i <= m - 1; ++i) s += a[static_cast<std::size_t>(i)] * a[static_cast<std::size_t>(m - i)];
    return s;
}

void check(int n_max) {
    if (n_max < 1) throw std::invalid_argument("n must be at least 1");
}

}  // namespace

std::vector<BigInt> syn_sequence(const GrammarCensus& census, int n_max) {
    check(n_max);
    const auto n_sz = static_cast<std::size_t>(n_max);
    std::vector<BigInt> h(n_sz + 1, 0);
    // pair[m] = sum_{i+j=m} h_i h_j, kept so the triple sum is a single pass.
    std::vector<BigInt> pair(n_sz + 1, 0);
    const unsigned q = census.binary + census.binary_asym;
    h[1] = census.terminals();
    for (int n = 2; n <= n_max; ++n) {
        const auto un = static_cast<std::size_t>(n);
        pair[un - 1] = convolve2(h, n - 1);
        BigInt triple = 0;
        for (int i = 1; i <= n - 3; ++i)
            triple += h[static_cast<std::size_t>(i)] * pair[static_cast<std::size_t>(n - 1 - i)];
        h[un] = census.unary * h[un - 1] + (q + census.rolling) * pair[un - 1] +
                census.rolling_pair * triple;
    }
    return h;
}

BigInt count_syn(const GrammarCensus& census, int n) {
    return syn_sequence(census, n)[static_cast<std::size_t>(n)];
}

std::vector<BigInt> sem_sequence(const GrammarCensus& census, int n_max) {
    check(n_max);
    const auto n_sz = static_cast<std::size_t>(n_max);
    std::vector<BigInt> f(n_sz + 1, 0);
    f[1] = census.features;
    const BigInt c = census.constants;
    const BigInt w = census.windows;
    for (int n = 2; n <= n_max; ++n) {
        const auto un = static_cast<std::size_t>(n);
        BigInt v = census.unary * f[un - 1] + census.binary * convolve2(f, n - 1);
        if (n >= 3) {
            v += census.binary * c * f[un - 2];
            v += census.binary_asym * c * f[un - 2];
            v += census.rolling * w * f[un - 2];
            v += census.rolling_pair * w * convolve2(f, n - 2);
        }
        f[un] = v;
    }
    return f;
}

BigInt count_sem(const GrammarCensus& census, int n) {
    return sem_sequence(census, n)[static_cast<std::size_t>(n)];
}

std::vector<CountRow> cumulative_table(const GrammarCensus& census, int n_max, int k) {
    check(n_max);
    const auto h = syn_sequence(census, n_max);
    const auto f = sem_sequence(census, n_max);
    std::vector<CountRow> rows;
    BigInt power = 1, sigma = 0, syn = 0, sem = 0, semk = 0;
    for (int n = 1; n <= n_max; ++n) {
        const auto un = static_cast<std::size_t>(n);
        power *= census.alphabet();
        sigma += power;
        syn += h[un];
        sem += f[un];
        if (n <= k) semk += f[un];
        rows.push_back({n, sigma, syn, sem, semk});
    }
    return rows;
}

std::string format_count_csv(const std::vector<CountRow>& rows) {
    std::ostringstream out;
    out << "n,sigma,syn,sem,semk\n";
    for (const auto& r : rows)
        out << r.n << ',' << r.sigma << ',' << r.syn << ',' << r.sem << ',' << r.semk << '\n';
    return out.str();
}

}  // namespace alphaforge
