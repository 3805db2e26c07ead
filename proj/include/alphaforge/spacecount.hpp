#pragma once

#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "alphaforge/grammar.hpp"

namespace alphaforge {

using BigInt = boost::multiprecision::cpp_int;

// Symbol-set sizes the counting recurrences are written in.
struct GrammarCensus {
    unsigned unary = 0;         // |U|
    unsigned binary = 0;        // |B|
    unsigned binary_asym = 0;   // |B_asym|
    unsigned rolling = 0;       // |R|
    unsigned rolling_pair = 0;  // |R_pair|
    unsigned features = 0;      // |F|
    unsigned constants = 0;     // |C|
    unsigned windows = 0;       // |N|

    // Operator table sizes: 3, 4, 3, 16, 2, 6, 6, 3.
    static GrammarCensus paper();
    // Operators by catalogue family; literal sets from the terminal rules.
    static GrammarCensus from_grammar(const Grammar& grammar);

    unsigned alphabet() const;   // r
    unsigned terminals() const;  // T = |F| + |C| + |N|

    friend bool operator==(const GrammarCensus&, const GrammarCensus&) = default;
};

// Strings over the full alphabet: r^n and sum_{i<=n} r^i.
struct SigmaCount {
    BigInt count;
    BigInt cumulative;
};
SigmaCount count_sigma(const GrammarCensus& census, int n);

// Expressions with n nodes under the unrestricted syntax grammar:
//   h_1 = T,
//   h_n = U h_{n-1} + (Q + R) sum_{i+j=n-1} h_i h_j
//         + P sum_{i+j+k=n-1} h_i h_j h_k,  Q = |B| + |B_asym|.
// Element i of the result is h_i (element 0 is 0).
std::vector<BigInt> syn_sequence(const GrammarCensus& census, int n_max);
BigInt count_syn(const GrammarCensus& census, int n);

// Expressions with n nodes under the semantic grammar:
//   f_1 = |F|,
//   f_n = |U| f_{n-1} + |B| sum_{i+j=n-1} f_i f_j + |B||C| f_{n-2}
//         + |B_asym||C| f_{n-2} + |R||N| f_{n-2}
//         + |R_pair||N| sum_{i+j=n-2} f_i f_j.
std::vector<BigInt> sem_sequence(const GrammarCensus& census, int n_max);
BigInt count_sem(const GrammarCensus& census, int n);

struct CountRow {
    int n = 0;
    BigInt sigma;  // cumulative
    BigInt syn;
    BigInt sem;
    BigInt semk;   // sum of f_i for i <= min(n, K)
};

std::vector<CountRow> cumulative_table(const GrammarCensus& census, int n_max, int k);
// Header `n,sigma,syn,sem,semk`.
std::string format_count_csv(const std::vector<CountRow>& rows);

}  // namespace alphaforge
