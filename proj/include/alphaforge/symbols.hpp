#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>

namespace alphaforge {

// Operators in their canonical registry order. Rule ids and embedding rows
// follow this order, so do not reorder.
enum class Op : std::uint8_t {
    Abs, Sign, Log,
    Add, Mul, Greater, Less,
    Div, Pow, Sub,
    CSRank, Rank, WMA, EMA, Ref, Mean, Sum, Std, Var, Skew, Kurt, Max, Min, Med, Mad, Delta,
    Cov, Corr,
};
inline constexpr std::size_t kNumOps = 28;

enum class Feature : std::uint8_t { Open, High, Low, Close, Volume, Vwap };
inline constexpr std::size_t kNumFeatures = 6;

enum class NonTerminal : std::uint8_t { Expr, Num, Constant, Start };
inline constexpr std::size_t kNumNonTerminals = 4;

// Operator family as listed in the operator table. CSRank is catalogued with
// the rolling family even though it takes no window.
enum class OpCategory : std::uint8_t { Unary, Binary, BinaryAsym, Rolling, PairedRolling };

// Which children may be permuted without changing meaning.
enum class Symmetry : std::uint8_t { None, Full, FirstTwo };

struct OpInfo {
    Op op;
    std::string_view name;
    OpCategory category;
    int arity;
    Symmetry symmetry;
    bool windowed;  // last child is an integer window
};

const OpInfo& op_info(Op op);
std::span<const OpInfo> all_ops();
std::optional<Op> op_from_name(std::string_view name);

std::string_view feature_name(Feature f);
std::optional<Feature> feature_from_name(std::string_view name);
std::span<const Feature> all_features();

std::string_view nonterminal_name(NonTerminal nt);

// Literal sets used by the grammars.
inline constexpr std::array<double, 6> kConstantValues{-0.1, -0.05, -0.01, 0.01, 0.05, 0.1};
inline constexpr std::array<int, 3> kWindowValues{20, 30, 40};

struct NumLiteral {
    int days;
    friend bool operator==(const NumLiteral&, const NumLiteral&) = default;
};

struct ConstLiteral {
    double value;
    friend bool operator==(const ConstLiteral&, const ConstLiteral&) = default;
};

// A node label: nonterminal placeholder, operator, feature or literal.
using Symbol = std::variant<NonTerminal, Op, Feature, NumLiteral, ConstLiteral>;

inline bool is_nonterminal(const Symbol& s) { return std::holds_alternative<NonTerminal>(s); }
inline bool is_operator(const Symbol& s) { return std::holds_alternative<Op>(s); }

// Canonical text of a single label, e.g. "Mean", "close", "20", "-0.05", "<Expr>".
std::string symbol_text(const Symbol& s);

// Shortest round-trip decimal for a constant; integral values keep a ".0"
// suffix so they do not read back as window literals.
std::string format_constant(double v);

// Embedding-table row of a symbol. Literals outside the grammar sets share
// one "other" row per literal kind.
std::size_t symbol_vocab_index(const Symbol& s);
inline constexpr std::size_t kSymbolVocabSize =
    kNumOps + kNumFeatures + kWindowValues.size() + kConstantValues.size() + kNumNonTerminals + 2;

}  // namespace alphaforge
