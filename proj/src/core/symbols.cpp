#include "alphaforge/symbols.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

namespace alphaforge {

namespace {

using enum OpCategory;

constexpr std::array<OpInfo, kNumOps> kOps{{
    {Op::Abs, "Abs", Unary, 1, Symmetry::None, false},
    {Op::Sign, "Sign", Unary, 1, Symmetry::None, false},
    {Op::Log, "Log", Unary, 1, Symmetry::None, false},
    {Op::Add, "Add", Binary, 2, Symmetry::Full, false},
    {Op::Mul, "Mul", Binary, 2, Symmetry::Full, false},
    {Op::Greater, "Greater", Binary, 2, Symmetry::Full, false},
    {Op::Less, "Less", Binary, 2, Symmetry::Full, false},
    {Op::Div, "Div", BinaryAsym, 2, Symmetry::None, false},
    {Op::Pow, "Pow", BinaryAsym, 2, Symmetry::None, false},
    {Op::Sub, "Sub", BinaryAsym, 2, Symmetry::None, false},
    {Op::CSRank, "CSRank", Rolling, 1, Symmetry::None, false},
    {Op::Rank, "Rank", Rolling, 2, Symmetry::None, true},
    {Op::WMA, "WMA", Rolling, 2, Symmetry::None, true},
    {Op::EMA, "EMA", Rolling, 2, Symmetry::None, true},
    {Op::Ref, "Ref", Rolling, 2, Symmetry::None, true},
    {Op::Mean, "Mean", Rolling, 2, Symmetry::None, true},
    {Op::Sum, "Sum", Rolling, 2, Symmetry::None, true},
    {Op::Std, "Std", Rolling, 2, Symmetry::None, true},
    {Op::Var, "Var", Rolling, 2, Symmetry::None, true},
    {Op::Skew, "Skew", Rolling, 2, Symmetry::None, true},
    {Op::Kurt, "Kurt", Rolling, 2, Symmetry::None, true},
    {Op::Max, "Max", Rolling, 2, Symmetry::None, true},
    {Op::Min, "Min", Rolling, 2, Symmetry::None, true},
    {Op::Med, "Med", Rolling, 2, Symmetry::None, true},
    {Op::Mad, "Mad", Rolling, 2, Symmetry::None, true},
    {Op::Delta, "Delta", Rolling, 2, Symmetry::None, true},
    {Op::Cov, "Cov", PairedRolling, 3, Symmetry::FirstTwo, true},
    {Op::Corr, "Corr", PairedRolling, 3, Symmetry::FirstTwo, true},
}};

constexpr std::array<Feature, kNumFeatures> kFeatures{
    Feature::Open, Feature::High, Feature::Low, Feature::Close, Feature::Volume, Feature::Vwap};
constexpr std::array<std::string_view, kNumFeatures> kFeatureNames{
    "open", "high", "low", "close", "volume", "vwap"};
constexpr std::array<std::string_view, kNumNonTerminals> kNonTerminalNames{
    "Expr", "Num", "Constant", "Start"};

}  // namespace

const OpInfo& op_info(Op op) { return kOps[static_cast<std::size_t>(op)]; }

std::span<const OpInfo> all_ops() { return kOps; }

std::optional<Op> op_from_name(std::string_view name) {
    for (const auto& info : kOps)
        if (info.name == name) return info.op;
    return std::nullopt;
}

std::string_view feature_name(Feature f) { return kFeatureNames[static_cast<std::size_t>(f)]; }

std::optional<Feature> feature_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kFeatures.size(); ++i)
        if (kFeatureNames[i] == name) return kFeatures[i];
    return std::nullopt;
}

std::span<const Feature> all_features() { return kFeatures; }

std::string_view nonterminal_name(NonTerminal nt) {
    return kNonTerminalNames[static_cast<std::size_t>(nt)];
}

std::string format_constant(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    std::string out(buf, end);
    if (std::isfinite(v) && out.find_first_of(".eE") == std::string::npos) out += ".0";
    return out;
}

std::string symbol_text(const Symbol& s) {
    struct Visitor {
        std::string operator()(NonTerminal nt) const {
            return "<" + std::string(nonterminal_name(nt)) + ">";
        }
        std::string operator()(Op op) const { return std::string(op_info(op).name); }
        std::string operator()(Feature f) const { return std::string(feature_name(f)); }
        std::string operator()(NumLiteral n) const { return std::to_string(n.days); }
        std::string operator()(ConstLiteral c) const { return format_constant(c.value); }
    };
    return std::visit(Visitor{}, s);
}

std::size_t symbol_vocab_index(const Symbol& s) {
    constexpr std::size_t feature_base = kNumOps;
    constexpr std::size_t num_base = feature_base + kNumFeatures;
    constexpr std::size_t const_base = num_base + kWindowValues.size();
    constexpr std::size_t nt_base = const_base + kConstantValues.size();
    constexpr std::size_t other_num = nt_base + kNumNonTerminals;
    constexpr std::size_t other_const = other_num + 1;

    struct Visitor {
        std::size_t operator()(Op op) const { return static_cast<std::size_t>(op); }
        std::size_t operator()(Feature f) const { return feature_base + static_cast<std::size_t>(f); }
        std::size_t operator()(NonTerminal nt) const { return nt_base + static_cast<std::size_t>(nt); }
        std::size_t operator()(NumLiteral n) const {
            auto it = std::find(kWindowValues.begin(), kWindowValues.end(), n.days);
            return it == kWindowValues.end()
                       ? other_num
                       : num_base + static_cast<std::size_t>(it - kWindowValues.begin());
        }
        std::size_t operator()(ConstLiteral c) const {
            auto it = std::find(kConstantValues.begin(), kConstantValues.end(), c.value);
            return it == kConstantValues.end()
                       ? other_const
                       : const_base + static_cast<std::size_t>(it - kConstantValues.begin());
        }
    };
    return std::visit(Visitor{}, s);
}

}  // namespace alphaforge
