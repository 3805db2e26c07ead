#pragma once

#include "alphaforge/expr_tree.hpp"
#include "alphaforge/panel.hpp"
#include "alphaforge/series.hpp"

namespace alphaforge {

// Values below this magnitude count as zero for division, correlation and
// standardized-moment denominators.
inline constexpr double kEpsilon = 1e-12;

// Evaluates a complete expression over a panel. Windows are trailing and
// include the current day; any missing input inside a window, or a window
// reaching before the first day, yields a missing cell. Throws EvalError on
// partial trees and malformed window arguments.
Series2D evaluate(const ExprTree& tree, const Panel& panel);
Series2D evaluate(const Node& node, const Panel& panel);

namespace kernels {

// Abs, Sign, Log.
Series2D unary(Op op, const Series2D& x);
// Add, Mul, Greater, Less, Div, Pow, Sub.
Series2D binary(Op op, const Series2D& x, const Series2D& y);
// Per-day fractional rank in (0, 1], ties averaged.
Series2D cs_rank(const Series2D& x);
// Single-series rolling operators (Rank .. Delta). Ref and Delta accept any
// integer offset, negative values looking ahead.
Series2D rolling(Op op, const Series2D& x, int window);
// Cov, Corr.
Series2D paired(Op op, const Series2D& x, const Series2D& y, int window);

}  // namespace kernels

}  // namespace alphaforge
