#pragma once

#include "alphaforge/expr_tree.hpp"
#include "alphaforge/panel.hpp"
#include "alphaforge/series.hpp"

namespace alphaforge::reference {

// Serial cell-by-cell evaluator written independently of the kernels. Used
// as a test oracle and as the benchmark baseline.
Series2D evaluate(const ExprTree& tree, const Panel& panel);

}  // namespace alphaforge::reference
