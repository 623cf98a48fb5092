#pragma once

#include <functional>

#include "advtex/diff/tape.hpp"

namespace advtex::diff {

/// Builds a scalar loss on `tape` from the leaf `x`.
using GraphBuilder = std::function<Var(Tape& tape, Var x)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  Tensor analytic;
  Tensor numeric;
};

/// Compares reverse-mode gradients against central differences
/// (f(x+eps e_i) - f(x-eps e_i)) / (2 eps). Relative error per component is
/// |a - n| / max(|a|, |n|, floor).
GradCheckResult grad_check_detailed(const GraphBuilder& f, const Tensor& x, double eps,
                                    double floor = 1e-7);
double grad_check(const GraphBuilder& f, const Tensor& x, double eps, double floor = 1e-7);

}  // namespace advtex::diff
