#include "advtex/diff/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace advtex::diff {

namespace {

double evaluate(const GraphBuilder& f, const Tensor& x) {
  Tape tape;
  Var leaf = tape.leaf(x, false);
  return f(tape, leaf).item();
}

}  // namespace

GradCheckResult grad_check_detailed(const GraphBuilder& f, const Tensor& x, double eps, double floor) {
  if (!(eps > 0.0)) throw std::invalid_argument("grad_check: eps must be positive");
  GradCheckResult r;
  {
    Tape tape;
    Var leaf = tape.leaf(x, true);
    Var loss = f(tape, leaf);
    tape.backward(loss);
    r.analytic = leaf.grad();
  }
  r.numeric = Tensor(x.shape());
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + eps;
    const double fp = evaluate(f, probe);
    probe[i] = orig - eps;
    const double fm = evaluate(f, probe);
    probe[i] = orig;
    r.numeric[i] = (fp - fm) / (2.0 * eps);
    const double a = r.analytic[i], n = r.numeric[i];
    const double denom = std::max({std::abs(a), std::abs(n), floor});
    const double err = std::abs(a - n) / denom;
    if (err > r.max_rel_error) {
      r.max_rel_error = err;
      r.worst_index = i;
    }
  }
  return r;
}

double grad_check(const GraphBuilder& f, const Tensor& x, double eps, double floor) {
  return grad_check_detailed(f, x, eps, floor).max_rel_error;
}

}  // namespace advtex::diff
