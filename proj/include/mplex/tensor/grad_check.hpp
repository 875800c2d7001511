#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "mplex/tensor/tape.hpp"

namespace mplex::ad {

/// Scalar-valued function recorded on a fresh tape from the given inputs.
using ScalarFn = std::function<Var<double>(Tape<double>&, std::span<const Var<double>>)>;

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::vector<Matrix<double>> analytic;
  std::vector<Matrix<double>> numeric;
};

inline double evaluate(const ScalarFn& f, const std::vector<Matrix<double>>& inputs) {
  Tape<double> tape;
  std::vector<Var<double>> vars;
  vars.reserve(inputs.size());
  for (const auto& m : inputs) vars.push_back(tape.constant(m));
  return f(tape, vars).scalar();
}

inline std::vector<Matrix<double>> analytic_gradients(const ScalarFn& f,
                                                      const std::vector<Matrix<double>>& inputs) {
  Tape<double> tape;
  std::vector<Var<double>> vars;
  vars.reserve(inputs.size());
  for (const auto& m : inputs) vars.push_back(tape.variable(m));
  Var<double> out = f(tape, vars);
  tape.backward(out);
  std::vector<Matrix<double>> grads;
  grads.reserve(vars.size());
  for (const auto& v : vars) grads.push_back(v.grad());
  return grads;
}

/// Compares reverse-mode gradients against central differences.
///
/// Error per entry is |analytic - fd| / max(1, |analytic|, |fd|); the
/// result holds the maximum over all input entries.
inline GradCheckResult grad_check(const ScalarFn& f, std::vector<Matrix<double>> inputs,
                                  double step = 1e-6) {
  GradCheckResult res;
  res.analytic = analytic_gradients(f, inputs);
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    Matrix<double> fd(inputs[k].rows(), inputs[k].cols());
    for (std::size_t e = 0; e < inputs[k].size(); ++e) {
      double& x = inputs[k].data()[e];
      const double saved = x;
      x = saved + step;
      const double fp = evaluate(f, inputs);
      x = saved - step;
      const double fm = evaluate(f, inputs);
      x = saved;
      fd.data()[e] = (fp - fm) / (2.0 * step);
      const double a = res.analytic[k].data()[e];
      const double err =
          std::abs(a - fd.data()[e]) / std::max({1.0, std::abs(a), std::abs(fd.data()[e])});
      res.max_relative_error = std::max(res.max_relative_error, err);
    }
    res.numeric.push_back(std::move(fd));
  }
  return res;
}

} // namespace mplex::ad
