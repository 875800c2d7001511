#pragma once

#include <cmath>
#include <vector>

#include "mplex/model/params.hpp"
#include "mplex/train/config.hpp"

namespace mplex {

/// Adaptive-moment or plain gradient descent over ModelParams, with
/// decoupled weight decay (p -= lr * wd * p applied alongside the step).
template <typename T>
class Optimizer {
public:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

  Optimizer(OptimizerKind kind, double lr, double weight_decay)
      : kind_(kind), lr_(lr), wd_(weight_decay) {}

  /// `grads` follows ModelParams::for_each order.
  void step(ModelParams<T>& params, const std::vector<const Matrix<T>*>& grads) {
    if (m_.empty()) {
      params.for_each([this](const Matrix<T>& p) {
        m_.emplace_back(p.rows(), p.cols());
        v_.emplace_back(p.rows(), p.cols());
      });
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    std::size_t k = 0;
    params.for_each([&](Matrix<T>& p) {
      const auto& g = grads.at(k)->data();
      auto& pd = p.data();
      auto& m = m_[k].data();
      auto& v = v_[k].data();
      for (std::size_t i = 0; i < pd.size(); ++i) {
        const double gi = static_cast<double>(g[i]);
        double upd;
        if (kind_ == OptimizerKind::adam) {
          const double mi = kBeta1 * static_cast<double>(m[i]) + (1.0 - kBeta1) * gi;
          const double vi = kBeta2 * static_cast<double>(v[i]) + (1.0 - kBeta2) * gi * gi;
          m[i] = static_cast<T>(mi);
          v[i] = static_cast<T>(vi);
          upd = (mi / bc1) / (std::sqrt(vi / bc2) + kEps);
        } else {
          upd = gi;
        }
        const double pv = static_cast<double>(pd[i]);
        pd[i] = static_cast<T>(pv - lr_ * (upd + wd_ * pv));
      }
      ++k;
    });
  }

  std::size_t steps() const noexcept { return t_; }

private:
  OptimizerKind kind_;
  double lr_;
  double wd_;
  std::size_t t_ = 0;
  std::vector<Matrix<T>> m_;
  std::vector<Matrix<T>> v_;
};

} // namespace mplex
