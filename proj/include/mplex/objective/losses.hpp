#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mplex/error.hpp"
#include "mplex/model/forward.hpp"
#include "mplex/model/problem.hpp"
#include "mplex/tensor/tape.hpp"

namespace mplex {

/// Probabilities are clamped to [eps, 1 - eps] before any log.
inline constexpr double kProbEps = 1e-7;

/// Weights of the six objective terms. The cluster coefficient is split into
/// a Laplacian-smoothing part and an orthogonality part.
struct Coefficients {
  double alpha = 1.0;
  double beta = 0.001;
  double gamma = 0.1;
  double zeta_learn = 0.01;
  double zeta_orth = 0.01;
  double theta = 0.01;

  void validate() const {
    const double all[] = {alpha, beta, gamma, zeta_learn, zeta_orth, theta};
    const char* names[] = {"alpha", "beta", "gamma", "zeta_learn", "zeta_orth", "theta"};
    for (std::size_t i = 0; i < 6; ++i) {
      if (!(all[i] >= 0.0) || !std::isfinite(all[i])) {
        throw ParameterError(std::string("coefficient ") + names[i] + " must be finite and >= 0");
      }
    }
  }

  bool operator==(const Coefficients&) const = default;
};

/// Term values of one objective evaluation.
struct LossBreakdown {
  double mi = 0, cross = 0, cons = 0, clus_learn = 0, clus_orth = 0, sup = 0;
  double total = 0;
  Coefficients coefficients;

  /// Name of the first non-finite term, or empty.
  std::string first_non_finite() const {
    const std::pair<const char*, double> terms[] = {{"mi", mi},           {"cross", cross},
                                                    {"cons", cons},       {"clus_learn", clus_learn},
                                                    {"clus_orth", clus_orth}, {"sup", sup},
                                                    {"total", total}};
    for (const auto& [name, v] : terms) {
      if (!std::isfinite(v)) return name;
    }
    return {};
  }
};

/// Negative pairing: the j-th negative of node i (j = 1..count) is the
/// corrupted embedding at (i + j * stride) mod |V|.
struct NegativeSampling {
  std::size_t count = 1;
  std::size_t stride = 0;

  std::vector<std::size_t> indices(std::size_t j, std::size_t n) const {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = (i + j * stride) % n;
    return idx;
  }
};

template <typename T>
ad::Var<T> clamped_log(ad::Var<T> p) {
  return ad::log(ad::clamp(p, static_cast<T>(kProbEps), static_cast<T>(1.0 - kProbEps)));
}

/// Negated NCE objective averaged over |R| |V| (1 + N) pairs.
template <typename T>
ad::Var<T> loss_infomax(std::span<const ad::Var<T>> local, std::span<const ad::Var<T>> corrupted,
                        std::span<const ad::Var<T>> summaries, ad::Var<T> bilinear,
                        const NegativeSampling& neg) {
  if (neg.count < 1) {
    throw ParameterError("InfoMax needs at least one negative per node");
  }
  const std::size_t nrel = local.size();
  const std::size_t n = local.front().rows();
  ad::Var<T> acc;
  bool first = true;
  auto accumulate = [&](ad::Var<T> v) {
    acc = first ? v : ad::add(acc, v);
    first = false;
  };
  for (std::size_t r = 0; r < nrel; ++r) {
    ad::Var<T> pos = ad::sigmoid(bilinear_logits(local[r], summaries[r], bilinear));
    accumulate(ad::reduce_sum(clamped_log(pos)));
    for (std::size_t j = 1; j <= neg.count; ++j) {
      const auto idx = neg.indices(j, n);
      ad::Var<T> negatives = ad::row_gather(corrupted[r], std::span<const std::size_t>(idx));
      ad::Var<T> d = ad::sigmoid(bilinear_logits(negatives, summaries[r], bilinear));
      accumulate(ad::reduce_sum(clamped_log(ad::one_minus(d))));
    }
  }
  const double pairs = static_cast<double>(nrel * n * (1 + neg.count));
  return ad::scale(acc, static_cast<T>(-1.0 / pairs));
}

/// mean over relations of ||H^T H - I||_F^2
template <typename T>
ad::Var<T> loss_orthogonal(std::span<const ad::Var<T>> assignments) {
  ad::Tape<T>& tape = assignments.front().tape();
  ad::Var<T> acc;
  for (std::size_t r = 0; r < assignments.size(); ++r) {
    const std::size_t k = assignments[r].cols();
    ad::Var<T> gram = ad::matmul(ad::transpose(assignments[r]), assignments[r]);
    ad::Var<T> term = ad::frobenius_sq(ad::sub(gram, tape.constant(Matrix<T>::identity(k))));
    acc = r == 0 ? term : ad::add(acc, term);
  }
  return ad::scale(acc, static_cast<T>(1.0 / static_cast<double>(assignments.size())));
}

/// mean over relations of Tr(H^T L H)
template <typename T>
ad::Var<T> loss_cluster_learn(std::span<const ad::Var<T>> assignments,
                              const CsrMatrix<T>& laplacian) {
  ad::Var<T> acc;
  for (std::size_t r = 0; r < assignments.size(); ++r) {
    ad::Var<T> term =
        ad::reduce_sum(ad::hadamard(assignments[r], ad::spmm(laplacian, assignments[r])));
    acc = r == 0 ? term : ad::add(acc, term);
  }
  return ad::scale(acc, static_cast<T>(1.0 / static_cast<double>(assignments.size())));
}

/// sum over stored pairs of ||O U_r - A U_s||_F^2, over the masked row count.
template <typename T>
ad::Var<T> loss_cross(std::span<const ad::Var<T>> local, const std::vector<CrossTerm<T>>& cross,
                      std::size_t masked_rows) {
  ad::Tape<T>& tape = local.front().tape();
  if (cross.empty() || masked_rows == 0) {
    return tape.constant(Matrix<T>(1, 1));
  }
  ad::Var<T> acc;
  for (std::size_t c = 0; c < cross.size(); ++c) {
    const auto& ct = cross[c];
    ad::Var<T> diff = ad::sub(ad::spmm(ct.mask, local[ct.r]), ad::spmm(ct.adjacency, local[ct.s]));
    ad::Var<T> term = ad::frobenius_sq(diff);
    acc = c == 0 ? term : ad::add(acc, term);
  }
  return ad::scale(acc, static_cast<T>(1.0 / static_cast<double>(masked_rows)));
}

/// (||Z - U||^2 - ||Z - U~||^2) / |V|
template <typename T>
ad::Var<T> loss_consensus(ad::Var<T> consensus, ad::Var<T> aggregated,
                          ad::Var<T> aggregated_corrupted) {
  ad::Var<T> pull = ad::frobenius_sq(ad::sub(consensus, aggregated));
  ad::Var<T> push = ad::frobenius_sq(ad::sub(consensus, aggregated_corrupted));
  return ad::scale(ad::sub(pull, push), static_cast<T>(1.0 / static_cast<double>(consensus.rows())));
}

/// Cross-entropy over train nodes; mean binary cross-entropy per label bit
/// in multi-label mode.
template <typename T>
ad::Var<T> loss_supervised(ad::Var<T> predictions, const Matrix<T>& labels,
                           std::span<const std::size_t> train, bool multi_label) {
  if (train.empty()) {
    throw ParameterError("supervised loss needs a nonempty train set");
  }
  ad::Tape<T>& tape = predictions.tape();
  ad::Var<T> p = ad::row_gather(predictions, train);
  Matrix<T> y(train.size(), labels.cols());
  for (std::size_t k = 0; k < train.size(); ++k) {
    std::copy(labels.row(train[k]).begin(), labels.row(train[k]).end(), y.row(k).begin());
  }
  ad::Var<T> yv = tape.constant(y);
  ad::Var<T> ll = ad::reduce_sum(ad::hadamard(yv, clamped_log(p)));
  if (!multi_label) {
    return ad::scale(ll, static_cast<T>(-1.0 / static_cast<double>(train.size())));
  }
  Matrix<T> ny = y;
  for (T& v : ny.data()) v = T(1) - v;
  ad::Var<T> nll = ad::reduce_sum(ad::hadamard(tape.constant(ny), clamped_log(ad::one_minus(p))));
  const double bits = static_cast<double>(train.size() * labels.cols());
  return ad::scale(ad::add(ll, nll), static_cast<T>(-1.0 / bits));
}

template <typename T>
struct Objective {
  LossBreakdown breakdown;
  ad::Var<T> total;
};

/// Weighted sum of the terms. A zero coefficient drops its term from the
/// recorded total, so it contributes no gradient; its value is still logged.
template <typename T>
Objective<T> total_loss(ad::Var<T> mi, ad::Var<T> cross, ad::Var<T> cons, ad::Var<T> clus_learn,
                        ad::Var<T> clus_orth, ad::Var<T> sup, const Coefficients& c) {
  c.validate();
  Objective<T> out;
  out.breakdown.coefficients = c;
  out.breakdown.mi = static_cast<double>(mi.scalar());
  out.breakdown.cross = static_cast<double>(cross.scalar());
  out.breakdown.cons = static_cast<double>(cons.scalar());
  out.breakdown.clus_learn = static_cast<double>(clus_learn.scalar());
  out.breakdown.clus_orth = static_cast<double>(clus_orth.scalar());
  out.breakdown.sup = static_cast<double>(sup.scalar());

  ad::Tape<T>& tape = mi.tape();
  ad::Var<T> total = tape.constant(Matrix<T>(1, 1));
  const std::pair<double, ad::Var<T>> terms[] = {{c.alpha, mi},           {c.beta, cross},
                                                 {c.gamma, cons},         {c.zeta_learn, clus_learn},
                                                 {c.zeta_orth, clus_orth}, {c.theta, sup}};
  for (const auto& [w, v] : terms) {
    if (w != 0.0) total = ad::add(total, ad::scale(v, static_cast<T>(w)));
  }
  out.total = total;
  out.breakdown.total = static_cast<double>(total.scalar());
  return out;
}

/// Records the full objective for one step on the forward state. A
/// non-finite term raises NumericError naming that term.
template <typename T>
Objective<T> compute_objective(const Problem<T>& prob, const ParamVars<T>& pv,
                               const ForwardState<T>& st, const NegativeSampling& neg,
                               const Coefficients& c) {
  std::span<const ad::Var<T>> local(st.local), corrupted(st.corrupted), summaries(st.summaries),
      assignments(st.assignments);
  auto term = [](const char* name, auto&& fn) {
    try {
      return fn();
    } catch (const NumericError& e) {
      throw NumericError(std::string("non-finite loss term '") + name + "': " + e.what());
    }
  };
  auto mi = term("mi", [&] { return loss_infomax(local, corrupted, summaries, pv.bilinear, neg); });
  auto cross = term("cross", [&] { return loss_cross(local, prob.cross, prob.cross_rows); });
  auto cons = term("cons", [&] {
    return loss_consensus(pv.consensus, st.attention.aggregated, st.aggregated_corrupted);
  });
  auto learn = term("clus_learn", [&] { return loss_cluster_learn(assignments, prob.label_laplacian); });
  auto orth = term("clus_orth", [&] { return loss_orthogonal(assignments); });
  auto sup = term("sup", [&] {
    return loss_supervised(st.predictions, prob.labels, std::span<const std::size_t>(prob.train),
                           prob.multi_label);
  });
  return term("total", [&] { return total_loss(mi, cross, cons, learn, orth, sup, c); });
}

} // namespace mplex
