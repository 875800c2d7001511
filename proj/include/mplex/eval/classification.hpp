#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mplex/error.hpp"
#include "mplex/tensor/matrix.hpp"

namespace mplex {

/// Index of the row maximum; ties go to the lowest index.
template <typename T>
std::size_t argmax_row(std::span<const T> row) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < row.size(); ++j) {
    if (row[j] > row[best]) best = j;
  }
  return best;
}

/// Predicted 0/1 label matrix: argmax for single-label, > 0.5 for
/// multi-label.
inline DenseMatrix predicted_labels(const DenseMatrix& probs, bool multi_label) {
  DenseMatrix out(probs.rows(), probs.cols());
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    if (multi_label) {
      for (std::size_t q = 0; q < probs.cols(); ++q) out(i, q) = probs(i, q) > 0.5 ? 1.0 : 0.0;
    } else if (probs.cols() > 0) {
      out(i, argmax_row(probs.row(i))) = 1.0;
    }
  }
  return out;
}

struct F1Scores {
  double micro = 0.0; ///< percent
  double macro = 0.0; ///< percent
};

/// Micro- and macro-averaged F1 (in percent) over `nodes`.
///
/// Micro pools true/false positives and false negatives across classes.
/// Macro averages per-class F1 over all classes; a class with nothing
/// predicted and no support scores 0.
inline F1Scores f1_scores(const DenseMatrix& probs, const DenseMatrix& truth,
                          std::span<const std::size_t> nodes, bool multi_label) {
  if (nodes.empty()) {
    throw ValidationError("F1 needs at least one evaluation node");
  }
  if (!probs.same_shape(truth)) {
    throw DimensionError("prediction shape " + probs.shape() + " differs from labels " + truth.shape());
  }
  const std::size_t q = truth.cols();
  std::vector<double> tp(q, 0), fp(q, 0), fn(q, 0);
  for (std::size_t i : nodes) {
    std::vector<char> pred(q, 0);
    if (multi_label) {
      for (std::size_t c = 0; c < q; ++c) pred[c] = probs(i, c) > 0.5;
    } else {
      pred[argmax_row(probs.row(i))] = 1;
    }
    bool any = false;
    for (std::size_t c = 0; c < q; ++c) {
      const bool t = truth(i, c) != 0.0;
      any = any || t;
      if (pred[c] && t) tp[c] += 1;
      if (pred[c] && !t) fp[c] += 1;
      if (!pred[c] && t) fn[c] += 1;
    }
    if (!any) {
      throw ValidationError("evaluation node " + std::to_string(i) + " has no ground-truth label");
    }
  }
  double TP = 0, FP = 0, FN = 0, macro = 0;
  for (std::size_t c = 0; c < q; ++c) {
    TP += tp[c];
    FP += fp[c];
    FN += fn[c];
    const double den = 2 * tp[c] + fp[c] + fn[c];
    macro += den > 0 ? 2 * tp[c] / den : 0.0;
  }
  F1Scores s;
  const double den = 2 * TP + FP + FN;
  s.micro = den > 0 ? 100.0 * 2 * TP / den : 0.0;
  s.macro = q > 0 ? 100.0 * macro / static_cast<double>(q) : 0.0;
  return s;
}

} // namespace mplex
