#pragma once

#include <algorithm>
#include <cmath>
#include <tuple>
#include <span>
#include <vector>

#include "mplex/error.hpp"
#include "mplex/graph/multiplex_graph.hpp"
#include "mplex/tensor/matrix.hpp"

namespace mplex {

/// max(A, A^T) entrywise.
inline SparseMatrix symmetrize_max(const SparseMatrix& a) {
  if (a.rows() != a.cols()) {
    throw DimensionError("symmetrize of non-square " + DenseMatrix::shape_string(a.rows(), a.cols()));
  }
  std::vector<Triplet<double>> t;
  t.reserve(2 * a.nnz());
  for (const auto& e : a.triplets()) {
    t.push_back(e);
    t.push_back({e.col, e.row, e.weight});
  }
  std::sort(t.begin(), t.end(), [](const auto& x, const auto& y) {
    return std::tie(x.row, x.col, x.weight) < std::tie(y.row, y.col, y.weight);
  });
  // Keep the largest weight of each (row, col) run.
  std::vector<Triplet<double>> merged;
  merged.reserve(t.size());
  for (const auto& e : t) {
    if (!merged.empty() && merged.back().row == e.row && merged.back().col == e.col) {
      merged.back().weight = e.weight;
    } else {
      merged.push_back(e);
    }
  }
  return SparseMatrix::from_triplets(a.rows(), a.cols(), std::move(merged));
}

/// D^-1/2 (A + eps I) D^-1/2 with D the degree matrix of A + eps I.
///
/// Directed inputs are symmetrized with max(A, A^T) first.
inline SparseMatrix propagation_kernel(const SparseMatrix& a, double epsilon) {
  if (!(epsilon > 0.0)) {
    throw ParameterError("propagation kernel epsilon must be > 0, got " + std::to_string(epsilon));
  }
  if (!a.is_nonnegative()) {
    throw ValidationError("propagation kernel input has negative weights");
  }
  const SparseMatrix s = symmetrize_max(a);
  const std::size_t n = s.rows();
  std::vector<Triplet<double>> t;
  t.reserve(s.nnz() + n);
  for (const auto& e : s.triplets()) t.push_back(e);
  for (std::size_t i = 0; i < n; ++i) t.push_back({i, i, epsilon});
  const SparseMatrix tilde = SparseMatrix::from_triplets(n, n, std::move(t));

  std::vector<double> inv_sqrt_deg(n);
  for (std::size_t i = 0; i < n; ++i) {
    double d = 0.0;
    for (double w : tilde.row_values(i)) d += w;
    inv_sqrt_deg[i] = 1.0 / std::sqrt(d);
  }
  std::vector<Triplet<double>> out;
  out.reserve(tilde.nnz());
  for (const auto& e : tilde.triplets()) {
    out.push_back({e.row, e.col, inv_sqrt_deg[e.row] * e.weight * inv_sqrt_deg[e.col]});
  }
  return SparseMatrix::from_triplets(n, n, std::move(out));
}

/// S_ij = Y_i . Y_j for i != j both in `train`; zero elsewhere.
inline SparseMatrix label_similarity_kernel(const MultiplexGraph& g,
                                            std::span<const std::size_t> train) {
  std::vector<Triplet<double>> t;
  for (std::size_t a : train) {
    for (std::size_t b : train) {
      if (a == b) continue;
      double dot = 0.0;
      for (std::size_t q = 0; q < g.num_labels(); ++q) dot += g.labels(a, q) * g.labels(b, q);
      if (dot != 0.0) t.push_back({a, b, dot});
    }
  }
  return SparseMatrix::from_triplets(g.num_nodes, g.num_nodes, std::move(t));
}

/// Unnormalized Laplacian diag(S 1) - S of a symmetric nonnegative kernel.
inline SparseMatrix laplacian(const SparseMatrix& s) {
  if (s.rows() != s.cols()) {
    throw DimensionError("laplacian of non-square matrix");
  }
  if (!s.is_nonnegative()) {
    throw ValidationError("laplacian input has negative entries");
  }
  for (const auto& e : s.triplets()) {
    if (s.at(e.col, e.row) != e.weight) {
      throw ValidationError("laplacian input is not symmetric at (" + std::to_string(e.row) + ", " +
                            std::to_string(e.col) + ")");
    }
  }
  std::vector<Triplet<double>> t;
  t.reserve(s.nnz() + s.rows());
  for (std::size_t i = 0; i < s.rows(); ++i) {
    double deg = 0.0;
    for (double w : s.row_values(i)) deg += w;
    if (deg != 0.0) t.push_back({i, i, deg});
  }
  for (const auto& e : s.triplets()) t.push_back({e.row, e.col, -e.weight});
  return SparseMatrix::from_triplets(s.rows(), s.cols(), std::move(t));
}

} // namespace mplex
