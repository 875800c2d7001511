#pragma once

#include <cstddef>
#include <vector>

#include "mplex/graph/kernels.hpp"
#include "mplex/graph/multiplex_graph.hpp"
#include "mplex/tensor/matrix.hpp"

namespace mplex {

/// Inter-layer regularization operands for one ordered relation pair.
template <typename T>
struct CrossTerm {
  std::size_t r = 0;
  std::size_t s = 0;
  /// Diagonal 0/1 mask of rows with at least one cross edge.
  CsrMatrix<T> mask;
  CsrMatrix<T> adjacency;
  std::size_t masked_rows = 0;
};

/// Constant operands of one training problem: propagation kernels, inputs,
/// cross-layer terms and the train-masked label Laplacian.
template <typename T>
struct Problem {
  std::size_t num_nodes = 0;
  std::size_t num_relations = 0;
  std::vector<CsrMatrix<T>> kernels;
  Matrix<T> features;
  Matrix<T> labels;
  std::vector<CrossTerm<T>> cross;
  std::size_t cross_rows = 0;
  CsrMatrix<T> label_laplacian;
  std::vector<std::size_t> train;
  bool multi_label = false;

  static Problem build(const MultiplexGraph& g, const std::vector<std::size_t>& train,
                       double epsilon) {
    Problem p;
    p.num_nodes = g.num_nodes;
    p.num_relations = g.num_relations();
    for (const auto& a : g.intra) {
      p.kernels.push_back(propagation_kernel(a, epsilon).template cast<T>());
    }
    p.features = g.features.template cast<T>();
    p.labels = g.labels.template cast<T>();
    for (const auto& [key, a] : g.cross) {
      CrossTerm<T> c;
      c.r = key.first;
      c.s = key.second;
      std::vector<Triplet<T>> diag;
      for (std::size_t i = 0; i < a.rows(); ++i) {
        bool any = false;
        for (double w : a.row_values(i)) any = any || w != 0.0;
        if (any) diag.push_back({i, i, T(1)});
      }
      c.masked_rows = diag.size();
      c.mask = CsrMatrix<T>::from_triplets(a.rows(), a.rows(), std::move(diag));
      c.adjacency = a.template cast<T>();
      p.cross_rows += c.masked_rows;
      p.cross.push_back(std::move(c));
    }
    p.label_laplacian = laplacian(label_similarity_kernel(g, train)).template cast<T>();
    p.train = train;
    p.multi_label = g.multi_label;
    return p;
  }
};

} // namespace mplex
