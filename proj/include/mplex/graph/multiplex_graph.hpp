#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mplex/error.hpp"
#include "mplex/tensor/matrix.hpp"

namespace mplex {

using RelationPair = std::pair<std::size_t, std::size_t>;

/// Multiplex network: one shared node set, one adjacency per relation, and
/// optional inter-layer adjacencies between node copies.
struct MultiplexGraph {
  std::size_t num_nodes = 0;
  std::vector<std::string> relations;
  std::vector<SparseMatrix> intra;
  /// Keyed by ordered relation pair (r, s), r != s.
  std::map<RelationPair, SparseMatrix> cross;
  DenseMatrix features;
  /// 0/1 label indicator, num_nodes x num_labels.
  DenseMatrix labels;
  bool multi_label = false;
  /// Sorted ids of rows with at least one label bit.
  std::vector<std::size_t> labeled_nodes;

  std::size_t num_relations() const noexcept { return relations.size(); }
  std::size_t num_features() const noexcept { return features.cols(); }
  std::size_t num_labels() const noexcept { return labels.cols(); }

  bool is_labeled(std::size_t node) const {
    for (std::size_t q = 0; q < labels.cols(); ++q) {
      if (labels(node, q) != 0.0) return true;
    }
    return false;
  }

  /// Label indices set for a node.
  std::vector<std::size_t> label_set(std::size_t node) const {
    std::vector<std::size_t> s;
    for (std::size_t q = 0; q < labels.cols(); ++q) {
      if (labels(node, q) != 0.0) s.push_back(q);
    }
    return s;
  }

  /// Recomputes labeled_nodes from the label matrix.
  void refresh_labeled() {
    labeled_nodes.clear();
    for (std::size_t i = 0; i < num_nodes; ++i) {
      if (is_labeled(i)) labeled_nodes.push_back(i);
    }
  }

  void validate() const {
    if (relations.size() < 2) {
      throw ValidationError("multiplex graph needs at least 2 relations, got " +
                            std::to_string(relations.size()));
    }
    if (intra.size() != relations.size()) {
      throw ValidationError("relation count " + std::to_string(relations.size()) +
                            " does not match adjacency count " + std::to_string(intra.size()));
    }
    auto check_adj = [&](const SparseMatrix& a, const std::string& what) {
      if (a.rows() != num_nodes || a.cols() != num_nodes) {
        throw ValidationError(what + " has shape " +
                              DenseMatrix::shape_string(a.rows(), a.cols()) + ", expected " +
                              std::to_string(num_nodes) + " square");
      }
      if (!a.is_nonnegative()) {
        throw ValidationError(what + " has a negative weight");
      }
    };
    for (std::size_t r = 0; r < intra.size(); ++r) {
      check_adj(intra[r], "adjacency of relation '" + relations[r] + "'");
    }
    for (const auto& [key, a] : cross) {
      if (key.first == key.second || key.first >= relations.size() ||
          key.second >= relations.size()) {
        throw ValidationError("invalid cross relation pair (" + std::to_string(key.first) + ", " +
                              std::to_string(key.second) + ")");
      }
      check_adj(a, "cross adjacency " + relations[key.first] + "->" + relations[key.second]);
    }
    if (features.rows() != num_nodes) {
      throw ValidationError("feature matrix has " + std::to_string(features.rows()) +
                            " rows, expected " + std::to_string(num_nodes));
    }
    if (labels.rows() != num_nodes) {
      throw ValidationError("label matrix has " + std::to_string(labels.rows()) +
                            " rows, expected " + std::to_string(num_nodes));
    }
    if (!all_finite(features)) {
      throw ValidationError("feature matrix has non-finite entries");
    }
    for (std::size_t i = 0; i < num_nodes; ++i) {
      std::size_t bits = 0;
      for (std::size_t q = 0; q < labels.cols(); ++q) {
        const double v = labels(i, q);
        if (v != 0.0 && v != 1.0) {
          throw ValidationError("label matrix entry (" + std::to_string(i) + ", " +
                                std::to_string(q) + ") is not 0/1");
        }
        bits += v != 0.0;
      }
      if (!multi_label && bits > 1) {
        throw ValidationError("node " + std::to_string(i) +
                              " has several labels in a single-label graph");
      }
    }
  }
};

} // namespace mplex
