#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "mplex/error.hpp"
#include "mplex/random.hpp"
#include "mplex/tensor/matrix.hpp"

namespace mplex {

/// Global summary used by the InfoMax discriminator.
enum class SummaryMode {
  cluster,   ///< per-node mixture of cluster embeddings
  mean_pool, ///< sigmoid of the column mean, shared by all nodes
};

inline std::string to_string(SummaryMode m) {
  return m == SummaryMode::cluster ? "cluster" : "mean_pool";
}

inline SummaryMode summary_mode_from_string(const std::string& s) {
  if (s == "cluster") return SummaryMode::cluster;
  if (s == "mean_pool" || s == "mean-pool") return SummaryMode::mean_pool;
  throw ParameterError("unknown summary mode '" + s + "' (expected cluster or mean_pool)");
}

/// Sizes that fix every parameter shape.
struct ModelDims {
  std::size_t num_nodes = 0;
  std::size_t num_features = 0;
  std::size_t num_labels = 0;
  std::size_t num_relations = 0;
  std::size_t hidden = 64;
  std::size_t gcn_layers = 2;
  std::size_t clusters = 0;

  bool operator==(const ModelDims&) const = default;
};

template <typename T>
struct RelationParams {
  /// First is |F| x d, the rest d x d.
  std::vector<Matrix<T>> gcn_weights;
  /// One 1x1 PReLU slope per GCN layer.
  std::vector<Matrix<T>> prelu_slopes;
  /// K x d cluster embeddings.
  Matrix<T> clusters;
};

/// All learnable quantities.
template <typename T>
struct ModelParams {
  std::vector<RelationParams<T>> relations;
  Matrix<T> bilinear;         // d x d, shared by all relations
  Matrix<T> layer_embeddings; // |R| x d, row r is L_r
  Matrix<T> consensus;        // |V| x d
  Matrix<T> label_head;       // d x |Q|

  static ModelParams init(const ModelDims& dims, std::uint64_t seed) {
    if (dims.hidden == 0 || dims.gcn_layers == 0 || dims.clusters == 0 ||
        dims.num_relations == 0) {
      throw ParameterError("model dimensions must be positive");
    }
    Rng rng(seed);
    auto uniform = [&rng](std::size_t rows, std::size_t cols, double bound) {
      Matrix<T> m(rows, cols);
      for (T& v : m.data()) v = static_cast<T>(rng.uniform(-bound, bound));
      return m;
    };
    const double d = static_cast<double>(dims.hidden);
    ModelParams p;
    for (std::size_t r = 0; r < dims.num_relations; ++r) {
      RelationParams<T> rp;
      for (std::size_t m = 0; m < dims.gcn_layers; ++m) {
        const std::size_t fan_in = m == 0 ? dims.num_features : dims.hidden;
        rp.gcn_weights.push_back(
            uniform(fan_in, dims.hidden, 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(fan_in, 1)))));
        rp.prelu_slopes.emplace_back(1, 1, static_cast<T>(0.25));
      }
      rp.clusters = uniform(dims.clusters, dims.hidden, 1.0 / std::sqrt(d));
      p.relations.push_back(std::move(rp));
    }
    p.bilinear = uniform(dims.hidden, dims.hidden, 1.0 / std::sqrt(d));
    p.layer_embeddings = uniform(dims.num_relations, dims.hidden, 1.0 / std::sqrt(d));
    p.consensus = Matrix<T>(dims.num_nodes, dims.hidden);
    p.label_head = uniform(dims.hidden, dims.num_labels, 1.0 / std::sqrt(d));
    return p;
  }

  /// Visits every parameter matrix in a fixed order.
  template <typename F>
  void for_each(F&& f) {
    for (auto& rp : relations) {
      for (auto& w : rp.gcn_weights) f(w);
      for (auto& s : rp.prelu_slopes) f(s);
      f(rp.clusters);
    }
    f(bilinear);
    f(layer_embeddings);
    f(consensus);
    f(label_head);
  }

  template <typename F>
  void for_each(F&& f) const {
    const_cast<ModelParams*>(this)->for_each([&f](const Matrix<T>& m) { f(m); });
  }

  std::size_t tensor_count() const {
    std::size_t n = 0;
    for_each([&n](const Matrix<T>&) { ++n; });
    return n;
  }

  ModelDims dims() const {
    ModelDims d;
    d.num_relations = relations.size();
    d.hidden = bilinear.rows();
    d.num_nodes = consensus.rows();
    d.num_labels = label_head.cols();
    if (!relations.empty()) {
      d.gcn_layers = relations.front().gcn_weights.size();
      d.num_features = relations.front().gcn_weights.front().rows();
      d.clusters = relations.front().clusters.rows();
    }
    return d;
  }

  template <typename U>
  ModelParams<U> cast() const {
    ModelParams<U> out;
    for (const auto& rp : relations) {
      RelationParams<U> o;
      for (const auto& w : rp.gcn_weights) o.gcn_weights.push_back(w.template cast<U>());
      for (const auto& s : rp.prelu_slopes) o.prelu_slopes.push_back(s.template cast<U>());
      o.clusters = rp.clusters.template cast<U>();
      out.relations.push_back(std::move(o));
    }
    out.bilinear = bilinear.template cast<U>();
    out.layer_embeddings = layer_embeddings.template cast<U>();
    out.consensus = consensus.template cast<U>();
    out.label_head = label_head.template cast<U>();
    return out;
  }

  bool all_finite() const {
    bool ok = true;
    for_each([&ok](const Matrix<T>& m) { ok = ok && mplex::all_finite(m); });
    return ok;
  }

  bool operator==(const ModelParams& o) const {
    std::vector<const Matrix<T>*> a, b;
    for_each([&a](const Matrix<T>& m) { a.push_back(&m); });
    o.for_each([&b](const Matrix<T>& m) { b.push_back(&m); });
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (!(*a[i] == *b[i])) return false;
    }
    return true;
  }
};

} // namespace mplex
