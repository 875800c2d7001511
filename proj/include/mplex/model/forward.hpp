#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mplex/model/params.hpp"
#include "mplex/model/problem.hpp"
#include "mplex/tensor/tape.hpp"

namespace mplex {

/// Parameters bound to a tape as leaves, mirroring ModelParams.
template <typename T>
struct ParamVars {
  struct Relation {
    std::vector<ad::Var<T>> gcn_weights;
    std::vector<ad::Var<T>> prelu_slopes;
    ad::Var<T> clusters;
  };
  std::vector<Relation> relations;
  ad::Var<T> bilinear;
  ad::Var<T> layer_embeddings;
  ad::Var<T> consensus;
  ad::Var<T> label_head;

  /// Same visiting order as ModelParams::for_each.
  template <typename F>
  void for_each(F&& f) const {
    for (const auto& r : relations) {
      for (const auto& w : r.gcn_weights) f(w);
      for (const auto& s : r.prelu_slopes) f(s);
      f(r.clusters);
    }
    f(bilinear);
    f(layer_embeddings);
    f(consensus);
    f(label_head);
  }
};

/// Records every parameter on `tape`, as variables or as constants.
template <typename T>
ParamVars<T> bind(ad::Tape<T>& tape, const ModelParams<T>& p, bool trainable = true) {
  auto leaf = [&](const Matrix<T>& m) { return trainable ? tape.variable(m) : tape.constant(m); };
  ParamVars<T> v;
  for (const auto& rp : p.relations) {
    typename ParamVars<T>::Relation r;
    for (const auto& w : rp.gcn_weights) r.gcn_weights.push_back(leaf(w));
    for (const auto& s : rp.prelu_slopes) r.prelu_slopes.push_back(leaf(s));
    r.clusters = leaf(rp.clusters);
    v.relations.push_back(std::move(r));
  }
  v.bilinear = leaf(p.bilinear);
  v.layer_embeddings = leaf(p.layer_embeddings);
  v.consensus = leaf(p.consensus);
  v.label_head = leaf(p.label_head);
  return v;
}

/// Stacked GCN: X^m = PReLU(K X^{m-1} W^m), returning X^M.
template <typename T>
ad::Var<T> encode_relation(const CsrMatrix<T>& kernel, ad::Var<T> features,
                           std::span<const ad::Var<T>> weights,
                           std::span<const ad::Var<T>> slopes) {
  if (weights.size() != slopes.size() || weights.empty()) {
    throw DimensionError("encoder needs one slope per GCN layer");
  }
  if (features.rows() != kernel.cols()) {
    throw DimensionError("feature rows " + std::to_string(features.rows()) +
                         " do not match kernel order " + std::to_string(kernel.cols()));
  }
  if (features.cols() != weights.front().rows()) {
    throw DimensionError("feature dimension " + std::to_string(features.cols()) +
                         " does not match first GCN weight " + weights.front().value().shape());
  }
  ad::Var<T> x = features;
  for (std::size_t m = 0; m < weights.size(); ++m) {
    x = ad::prelu(ad::spmm(kernel, ad::matmul(x, weights[m])), slopes[m]);
  }
  return x;
}

inline bool is_permutation_of_range(std::span<const std::size_t> perm, std::size_t n) {
  if (perm.size() != n) return false;
  std::vector<char> seen(n, 0);
  for (std::size_t i : perm) {
    if (i >= n || seen[i]) return false;
    seen[i] = 1;
  }
  return true;
}

/// Encoder applied to row-shuffled features (same weights, same kernel).
template <typename T>
ad::Var<T> corrupt(const CsrMatrix<T>& kernel, ad::Var<T> features,
                   std::span<const ad::Var<T>> weights, std::span<const ad::Var<T>> slopes,
                   std::span<const std::size_t> perm) {
  if (!is_permutation_of_range(perm, features.rows())) {
    throw ValidationError("corruption index list is not a permutation of " +
                          std::to_string(features.rows()) + " nodes");
  }
  return encode_relation(kernel, ad::row_gather(features, perm), weights, slopes);
}

/// Row softmax of U C^T.
template <typename T>
ad::Var<T> assign_clusters(ad::Var<T> embeddings, ad::Var<T> clusters) {
  return ad::softmax_rows(ad::matmul(embeddings, ad::transpose(clusters)));
}

/// S = H C: each node's membership-weighted mix of cluster embeddings.
template <typename T>
ad::Var<T> contextual_summary(ad::Var<T> assignments, ad::Var<T> clusters) {
  return ad::matmul(assignments, clusters);
}

/// Every row is sigmoid(column mean of U).
template <typename T>
ad::Var<T> mean_pool_summary(ad::Var<T> embeddings) {
  return ad::sigmoid(ad::mean_rows_broadcast(embeddings));
}

/// sigma(u^T B s) for single vectors.
template <typename T>
T discriminate(std::span<const T> u, std::span<const T> s, const Matrix<T>& bilinear) {
  T acc = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    T row = 0;
    for (std::size_t j = 0; j < s.size(); ++j) row += bilinear(i, j) * s[j];
    acc += u[i] * row;
  }
  return ad::sigmoid_scalar(acc);
}

/// Row-wise bilinear logits u_i^T B s_i as a column vector.
template <typename T>
ad::Var<T> bilinear_logits(ad::Var<T> local, ad::Var<T> summary, ad::Var<T> bilinear) {
  return ad::row_sum(ad::hadamard(ad::matmul(local, bilinear), summary));
}

/// sum_r diag(w_r) E_r
template <typename T>
ad::Var<T> weighted_sum(std::span<const ad::Var<T>> weights, std::span<const ad::Var<T>> embeddings) {
  ad::Var<T> acc = ad::scale_rows(weights[0], embeddings[0]);
  for (std::size_t r = 1; r < embeddings.size(); ++r) {
    acc = ad::add(acc, ad::scale_rows(weights[r], embeddings[r]));
  }
  return acc;
}

template <typename T>
struct Attention {
  ad::Var<T> weights;              // |V| x |R|
  std::vector<ad::Var<T>> columns; // per relation, |V| x 1
  ad::Var<T> aggregated;           // |V| x d
};

/// Per-node softmax over relations of L_r . U_r^i, then the weighted sum of
/// the relation embeddings.
template <typename T>
Attention<T> attention_aggregate(std::span<const ad::Var<T>> embeddings,
                                 ad::Var<T> layer_embeddings) {
  const std::size_t nrel = embeddings.size();
  if (nrel == 0 || layer_embeddings.rows() != nrel) {
    throw DimensionError("attention needs one layer embedding per relation");
  }
  ad::Tape<T>& tape = layer_embeddings.tape();
  std::vector<ad::Var<T>> logits;
  for (std::size_t r = 0; r < nrel; ++r) {
    if (!embeddings[r].value().same_shape(embeddings[0].value())) {
      throw DimensionError("relation embeddings differ in shape");
    }
    const std::size_t idx[] = {r};
    ad::Var<T> lr = ad::transpose(ad::row_gather(layer_embeddings, std::span<const std::size_t>(idx)));
    logits.push_back(ad::matmul(embeddings[r], lr));
  }
  Attention<T> out;
  out.weights = ad::softmax_rows(ad::hconcat(std::span<const ad::Var<T>>(logits)));
  for (std::size_t r = 0; r < nrel; ++r) {
    Matrix<T> pick(nrel, 1);
    pick(r, 0) = T(1);
    out.columns.push_back(ad::matmul(out.weights, tape.constant(std::move(pick))));
  }
  out.aggregated = weighted_sum(std::span<const ad::Var<T>>(out.columns), embeddings);
  return out;
}

/// Row softmax (single-label) or entrywise sigmoid (multi-label) of Z W_Y.
template <typename T>
ad::Var<T> predict(ad::Var<T> consensus, ad::Var<T> label_head, bool multi_label) {
  ad::Var<T> logits = ad::matmul(consensus, label_head);
  return multi_label ? ad::sigmoid(logits) : ad::softmax_rows(logits);
}

/// Plain-value prediction from stored parameters.
template <typename T>
Matrix<T> predict_values(const ModelParams<T>& p, bool multi_label) {
  ad::Tape<T> tape;
  return predict(tape.constant(p.consensus), tape.constant(p.label_head), multi_label).value();
}

/// Everything one forward pass produces.
template <typename T>
struct ForwardState {
  std::vector<ad::Var<T>> local;     // U_r
  std::vector<ad::Var<T>> corrupted; // corrupted U_r
  std::vector<ad::Var<T>> assignments;
  std::vector<ad::Var<T>> summaries;
  Attention<T> attention;
  ad::Var<T> aggregated_corrupted;
  ad::Var<T> predictions;
};

/// `perms` holds one corruption permutation per relation.
template <typename T>
ForwardState<T> forward(const Problem<T>& prob, const ParamVars<T>& pv,
                        const std::vector<std::vector<std::size_t>>& perms, SummaryMode mode) {
  if (perms.size() != prob.num_relations || pv.relations.size() != prob.num_relations) {
    throw DimensionError("forward needs one permutation and parameter set per relation");
  }
  ad::Tape<T>& tape = pv.bilinear.tape();
  ad::Var<T> x = tape.constant(prob.features);
  ForwardState<T> st;
  for (std::size_t r = 0; r < prob.num_relations; ++r) {
    const auto& rp = pv.relations[r];
    std::span<const ad::Var<T>> w(rp.gcn_weights), s(rp.prelu_slopes);
    st.local.push_back(encode_relation(prob.kernels[r], x, w, s));
    st.corrupted.push_back(corrupt(prob.kernels[r], x, w, s, std::span<const std::size_t>(perms[r])));
    st.assignments.push_back(assign_clusters(st.local[r], rp.clusters));
    st.summaries.push_back(mode == SummaryMode::cluster
                               ? contextual_summary(st.assignments[r], rp.clusters)
                               : mean_pool_summary(st.local[r]));
  }
  st.attention = attention_aggregate(std::span<const ad::Var<T>>(st.local), pv.layer_embeddings);
  st.aggregated_corrupted = weighted_sum(std::span<const ad::Var<T>>(st.attention.columns),
                                         std::span<const ad::Var<T>>(st.corrupted));
  st.predictions = predict(pv.consensus, pv.label_head, prob.multi_label);
  return st;
}

} // namespace mplex
