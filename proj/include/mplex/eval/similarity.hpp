#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <vector>

#include "mplex/error.hpp"
#include "mplex/tensor/matrix.hpp"

namespace mplex {

inline const std::vector<std::size_t> kDefaultSearchKs = {5, 10, 20, 50, 100};

/// Relevance of a retrieved node: exact label match (single-label) or
/// Jaccard similarity of label sets (multi-label).
inline double label_relevance(const DenseMatrix& labels, std::size_t a, std::size_t b,
                              bool multi_label) {
  double inter = 0, uni = 0;
  for (std::size_t q = 0; q < labels.cols(); ++q) {
    const bool x = labels(a, q) != 0.0, y = labels(b, q) != 0.0;
    inter += x && y;
    uni += x || y;
  }
  if (multi_label) return uni > 0 ? inter / uni : 0.0;
  return uni > 0 && inter == uni ? 1.0 : 0.0;
}

/// Mean precision@K of cosine-similarity retrieval among `nodes`.
///
/// Every node in `nodes` queries all others; ties in similarity go to the
/// lower node id. K larger than the candidate count retrieves everything.
inline std::map<std::size_t, double> similarity_search(const DenseMatrix& emb,
                                                       const DenseMatrix& labels,
                                                       std::span<const std::size_t> nodes,
                                                       std::span<const std::size_t> ks,
                                                       bool multi_label) {
  if (nodes.size() < 2) {
    throw ValidationError("similarity search needs at least two nodes");
  }
  std::vector<double> norms(nodes.size());
  for (std::size_t a = 0; a < nodes.size(); ++a) {
    double s = 0;
    for (double v : emb.row(nodes[a])) s += v * v;
    norms[a] = std::sqrt(s);
    if (!(norms[a] > 0.0)) {
      throw ValidationError("zero-norm embedding for node " + std::to_string(nodes[a]));
    }
  }
  const std::size_t kmax = ks.empty() ? 0 : *std::max_element(ks.begin(), ks.end());
  std::map<std::size_t, double> sums;
  for (std::size_t k : ks) sums[k] = 0.0;

  std::vector<std::pair<double, std::size_t>> cand;
  for (std::size_t a = 0; a < nodes.size(); ++a) {
    cand.clear();
    for (std::size_t b = 0; b < nodes.size(); ++b) {
      if (b == a) continue;
      double dot = 0;
      auto ra = emb.row(nodes[a]);
      auto rb = emb.row(nodes[b]);
      for (std::size_t j = 0; j < ra.size(); ++j) dot += ra[j] * rb[j];
      cand.emplace_back(dot / (norms[a] * norms[b]), nodes[b]);
    }
    const std::size_t take = std::min(kmax, cand.size());
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(take), cand.end(),
                      [](const auto& x, const auto& y) {
                        return x.first > y.first || (x.first == y.first && x.second < y.second);
                      });
    for (std::size_t k : ks) {
      const std::size_t kk = std::min(k, cand.size());
      double rel = 0;
      for (std::size_t r = 0; r < kk; ++r) rel += label_relevance(labels, nodes[a], cand[r].second, multi_label);
      sums[k] += kk > 0 ? rel / static_cast<double>(kk) : 0.0;
    }
  }
  for (auto& [k, v] : sums) v /= static_cast<double>(nodes.size());
  return sums;
}

} // namespace mplex
