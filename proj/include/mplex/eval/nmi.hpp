#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <set>
#include <utility>
#include <vector>

#include "mplex/error.hpp"

namespace mplex {

/// Community list over nodes 0..n-1; communities may overlap.
using Cover = std::vector<std::vector<std::size_t>>;

/// NMI of two hard partitions, arithmetic-mean normalization
/// 2 I(A;B) / (H(A) + H(B)). Two single-cluster partitions score 1.
inline double nmi(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  if (a.size() != b.size()) {
    throw DimensionError("NMI partitions cover different node counts");
  }
  if (a.empty()) {
    throw ValidationError("NMI of empty partitions");
  }
  const double n = static_cast<double>(a.size());
  std::map<std::size_t, double> ca, cb;
  std::map<std::pair<std::size_t, std::size_t>, double> joint;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ca[a[i]] += 1;
    cb[b[i]] += 1;
    joint[{a[i], b[i]}] += 1;
  }
  auto entropy = [n](const std::map<std::size_t, double>& c) {
    double h = 0;
    for (const auto& [k, v] : c) h -= v / n * std::log(v / n);
    return h;
  };
  const double ha = entropy(ca), hb = entropy(cb);
  double mi = 0;
  for (const auto& [key, v] : joint) {
    mi += v / n * std::log(v * n / (ca[key.first] * cb[key.second]));
  }
  if (ha + hb == 0.0) return 1.0;
  return std::clamp(2.0 * mi / (ha + hb), 0.0, 1.0);
}

namespace onmi_detail {

inline double h(double w, double n) { return w <= 0 ? 0.0 : -w / n * std::log(w / n); }

/// Entropy of a binary community indicator.
inline double community_entropy(std::size_t size, std::size_t n) {
  return h(static_cast<double>(size), static_cast<double>(n)) +
         h(static_cast<double>(n - size), static_cast<double>(n));
}

/// Normalized H(X|Y): mean over X's communities of
/// min_l H(X_k | Y_l) / H(X_k), restricted to admissible pairs.
inline double conditional(const Cover& x, const Cover& y, std::size_t n) {
  const double nn = static_cast<double>(n);
  std::vector<std::set<std::size_t>> ys;
  for (const auto& c : y) ys.emplace_back(c.begin(), c.end());
  double total = 0;
  for (const auto& xc : x) {
    const std::set<std::size_t> xs(xc.begin(), xc.end());
    const double hx = community_entropy(xs.size(), n);
    if (hx == 0.0) {
      // A community of all nodes (or none) carries no information; it is
      // explained only by an identical community on the other side.
      const bool matched = std::any_of(ys.begin(), ys.end(), [&](const auto& s) { return s == xs; });
      total += matched ? 0.0 : 1.0;
      continue;
    }
    double best = hx;
    for (const auto& yc : ys) {
      std::size_t inter = 0;
      for (std::size_t v : xs) inter += yc.count(v);
      const double d = static_cast<double>(inter);
      const double c = static_cast<double>(xs.size()) - d;
      const double b = static_cast<double>(yc.size()) - d;
      const double a = nn - d - c - b;
      if (h(a, nn) + h(d, nn) >= h(b, nn) + h(c, nn)) {
        const double hjoint = h(a, nn) + h(b, nn) + h(c, nn) + h(d, nn);
        const double hy = h(b + d, nn) + h(a + c, nn);
        best = std::min(best, hjoint - hy);
      }
    }
    total += std::max(0.0, best) / hx;
  }
  return total / static_cast<double>(x.size());
}

} // namespace onmi_detail

/// Overlapping NMI of two covers on nodes 0..n-1:
/// 1 - (H(A|B)_norm + H(B|A)_norm) / 2.
inline double onmi(const Cover& a, const Cover& b, std::size_t num_nodes) {
  if (a.empty() || b.empty()) {
    throw ValidationError("ONMI needs two nonempty covers");
  }
  for (const Cover* c : {&a, &b}) {
    for (const auto& comm : *c) {
      for (std::size_t v : comm) {
        if (v >= num_nodes) throw DimensionError("cover node " + std::to_string(v) + " out of range");
      }
    }
  }
  const double hab = onmi_detail::conditional(a, b, num_nodes);
  const double hba = onmi_detail::conditional(b, a, num_nodes);
  return std::clamp(1.0 - 0.5 * (hab + hba), 0.0, 1.0);
}

/// Cover from a hard partition (community k = nodes labeled k).
inline Cover cover_from_partition(const std::vector<std::size_t>& labels) {
  std::map<std::size_t, std::vector<std::size_t>> m;
  for (std::size_t i = 0; i < labels.size(); ++i) m[labels[i]].push_back(i);
  Cover c;
  for (auto& [k, v] : m) c.push_back(std::move(v));
  return c;
}

} // namespace mplex
