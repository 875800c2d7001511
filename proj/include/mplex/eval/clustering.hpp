#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "mplex/error.hpp"
#include "mplex/random.hpp"
#include "mplex/tensor/matrix.hpp"

namespace mplex {

struct KMeansOptions {
  std::size_t restarts = 10;
  std::size_t max_iters = 300;
  std::uint64_t seed = 0;
};

struct KMeansResult {
  std::vector<std::size_t> labels;
  DenseMatrix centers;
  double inertia = std::numeric_limits<double>::infinity();
};

namespace clustering_detail {

inline double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    s += d * d;
  }
  return s;
}

/// Seeding by squared-distance-weighted sampling.
inline DenseMatrix plus_plus_init(const DenseMatrix& x, std::size_t k, Rng& rng) {
  const std::size_t n = x.rows();
  DenseMatrix c(k, x.cols());
  std::size_t first = rng.below(n);
  std::copy(x.row(first).begin(), x.row(first).end(), c.row(0).begin());
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = sq_dist(x.row(i), c.row(0));
  for (std::size_t m = 1; m < k; ++m) {
    double total = 0;
    for (double v : d2) total += v;
    std::size_t pick = 0;
    if (total <= 0) {
      pick = rng.below(n);
    } else {
      double u = rng.uniform() * total;
      for (pick = 0; pick + 1 < n; ++pick) {
        u -= d2[pick];
        if (u < 0) break;
      }
    }
    std::copy(x.row(pick).begin(), x.row(pick).end(), c.row(m).begin());
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], sq_dist(x.row(i), c.row(m)));
  }
  return c;
}

} // namespace clustering_detail

/// Lloyd's k-means under squared Euclidean distance; the restart with the
/// lowest inertia wins. Ties in assignment go to the lowest center index.
inline KMeansResult kmeans(const DenseMatrix& x, std::size_t k, const KMeansOptions& opt = {}) {
  using clustering_detail::sq_dist;
  if (k < 1) throw ParameterError("k-means needs k >= 1");
  if (k > x.rows()) {
    throw ValidationError("k-means with k=" + std::to_string(k) + " on " +
                          std::to_string(x.rows()) + " points");
  }
  Rng rng(opt.seed);
  KMeansResult best;
  const std::size_t n = x.rows(), d = x.cols();
  for (std::size_t rs = 0; rs < std::max<std::size_t>(opt.restarts, 1); ++rs) {
    DenseMatrix c = clustering_detail::plus_plus_init(x, k, rng);
    std::vector<std::size_t> lab(n, 0);
    for (std::size_t it = 0; it < opt.max_iters; ++it) {
      bool changed = it == 0;
      for (std::size_t i = 0; i < n; ++i) {
        std::size_t arg = 0;
        double bd = sq_dist(x.row(i), c.row(0));
        for (std::size_t m = 1; m < k; ++m) {
          const double dd = sq_dist(x.row(i), c.row(m));
          if (dd < bd) {
            bd = dd;
            arg = m;
          }
        }
        if (lab[i] != arg) changed = true;
        lab[i] = arg;
      }
      if (!changed) break;
      DenseMatrix nc(k, d);
      std::vector<double> cnt(k, 0);
      for (std::size_t i = 0; i < n; ++i) {
        cnt[lab[i]] += 1;
        for (std::size_t j = 0; j < d; ++j) nc(lab[i], j) += x(i, j);
      }
      for (std::size_t m = 0; m < k; ++m) {
        if (cnt[m] == 0) {
          // Empty cluster keeps its previous center.
          std::copy(c.row(m).begin(), c.row(m).end(), nc.row(m).begin());
        } else {
          for (std::size_t j = 0; j < d; ++j) nc(m, j) /= cnt[m];
        }
      }
      c = std::move(nc);
    }
    double inertia = 0;
    for (std::size_t i = 0; i < n; ++i) inertia += sq_dist(x.row(i), c.row(lab[i]));
    if (inertia < best.inertia) {
      best.inertia = inertia;
      best.labels = lab;
      best.centers = c;
    }
  }
  return best;
}

struct FuzzyCMeansOptions {
  double fuzzifier = 2.0;
  double tolerance = 1e-5;
  std::size_t max_iters = 300;
  std::uint64_t seed = 0;
};

/// Fuzzy c-means; returns the n x c membership matrix (rows sum to 1).
inline DenseMatrix fuzzy_cmeans(const DenseMatrix& x, std::size_t c,
                                const FuzzyCMeansOptions& opt = {}) {
  using clustering_detail::sq_dist;
  if (c < 1) throw ParameterError("fuzzy c-means needs c >= 1");
  if (c > x.rows()) {
    throw ValidationError("fuzzy c-means with c=" + std::to_string(c) + " on " +
                          std::to_string(x.rows()) + " points");
  }
  if (!(opt.fuzzifier > 1.0)) throw ParameterError("fuzzifier must be > 1");
  const std::size_t n = x.rows(), d = x.cols();
  Rng rng(opt.seed);
  DenseMatrix u(n, c);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0;
    for (double& v : u.row(i)) {
      v = rng.uniform() + 1e-3;
      s += v;
    }
    for (double& v : u.row(i)) v /= s;
  }
  const double expo = 2.0 / (opt.fuzzifier - 1.0);
  DenseMatrix centers(c, d);
  for (std::size_t it = 0; it < opt.max_iters; ++it) {
    for (std::size_t m = 0; m < c; ++m) {
      double wsum = 0;
      std::vector<double> acc(d, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        const double w = std::pow(u(i, m), opt.fuzzifier);
        wsum += w;
        for (std::size_t j = 0; j < d; ++j) acc[j] += w * x(i, j);
      }
      for (std::size_t j = 0; j < d; ++j) centers(m, j) = wsum > 0 ? acc[j] / wsum : 0.0;
    }
    double delta = 0;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> dist(c);
      std::size_t zero_at = c;
      for (std::size_t m = 0; m < c; ++m) {
        dist[m] = std::sqrt(sq_dist(x.row(i), centers.row(m)));
        if (dist[m] == 0.0 && zero_at == c) zero_at = m;
      }
      for (std::size_t m = 0; m < c; ++m) {
        double nv;
        if (zero_at != c) {
          nv = m == zero_at ? 1.0 : 0.0;
        } else {
          double s = 0;
          for (std::size_t l = 0; l < c; ++l) s += std::pow(dist[m] / dist[l], expo);
          nv = 1.0 / s;
        }
        delta = std::max(delta, std::abs(nv - u(i, m)));
        u(i, m) = nv;
      }
    }
    if (delta < opt.tolerance) break;
  }
  return u;
}

/// Indices of the q largest entries of a row, ties to the lower index.
inline std::vector<std::size_t> top_q(std::span<const double> row, std::size_t q) {
  std::vector<std::size_t> idx(row.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return row[a] > row[b]; });
  idx.resize(std::min(q, idx.size()));
  return idx;
}

} // namespace mplex
