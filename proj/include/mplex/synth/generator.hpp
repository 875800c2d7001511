#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "mplex/error.hpp"
#include "mplex/graph/multiplex_graph.hpp"
#include "mplex/random.hpp"

namespace mplex {

enum class CrossMode { none, identity, sampled };

inline std::string to_string(CrossMode m) {
  switch (m) {
    case CrossMode::none: return "none";
    case CrossMode::identity: return "identity";
    case CrossMode::sampled: return "sampled";
  }
  return "none";
}

inline CrossMode cross_mode_from_string(const std::string& s) {
  if (s == "none") return CrossMode::none;
  if (s == "identity") return CrossMode::identity;
  if (s == "sampled") return CrossMode::sampled;
  throw ParameterError("unknown cross mode '" + s + "' (expected none, identity or sampled)");
}

/// Planted-partition multiplex generator settings.
struct SynthConfig {
  std::size_t num_nodes = 300;
  std::size_t num_classes = 3;
  std::size_t num_relations = 2;
  double p_in = 0.1;
  double p_out = 0.01;
  /// Fraction of each relation's edges rewired to a random endpoint.
  double rewire = 0.1;
  CrossMode cross_mode = CrossMode::identity;
  /// Per-node link probability in sampled cross mode.
  double p_cross = 0.5;
  std::size_t num_features = 16;
  /// Norm of each class-mean feature vector.
  double signal = 2.0;
  /// Standard deviation of the additive Gaussian feature noise.
  double noise = 1.0;
  double label_rate = 0.6;
  std::uint64_t seed = 0;

  void validate() const {
    auto unit = [](double v, const char* name) {
      if (!(v >= 0.0 && v <= 1.0)) {
        throw ParameterError(std::string(name) + " must lie in [0, 1]");
      }
    };
    unit(p_in, "p_in");
    unit(p_out, "p_out");
    unit(rewire, "rewire");
    unit(p_cross, "p_cross");
    unit(label_rate, "label_rate");
    if (num_classes < 2) throw ParameterError("num_classes must be >= 2");
    if (num_relations < 2) throw ParameterError("num_relations must be >= 2");
    if (num_nodes < num_classes) throw ParameterError("num_nodes must be >= num_classes");
    if (num_features < num_classes) {
      throw ParameterError("num_features must be >= num_classes for orthogonal class means");
    }
    if (!(signal >= 0.0) || !(noise >= 0.0)) throw ParameterError("signal and noise must be >= 0");
  }

  /// Acceptance scenario: n=300, Q=3, R=2, p_in=0.1, p_out=0.01, 10% rewiring,
  /// identity cross links, 16 features, SNR 2, 60% labeled.
  static SynthConfig easy_3x2(std::uint64_t seed = 0) {
    SynthConfig c;
    c.seed = seed;
    return c;
  }
};

/// Class of node i under round-robin assignment.
inline std::size_t planted_class(std::size_t node, std::size_t num_classes) {
  return node % num_classes;
}

/// Seeded planted-partition multiplex graph.
///
/// Each relation is an independent draw (p_in within class, p_out across),
/// then each edge is rewired with probability `rewire` by moving one
/// endpoint to a uniformly drawn node. Features are signal * e_class plus
/// N(0, noise^2) per entry.
inline MultiplexGraph generate(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  const std::size_t n = cfg.num_nodes;
  MultiplexGraph g;
  g.num_nodes = n;
  for (std::size_t r = 0; r < cfg.num_relations; ++r) g.relations.push_back("rel" + std::to_string(r));

  for (std::size_t r = 0; r < cfg.num_relations; ++r) {
    std::set<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const bool same = planted_class(i, cfg.num_classes) == planted_class(j, cfg.num_classes);
        if (rng.bernoulli(same ? cfg.p_in : cfg.p_out)) edges.insert({i, j});
      }
    }
    std::set<std::pair<std::size_t, std::size_t>> rewired;
    for (const auto& e : edges) {
      if (rng.bernoulli(cfg.rewire)) {
        // Bounded retries; keep the edge when no free endpoint is found.
        bool placed = false;
        for (int attempt = 0; attempt < 32 && !placed; ++attempt) {
          const std::size_t t = rng.below(n);
          auto key = std::minmax(e.first, t);
          if (t != e.first && !edges.count(key) && !rewired.count(key)) {
            rewired.insert(key);
            placed = true;
          }
        }
        if (!placed) rewired.insert(e);
      } else {
        rewired.insert(e);
      }
    }
    std::vector<Triplet<double>> t;
    for (const auto& [a, b] : rewired) {
      t.push_back({a, b, 1.0});
      t.push_back({b, a, 1.0});
    }
    g.intra.push_back(SparseMatrix::from_triplets(n, n, std::move(t)));
  }

  if (cfg.cross_mode != CrossMode::none) {
    for (std::size_t r = 0; r < cfg.num_relations; ++r) {
      for (std::size_t s = r + 1; s < cfg.num_relations; ++s) {
        std::vector<Triplet<double>> t;
        for (std::size_t i = 0; i < n; ++i) {
          if (cfg.cross_mode == CrossMode::identity || rng.bernoulli(cfg.p_cross)) {
            t.push_back({i, i, 1.0});
          }
        }
        SparseMatrix m = SparseMatrix::from_triplets(n, n, std::move(t));
        g.cross.emplace(RelationPair{r, s}, m);
        g.cross.emplace(RelationPair{s, r}, std::move(m));
      }
    }
  }

  g.features = DenseMatrix(n, cfg.num_features);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = planted_class(i, cfg.num_classes);
    for (std::size_t j = 0; j < cfg.num_features; ++j) {
      g.features(i, j) = (j == c ? cfg.signal : 0.0) + cfg.noise * rng.normal();
    }
  }

  g.labels = DenseMatrix(n, cfg.num_classes);
  std::vector<std::size_t> order = rng.permutation(n);
  const auto n_labeled = static_cast<std::size_t>(std::llround(cfg.label_rate * static_cast<double>(n)));
  for (std::size_t k = 0; k < n_labeled; ++k) {
    g.labels(order[k], planted_class(order[k], cfg.num_classes)) = 1.0;
  }
  g.multi_label = false;
  g.refresh_labeled();
  g.validate();
  return g;
}

} // namespace mplex
