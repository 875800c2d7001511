#pragma once

#include <unistd.h>

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mplex/graph/multiplex_graph.hpp"
#include "mplex/random.hpp"
#include "mplex/tensor/matrix.hpp"

namespace mplex::testing {

inline DenseMatrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols, double scale = 1.0) {
  DenseMatrix m(rows, cols);
  for (double& v : m.data()) v = scale * rng.normal();
  return m;
}

/// Symmetric 0/1 adjacency with edge probability p, no self loops.
inline SparseMatrix random_graph(Rng& rng, std::size_t n, double p) {
  std::vector<Triplet<double>> t;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (rng.bernoulli(p)) {
        t.push_back({i, j, 1.0});
        t.push_back({j, i, 1.0});
      }
    }
  }
  return SparseMatrix::from_triplets(n, n, std::move(t));
}

/// Small single-label multiplex graph with identity cross links.
inline MultiplexGraph tiny_graph(std::uint64_t seed, std::size_t n = 12, std::size_t q = 2,
                                 std::size_t f = 4) {
  Rng rng(seed);
  MultiplexGraph g;
  g.num_nodes = n;
  g.relations = {"a", "b"};
  g.intra.push_back(random_graph(rng, n, 0.3));
  g.intra.push_back(random_graph(rng, n, 0.3));
  g.cross.emplace(RelationPair{0, 1}, SparseMatrix::identity(n));
  g.cross.emplace(RelationPair{1, 0}, SparseMatrix::identity(n));
  g.features = random_matrix(rng, n, f);
  g.labels = DenseMatrix(n, q);
  for (std::size_t i = 0; i < n; ++i) g.labels(i, i % q) = 1.0;
  g.refresh_labeled();
  return g;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& tag) {
  static std::atomic<int> counter{0};
  auto p = std::filesystem::temp_directory_path() /
           ("mplex_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

} // namespace mplex::testing
