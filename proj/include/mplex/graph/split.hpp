#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "mplex/error.hpp"
#include "mplex/graph/multiplex_graph.hpp"
#include "mplex/random.hpp"

namespace mplex {

/// Disjoint train / validation / test node sets.
struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
  std::uint64_t seed = 0;

  bool operator==(const Split&) const = default;
};

/// Random split: a third of the labeled nodes train, half as many validate,
/// and half of all nodes test.
///
/// Train and validation come from the labeled set. Test takes the remaining
/// labeled nodes first, then unlabeled ones.
inline Split make_split(const MultiplexGraph& g, std::uint64_t seed) {
  const std::size_t n_labeled = g.labeled_nodes.size();
  const std::size_t n_train = n_labeled / 3;
  const std::size_t n_val = n_train / 2;
  const std::size_t n_test = g.num_nodes / 2;
  if (n_labeled < 3 || n_val == 0 || n_test == 0) {
    throw SplitError("not enough labeled nodes for train/val/test: " + std::to_string(n_labeled) +
                     " labeled of " + std::to_string(g.num_nodes));
  }
  Rng rng(seed);
  std::vector<std::size_t> labeled = g.labeled_nodes;
  rng.shuffle(labeled);

  Split s;
  s.seed = seed;
  s.train.assign(labeled.begin(), labeled.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.val.assign(labeled.begin() + static_cast<std::ptrdiff_t>(n_train),
               labeled.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));

  std::vector<std::size_t> rest_labeled(labeled.begin() + static_cast<std::ptrdiff_t>(n_train + n_val),
                                        labeled.end());
  std::vector<char> is_labeled(g.num_nodes, 0);
  for (std::size_t i : g.labeled_nodes) is_labeled[i] = 1;
  std::vector<std::size_t> unlabeled;
  for (std::size_t i = 0; i < g.num_nodes; ++i) {
    if (!is_labeled[i]) unlabeled.push_back(i);
  }
  rng.shuffle(unlabeled);
  s.test = rest_labeled;
  for (std::size_t i : unlabeled) s.test.push_back(i);
  s.test.resize(std::min(n_test, s.test.size()));
  return s;
}

/// Checks membership and disjointness against a graph.
inline void validate_split(const MultiplexGraph& g, const Split& s) {
  std::vector<char> seen(g.num_nodes, 0);
  std::vector<char> labeled(g.num_nodes, 0);
  for (std::size_t i : g.labeled_nodes) labeled[i] = 1;
  auto mark = [&](const std::vector<std::size_t>& ids, const char* name, bool need_label) {
    for (std::size_t i : ids) {
      if (i >= g.num_nodes) {
        throw SplitError(std::string(name) + " node " + std::to_string(i) + " out of range");
      }
      if (seen[i]) {
        throw SplitError(std::string(name) + " node " + std::to_string(i) +
                         " appears in more than one set");
      }
      if (need_label && !labeled[i]) {
        throw SplitError(std::string(name) + " node " + std::to_string(i) + " is unlabeled");
      }
      seen[i] = 1;
    }
  };
  mark(s.train, "train", true);
  mark(s.val, "val", true);
  mark(s.test, "test", false);
  if (s.train.empty() || s.val.empty() || s.test.empty()) {
    throw SplitError("train, val and test must all be nonempty");
  }
}

/// Nodes of `ids` that carry at least one label.
inline std::vector<std::size_t> labeled_subset(const MultiplexGraph& g,
                                               const std::vector<std::size_t>& ids) {
  std::vector<std::size_t> out;
  for (std::size_t i : ids) {
    if (g.is_labeled(i)) out.push_back(i);
  }
  return out;
}

} // namespace mplex
