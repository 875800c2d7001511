#include <gtest/gtest.h>

#include <cmath>

#include "mplex/graph/io.hpp"
#include "mplex/synth/generator.hpp"
#include "support.hpp"

using namespace mplex;
using namespace mplex::testing;

namespace {

struct EdgeCounts {
  double within = 0, across = 0;
};

EdgeCounts count_edges(const SparseMatrix& a, std::size_t q) {
  EdgeCounts c;
  for (const auto& e : a.triplets()) {
    if (e.row >= e.col) continue;
    (planted_class(e.row, q) == planted_class(e.col, q) ? c.within : c.across) += 1;
  }
  return c;
}

} // namespace

TEST(Synth, NoiselessLimitIsExactlyPlanted) {
  SynthConfig c;
  c.num_nodes = 60;
  c.p_out = 0.0;
  c.rewire = 0.0;
  c.noise = 0.0;
  c.seed = 1;
  const MultiplexGraph g = generate(c);
  for (const auto& a : g.intra) EXPECT_EQ(count_edges(a, 3).across, 0.0);
  for (std::size_t i = 0; i < 60; ++i) {
    for (std::size_t j = 0; j < c.num_features; ++j) {
      EXPECT_EQ(g.features(i, j), j == planted_class(i, 3) ? 2.0 : 0.0);
    }
  }
}

TEST(Synth, IdentityCrossLinksBothDirections) {
  const MultiplexGraph g = generate(SynthConfig::easy_3x2(2));
  ASSERT_EQ(g.cross.size(), 2u);
  for (const auto& [key, a] : g.cross) EXPECT_EQ(a, SparseMatrix::identity(300));
}

TEST(Synth, SampledAndAbsentCrossLinks) {
  SynthConfig c;
  c.num_nodes = 400;
  c.num_relations = 3;
  c.cross_mode = CrossMode::sampled;
  c.p_cross = 0.25;
  const MultiplexGraph g = generate(c);
  EXPECT_EQ(g.cross.size(), 6u);
  for (const auto& [key, a] : g.cross) {
    for (const auto& e : a.triplets()) EXPECT_EQ(e.row, e.col);
    EXPECT_EQ(a, g.cross.at({key.second, key.first}));
    // Binomial(400, 0.25): mean 100, sd about 8.7.
    EXPECT_NEAR(static_cast<double>(a.nnz()), 100.0, 40.0);
  }
  c.cross_mode = CrossMode::none;
  EXPECT_TRUE(generate(c).cross.empty());
}

TEST(Synth, SeedDeterminism) {
  const MultiplexGraph a = generate(SynthConfig::easy_3x2(5));
  const MultiplexGraph b = generate(SynthConfig::easy_3x2(5));
  const MultiplexGraph c = generate(SynthConfig::easy_3x2(6));
  EXPECT_EQ(a.intra, b.intra);
  EXPECT_EQ(a.features, b.features);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_FALSE(a.intra == c.intra);
}

TEST(Synth, EdgeDensityMatchesBinomial) {
  SynthConfig c;
  c.num_nodes = 300;
  c.rewire = 0.0;
  c.seed = 7;
  const MultiplexGraph g = generate(c);
  // 3 classes of 100 nodes: 3 * C(100, 2) within pairs, 3 * 100^2 across.
  const double within_pairs = 3 * 4950.0, across_pairs = 30000.0;
  for (const auto& a : g.intra) {
    const EdgeCounts k = count_edges(a, 3);
    const double sd_in = std::sqrt(within_pairs * c.p_in * (1 - c.p_in));
    const double sd_out = std::sqrt(across_pairs * c.p_out * (1 - c.p_out));
    EXPECT_NEAR(k.within, within_pairs * c.p_in, 4 * sd_in);
    EXPECT_NEAR(k.across, across_pairs * c.p_out, 4 * sd_out);
  }
}

TEST(Synth, RewiringKeepsEdgeCountAndSymmetry) {
  SynthConfig c = SynthConfig::easy_3x2(8);
  c.rewire = 0.0;
  const MultiplexGraph base = generate(c);
  c.rewire = 0.3;
  const MultiplexGraph mixed = generate(c);
  for (std::size_t r = 0; r < 2; ++r) {
    const auto& a = mixed.intra[r];
    for (const auto& e : a.triplets()) {
      EXPECT_NE(e.row, e.col);
      EXPECT_EQ(a.at(e.col, e.row), 1.0);
    }
    // Relation 0 sees the same draws before rewiring, which moves edges one for one.
    if (r == 0) EXPECT_EQ(a.nnz(), base.intra[r].nnz());
    EXPECT_GT(count_edges(a, 3).across, count_edges(base.intra[r], 3).across);
  }
}

TEST(Synth, LabelsFollowPlantedClassesAtRequestedRate) {
  SynthConfig c = SynthConfig::easy_3x2(9);
  const MultiplexGraph g = generate(c);
  EXPECT_EQ(g.labeled_nodes.size(), 180u);
  for (std::size_t i : g.labeled_nodes) {
    EXPECT_EQ(g.label_set(i), std::vector<std::size_t>{planted_class(i, 3)});
  }
  EXPECT_FALSE(g.multi_label);
}

TEST(Synth, DatasetRoundTrip) {
  SynthConfig c = SynthConfig::easy_3x2(10);
  c.num_nodes = 90;
  c.cross_mode = CrossMode::sampled;
  const MultiplexGraph g = generate(c);
  const auto dir = temp_dir("synth");
  save_dataset(g, dir);
  const MultiplexGraph h = load_dataset(dir);
  EXPECT_EQ(h.relations, g.relations);
  EXPECT_EQ(h.intra, g.intra);
  EXPECT_EQ(h.cross, g.cross);
  EXPECT_EQ(h.features, g.features);
  EXPECT_EQ(h.labels, g.labels);
  EXPECT_EQ(h.labeled_nodes, g.labeled_nodes);
}

TEST(Synth, InvalidSettingsThrow) {
  auto bad = [](auto mutate) {
    SynthConfig c;
    mutate(c);
    return c;
  };
  EXPECT_THROW(generate(bad([](SynthConfig& c) { c.p_in = 1.5; })), ParameterError);
  EXPECT_THROW(generate(bad([](SynthConfig& c) { c.rewire = -0.1; })), ParameterError);
  EXPECT_THROW(generate(bad([](SynthConfig& c) { c.num_relations = 1; })), ParameterError);
  EXPECT_THROW(generate(bad([](SynthConfig& c) { c.num_classes = 1; })), ParameterError);
  EXPECT_THROW(generate(bad([](SynthConfig& c) { c.num_features = 2; })), ParameterError);
  EXPECT_THROW(generate(bad([](SynthConfig& c) { c.noise = -1; })), ParameterError);
  EXPECT_THROW(cross_mode_from_string("full"), ParameterError);
  EXPECT_EQ(cross_mode_from_string(to_string(CrossMode::sampled)), CrossMode::sampled);
}
