#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "mplex/eval/report.hpp"
#include "support.hpp"

using namespace mplex;
using namespace mplex::testing;

namespace {

DenseMatrix one_hot(const std::vector<std::size_t>& classes, std::size_t q) {
  DenseMatrix m(classes.size(), q);
  for (std::size_t i = 0; i < classes.size(); ++i) m(i, classes[i]) = 1.0;
  return m;
}

std::vector<std::size_t> all_nodes(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

double xlogx_over(double w, double n) { return w <= 0 ? 0.0 : -w / n * std::log(w / n); }

/// Overlapping NMI computed from per-node indicator vectors, independent of
/// the library's set-based bookkeeping.
double onmi_oracle(const Cover& a, const Cover& b, std::size_t n) {
  auto indicator = [n](const std::vector<std::size_t>& c) {
    std::vector<int> v(n, 0);
    for (std::size_t i : c) v[i] = 1;
    return v;
  };
  auto cond = [&](const Cover& x, const Cover& y) {
    const double nn = static_cast<double>(n);
    double sum = 0;
    for (const auto& xc : x) {
      const auto xv = indicator(xc);
      const double ones = std::accumulate(xv.begin(), xv.end(), 0.0);
      const double hx = xlogx_over(ones, nn) + xlogx_over(nn - ones, nn);
      if (hx == 0.0) {
        bool same = false;
        for (const auto& yc : y) same = same || indicator(yc) == xv;
        sum += same ? 0.0 : 1.0;
        continue;
      }
      double best = hx;
      for (const auto& yc : y) {
        const auto yv = indicator(yc);
        double cnt[2][2] = {{0, 0}, {0, 0}};
        for (std::size_t i = 0; i < n; ++i) cnt[xv[i]][yv[i]] += 1;
        const double h00 = xlogx_over(cnt[0][0], nn), h11 = xlogx_over(cnt[1][1], nn);
        const double h01 = xlogx_over(cnt[0][1], nn), h10 = xlogx_over(cnt[1][0], nn);
        if (h00 + h11 < h01 + h10) continue;
        const double hy = xlogx_over(cnt[0][1] + cnt[1][1], nn) + xlogx_over(cnt[0][0] + cnt[1][0], nn);
        best = std::min(best, h00 + h01 + h10 + h11 - hy);
      }
      sum += std::max(0.0, best) / hx;
    }
    return sum / static_cast<double>(x.size());
  };
  return std::clamp(1.0 - 0.5 * (cond(a, b) + cond(b, a)), 0.0, 1.0);
}

Cover random_cover(Rng& rng, std::size_t n, std::size_t k) {
  Cover c(k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      if (rng.bernoulli(0.4)) c[j].push_back(i);
    }
  }
  std::erase_if(c, [](const auto& x) { return x.empty(); });
  if (c.empty()) c.push_back({0});
  return c;
}

/// Points around k well-separated centers, `per` points each.
DenseMatrix blobs(Rng& rng, std::size_t k, std::size_t per, std::vector<std::size_t>& truth) {
  DenseMatrix x(k * per, 2);
  truth.clear();
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t p = 0; p < per; ++p) {
      const std::size_t i = c * per + p;
      x(i, 0) = 20.0 * static_cast<double>(c) + 0.3 * rng.normal();
      x(i, 1) = 0.3 * rng.normal();
      truth.push_back(c);
    }
  }
  return x;
}

} // namespace

TEST(F1, PerfectPredictionScoresHundred) {
  const DenseMatrix truth = one_hot({0, 1, 2, 1}, 3);
  const auto s = f1_scores(truth, truth, all_nodes(4), false);
  EXPECT_DOUBLE_EQ(s.micro, 100.0);
  EXPECT_DOUBLE_EQ(s.macro, 100.0);
}

TEST(F1, HalfCorrectScoresFifty) {
  const DenseMatrix truth = one_hot({0, 0, 1, 1}, 2);
  const DenseMatrix pred = one_hot({0, 1, 0, 1}, 2);
  const auto s = f1_scores(pred, truth, all_nodes(4), false);
  EXPECT_DOUBLE_EQ(s.micro, 50.0);
  EXPECT_DOUBLE_EQ(s.macro, 50.0);
}

TEST(F1, MacroPenalizesMissedClass) {
  const DenseMatrix truth = one_hot({0, 0, 1, 1}, 2);
  const DenseMatrix pred = one_hot({0, 0, 0, 0}, 2);
  const auto s = f1_scores(pred, truth, all_nodes(4), false);
  EXPECT_DOUBLE_EQ(s.micro, 50.0);
  EXPECT_NEAR(s.macro, 100.0 / 3.0, 1e-12);
}

TEST(F1, MultiLabelThresholdAtHalf) {
  const DenseMatrix truth({{1, 1, 0}, {0, 0, 1}});
  const DenseMatrix probs({{0.9, 0.5, 0.1}, {0.2, 0.3, 0.51}});
  // tp = 2, fn = 1, fp = 0.
  EXPECT_NEAR(f1_scores(probs, truth, all_nodes(2), true).micro, 100.0 * 4.0 / 5.0, 1e-12);
}

TEST(F1, Errors) {
  const DenseMatrix truth = one_hot({0, 1}, 2);
  EXPECT_THROW(f1_scores(truth, truth, {}, false), ValidationError);
  EXPECT_THROW(f1_scores(DenseMatrix(2, 3), truth, all_nodes(2), false), DimensionError);
  DenseMatrix unlabeled = truth;
  unlabeled(1, 1) = 0.0;
  EXPECT_THROW(f1_scores(truth, unlabeled, all_nodes(2), false), ValidationError);
}

TEST(Nmi, IdenticalAndRelabeledPartitionsScoreOne) {
  const std::vector<std::size_t> a = {0, 0, 1, 1, 2, 2};
  const std::vector<std::size_t> b = {5, 5, 3, 3, 9, 9};
  EXPECT_NEAR(nmi(a, a), 1.0, 1e-12);
  EXPECT_NEAR(nmi(a, b), 1.0, 1e-12);
}

TEST(Nmi, SingleClusterPredictionScoresZero) {
  const std::vector<std::size_t> truth = {0, 1, 0, 1, 2, 2};
  const std::vector<std::size_t> giant(6, 0);
  EXPECT_DOUBLE_EQ(nmi(giant, truth), 0.0);
}

TEST(Nmi, RandomPartitionIsNearZero) {
  Rng rng(1);
  std::vector<std::size_t> a(1000), b(1000);
  for (auto& v : a) v = rng.below(4);
  for (auto& v : b) v = rng.below(4);
  EXPECT_LE(nmi(a, b), 0.1);
}

TEST(Nmi, HandValueAndSymmetry) {
  const std::vector<std::size_t> a = {0, 0, 1, 1}, b = {0, 0, 0, 1};
  // Joint counts (0,0)=2, (1,0)=1, (1,1)=1.
  const double mi = 0.5 * std::log(2.0 * 4.0 / (2.0 * 3.0)) + 0.25 * std::log(4.0 / (2.0 * 3.0)) +
                    0.25 * std::log(4.0 / 2.0);
  const double ha = std::log(2.0);
  const double hb = -0.75 * std::log(0.75) - 0.25 * std::log(0.25);
  EXPECT_NEAR(nmi(a, b), 2 * mi / (ha + hb), 1e-12);
  EXPECT_NEAR(nmi(a, b), nmi(b, a), 1e-15);
}

TEST(Nmi, SizeMismatchThrows) {
  EXPECT_THROW(nmi({0, 1}, {0}), DimensionError);
  EXPECT_THROW(nmi({}, {}), ValidationError);
}

TEST(Onmi, IdenticalCoversScoreOne) {
  const Cover c = {{0, 1, 2}, {2, 3}, {4, 5}};
  EXPECT_NEAR(onmi(c, c, 6), 1.0, 1e-12);
}

TEST(Onmi, DuplicatedCommunityDoesNotChangeScore) {
  const Cover c = {{0, 1, 2}, {3, 4, 5}};
  const Cover dup = {{0, 1, 2}, {3, 4, 5}, {0, 1, 2}};
  EXPECT_NEAR(onmi(c, dup, 6), 1.0, 1e-12);
}

TEST(Onmi, UninformativeCoverScoresZero) {
  const Cover truth = {{0, 1, 2}, {3, 4, 5}};
  const Cover everyone = {{0, 1, 2, 3, 4, 5}};
  EXPECT_DOUBLE_EQ(onmi(truth, everyone, 6), 0.0);
}

TEST(Onmi, MatchesIndicatorOracleOnRandomCovers) {
  Rng rng(2);
  for (int t = 0; t < 300; ++t) {
    const std::size_t n = 2 + rng.below(9);
    const Cover a = random_cover(rng, n, 1 + rng.below(4));
    const Cover b = random_cover(rng, n, 1 + rng.below(4));
    EXPECT_NEAR(onmi(a, b, n), onmi_oracle(a, b, n), 1e-12);
    EXPECT_NEAR(onmi(a, b, n), onmi(b, a, n), 1e-12);
  }
}

TEST(Onmi, PartitionCoverAgreesOnPerfectMatch) {
  const std::vector<std::size_t> p = {0, 1, 1, 2, 0, 2};
  EXPECT_NEAR(onmi(cover_from_partition(p), cover_from_partition(p), 6), 1.0, 1e-12);
}

TEST(Onmi, Errors) {
  EXPECT_THROW(onmi({}, {{0}}, 2), ValidationError);
  EXPECT_THROW(onmi({{0, 5}}, {{0}}, 2), DimensionError);
}

TEST(Similarity, MatchesBruteForce) {
  Rng rng(3);
  const std::size_t n = 40;
  const DenseMatrix emb = random_matrix(rng, n, 5);
  std::vector<std::size_t> cls(n);
  for (auto& c : cls) c = rng.below(3);
  const DenseMatrix labels = one_hot(cls, 3);
  std::vector<std::size_t> nodes;
  for (std::size_t i = 0; i < n; i += 1 + (i % 2)) nodes.push_back(i);
  const std::vector<std::size_t> ks = {1, 5, 10, 100};
  const auto got = similarity_search(emb, labels, nodes, ks, false);

  auto cosine = [&](std::size_t a, std::size_t b) {
    double d = 0, na = 0, nb = 0;
    for (std::size_t j = 0; j < 5; ++j) {
      d += emb(a, j) * emb(b, j);
      na += emb(a, j) * emb(a, j);
      nb += emb(b, j) * emb(b, j);
    }
    return d / std::sqrt(na * nb);
  };
  for (std::size_t k : ks) {
    double total = 0;
    for (std::size_t a : nodes) {
      std::vector<std::size_t> others;
      for (std::size_t b : nodes) {
        if (b != a) others.push_back(b);
      }
      std::sort(others.begin(), others.end(),
                [&](std::size_t x, std::size_t y) { return cosine(a, x) > cosine(a, y); });
      const std::size_t kk = std::min(k, others.size());
      double hits = 0;
      for (std::size_t r = 0; r < kk; ++r) hits += cls[others[r]] == cls[a];
      total += hits / static_cast<double>(kk);
    }
    EXPECT_NEAR(got.at(k), total / static_cast<double>(nodes.size()), 1e-12) << "K=" << k;
  }
}

TEST(Similarity, InvariantToPositiveRowScaling) {
  Rng rng(4);
  const DenseMatrix emb = random_matrix(rng, 20, 4);
  DenseMatrix scaled = emb;
  for (std::size_t i = 0; i < 20; ++i) {
    const double f = rng.uniform(0.1, 10.0);
    for (double& v : scaled.row(i)) v *= f;
  }
  std::vector<std::size_t> cls(20);
  for (auto& c : cls) c = rng.below(2);
  const DenseMatrix labels = one_hot(cls, 2);
  const auto nodes = all_nodes(20);
  const auto a = similarity_search(emb, labels, nodes, kDefaultSearchKs, false);
  const auto b = similarity_search(scaled, labels, nodes, kDefaultSearchKs, false);
  for (const auto& [k, v] : a) EXPECT_NEAR(v, b.at(k), 1e-12);
}

TEST(Similarity, MultiLabelRelevanceIsJaccard) {
  const DenseMatrix labels({{1, 1, 0}, {0, 1, 1}});
  EXPECT_NEAR(label_relevance(labels, 0, 1, true), 1.0 / 3.0, 1e-15);
  EXPECT_DOUBLE_EQ(label_relevance(labels, 0, 1, false), 0.0);
  EXPECT_DOUBLE_EQ(label_relevance(labels, 0, 0, false), 1.0);
  const DenseMatrix emb({{1, 0}, {1, 0.1}});
  const std::vector<std::size_t> ks = {1};
  EXPECT_NEAR(similarity_search(emb, labels, all_nodes(2), ks, true).at(1), 1.0 / 3.0, 1e-15);
}

TEST(Similarity, ZeroNormEmbeddingThrows) {
  const DenseMatrix emb({{1, 0}, {0, 0}, {0, 1}});
  EXPECT_THROW(similarity_search(emb, one_hot({0, 1, 0}, 2), all_nodes(3), kDefaultSearchKs, false),
               ValidationError);
  EXPECT_THROW(similarity_search(emb, one_hot({0, 1, 0}, 2), std::vector<std::size_t>{0},
                                 kDefaultSearchKs, false),
               ValidationError);
}

TEST(KMeans, RecoversSeparatedBlobs) {
  Rng rng(5);
  std::vector<std::size_t> truth;
  const DenseMatrix x = blobs(rng, 4, 25, truth);
  const auto r = kmeans(x, 4);
  EXPECT_NEAR(nmi(r.labels, truth), 1.0, 1e-12);
  EXPECT_EQ(r.centers.rows(), 4u);
}

TEST(KMeans, SeedDeterministicAndValidated) {
  Rng rng(6);
  const DenseMatrix x = random_matrix(rng, 30, 3);
  KMeansOptions opt;
  opt.seed = 9;
  EXPECT_EQ(kmeans(x, 3, opt).labels, kmeans(x, 3, opt).labels);
  EXPECT_THROW(kmeans(x, 31), ValidationError);
  EXPECT_THROW(kmeans(x, 0), ParameterError);
}

TEST(FuzzyCMeans, MembershipRowsSumToOneAndFindBlobs) {
  Rng rng(7);
  std::vector<std::size_t> truth;
  const DenseMatrix x = blobs(rng, 3, 20, truth);
  const DenseMatrix u = fuzzy_cmeans(x, 3);
  std::vector<std::size_t> hard;
  for (std::size_t i = 0; i < u.rows(); ++i) {
    double s = 0;
    for (double v : u.row(i)) s += v;
    EXPECT_NEAR(s, 1.0, 1e-9);
    hard.push_back(argmax_row(u.row(i)));
  }
  EXPECT_NEAR(nmi(hard, truth), 1.0, 1e-12);
  FuzzyCMeansOptions bad;
  bad.fuzzifier = 1.0;
  EXPECT_THROW(fuzzy_cmeans(x, 3, bad), ParameterError);
}

TEST(TopQ, TiesGoToLowerIndex) {
  const std::vector<double> row = {0.2, 0.5, 0.5, 0.1};
  EXPECT_EQ(top_q(row, 2), (std::vector<std::size_t>{1, 2}));
  EXPECT_EQ(top_q(row, 1), (std::vector<std::size_t>{1}));
  EXPECT_EQ(top_q(row, 9).size(), 4u);
}

TEST(NmiN, PerfectEmbeddingScoresOne) {
  Rng rng(8);
  std::vector<std::size_t> truth;
  const DenseMatrix x = blobs(rng, 3, 10, truth);
  EXPECT_NEAR(nmi_n(x, one_hot(truth, 3), all_nodes(30), 3, false, 0), 1.0, 1e-12);
}

TEST(NmiN, MultiLabelUsesFuzzyCovers) {
  Rng rng(9);
  std::vector<std::size_t> truth;
  const DenseMatrix x = blobs(rng, 2, 10, truth);
  EXPECT_NEAR(nmi_n(x, one_hot(truth, 2), all_nodes(20), 2, true, 0), 1.0, 1e-12);
}

TEST(NmiN, InvalidK) {
  const DenseMatrix x(4, 2);
  const DenseMatrix y = one_hot({0, 1, 0, 1}, 2);
  EXPECT_THROW(nmi_n(x, y, all_nodes(4), 1, false, 0), ParameterError);
  EXPECT_THROW(nmi_n(x, y, all_nodes(4), 5, false, 0), ValidationError);
}

TEST(NmiC, ExactAssignmentsScoreOne) {
  const std::vector<std::size_t> cls = {0, 1, 1, 0, 2, 2};
  const DenseMatrix y = one_hot(cls, 3);
  const NmiC c = nmi_c({y, y}, y, all_nodes(6), false);
  EXPECT_NEAR(c.mean, 1.0, 1e-12);
  ASSERT_EQ(c.per_relation.size(), 2u);
  EXPECT_NEAR(c.per_relation[0], 1.0, 1e-12);
}

TEST(NmiC, OrderOfRelationsDoesNotChangeMean) {
  Rng rng(10);
  const DenseMatrix y = one_hot({0, 1, 1, 0, 1, 0, 0, 1}, 2);
  DenseMatrix h0 = random_matrix(rng, 8, 2), h1 = random_matrix(rng, 8, 2);
  const NmiC a = nmi_c({h0, h1}, y, all_nodes(8), false);
  const NmiC b = nmi_c({h1, h0}, y, all_nodes(8), false);
  EXPECT_DOUBLE_EQ(a.mean, b.mean);
  EXPECT_DOUBLE_EQ(a.per_relation[0], b.per_relation[1]);
  EXPECT_THROW(nmi_c({}, y, all_nodes(8), false), ValidationError);
  EXPECT_THROW(nmi_c({h0, DenseMatrix(8, 3)}, y, all_nodes(8), false), DimensionError);
}

TEST(Report, EvaluateFillsEveryField) {
  const MultiplexGraph g = tiny_graph(11, 24, 2, 4);
  const Split split = make_split(g, 1);
  TrainConfig cfg;
  cfg.hidden = 6;
  ModelDims d{24, 4, 2, 2, 6, 2, 2};
  auto params = ModelParams<double>::init(d, 0);
  Rng rng(11);
  params.consensus = random_matrix(rng, 24, 6);
  const EvalReport r = evaluate(g, split, params, cfg);
  EXPECT_EQ(r.eval_nodes, labeled_subset(g, split.test).size());
  EXPECT_EQ(r.split_seed, 1u);
  EXPECT_EQ(r.config_hash, config_hash(cfg));
  EXPECT_EQ(r.nmi_c_per_relation.size(), 2u);
  EXPECT_EQ(r.sim_search.size(), kDefaultSearchKs.size());
  EXPECT_FALSE(r.onmi.has_value());
  EXPECT_TRUE(r.notes.empty());
  const auto j = to_json(r);
  EXPECT_EQ(j.at("micro_f1").get<double>(), r.micro_f1);
  EXPECT_TRUE(j.at("onmi").is_null());
  std::ostringstream table;
  write_table(table, r);
  EXPECT_NE(table.str().find("micro_f1"), std::string::npos);
  EXPECT_NE(table.str().find("sim@5"), std::string::npos);
}

TEST(Report, ZeroConsensusSkipsSimilaritySearchWithNote) {
  const MultiplexGraph g = tiny_graph(12, 20, 2, 4);
  const Split split = make_split(g, 2);
  TrainConfig cfg;
  cfg.hidden = 4;
  const auto params = ModelParams<double>::init(ModelDims{20, 4, 2, 2, 4, 2, 2}, 0);
  const EvalReport r = evaluate(g, split, params, cfg);
  EXPECT_TRUE(r.sim_search.empty());
  ASSERT_EQ(r.notes.size(), 1u);
  EXPECT_NE(r.notes[0].find("zero-norm"), std::string::npos);
}

TEST(Report, EmbeddingsAreTabSeparatedAndRoundTrip) {
  const DenseMatrix z({{0.1, -2.5}, {1e-300, 3.0}});
  std::ostringstream out;
  write_embeddings(out, z);
  EXPECT_EQ(out.str(), "0\t0.1\t-2.5\n1\t1e-300\t3\n");
}
