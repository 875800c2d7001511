#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "mplex/eval/classification.hpp"
#include "mplex/eval/clustering.hpp"
#include "mplex/eval/nmi.hpp"
#include "mplex/eval/similarity.hpp"
#include "mplex/graph/multiplex_graph.hpp"
#include "mplex/graph/split.hpp"
#include "mplex/model/inference.hpp"
#include "mplex/model/problem.hpp"
#include "mplex/train/config.hpp"

namespace mplex {

struct EvalReport {
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
  double nmi_n = 0.0;
  double nmi_c = 0.0;
  std::vector<double> nmi_c_per_relation;
  std::optional<double> onmi;
  std::map<std::size_t, double> sim_search;
  std::string config_hash;
  std::uint64_t split_seed = 0;
  std::size_t eval_nodes = 0;
  std::vector<std::string> notes;
};

namespace report_detail {

inline DenseMatrix gather_rows(const DenseMatrix& x, const std::vector<std::size_t>& nodes) {
  DenseMatrix out(nodes.size(), x.cols());
  for (std::size_t a = 0; a < nodes.size(); ++a) {
    std::copy(x.row(nodes[a]).begin(), x.row(nodes[a]).end(), out.row(a).begin());
  }
  return out;
}

inline std::vector<std::size_t> truth_partition(const DenseMatrix& labels,
                                                const std::vector<std::size_t>& nodes) {
  std::vector<std::size_t> out;
  for (std::size_t i : nodes) out.push_back(argmax_row(labels.row(i)));
  return out;
}

/// Cover over local indices 0..nodes.size()-1, empty communities dropped.
inline Cover truth_cover(const DenseMatrix& labels, const std::vector<std::size_t>& nodes) {
  Cover c(labels.cols());
  for (std::size_t a = 0; a < nodes.size(); ++a) {
    for (std::size_t q = 0; q < labels.cols(); ++q) {
      if (labels(nodes[a], q) != 0.0) c[q].push_back(a);
    }
  }
  std::erase_if(c, [](const auto& comm) { return comm.empty(); });
  return c;
}

/// Each node joins its top-q membership columns, q being its label count.
inline Cover top_q_cover(const DenseMatrix& membership, const DenseMatrix& labels,
                         const std::vector<std::size_t>& nodes) {
  Cover c(membership.cols());
  for (std::size_t a = 0; a < nodes.size(); ++a) {
    std::size_t q = 0;
    for (double v : labels.row(nodes[a])) q += v != 0.0;
    for (std::size_t k : top_q(membership.row(a), q)) c[k].push_back(a);
  }
  std::erase_if(c, [](const auto& comm) { return comm.empty(); });
  return c;
}

} // namespace report_detail

/// Clustering quality of embeddings restricted to `nodes`: k-means and NMI
/// for single-label data, fuzzy c-means with top-q covers and ONMI for
/// multi-label data.
inline double nmi_n(const DenseMatrix& embeddings, const DenseMatrix& labels,
                    const std::vector<std::size_t>& nodes, std::size_t k, bool multi_label,
                    std::uint64_t seed) {
  if (k < 2) throw ParameterError("NMI-N needs K >= 2");
  if (k > nodes.size()) {
    throw ValidationError("NMI-N with K=" + std::to_string(k) + " on " +
                          std::to_string(nodes.size()) + " test nodes");
  }
  const DenseMatrix x = report_detail::gather_rows(embeddings, nodes);
  if (!multi_label) {
    KMeansOptions opt;
    opt.seed = seed;
    return nmi(kmeans(x, k, opt).labels, report_detail::truth_partition(labels, nodes));
  }
  FuzzyCMeansOptions opt;
  opt.seed = seed;
  const DenseMatrix u = fuzzy_cmeans(x, k, opt);
  return onmi(report_detail::top_q_cover(u, labels, nodes), report_detail::truth_cover(labels, nodes),
              nodes.size());
}

/// Clustering quality of one membership matrix (rows are all nodes) on `nodes`.
inline double membership_nmi(const DenseMatrix& membership, const DenseMatrix& labels,
                             const std::vector<std::size_t>& nodes, bool multi_label) {
  const DenseMatrix h = report_detail::gather_rows(membership, nodes);
  if (!multi_label) {
    std::vector<std::size_t> pred;
    for (std::size_t a = 0; a < h.rows(); ++a) pred.push_back(argmax_row(h.row(a)));
    return nmi(pred, report_detail::truth_partition(labels, nodes));
  }
  return onmi(report_detail::top_q_cover(h, labels, nodes), report_detail::truth_cover(labels, nodes),
              nodes.size());
}

struct NmiC {
  double mean = 0.0;
  std::vector<double> per_relation;
};

/// NMI of the relation-averaged cluster memberships, plus each relation's own.
inline NmiC nmi_c(const std::vector<DenseMatrix>& assignments, const DenseMatrix& labels,
                  const std::vector<std::size_t>& nodes, bool multi_label) {
  if (assignments.empty()) throw ValidationError("NMI-C needs cluster assignments");
  DenseMatrix mean(assignments.front().rows(), assignments.front().cols());
  NmiC out;
  for (const auto& h : assignments) {
    if (!h.same_shape(mean)) throw DimensionError("cluster assignments differ in shape");
    for (std::size_t i = 0; i < h.data().size(); ++i) {
      mean.data()[i] += h.data()[i] / static_cast<double>(assignments.size());
    }
    out.per_relation.push_back(membership_nmi(h, labels, nodes, multi_label));
  }
  out.mean = membership_nmi(mean, labels, nodes, multi_label);
  return out;
}

/// All metrics on the labeled test nodes for the given parameters.
///
/// Similarity search queries every labeled node against the others. A
/// zero-norm embedding skips it and leaves a note instead of failing.
template <typename T>
EvalReport evaluate(const MultiplexGraph& g, const Split& split, const ModelParams<T>& params,
                    const TrainConfig& cfg) {
  const Problem<T> prob = Problem<T>::build(g, split.train, cfg.epsilon);
  const Inference inf = infer(prob, params, cfg.summary_mode);
  const std::vector<std::size_t> test = labeled_subset(g, split.test);
  EvalReport r;
  r.config_hash = config_hash(cfg);
  r.split_seed = split.seed;
  r.eval_nodes = test.size();
  const F1Scores f = f1_scores(inf.predictions, g.labels, test, g.multi_label);
  r.micro_f1 = f.micro;
  r.macro_f1 = f.macro;
  r.nmi_n = nmi_n(inf.consensus, g.labels, test, g.num_labels(), g.multi_label, cfg.seed);
  if (g.multi_label) r.onmi = r.nmi_n;
  const NmiC c = nmi_c(inf.assignments, g.labels, test, g.multi_label);
  r.nmi_c = c.mean;
  r.nmi_c_per_relation = c.per_relation;
  try {
    r.sim_search = similarity_search(inf.consensus, g.labels, g.labeled_nodes, kDefaultSearchKs,
                                     g.multi_label);
  } catch (const ValidationError& e) {
    r.notes.push_back(std::string("similarity search skipped: ") + e.what());
  }
  return r;
}

inline nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json sim = nlohmann::json::object();
  for (const auto& [k, v] : r.sim_search) sim[std::to_string(k)] = v;
  nlohmann::json j = {{"micro_f1", r.micro_f1},
                      {"macro_f1", r.macro_f1},
                      {"nmi_n", r.nmi_n},
                      {"nmi_c", r.nmi_c},
                      {"nmi_c_per_relation", r.nmi_c_per_relation},
                      {"onmi", r.onmi ? nlohmann::json(*r.onmi) : nlohmann::json(nullptr)},
                      {"sim_search", sim},
                      {"config_hash", r.config_hash},
                      {"split_seed", r.split_seed},
                      {"eval_nodes", r.eval_nodes},
                      {"notes", r.notes}};
  return j;
}

/// Two-column text table, values with 4 decimals.
inline void write_table(std::ostream& out, const EvalReport& r) {
  std::vector<std::pair<std::string, std::string>> rows;
  auto fixed = [](double v) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(4) << v;
    return s.str();
  };
  rows.emplace_back("micro_f1", fixed(r.micro_f1));
  rows.emplace_back("macro_f1", fixed(r.macro_f1));
  rows.emplace_back("nmi_n", fixed(r.nmi_n));
  rows.emplace_back("nmi_c", fixed(r.nmi_c));
  for (std::size_t i = 0; i < r.nmi_c_per_relation.size(); ++i) {
    rows.emplace_back("nmi_c[" + std::to_string(i) + "]", fixed(r.nmi_c_per_relation[i]));
  }
  if (r.onmi) rows.emplace_back("onmi", fixed(*r.onmi));
  for (const auto& [k, v] : r.sim_search) rows.emplace_back("sim@" + std::to_string(k), fixed(v));
  rows.emplace_back("config_hash", r.config_hash);
  rows.emplace_back("split_seed", std::to_string(r.split_seed));
  rows.emplace_back("eval_nodes", std::to_string(r.eval_nodes));
  std::size_t w = 0;
  for (const auto& row : rows) w = std::max(w, row.first.size());
  for (const auto& [k, v] : rows) out << std::left << std::setw(static_cast<int>(w) + 2) << k << v << '\n';
  for (const auto& n : r.notes) out << "note: " << n << '\n';
}

/// Node id followed by the embedding row, tab separated.
inline void write_embeddings(std::ostream& out, const DenseMatrix& z) {
  for (std::size_t i = 0; i < z.rows(); ++i) {
    out << i;
    for (double v : z.row(i)) {
      char buf[64];
      auto res = std::to_chars(buf, buf + sizeof(buf), v);
      out << '\t' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
    }
    out << '\n';
  }
}

} // namespace mplex
