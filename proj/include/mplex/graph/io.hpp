#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "mplex/error.hpp"
#include "mplex/graph/multiplex_graph.hpp"
#include "mplex/graph/split.hpp"

namespace mplex {

namespace io_detail {

namespace fs = std::filesystem;

inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start <= line.size()) {
    std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) tab = line.size();
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return out;
}

inline std::string trim_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

struct LineReader {
  fs::path path;
  std::ifstream in;
  std::size_t line_no = 0;

  explicit LineReader(fs::path p) : path(std::move(p)), in(path) {
    if (!in) {
      throw LoadError("cannot open " + path.string());
    }
  }

  /// Next non-empty, non-comment line split on tabs.
  bool next(std::vector<std::string_view>& fields, std::string& storage) {
    while (std::getline(in, storage)) {
      ++line_no;
      storage = trim_cr(std::move(storage));
      if (storage.empty() || storage.front() == '#') continue;
      fields = split_fields(storage);
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& why) const {
    throw LoadError(path.filename().string() + ":" + std::to_string(line_no) + ": " + why);
  }

  std::size_t parse_id(std::string_view s, std::size_t limit) const {
    std::size_t v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
      fail("bad node id '" + std::string(s) + "'");
    }
    if (v >= limit) {
      fail("id " + std::to_string(v) + " out of range [0, " + std::to_string(limit) + ")");
    }
    return v;
  }

  double parse_real(std::string_view s) const {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
      fail("bad number '" + std::string(s) + "'");
    }
    return v;
  }
};

inline SparseMatrix read_edges(const fs::path& path, std::size_t n) {
  LineReader rd(path);
  std::vector<Triplet<double>> t;
  std::vector<std::string_view> f;
  std::string buf;
  while (rd.next(f, buf)) {
    if (f.size() < 2 || f.size() > 3) rd.fail("expected 'src<TAB>dst[<TAB>weight]'");
    const std::size_t s = rd.parse_id(f[0], n);
    const std::size_t d = rd.parse_id(f[1], n);
    const double w = f.size() == 3 ? rd.parse_real(f[2]) : 1.0;
    if (!(w >= 0.0) || !std::isfinite(w)) rd.fail("negative or non-finite edge weight");
    t.push_back({s, d, w});
  }
  return SparseMatrix::from_triplets(n, n, std::move(t));
}

inline void write_edges(const fs::path& path, const SparseMatrix& a) {
  std::ofstream out(path);
  for (const auto& e : a.triplets()) {
    out << e.row << '\t' << e.col << '\t' << format_double(e.weight) << '\n';
  }
  if (!out) throw LoadError("failed writing " + path.string());
}

} // namespace io_detail

/// Reads the on-disk dataset layout:
///   meta.json, features.tsv, labels.tsv, edges_<relation>.tsv and optional
///   cross_<r>_<s>.tsv files. Other files are ignored.
inline MultiplexGraph load_dataset(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  using namespace io_detail;
  const fs::path meta_path = dir / "meta.json";
  if (!fs::exists(meta_path)) {
    throw LoadError("missing " + meta_path.string());
  }
  nlohmann::json meta;
  try {
    std::ifstream in(meta_path);
    meta = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw LoadError("meta.json: " + std::string(e.what()));
  }

  MultiplexGraph g;
  std::size_t num_features = 0, num_labels = 0;
  try {
    g.num_nodes = meta.at("num_nodes").get<std::size_t>();
    num_features = meta.at("num_features").get<std::size_t>();
    num_labels = meta.at("num_labels").get<std::size_t>();
    g.relations = meta.at("relations").get<std::vector<std::string>>();
    g.multi_label = meta.value("multi_label", false);
  } catch (const nlohmann::json::exception& e) {
    throw LoadError("meta.json: " + std::string(e.what()));
  }
  if (g.relations.size() < 2) {
    throw LoadError("meta.json lists " + std::to_string(g.relations.size()) +
                    " relations; a multiplex graph needs at least 2");
  }
  if (std::set<std::string>(g.relations.begin(), g.relations.end()).size() != g.relations.size()) {
    throw LoadError("meta.json has duplicate relation names");
  }

  {
    LineReader rd(dir / "features.tsv");
    g.features = DenseMatrix(g.num_nodes, num_features);
    std::vector<char> seen(g.num_nodes, 0);
    std::vector<std::string_view> f;
    std::string buf;
    while (rd.next(f, buf)) {
      if (f.size() != num_features + 1) {
        rd.fail("expected " + std::to_string(num_features + 1) + " fields, got " +
                std::to_string(f.size()));
      }
      const std::size_t id = rd.parse_id(f[0], g.num_nodes);
      if (seen[id]) rd.fail("duplicate feature row for node " + std::to_string(id));
      seen[id] = 1;
      for (std::size_t j = 0; j < num_features; ++j) g.features(id, j) = rd.parse_real(f[j + 1]);
    }
    for (std::size_t i = 0; i < g.num_nodes; ++i) {
      if (!seen[i]) throw LoadError("features.tsv: missing row for node " + std::to_string(i));
    }
  }
  {
    LineReader rd(dir / "labels.tsv");
    g.labels = DenseMatrix(g.num_nodes, num_labels);
    std::vector<std::string_view> f;
    std::string buf;
    while (rd.next(f, buf)) {
      const std::size_t id = rd.parse_id(f[0], g.num_nodes);
      for (std::size_t j = 1; j < f.size(); ++j) {
        if (f[j].empty()) continue;
        g.labels(id, rd.parse_id(f[j], num_labels)) = 1.0;
      }
    }
  }
  for (const auto& rel : g.relations) {
    const fs::path p = dir / ("edges_" + rel + ".tsv");
    if (!fs::exists(p)) throw LoadError("missing " + p.string());
    g.intra.push_back(read_edges(p, g.num_nodes));
  }
  for (std::size_t r = 0; r < g.relations.size(); ++r) {
    for (std::size_t s = 0; s < g.relations.size(); ++s) {
      if (r == s) continue;
      const fs::path p = dir / ("cross_" + g.relations[r] + "_" + g.relations[s] + ".tsv");
      if (fs::exists(p)) g.cross.emplace(RelationPair{r, s}, read_edges(p, g.num_nodes));
    }
  }
  g.refresh_labeled();
  try {
    g.validate();
  } catch (const ValidationError& e) {
    throw LoadError(e.what());
  }
  return g;
}

inline void save_dataset(const MultiplexGraph& g, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  using namespace io_detail;
  g.validate();
  fs::create_directories(dir);
  nlohmann::json meta = {{"num_nodes", g.num_nodes},
                         {"num_features", g.num_features()},
                         {"num_labels", g.num_labels()},
                         {"relations", g.relations},
                         {"multi_label", g.multi_label}};
  std::ofstream(dir / "meta.json") << meta.dump(2) << '\n';
  {
    std::ofstream out(dir / "features.tsv");
    for (std::size_t i = 0; i < g.num_nodes; ++i) {
      out << i;
      for (double v : g.features.row(i)) out << '\t' << format_double(v);
      out << '\n';
    }
  }
  {
    std::ofstream out(dir / "labels.tsv");
    for (std::size_t i = 0; i < g.num_nodes; ++i) {
      const auto ls = g.label_set(i);
      if (ls.empty()) continue;
      out << i;
      for (std::size_t q : ls) out << '\t' << q;
      out << '\n';
    }
  }
  for (std::size_t r = 0; r < g.relations.size(); ++r) {
    write_edges(dir / ("edges_" + g.relations[r] + ".tsv"), g.intra[r]);
  }
  for (const auto& [key, a] : g.cross) {
    write_edges(dir / ("cross_" + g.relations[key.first] + "_" + g.relations[key.second] + ".tsv"),
                a);
  }
}

/// Explicit split from splits.json, if the dataset ships one.
inline std::optional<Split> load_split_override(const std::filesystem::path& dir) {
  const auto p = dir / "splits.json";
  if (!std::filesystem::exists(p)) return std::nullopt;
  try {
    std::ifstream in(p);
    const auto j = nlohmann::json::parse(in);
    Split s;
    s.train = j.at("train").get<std::vector<std::size_t>>();
    s.val = j.at("val").get<std::vector<std::size_t>>();
    s.test = j.at("test").get<std::vector<std::size_t>>();
    s.seed = j.value("seed", std::uint64_t{0});
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError("splits.json: " + std::string(e.what()));
  }
}

inline void save_split(const Split& s, const std::filesystem::path& path) {
  nlohmann::json j = {{"train", s.train}, {"val", s.val}, {"test", s.test}, {"seed", s.seed}};
  std::ofstream(path) << j.dump() << '\n';
}

} // namespace mplex
