#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "mplex/error.hpp"
#include "mplex/model/params.hpp"
#include "mplex/train/config.hpp"

namespace mplex {

/// Parameters plus the config and epoch they came from.
struct Checkpoint {
  ModelParams<double> params;
  TrainConfig config;
  std::size_t epoch = 0;
};

inline nlohmann::json dims_to_json(const ModelDims& d) {
  return {{"num_nodes", d.num_nodes},   {"num_features", d.num_features},
          {"num_labels", d.num_labels}, {"num_relations", d.num_relations},
          {"hidden", d.hidden},         {"gcn_layers", d.gcn_layers},
          {"clusters", d.clusters}};
}

inline ModelDims dims_from_json(const nlohmann::json& j) {
  ModelDims d;
  d.num_nodes = j.at("num_nodes").get<std::size_t>();
  d.num_features = j.at("num_features").get<std::size_t>();
  d.num_labels = j.at("num_labels").get<std::size_t>();
  d.num_relations = j.at("num_relations").get<std::size_t>();
  d.hidden = j.at("hidden").get<std::size_t>();
  d.gcn_layers = j.at("gcn_layers").get<std::size_t>();
  d.clusters = j.at("clusters").get<std::size_t>();
  return d;
}

/// Throws DimensionError naming the first field where `got` differs.
inline void require_same_dims(const ModelDims& expected, const ModelDims& got) {
  const std::pair<const char*, std::pair<std::size_t, std::size_t>> fields[] = {
      {"num_nodes", {expected.num_nodes, got.num_nodes}},
      {"num_features", {expected.num_features, got.num_features}},
      {"num_labels", {expected.num_labels, got.num_labels}},
      {"num_relations", {expected.num_relations, got.num_relations}},
      {"hidden", {expected.hidden, got.hidden}},
      {"gcn_layers", {expected.gcn_layers, got.gcn_layers}},
      {"clusters", {expected.clusters, got.clusters}}};
  for (const auto& [name, v] : fields) {
    if (v.first != v.second) {
      throw DimensionError(std::string("checkpoint ") + name + " is " + std::to_string(v.second) +
                           " but the dataset needs " + std::to_string(v.first));
    }
  }
}

template <typename T>
nlohmann::json checkpoint_to_json(const ModelParams<T>& params, const TrainConfig& cfg,
                                  std::size_t epoch) {
  nlohmann::json tensors = nlohmann::json::array();
  params.for_each([&tensors](const Matrix<T>& m) {
    std::vector<double> data(m.data().begin(), m.data().end());
    tensors.push_back({{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}});
  });
  return {{"format", "mplex-checkpoint"},
          {"version", 1},
          {"epoch", epoch},
          {"config", to_json(cfg)},
          {"dims", dims_to_json(params.dims())},
          {"tensors", std::move(tensors)}};
}

inline Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "mplex-checkpoint") {
      throw LoadError("not a checkpoint");
    }
    Checkpoint c;
    c.epoch = j.at("epoch").get<std::size_t>();
    c.config = config_from_json(j.at("config"));
    const ModelDims dims = dims_from_json(j.at("dims"));
    c.params = ModelParams<double>::init(dims, 0);
    const auto& tensors = j.at("tensors");
    if (tensors.size() != c.params.tensor_count()) {
      throw LoadError("checkpoint has " + std::to_string(tensors.size()) + " tensors, expected " +
                      std::to_string(c.params.tensor_count()));
    }
    std::size_t k = 0;
    c.params.for_each([&](DenseMatrix& m) {
      const auto& t = tensors.at(k);
      const auto rows = t.at("rows").get<std::size_t>();
      const auto cols = t.at("cols").get<std::size_t>();
      if (rows != m.rows() || cols != m.cols()) {
        throw LoadError("checkpoint tensor " + std::to_string(k) + " has shape " +
                        Matrix<double>::shape_string(rows, cols) + ", expected " + m.shape());
      }
      m = DenseMatrix(rows, cols, t.at("data").get<std::vector<double>>());
      ++k;
    });
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("checkpoint: ") + e.what());
  }
}

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const ModelParams<T>& params,
                     const TrainConfig& cfg, std::size_t epoch) {
  std::ofstream out(path);
  if (!out) throw LoadError("cannot write " + path.string());
  out << checkpoint_to_json(params, cfg, epoch).dump() << '\n';
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(path.string() + ": " + e.what());
  }
  return checkpoint_from_json(j);
}

} // namespace mplex
