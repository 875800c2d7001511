#pragma once

#include <cstdint>
#include <set>
#include <string>

#include "json.hpp"
#include "mplex/error.hpp"
#include "mplex/model/params.hpp"
#include "mplex/objective/losses.hpp"

namespace mplex {

enum class OptimizerKind { adam, sgd };

inline std::string to_string(OptimizerKind k) { return k == OptimizerKind::adam ? "adam" : "sgd"; }

inline OptimizerKind optimizer_from_string(const std::string& s) {
  if (s == "adam") return OptimizerKind::adam;
  if (s == "sgd") return OptimizerKind::sgd;
  throw ParameterError("unknown optimizer '" + s + "' (expected adam or sgd)");
}

/// Everything that determines a training run.
struct TrainConfig {
  double learning_rate = 0.001;
  double weight_decay = 1e-4;
  std::size_t max_epochs = 10000;
  std::size_t patience = 20;
  std::size_t hidden = 64;
  std::size_t gcn_layers = 2;
  /// 0 means one cluster per label.
  std::size_t clusters = 0;
  double epsilon = 3.0;
  std::size_t negatives = 1;
  Coefficients coefficients;
  std::uint64_t seed = 0;
  SummaryMode summary_mode = SummaryMode::cluster;
  OptimizerKind optimizer = OptimizerKind::adam;
  /// 64 or 32 bit arithmetic.
  int precision = 64;

  std::size_t resolved_clusters(std::size_t num_labels) const {
    return clusters == 0 ? num_labels : clusters;
  }

  void validate() const {
    if (max_epochs < 1) throw ParameterError("max_epochs must be >= 1");
    if (patience < 1) throw ParameterError("patience must be >= 1");
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
      throw ParameterError("learning_rate must be finite and >= 0");
    }
    if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) {
      throw ParameterError("weight_decay must be finite and >= 0");
    }
    if (hidden < 1) throw ParameterError("hidden must be >= 1");
    if (gcn_layers < 1) throw ParameterError("gcn_layers must be >= 1");
    if (clusters == 1) throw ParameterError("clusters must be >= 2 (or 0 for one per label)");
    if (!(epsilon > 0.0)) throw ParameterError("epsilon must be > 0");
    if (negatives < 1) throw ParameterError("negatives must be >= 1");
    if (precision != 32 && precision != 64) throw ParameterError("precision must be 32 or 64");
    coefficients.validate();
  }

  bool operator==(const TrainConfig&) const = default;
};

inline nlohmann::json to_json(const TrainConfig& c) {
  const auto& k = c.coefficients;
  return nlohmann::json{{"learning_rate", c.learning_rate},
                        {"weight_decay", c.weight_decay},
                        {"max_epochs", c.max_epochs},
                        {"patience", c.patience},
                        {"hidden", c.hidden},
                        {"gcn_layers", c.gcn_layers},
                        {"clusters", c.clusters},
                        {"epsilon", c.epsilon},
                        {"negatives", c.negatives},
                        {"alpha", k.alpha},
                        {"beta", k.beta},
                        {"gamma", k.gamma},
                        {"zeta_learn", k.zeta_learn},
                        {"zeta_orth", k.zeta_orth},
                        {"theta", k.theta},
                        {"seed", c.seed},
                        {"summary_mode", to_string(c.summary_mode)},
                        {"optimizer", to_string(c.optimizer)},
                        {"precision", c.precision}};
}

/// Overlays the keys present in `j` onto `base`. Unknown keys are rejected.
/// A "zeta" key sets both cluster coefficients.
inline TrainConfig config_from_json(const nlohmann::json& j, TrainConfig base = {}) {
  static const std::set<std::string> known = {
      "learning_rate", "weight_decay", "max_epochs", "patience", "hidden",     "gcn_layers",
      "clusters",      "epsilon",      "negatives",  "alpha",    "beta",       "gamma",
      "zeta",          "zeta_learn",   "zeta_orth",  "theta",    "seed",       "summary_mode",
      "optimizer",     "precision"};
  if (!j.is_object()) throw ParameterError("config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw ParameterError("unknown config key '" + key + "'");
  }
  try {
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("learning_rate", base.learning_rate);
    get("weight_decay", base.weight_decay);
    get("max_epochs", base.max_epochs);
    get("patience", base.patience);
    get("hidden", base.hidden);
    get("gcn_layers", base.gcn_layers);
    get("clusters", base.clusters);
    get("epsilon", base.epsilon);
    get("negatives", base.negatives);
    get("alpha", base.coefficients.alpha);
    get("beta", base.coefficients.beta);
    get("gamma", base.coefficients.gamma);
    if (j.contains("zeta")) {
      base.coefficients.zeta_learn = base.coefficients.zeta_orth = j.at("zeta").get<double>();
    }
    get("zeta_learn", base.coefficients.zeta_learn);
    get("zeta_orth", base.coefficients.zeta_orth);
    get("theta", base.coefficients.theta);
    get("seed", base.seed);
    get("precision", base.precision);
    if (j.contains("summary_mode")) {
      base.summary_mode = summary_mode_from_string(j.at("summary_mode").get<std::string>());
    }
    if (j.contains("optimizer")) {
      base.optimizer = optimizer_from_string(j.at("optimizer").get<std::string>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(std::string("config: ") + e.what());
  }
  return base;
}

/// 64-bit FNV-1a, hex encoded.
inline std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[h & 0xf];
    h >>= 4;
  }
  return out;
}

inline std::string config_hash(const TrainConfig& c) { return fnv1a_hex(to_json(c).dump()); }

} // namespace mplex
