#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "mplex/error.hpp"
#include "mplex/train/trainer.hpp"

namespace mplex {

/// Candidate values per searched field. An axis left empty keeps the base
/// config's value.
struct GridSpec {
  std::vector<double> gamma;
  std::vector<double> zeta;
  std::vector<double> theta;
  std::vector<double> learning_rate;
};

/// Cartesian product of the axes over `base`, in gamma, zeta, theta, lr
/// nesting order.
inline std::vector<TrainConfig> expand_grid(const TrainConfig& base, const GridSpec& spec) {
  auto axis = [](const std::vector<double>& v, double fallback) {
    return v.empty() ? std::vector<double>{fallback} : v;
  };
  std::vector<TrainConfig> cells;
  for (double g : axis(spec.gamma, base.coefficients.gamma)) {
    for (double z : axis(spec.zeta, base.coefficients.zeta_learn)) {
      for (double t : axis(spec.theta, base.coefficients.theta)) {
        for (double lr : axis(spec.learning_rate, base.learning_rate)) {
          TrainConfig c = base;
          c.coefficients.gamma = g;
          if (!spec.zeta.empty()) c.coefficients.zeta_learn = c.coefficients.zeta_orth = z;
          c.coefficients.theta = t;
          c.learning_rate = lr;
          cells.push_back(c);
        }
      }
    }
  }
  return cells;
}

struct GridCell {
  TrainConfig config;
  bool diverged = false;
  std::string error;
  double val_micro_f1 = 0.0;
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;
};

struct GridResult {
  std::vector<GridCell> cells;
  std::size_t selected = 0;
  TrainResult<double> selected_result;

  const TrainConfig& best_config() const { return cells.at(selected).config; }

  /// CSV table, one row per cell.
  void write_csv(std::ostream& out) const {
    out << "cell,gamma,zeta_learn,zeta_orth,theta,learning_rate,status,val_micro_f1,best_epoch,"
           "epochs,selected\n";
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const auto& c = cells[i];
      const auto& k = c.config.coefficients;
      out << i << ',' << k.gamma << ',' << k.zeta_learn << ',' << k.zeta_orth << ',' << k.theta << ','
          << c.config.learning_rate << ',' << (c.diverged ? "diverged" : "ok") << ','
          << c.val_micro_f1 << ',' << c.best_epoch << ',' << c.epochs_run << ','
          << (i == selected ? 1 : 0) << '\n';
    }
  }
};

/// Trains every cell and keeps the one with the highest validation
/// Micro-F1; ties go to the earlier cell. Cells that diverge are marked
/// and skipped.
inline GridResult grid_search(const MultiplexGraph& g, const Split& split,
                              const std::vector<TrainConfig>& cells) {
  if (cells.empty()) throw ParameterError("grid search over an empty grid");
  GridResult out;
  bool have = false;
  for (const auto& cfg : cells) {
    GridCell cell;
    cell.config = cfg;
    try {
      TrainResult<double> r = train_any(g, split, cfg);
      cell.val_micro_f1 = r.log.best_val;
      cell.best_epoch = r.log.best_epoch;
      cell.epochs_run = r.log.epochs.size();
      if (!have || cell.val_micro_f1 > out.cells[out.selected].val_micro_f1) {
        out.selected = out.cells.size();
        out.selected_result = std::move(r);
        have = true;
      }
    } catch (const NumericError& e) {
      cell.diverged = true;
      cell.error = e.what();
    }
    out.cells.push_back(std::move(cell));
  }
  if (!have) throw NumericError("every grid cell diverged");
  return out;
}

inline GridResult grid_search(const MultiplexGraph& g, const Split& split, const TrainConfig& base,
                              const GridSpec& spec) {
  for (const auto* axis : {&spec.gamma, &spec.zeta, &spec.theta, &spec.learning_rate}) {
    for (double v : *axis) {
      if (!std::isfinite(v)) throw ParameterError("grid values must be finite");
    }
  }
  return grid_search(g, split, expand_grid(base, spec));
}

} // namespace mplex
