#pragma once

#include <cstdint>
#include <functional>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "mplex/eval/classification.hpp"
#include "mplex/graph/multiplex_graph.hpp"
#include "mplex/graph/split.hpp"
#include "mplex/model/forward.hpp"
#include "mplex/model/problem.hpp"
#include "mplex/objective/losses.hpp"
#include "mplex/random.hpp"
#include "mplex/train/config.hpp"
#include "mplex/train/optimizer.hpp"

namespace mplex {

struct EpochRecord {
  std::size_t epoch = 0;
  LossBreakdown loss;
  double val_micro_f1 = 0.0;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_val = 0.0;
  std::string stop_reason;

  /// CSV with one row per epoch.
  void write_csv(std::ostream& out) const {
    out << "epoch,mi,cross,cons,clus_learn,clus_orth,sup,total,val_micro_f1\n";
    auto num = [](double v) {
      std::ostringstream s;
      s << std::setprecision(12) << v;
      return s.str();
    };
    for (const auto& e : epochs) {
      out << e.epoch << ',' << num(e.loss.mi) << ',' << num(e.loss.cross) << ','
          << num(e.loss.cons) << ',' << num(e.loss.clus_learn) << ',' << num(e.loss.clus_orth)
          << ',' << num(e.loss.sup) << ',' << num(e.loss.total) << ',' << num(e.val_micro_f1)
          << '\n';
    }
  }
};

template <typename T>
struct TrainResult {
  ModelParams<T> best;
  ModelParams<T> last;
  TrainLog log;
};

/// Seeds derived from the run seed, one per consumer.
struct SeedPlan {
  std::uint64_t init;
  std::uint64_t epochs;

  static SeedPlan from(std::uint64_t seed) {
    Rng master(seed);
    SeedPlan p;
    p.init = master.next();
    p.epochs = master.next();
    return p;
  }
};

inline ModelDims model_dims(const MultiplexGraph& g, const TrainConfig& cfg) {
  ModelDims d;
  d.num_nodes = g.num_nodes;
  d.num_features = g.num_features();
  d.num_labels = g.num_labels();
  d.num_relations = g.num_relations();
  d.hidden = cfg.hidden;
  d.gcn_layers = cfg.gcn_layers;
  d.clusters = cfg.resolved_clusters(g.num_labels());
  return d;
}

/// Called after every epoch with the record just logged.
using EpochCallback = std::function<void(const EpochRecord&)>;

/// Full-graph transductive training, one optimizer step per epoch.
///
/// Each epoch draws fresh corruption permutations and a negative stride,
/// evaluates the objective, and scores validation Micro-F1 on the same
/// parameters. The best epoch has the highest F1, ties going to the lower
/// total loss. Only a strictly higher F1 resets the patience counter.
/// `best` holds exactly the parameters evaluated at the best epoch and
/// `last` those of the final logged epoch.
template <typename T>
TrainResult<T> train(const MultiplexGraph& g, const Split& split, const TrainConfig& cfg,
                     const EpochCallback& on_epoch = {}) {
  cfg.validate();
  validate_split(g, split);
  const Problem<T> prob = Problem<T>::build(g, split.train, cfg.epsilon);
  const SeedPlan seeds = SeedPlan::from(cfg.seed);
  ModelParams<T> params = ModelParams<T>::init(model_dims(g, cfg), seeds.init);
  Optimizer<T> opt(cfg.optimizer, cfg.learning_rate, cfg.weight_decay);
  Rng epoch_rng(seeds.epochs);

  const DenseMatrix& truth = g.labels;
  TrainResult<T> res;
  double best_total = 0.0;
  std::size_t since_best = 0;
  ad::Tape<T> tape;
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::vector<std::vector<std::size_t>> perms;
    for (std::size_t r = 0; r < prob.num_relations; ++r) perms.push_back(epoch_rng.permutation(g.num_nodes));
    NegativeSampling neg;
    neg.count = cfg.negatives;
    neg.stride = g.num_nodes > 1 ? 1 + epoch_rng.below(g.num_nodes - 1) : 0;

    tape.reset();
    const ParamVars<T> pv = bind(tape, params);
    Objective<T> obj;
    try {
      const ForwardState<T> st = forward(prob, pv, perms, cfg.summary_mode);
      obj = compute_objective(prob, pv, st, neg, cfg.coefficients);
    } catch (const NumericError& e) {
      throw NumericError("training diverged at epoch " + std::to_string(epoch) + ": " + e.what());
    }
    if (const std::string bad = obj.breakdown.first_non_finite(); !bad.empty()) {
      throw NumericError("training diverged at epoch " + std::to_string(epoch) +
                         ": non-finite loss term '" + bad + "'");
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = obj.breakdown;
    const DenseMatrix probs = predict_values(params, g.multi_label).template cast<double>();
    rec.val_micro_f1 =
        f1_scores(probs, truth, std::span<const std::size_t>(split.val), g.multi_label).micro;
    res.log.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);

    const bool higher = epoch == 1 || rec.val_micro_f1 > res.log.best_val;
    if (higher || (rec.val_micro_f1 == res.log.best_val && rec.loss.total < best_total)) {
      res.log.best_val = rec.val_micro_f1;
      res.log.best_epoch = epoch;
      best_total = rec.loss.total;
      res.best = params;
    }
    if (higher) {
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      res.log.stop_reason = "early_stop";
      break;
    }
    if (epoch == cfg.max_epochs) {
      res.log.stop_reason = "max_epochs";
      break;
    }

    tape.backward(obj.total);
    std::vector<const Matrix<T>*> grads;
    pv.for_each([&grads](const ad::Var<T>& v) { grads.push_back(&v.grad()); });
    opt.step(params, grads);
    if (!params.all_finite()) {
      throw NumericError("training diverged at epoch " + std::to_string(epoch) +
                         ": non-finite parameters after update");
    }
  }
  res.last = params;
  return res;
}

/// Trains in the precision named by `cfg.precision`; parameters come back
/// widened to double.
inline TrainResult<double> train_any(const MultiplexGraph& g, const Split& split,
                                     const TrainConfig& cfg, const EpochCallback& on_epoch = {}) {
  if (cfg.precision == 32) {
    TrainResult<float> r = train<float>(g, split, cfg, on_epoch);
    return {r.best.cast<double>(), r.last.cast<double>(), std::move(r.log)};
  }
  return train<double>(g, split, cfg, on_epoch);
}

} // namespace mplex
