#pragma once

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mplex/eval/report.hpp"
#include "mplex/graph/io.hpp"
#include "mplex/synth/generator.hpp"
#include "mplex/train/checkpoint.hpp"
#include "mplex/train/grid.hpp"
#include "mplex/train/trainer.hpp"

namespace mplex::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitNumeric = 2;

/// Root for run directories: $MPLEX_RUNS, else ./runs.
inline fs::path runs_root() {
  if (const char* env = std::getenv("MPLEX_RUNS"); env && *env) return fs::path(env);
  return fs::path("runs");
}

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw LoadError("cannot open " + p.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw LoadError("cannot write " + p.string());
  out << bytes;
}

inline std::string file_checksum(const fs::path& p) { return fnv1a_hex(read_file(p)); }

/// Files listed in manifest.json whose checksum no longer matches.
inline std::vector<std::string> verify_manifest(const fs::path& run_dir) {
  const auto m = nlohmann::json::parse(read_file(run_dir / "manifest.json"));
  std::vector<std::string> bad;
  for (const auto& [name, sum] : m.at("artifacts").items()) {
    const fs::path p = run_dir / name;
    if (!fs::exists(p) || file_checksum(p) != sum.get<std::string>()) bad.push_back(name);
  }
  return bad;
}

/// TrainConfig fields settable from the command line; unset flags leave
/// the file or default value in place.
struct ConfigFlags {
  std::string config_file;
  std::optional<double> learning_rate, weight_decay, epsilon;
  std::optional<std::size_t> max_epochs, patience, hidden, gcn_layers, clusters, negatives;
  std::optional<double> alpha, beta, gamma, zeta, zeta_learn, zeta_orth, theta;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> summary_mode, optimizer;
  std::optional<int> precision;

  void attach(CLI::App* app) {
    app->add_option("--config", config_file, "JSON config file (keys as in config.json)");
    app->add_option("--learning-rate", learning_rate);
    app->add_option("--weight-decay", weight_decay);
    app->add_option("--max-epochs", max_epochs);
    app->add_option("--patience", patience);
    app->add_option("--hidden", hidden, "Embedding width d");
    app->add_option("--gcn-layers", gcn_layers);
    app->add_option("--clusters", clusters, "Clusters per relation (0 = one per label)");
    app->add_option("--epsilon", epsilon, "Self-loop weight");
    app->add_option("--negatives", negatives);
    app->add_option("--alpha", alpha);
    app->add_option("--beta", beta);
    app->add_option("--gamma", gamma);
    app->add_option("--zeta", zeta, "Sets both zeta-learn and zeta-orth");
    app->add_option("--zeta-learn", zeta_learn);
    app->add_option("--zeta-orth", zeta_orth);
    app->add_option("--theta", theta);
    app->add_option("--seed", seed);
    app->add_option("--summary-mode", summary_mode, "cluster or mean_pool");
    app->add_option("--optimizer", optimizer, "adam or sgd");
    app->add_option("--precision", precision, "32 or 64");
  }

  /// defaults < config file < flags.
  TrainConfig resolve() const {
    TrainConfig c;
    if (!config_file.empty()) {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(read_file(config_file));
      } catch (const nlohmann::json::exception& e) {
        throw ParameterError(config_file + ": " + e.what());
      }
      c = config_from_json(j, c);
    }
    auto set = [](const auto& flag, auto& field) {
      if (flag) field = *flag;
    };
    set(learning_rate, c.learning_rate);
    set(weight_decay, c.weight_decay);
    set(max_epochs, c.max_epochs);
    set(patience, c.patience);
    set(hidden, c.hidden);
    set(gcn_layers, c.gcn_layers);
    set(clusters, c.clusters);
    set(epsilon, c.epsilon);
    set(negatives, c.negatives);
    set(alpha, c.coefficients.alpha);
    set(beta, c.coefficients.beta);
    set(gamma, c.coefficients.gamma);
    set(zeta, c.coefficients.zeta_learn);
    set(zeta, c.coefficients.zeta_orth);
    set(zeta_learn, c.coefficients.zeta_learn);
    set(zeta_orth, c.coefficients.zeta_orth);
    set(theta, c.coefficients.theta);
    set(seed, c.seed);
    set(precision, c.precision);
    if (summary_mode) c.summary_mode = summary_mode_from_string(*summary_mode);
    if (optimizer) c.optimizer = optimizer_from_string(*optimizer);
    c.validate();
    return c;
  }
};

/// splits.json in the dataset wins; otherwise a seeded split.
inline Split resolve_split(const MultiplexGraph& g, const fs::path& dataset,
                           std::optional<std::uint64_t> split_seed, const TrainConfig& cfg) {
  if (auto s = load_split_override(dataset)) {
    validate_split(g, *s);
    return *s;
  }
  return make_split(g, split_seed.value_or(cfg.seed));
}

struct TrainOutcome {
  TrainResult<double> result;
  EvalReport report;
};

/// Trains and writes every run artifact plus the manifest into `run_dir`.
inline TrainOutcome train_run(const MultiplexGraph& g, const fs::path& dataset, const Split& split,
                              const TrainConfig& cfg, const fs::path& run_dir) {
  using clock = std::chrono::steady_clock;
  fs::create_directories(run_dir);
  write_file(run_dir / "config.json", to_json(cfg).dump(2) + "\n");
  save_split(split, run_dir / "split.json");

  const auto t0 = clock::now();
  TrainOutcome o{train_any(g, split, cfg), {}};
  const auto t1 = clock::now();
  o.report = evaluate(g, split, o.result.best, cfg);
  const auto t2 = clock::now();

  {
    std::ofstream log(run_dir / "log.csv", std::ios::binary);
    o.result.log.write_csv(log);
  }
  save_checkpoint(run_dir / "best.ckpt", o.result.best, cfg, o.result.log.best_epoch);
  save_checkpoint(run_dir / "last.ckpt", o.result.last, cfg, o.result.log.epochs.size());
  {
    std::ofstream emb(run_dir / "embeddings.tsv", std::ios::binary);
    write_embeddings(emb, o.result.best.consensus);
  }
  write_file(run_dir / "report.json", to_json(o.report).dump(2) + "\n");
  {
    std::ofstream txt(run_dir / "report.txt", std::ios::binary);
    write_table(txt, o.report);
  }

  nlohmann::json artifacts = nlohmann::json::object();
  for (const char* name : {"config.json", "split.json", "log.csv", "best.ckpt", "last.ckpt",
                           "embeddings.tsv", "report.json", "report.txt"}) {
    artifacts[name] = file_checksum(run_dir / name);
  }
  auto secs = [](auto a, auto b) { return std::chrono::duration<double>(b - a).count(); };
  const nlohmann::json manifest = {
      {"command", "train"},
      {"config", to_json(cfg)},
      {"config_hash", config_hash(cfg)},
      {"dataset", fs::absolute(dataset).lexically_normal().string()},
      {"run_dir", fs::absolute(run_dir).lexically_normal().string()},
      {"split_seed", split.seed},
      {"best_epoch", o.result.log.best_epoch},
      {"epochs", o.result.log.epochs.size()},
      {"stop_reason", o.result.log.stop_reason},
      {"timings", {{"train_seconds", secs(t0, t1)}, {"eval_seconds", secs(t1, t2)}}},
      {"artifacts", artifacts}};
  write_file(run_dir / "manifest.json", manifest.dump(2) + "\n");
  return o;
}

/// Train and evaluate without writing anything.
inline EvalReport train_and_evaluate(const MultiplexGraph& g, const Split& split, const TrainConfig& cfg) {
  const TrainResult<double> r = train_any(g, split, cfg);
  return evaluate(g, split, r.best, cfg);
}

inline std::string fmt(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(4) << v;
  return s.str();
}

struct AblationRow {
  std::string variant;
  EvalReport report;
};

/// Base config first, then each ablated variant, all on the same split and seed.
inline std::vector<std::pair<std::string, TrainConfig>> ablation_variants(const std::string& which,
                                                                          const TrainConfig& base) {
  std::vector<std::pair<std::string, TrainConfig>> v;
  auto with = [&base](auto&& edit) {
    TrainConfig c = base;
    edit(c);
    return c;
  };
  if (which == "summary-mode") {
    v.emplace_back("cluster", with([](TrainConfig& c) { c.summary_mode = SummaryMode::cluster; }));
    v.emplace_back("mean_pool", with([](TrainConfig& c) { c.summary_mode = SummaryMode::mean_pool; }));
    return v;
  }
  v.emplace_back("base", base);
  if (which == "cross") {
    v.emplace_back("-cross", with([](TrainConfig& c) { c.coefficients.beta = 0; }));
  } else if (which == "cons") {
    v.emplace_back("-cons", with([](TrainConfig& c) { c.coefficients.gamma = 0; }));
  } else if (which == "cons+cross") {
    v.emplace_back("-cross", with([](TrainConfig& c) { c.coefficients.beta = 0; }));
    v.emplace_back("-(cons+cross)", with([](TrainConfig& c) {
                     c.coefficients.beta = 0;
                     c.coefficients.gamma = 0;
                   }));
  } else if (which == "clus-learn") {
    v.emplace_back("-clus_learn", with([](TrainConfig& c) { c.coefficients.zeta_learn = 0; }));
  } else if (which == "clus-orth") {
    v.emplace_back("-clus_orth", with([](TrainConfig& c) { c.coefficients.zeta_orth = 0; }));
  } else {
    throw ParameterError("unknown ablation '" + which +
                         "' (expected cross, cons, cons+cross, clus-learn, clus-orth or summary-mode)");
  }
  return v;
}

inline void write_ablation_csv(std::ostream& out, const std::vector<AblationRow>& rows) {
  out << "variant,micro_f1,macro_f1,nmi_n,delta_micro_f1,delta_nmi_n\n";
  for (const auto& r : rows) {
    const EvalReport& b = rows.front().report;
    out << r.variant << ',' << fmt(r.report.micro_f1) << ',' << fmt(r.report.macro_f1) << ','
        << fmt(r.report.nmi_n) << ',' << fmt(r.report.micro_f1 - b.micro_f1) << ','
        << fmt(r.report.nmi_n - b.nmi_n) << '\n';
  }
}

/// Writes `text` to `path` when given, and to `out` always.
inline void emit(std::ostream& out, const std::string& path, const std::string& text) {
  if (!path.empty()) write_file(path, text);
  out << text;
}

inline std::vector<double> parse_values(const std::string& s, const char* what) {
  std::vector<double> v;
  std::stringstream in(s);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    if (tok.empty()) continue;
    try {
      std::size_t used = 0;
      v.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ParameterError(std::string("bad value '") + tok + "' in " + what);
    }
  }
  return v;
}

/// Entry point shared by the binary and the tests. `args` excludes the
/// program name.
inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Semi-supervised multiplex network embedding"};
  app.require_subcommand(1);
  // A repeated flag keeps its last value.
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  // synth
  SynthConfig sc;
  std::string synth_out, cross_mode = "identity";
  auto* synth = app.add_subcommand("synth", "Generate a planted-partition multiplex dataset");
  synth->add_option("--out", synth_out, "Output dataset directory")->required();
  synth->add_option("--num-nodes", sc.num_nodes);
  synth->add_option("--num-classes", sc.num_classes);
  synth->add_option("--num-relations", sc.num_relations);
  synth->add_option("--p-in", sc.p_in);
  synth->add_option("--p-out", sc.p_out);
  synth->add_option("--rewire,--rho", sc.rewire, "Fraction of edges rewired per relation");
  synth->add_option("--cross-mode", cross_mode, "none, identity or sampled");
  synth->add_option("--p-cross", sc.p_cross);
  synth->add_option("--num-features", sc.num_features);
  synth->add_option("--signal", sc.signal);
  synth->add_option("--noise", sc.noise);
  synth->add_option("--label-rate", sc.label_rate);
  synth->add_option("--seed", sc.seed);

  // train
  ConfigFlags train_flags;
  std::string train_dataset, run_dir;
  std::optional<std::uint64_t> train_split_seed;
  auto* train = app.add_subcommand("train", "Train, evaluate and write a run directory");
  train->add_option("--dataset", train_dataset)->required();
  train->add_option("--run-dir", run_dir, "Run directory (default under $MPLEX_RUNS)");
  train->add_option("--split-seed", train_split_seed, "Split seed (default: --seed)");
  train_flags.attach(train);

  // eval
  std::string eval_run, eval_ckpt, eval_dataset, eval_which = "best", eval_out;
  std::optional<std::uint64_t> eval_split_seed;
  bool eval_json = false;
  auto* eval = app.add_subcommand("eval", "Recompute the report from stored parameters");
  auto* eval_run_opt = eval->add_option("--run", eval_run, "Run directory");
  auto* eval_ckpt_opt = eval->add_option("--checkpoint", eval_ckpt, "Checkpoint file");
  eval_run_opt->excludes(eval_ckpt_opt);
  eval->add_option("--dataset", eval_dataset, "Dataset (default: the run's dataset)");
  eval->add_option("--which", eval_which, "best or last")->check(CLI::IsMember({"best", "last"}));
  eval->add_option("--split-seed", eval_split_seed);
  eval->add_option("--out", eval_out, "Write the report JSON here");
  eval->add_flag("--json", eval_json, "Print JSON instead of a table");

  // ablate
  ConfigFlags ablate_flags;
  std::string ablate_dataset, ablate_which, ablate_out;
  std::optional<std::uint64_t> ablate_split_seed;
  auto* ablate = app.add_subcommand("ablate", "Compare the base config with ablated variants");
  ablate->add_option("--dataset", ablate_dataset)->required();
  ablate->add_option("--which", ablate_which,
                     "cross, cons, cons+cross, clus-learn, clus-orth or summary-mode")
      ->required();
  ablate->add_option("--split-seed", ablate_split_seed);
  ablate->add_option("--out", ablate_out, "Write the CSV table here");
  ablate_flags.attach(ablate);

  // sweep-k
  ConfigFlags sweep_flags;
  std::string sweep_dataset, sweep_out, sweep_ks;
  std::size_t k_min = 2, k_max = 0;
  std::optional<std::uint64_t> sweep_split_seed;
  auto* sweep = app.add_subcommand("sweep-k", "Train once per cluster count");
  sweep->add_option("--dataset", sweep_dataset)->required();
  sweep->add_option("--k-min", k_min);
  sweep->add_option("--k-max", k_max, "Default: --k-min");
  sweep->add_option("--k", sweep_ks, "Comma-separated cluster counts (overrides the range)");
  sweep->add_option("--split-seed", sweep_split_seed);
  sweep->add_option("--out", sweep_out, "Write the CSV table here");
  sweep_flags.attach(sweep);

  // grid
  ConfigFlags grid_flags;
  std::string grid_dataset, grid_out, grid_config_out;
  std::string g_gamma, g_zeta, g_theta, g_lr;
  std::optional<std::uint64_t> grid_split_seed;
  auto* grid = app.add_subcommand("grid", "Grid search over gamma, zeta, theta and learning rate");
  grid->add_option("--dataset", grid_dataset)->required();
  grid->add_option("--gamma-values", g_gamma, "Comma-separated");
  grid->add_option("--zeta-values", g_zeta, "Comma-separated");
  grid->add_option("--theta-values", g_theta, "Comma-separated");
  grid->add_option("--learning-rate-values", g_lr, "Comma-separated");
  grid->add_option("--split-seed", grid_split_seed);
  grid->add_option("--out", grid_out, "Write the CSV table here");
  grid->add_option("--best-config-out", grid_config_out, "Write the selected config JSON here");
  grid_flags.attach(grid);

  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }

  try {
    if (*synth) {
      sc.cross_mode = cross_mode_from_string(cross_mode);
      const MultiplexGraph g = generate(sc);
      save_dataset(g, synth_out);
      out << "wrote " << synth_out << " (" << g.num_nodes << " nodes, " << g.num_relations()
          << " relations, " << g.labeled_nodes.size() << " labeled)\n";
    } else if (*train) {
      const TrainConfig cfg = train_flags.resolve();
      const MultiplexGraph g = load_dataset(train_dataset);
      const Split split = resolve_split(g, train_dataset, train_split_seed, cfg);
      fs::path dir = run_dir;
      if (dir.empty()) {
        const std::string name = fs::path(train_dataset).lexically_normal().filename().string();
        dir = runs_root() / (name + "-" + config_hash(cfg) + "-s" + std::to_string(split.seed));
      }
      const TrainOutcome o = train_run(g, train_dataset, split, cfg, dir);
      write_table(out, o.report);
      out << "run directory: " << dir.string() << '\n';
    } else if (*eval) {
      if (eval_run.empty() && eval_ckpt.empty()) throw ParameterError("eval needs --run or --checkpoint");
      fs::path ckpt_path = eval_ckpt;
      fs::path dataset = eval_dataset;
      std::optional<Split> split;
      if (!eval_run.empty()) {
        ckpt_path = fs::path(eval_run) / (eval_which + ".ckpt");
        if (dataset.empty()) {
          dataset = nlohmann::json::parse(read_file(fs::path(eval_run) / "manifest.json"))
                        .at("dataset")
                        .get<std::string>();
        }
        const auto split_json = nlohmann::json::parse(read_file(fs::path(eval_run) / "split.json"));
        split = Split{split_json.at("train").get<std::vector<std::size_t>>(),
                      split_json.at("val").get<std::vector<std::size_t>>(),
                      split_json.at("test").get<std::vector<std::size_t>>(),
                      split_json.at("seed").get<std::uint64_t>()};
      }
      if (dataset.empty()) throw ParameterError("eval --checkpoint needs --dataset");
      const Checkpoint ck = load_checkpoint(ckpt_path);
      const MultiplexGraph g = load_dataset(dataset);
      require_same_dims(model_dims(g, ck.config), ck.params.dims());
      if (!split) split = resolve_split(g, dataset, eval_split_seed, ck.config);
      validate_split(g, *split);
      const EvalReport rep = evaluate(g, *split, ck.params, ck.config);
      const std::string json = to_json(rep).dump(2) + "\n";
      if (!eval_out.empty()) write_file(eval_out, json);
      if (eval_json) {
        out << json;
      } else {
        write_table(out, rep);
      }
    } else if (*ablate) {
      const TrainConfig base = ablate_flags.resolve();
      const auto variants = ablation_variants(ablate_which, base);
      const MultiplexGraph g = load_dataset(ablate_dataset);
      const Split split = resolve_split(g, ablate_dataset, ablate_split_seed, base);
      std::vector<AblationRow> rows;
      for (const auto& [name, cfg] : variants) rows.push_back({name, train_and_evaluate(g, split, cfg)});
      std::ostringstream table;
      write_ablation_csv(table, rows);
      emit(out, ablate_out, table.str());
    } else if (*sweep) {
      std::vector<std::size_t> ks;
      if (!sweep_ks.empty()) {
        for (double v : parse_values(sweep_ks, "--k")) {
          if (!(v >= 0) || v != static_cast<double>(static_cast<std::size_t>(v))) {
            throw ParameterError("--k values must be whole numbers");
          }
          ks.push_back(static_cast<std::size_t>(v));
        }
      } else {
        const std::size_t hi = k_max == 0 ? k_min : k_max;
        for (std::size_t k = k_min; k <= hi; ++k) ks.push_back(k);
      }
      if (ks.empty()) throw ParameterError("empty K range");
      for (std::size_t k : ks) {
        if (k < 2) throw ParameterError("K must be >= 2, got " + std::to_string(k));
      }
      const TrainConfig base = sweep_flags.resolve();
      const MultiplexGraph g = load_dataset(sweep_dataset);
      const Split split = resolve_split(g, sweep_dataset, sweep_split_seed, base);
      std::ostringstream table;
      table << "k,micro_f1,macro_f1,nmi_n,nmi_c\n";
      for (std::size_t k : ks) {
        TrainConfig cfg = base;
        cfg.clusters = k;
        const EvalReport r = train_and_evaluate(g, split, cfg);
        table << k << ',' << fmt(r.micro_f1) << ',' << fmt(r.macro_f1) << ',' << fmt(r.nmi_n) << ','
              << fmt(r.nmi_c) << '\n';
      }
      emit(out, sweep_out, table.str());
    } else if (*grid) {
      const TrainConfig base = grid_flags.resolve();
      GridSpec spec;
      spec.gamma = parse_values(g_gamma, "--gamma-values");
      spec.zeta = parse_values(g_zeta, "--zeta-values");
      spec.theta = parse_values(g_theta, "--theta-values");
      spec.learning_rate = parse_values(g_lr, "--learning-rate-values");
      if (spec.gamma.empty() && spec.zeta.empty() && spec.theta.empty() && spec.learning_rate.empty()) {
        throw ParameterError("empty grid: give at least one of --gamma-values, --zeta-values, "
                             "--theta-values, --learning-rate-values");
      }
      const MultiplexGraph g = load_dataset(grid_dataset);
      const Split split = resolve_split(g, grid_dataset, grid_split_seed, base);
      const GridResult res = grid_search(g, split, base, spec);
      std::ostringstream table;
      res.write_csv(table);
      emit(out, grid_out, table.str());
      if (!grid_config_out.empty()) write_file(grid_config_out, to_json(res.best_config()).dump(2) + "\n");
    }
  } catch (const NumericError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitOk;
}

} // namespace mplex::cli
