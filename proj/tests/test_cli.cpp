#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>

#include "mplex/cli/app.hpp"
#include "support.hpp"

using namespace mplex;
using namespace mplex::testing;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(std::move(args), out, err);
  return {code, out.str(), err.str()};
}

/// Small synthetic dataset written through the CLI.
fs::path make_dataset(const std::string& tag, std::size_t nodes = 60, std::size_t features = 8,
                      std::uint64_t seed = 1) {
  const fs::path dir = temp_dir(tag) / "data";
  const auto r = run_cli({"synth", "--out", dir.string(), "--num-nodes", std::to_string(nodes),
                          "--num-features", std::to_string(features), "--p-in", "0.2",
                          "--seed", std::to_string(seed)});
  EXPECT_EQ(r.code, 0) << r.err;
  return dir;
}

std::vector<std::string> fast_flags() {
  return {"--hidden", "8", "--max-epochs", "30", "--patience", "5", "--learning-rate", "0.01"};
}

CliResult train_into(const fs::path& data, const fs::path& run, std::vector<std::string> extra = {}) {
  std::vector<std::string> args = {"train", "--dataset", data.string(), "--run-dir", run.string()};
  for (auto& f : fast_flags()) args.push_back(f);
  for (auto& f : extra) args.push_back(f);
  return run_cli(args);
}

std::size_t count_lines(const std::string& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

std::vector<std::string> csv_column(const std::string& table, std::size_t col) {
  std::vector<std::string> out;
  std::istringstream in(table);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string cell;
    for (std::size_t c = 0; c <= col; ++c) std::getline(row, cell, ',');
    out.push_back(cell);
  }
  return out;
}

} // namespace

TEST(Cli, SynthThenTrainWritesEveryArtifact) {
  const fs::path data = make_dataset("artifacts");
  for (const char* f : {"meta.json", "features.tsv", "labels.tsv", "edges_rel0.tsv", "edges_rel1.tsv",
                        "cross_rel0_rel1.tsv", "cross_rel1_rel0.tsv"}) {
    EXPECT_TRUE(fs::exists(data / f)) << f;
  }
  const fs::path run = data.parent_path() / "run";
  const auto r = train_into(data, run);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("micro_f1"), std::string::npos);
  for (const char* f : {"config.json", "split.json", "log.csv", "best.ckpt", "last.ckpt",
                        "embeddings.tsv", "report.json", "report.txt", "manifest.json"}) {
    EXPECT_TRUE(fs::exists(run / f)) << f;
  }
  const auto manifest = nlohmann::json::parse(cli::read_file(run / "manifest.json"));
  EXPECT_EQ(manifest.at("command"), "train");
  EXPECT_EQ(manifest.at("artifacts").size(), 8u);
  EXPECT_EQ(count_lines(cli::read_file(run / "embeddings.tsv")), 60u);
  EXPECT_EQ(count_lines(cli::read_file(run / "log.csv")), manifest.at("epochs").get<std::size_t>() + 1);
  EXPECT_TRUE(cli::verify_manifest(run).empty());
}

TEST(Cli, ManifestDetectsTamperedArtifact) {
  const fs::path data = make_dataset("tamper");
  const fs::path run = data.parent_path() / "run";
  ASSERT_EQ(train_into(data, run).code, 0);
  cli::write_file(run / "report.txt", "edited\n");
  EXPECT_EQ(cli::verify_manifest(run), std::vector<std::string>{"report.txt"});
}

TEST(Cli, AllCoefficientsZeroStillReports) {
  const fs::path data = make_dataset("zero");
  const fs::path run = data.parent_path() / "run";
  const auto r = train_into(data, run,
                            {"--alpha", "0", "--beta", "0", "--gamma", "0", "--zeta", "0", "--theta", "0"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(run / "report.json"));
}

TEST(Cli, LogIsByteIdenticalAcrossRuns) {
  const fs::path data = make_dataset("determinism");
  const fs::path a = data.parent_path() / "a", b = data.parent_path() / "b";
  ASSERT_EQ(train_into(data, a).code, 0);
  ASSERT_EQ(train_into(data, b).code, 0);
  EXPECT_EQ(cli::read_file(a / "log.csv"), cli::read_file(b / "log.csv"));
  EXPECT_EQ(cli::read_file(a / "best.ckpt"), cli::read_file(b / "best.ckpt"));
  EXPECT_EQ(cli::read_file(a / "report.json"), cli::read_file(b / "report.json"));
}

TEST(Cli, EvalReproducesTrainReport) {
  const fs::path data = make_dataset("eval");
  const fs::path run = data.parent_path() / "run";
  ASSERT_EQ(train_into(data, run).code, 0);
  const auto r = run_cli({"eval", "--run", run.string(), "--json"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, cli::read_file(run / "report.json"));
  const fs::path out = run.parent_path() / "again.json";
  const auto c = run_cli({"eval", "--checkpoint", (run / "best.ckpt").string(), "--dataset",
                          data.string(), "--out", out.string()});
  ASSERT_EQ(c.code, 0) << c.err;
  EXPECT_EQ(cli::read_file(out), cli::read_file(run / "report.json"));
}

TEST(Cli, EvalBestAndLastDifferAfterEarlyStop) {
  // Weak features keep validation F1 moving, so the stop comes after a drop.
  const fs::path data = temp_dir("bestlast") / "data";
  ASSERT_EQ(run_cli({"synth", "--out", data.string(), "--num-nodes", "90", "--num-features", "8",
                     "--signal", "1", "--seed", "1"})
                .code,
            0);
  const fs::path run = data.parent_path() / "run";
  ASSERT_EQ(train_into(data, run, {"--max-epochs", "60"}).code, 0);
  const auto manifest = nlohmann::json::parse(cli::read_file(run / "manifest.json"));
  ASSERT_EQ(manifest.at("stop_reason"), "early_stop");
  ASSERT_LT(manifest.at("best_epoch").get<std::size_t>(), manifest.at("epochs").get<std::size_t>());
  EXPECT_NE(cli::read_file(run / "best.ckpt"), cli::read_file(run / "last.ckpt"));
  const auto best = run_cli({"eval", "--run", run.string(), "--which", "best", "--json"});
  const auto last = run_cli({"eval", "--run", run.string(), "--which", "last", "--json"});
  ASSERT_EQ(best.code, 0);
  ASSERT_EQ(last.code, 0);
  EXPECT_NE(best.out, last.out);
}

TEST(Cli, EvalWithMismatchedDatasetIsDimensionError) {
  const fs::path data = make_dataset("dims");
  const fs::path other = make_dataset("dims_other", 60, 12);
  const fs::path run = data.parent_path() / "run";
  ASSERT_EQ(train_into(data, run).code, 0);
  const auto r = run_cli({"eval", "--checkpoint", (run / "best.ckpt").string(), "--dataset",
                          other.string()});
  EXPECT_EQ(r.code, cli::kExitValidation);
  EXPECT_NE(r.err.find("num_features"), std::string::npos) << r.err;
}

TEST(Cli, AblateProducesOneRowPerVariant) {
  const fs::path data = make_dataset("ablate");
  const fs::path csv = data.parent_path() / "ablate.csv";
  std::vector<std::string> args = {"ablate", "--dataset", data.string(), "--which", "cons+cross",
                                   "--out", csv.string()};
  for (auto& f : fast_flags()) args.push_back(f);
  const auto r = run_cli(args);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, cli::read_file(csv));
  EXPECT_EQ(csv_column(r.out, 0), (std::vector<std::string>{"base", "-cross", "-(cons+cross)"}));
  EXPECT_EQ(csv_column(r.out, 4).front(), "0.0000");
  // Deltas are variant minus base.
  const auto micro = csv_column(r.out, 1), delta = csv_column(r.out, 4);
  for (std::size_t i = 0; i < micro.size(); ++i) {
    EXPECT_NEAR(std::stod(delta[i]), std::stod(micro[i]) - std::stod(micro[0]), 1e-3);
  }
}

TEST(Cli, AblateSummaryModeAndUnknownName) {
  const fs::path data = make_dataset("ablate2");
  std::vector<std::string> args = {"ablate", "--dataset", data.string(), "--which", "summary-mode"};
  for (auto& f : fast_flags()) args.push_back(f);
  const auto r = run_cli(args);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(csv_column(r.out, 0), (std::vector<std::string>{"cluster", "mean_pool"}));
  const auto bad = run_cli({"ablate", "--dataset", data.string(), "--which", "attention"});
  EXPECT_EQ(bad.code, cli::kExitValidation);
  EXPECT_NE(bad.err.find("unknown ablation"), std::string::npos);
}

TEST(Cli, SweepKRowsMatchStandaloneTraining) {
  const fs::path data = make_dataset("sweep");
  std::vector<std::string> args = {"sweep-k", "--dataset", data.string(), "--k-min", "2", "--k-max", "4"};
  for (auto& f : fast_flags()) args.push_back(f);
  const auto r = run_cli(args);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(csv_column(r.out, 0), (std::vector<std::string>{"2", "3", "4"}));

  const fs::path run = data.parent_path() / "k3";
  ASSERT_EQ(train_into(data, run, {"--clusters", "3"}).code, 0);
  const auto rep = nlohmann::json::parse(cli::read_file(run / "report.json"));
  EXPECT_EQ(csv_column(r.out, 1)[1], cli::fmt(rep.at("micro_f1").get<double>()));
  EXPECT_EQ(csv_column(r.out, 3)[1], cli::fmt(rep.at("nmi_n").get<double>()));
}

TEST(Cli, SweepKRejectsInvalidK) {
  const fs::path data = make_dataset("sweepbad");
  EXPECT_EQ(run_cli({"sweep-k", "--dataset", data.string(), "--k-min", "1", "--k-max", "3"}).code,
            cli::kExitValidation);
  EXPECT_EQ(run_cli({"sweep-k", "--dataset", data.string(), "--k", "3,1"}).code, cli::kExitValidation);
  EXPECT_EQ(run_cli({"sweep-k", "--dataset", data.string(), "--k-min", "5", "--k-max", "3"}).code,
            cli::kExitValidation);
}

TEST(Cli, GridWritesTableAndBestConfig) {
  const fs::path data = make_dataset("grid");
  const fs::path best = data.parent_path() / "best.json";
  std::vector<std::string> args = {"grid", "--dataset", data.string(), "--gamma-values", "0.01,0.1",
                                   "--theta-values", "0.01,0.1", "--best-config-out", best.string()};
  for (auto& f : fast_flags()) args.push_back(f);
  const auto r = run_cli(args);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(count_lines(r.out), 5u);
  const TrainConfig chosen = config_from_json(nlohmann::json::parse(cli::read_file(best)));
  const auto selected = csv_column(r.out, 10);
  const std::size_t row = static_cast<std::size_t>(std::find(selected.begin(), selected.end(), "1") -
                                                   selected.begin());
  ASSERT_LT(row, 4u);
  EXPECT_EQ(chosen.coefficients.gamma, std::stod(csv_column(r.out, 1)[row]));
  EXPECT_EQ(chosen.coefficients.theta, std::stod(csv_column(r.out, 4)[row]));
  EXPECT_EQ(run_cli({"grid", "--dataset", data.string()}).code, cli::kExitValidation);
  EXPECT_EQ(run_cli({"grid", "--dataset", data.string(), "--gamma-values", "0.1,x"}).code,
            cli::kExitValidation);
}

TEST(Cli, DefaultRunDirectoryHonoursEnvironment) {
  const fs::path data = make_dataset("envroot");
  const fs::path root = data.parent_path() / "runs_here";
  ::setenv("MPLEX_RUNS", root.string().c_str(), 1);
  std::vector<std::string> args = {"train", "--dataset", data.string()};
  for (auto& f : fast_flags()) args.push_back(f);
  const auto r = run_cli(args);
  ::unsetenv("MPLEX_RUNS");
  ASSERT_EQ(r.code, 0) << r.err;
  ASSERT_TRUE(fs::exists(root));
  std::vector<fs::path> runs(fs::directory_iterator(root), fs::directory_iterator{});
  ASSERT_EQ(runs.size(), 1u);
  EXPECT_EQ(runs[0].filename().string().rfind("data-", 0), 0u);
  EXPECT_TRUE(fs::exists(runs[0] / "manifest.json"));
}

TEST(Cli, ConfigFileIsOverriddenByFlags) {
  const fs::path data = make_dataset("cfgfile");
  const fs::path cfg = data.parent_path() / "cfg.json";
  cli::write_file(cfg, R"({"hidden": 6, "gamma": 0.5, "max_epochs": 4})");
  const fs::path run = data.parent_path() / "run";
  const auto r = run_cli({"train", "--dataset", data.string(), "--run-dir", run.string(), "--config",
                          cfg.string(), "--gamma", "0.25"});
  ASSERT_EQ(r.code, 0) << r.err;
  const TrainConfig c = config_from_json(nlohmann::json::parse(cli::read_file(run / "config.json")));
  EXPECT_EQ(c.hidden, 6u);
  EXPECT_EQ(c.max_epochs, 4u);
  EXPECT_EQ(c.coefficients.gamma, 0.25);
  cli::write_file(cfg, R"({"hiden": 6})");
  EXPECT_EQ(run_cli({"train", "--dataset", data.string(), "--config", cfg.string()}).code,
            cli::kExitValidation);
}

TEST(Cli, SplitFileInDatasetIsUsed) {
  const fs::path data = make_dataset("splitfile");
  const MultiplexGraph g = load_dataset(data);
  Split s = make_split(g, 77);
  save_split(s, data / "splits.json");
  const fs::path run = data.parent_path() / "run";
  ASSERT_EQ(train_into(data, run, {"--split-seed", "3"}).code, 0);
  const auto got = nlohmann::json::parse(cli::read_file(run / "split.json"));
  EXPECT_EQ(got.at("train").get<std::vector<std::size_t>>(), s.train);
  EXPECT_EQ(got.at("seed").get<std::uint64_t>(), 77u);
}

TEST(Cli, ExitCodes) {
  const fs::path data = make_dataset("exit");
  EXPECT_EQ(run_cli({"--help"}).code, cli::kExitOk);
  EXPECT_EQ(run_cli({}).code, cli::kExitValidation);
  EXPECT_EQ(run_cli({"frobnicate"}).code, cli::kExitValidation);
  EXPECT_EQ(run_cli({"train"}).code, cli::kExitValidation);
  EXPECT_EQ(run_cli({"train", "--dataset", (data.parent_path() / "nope").string()}).code,
            cli::kExitValidation);
  EXPECT_EQ(run_cli({"train", "--dataset", data.string(), "--patience", "0"}).code,
            cli::kExitValidation);
  EXPECT_EQ(run_cli({"synth", "--out", (data.parent_path() / "s").string(), "--p-in", "2"}).code,
            cli::kExitValidation);
  EXPECT_EQ(run_cli({"eval"}).code, cli::kExitValidation);
  const auto diverged = run_cli({"train", "--dataset", data.string(), "--run-dir",
                                 (data.parent_path() / "boom").string(), "--optimizer", "sgd",
                                 "--learning-rate", "1e300", "--max-epochs", "10"});
  EXPECT_EQ(diverged.code, cli::kExitNumeric);
  EXPECT_EQ(count_lines(diverged.err), 1u);
  EXPECT_EQ(diverged.err.rfind("error: ", 0), 0u);
}
