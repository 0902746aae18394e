#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "optimarl/experiment.hpp"

namespace fs = std::filesystem;
using namespace optimarl;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;

void print_summary(const RunSummary& s, const fs::path& out) {
  std::printf("%s / %s  (%s)\n", s.task.c_str(), s.column.c_str(), s.algorithm.c_str());
  for (const auto& seed : s.seeds) {
    if (!seed.error.empty()) {
      std::printf("  seed %llu  FAILED: %s\n", static_cast<unsigned long long>(seed.seed), seed.error.c_str());
      continue;
    }
    std::printf("  seed %llu  greedy return %.6g  per-step %.6g  max eval %.6g%s\n",
                static_cast<unsigned long long>(seed.seed), seed.final_greedy_return, seed.greedy_per_step,
                seed.max_eval_return, seed.success ? "  [optimal]" : "");
  }
  std::printf("  mean %.6g  std %.6g  success %.2f\n", s.mean, s.std, s.success_fraction);
  std::printf("  results in %s\n", out.string().c_str());
}

template <typename F>
int guarded(F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kRuntimeError;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimistic multi-agent policy gradient experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output_dir;
  auto* train = app.add_subcommand("train", "Train every seed of a config and write metrics and a summary");
  train->add_option("config", config_path, "Experiment config file")->required();
  train->add_option("--output-dir", output_dir, "Override [experiment] output_dir");

  std::string checkpoint_path;
  std::string eval_config;
  auto* eval = app.add_subcommand("eval", "Greedy evaluation of a saved checkpoint");
  eval->add_option("checkpoint", checkpoint_path, "Checkpoint written by train")->required();
  eval->add_option("config", eval_config, "Config the checkpoint was trained with")->required();

  std::string dyn_config;
  auto* dyn = app.add_subcommand("dynamics", "Run the exact expected-update dynamics on a matrix game");
  dyn->add_option("config", dyn_config, "Config with algorithm = dynamics")->required();
  dyn->add_option("--output-dir", output_dir, "Override [experiment] output_dir");

  std::vector<std::string> dirs;
  std::string csv_path = "summary.csv";
  auto* summ = app.add_subcommand("summarize", "Tabulate summary.json files from run directories");
  summ->add_option("dirs", dirs, "Run directories")->required();
  summ->add_option("--csv", csv_path, "Where to write the CSV twin of the table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  if (train->parsed() || dyn->parsed()) {
    return guarded([&] {
      ExperimentConfig cfg = parse_config(train->parsed() ? config_path : dyn_config);
      if (dyn->parsed() && cfg.algorithm != AlgoKind::kDynamics) {
        throw ConfigError("the dynamics subcommand needs algorithm = dynamics");
      }
      if (!output_dir.empty()) cfg.output_dir = output_dir;
      const RunSummary s = run(cfg);
      print_summary(s, resolve_output_dir(cfg));
      return s.ok() ? kOk : kRuntimeError;
    });
  }
  if (eval->parsed()) {
    return guarded([&] {
      const ExperimentConfig cfg = parse_config(eval_config);
      const EvalResult r = evaluate_checkpoint(cfg, checkpoint_path);
      std::printf("greedy mean return %.10g  max return %.10g  over %d episodes\n", r.mean_return, r.max_return,
                  cfg.eval_episodes);
      return kOk;
    });
  }
  return guarded([&] {
    std::vector<fs::path> paths(dirs.begin(), dirs.end());
    const SummaryTable t = summarize(paths);
    std::cout << t.text;
    std::ofstream csv(csv_path);
    if (!csv) throw std::runtime_error("cannot write " + csv_path);
    csv << t.csv;
    for (const auto& e : t.errors) std::fprintf(stderr, "unreadable run: %s\n", e.c_str());
    return t.errors.empty() ? kOk : kRuntimeError;
  });
}
