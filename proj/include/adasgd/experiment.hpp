// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "adasgd/engine.hpp"
#include "adasgd/problems.hpp"
#include "adasgd/schedulers.hpp"
#include "adasgd/theory.hpp"

namespace adasgd {

struct RunSpec {
  std::uint64_t max_steps = 1000;
  std::vector<std::uint64_t> seeds{0};
  std::uint64_t check_interval = 1;
  std::optional<double> stop_eps;

  friend bool operator==(const RunSpec&, const RunSpec&) = default;
};

struct OutputSpec {
  std::string dir = "out";
  bool emit_all_steps = false;

  friend bool operator==(const OutputSpec&, const OutputSpec&) = default;
};

/// Sweep settings. eps defaults to run.stop_eps and eta to scheduler.eta0.
struct SweepSpec {
  std::vector<std::size_t> batches;
  std::optional<double> eps;
  std::optional<double> eta;

  friend bool operator==(const SweepSpec&, const SweepSpec&) = default;
};

struct ExperimentConfig {
  std::string name = "experiment";
  ProblemSpec problem;
  SchedulerParams scheduler;
  RunSpec run;
  OutputSpec output;
  SweepSpec sweep;
  int probes = 4;
  unsigned threads = 0;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Parses the JSON experiment file format. Unknown keys and invalid values
/// throw ConfigError naming the key path.
ExperimentConfig parse_config(std::string_view text);
/// Single sections in the same JSON format, e.g. {"kind": "quadratic", "n": 64}.
ProblemSpec parse_problem_spec(std::string_view text);
SchedulerParams parse_scheduler_params(std::string_view text);

ExperimentConfig load_config(const std::filesystem::path& path);
std::string serialize_config(const ExperimentConfig& config);

/// Checks every section against its module constraints before any work.
void validate_config(const ExperimentConfig& config);

struct RunSummaryRow {
  std::uint64_t seed = 0;
  double final_loss = 0.0;
  double min_grad_norm = 0.0;
  std::uint64_t total_sfo = 0;
  std::uint64_t monitor_grad_evals = 0;
  int stages_completed = 0;
  std::optional<std::uint64_t> hit_step;
  bool cap_binding = false;
  bool diverged = false;
};

struct RunReport {
  std::vector<RunSummaryRow> rows;
  std::vector<std::string> warnings;
  std::vector<std::filesystem::path> files;
  bool any_diverged = false;
};

/// One trace CSV per seed plus summary.csv in config.output.dir. Traces of
/// diverged seeds are written up to the failure.
RunReport cmd_run(const ExperimentConfig& config);

struct SweepReport {
  SfoCurve curve;
  std::vector<std::filesystem::path> files;
};

/// Empirical SFO curve (sfo_curve.csv) and sweep_summary.json.
SweepReport cmd_sweep(const ExperimentConfig& config);

struct CompareRow {
  std::size_t index = 0;
  std::string name;
  SchedulerKind kind = SchedulerKind::ConstantBSLR;
  std::size_t hits = 0;
  std::size_t seeds = 0;
  /// Medians over seeds; seeds that never reached eps count as +inf.
  double median_steps_to_eps = 0.0;
  double median_sfo_to_eps = 0.0;
  std::vector<std::optional<std::uint64_t>> steps_to_eps;
  std::vector<std::optional<std::uint64_t>> sfo_to_eps;
  int rank_steps = 0;
  int rank_sfo = 0;
};

struct CompareReport {
  double eps = 0.0;
  std::vector<CompareRow> rows;
  std::vector<std::filesystem::path> files;
};

/// Runs every config on the shared problem and seeds, writes one trace per
/// (config, seed) and ranking.csv. The target eps is `eps` when given, else
/// the first config's run.stop_eps, else the smallest final threshold among
/// adaptive configs.
CompareReport cmd_compare(const std::vector<ExperimentConfig>& configs,
                          const std::filesystem::path& out_dir,
                          std::optional<double> eps = std::nullopt);

}  // namespace adasgd
