// SPDX-License-Identifier: Apache-2.0
//
// Experiment driver. Talks to the library only through adasgd.h.
//
//   adasgd run <config> [--out DIR] [--seeds 1,2,3] [--check-interval K] [--all-steps]
//   adasgd sweep <config> --batches 2,4,8 [--out DIR] [--seeds ...] [--check-interval K]
//   adasgd compare <config> <config>... [--out DIR] [--eps E] [--seeds ...]
//
// Exit codes: 0 success, 1 usage or other error, 2 config error,
// 3 divergence, 4 precision unreachable.

#include <cstdint>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "adasgd/adasgd.h"

namespace {

struct ExperimentDeleter {
  void operator()(adasgd_experiment* e) const { adasgd_experiment_free(e); }
};
using ExperimentPtr = std::unique_ptr<adasgd_experiment, ExperimentDeleter>;

struct Overrides {
  std::string out;
  std::vector<std::uint64_t> seeds;
  std::uint64_t check_interval = 0;
  bool all_steps = false;
};

int exit_code(adasgd_status status) {
  switch (status) {
    case ADASGD_OK: return 0;
    case ADASGD_ERR_CONFIG: return 2;
    case ADASGD_ERR_DIVERGENCE: return 3;
    case ADASGD_ERR_PRECISION_UNREACHABLE: return 4;
    default: return 1;
  }
}

int report(adasgd_status status) {
  if (status != ADASGD_OK)
    std::cerr << "adasgd: " << adasgd_status_name(status) << ": " << adasgd_last_error() << '\n';
  return exit_code(status);
}

void print_warnings(const adasgd_experiment* e) {
  for (std::size_t i = 0; i < adasgd_experiment_warning_count(e); ++i)
    std::cerr << "adasgd: warning: " << adasgd_experiment_warning(e, i) << '\n';
}

adasgd_status load(const std::string& path, const Overrides& o, ExperimentPtr& out) {
  adasgd_experiment* raw = nullptr;
  adasgd_status st = adasgd_experiment_load(path.c_str(), &raw);
  if (st != ADASGD_OK) return st;
  out.reset(raw);
  if (!o.out.empty() && (st = adasgd_experiment_set_out_dir(raw, o.out.c_str())) != ADASGD_OK)
    return st;
  if (!o.seeds.empty() &&
      (st = adasgd_experiment_set_seeds(raw, o.seeds.data(), o.seeds.size())) != ADASGD_OK)
    return st;
  if (o.check_interval > 0 &&
      (st = adasgd_experiment_set_check_interval(raw, o.check_interval)) != ADASGD_OK)
    return st;
  if (o.all_steps && (st = adasgd_experiment_set_all_steps(raw, 1)) != ADASGD_OK) return st;
  return ADASGD_OK;
}

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--out", o.out, "Output directory (overrides output.dir)");
  cmd->add_option("--seeds", o.seeds, "Comma-separated seed list (overrides run.seeds)")
      ->delimiter(',');
  cmd->add_option("--check-interval", o.check_interval,
                  "Steps between full-gradient checks (overrides run.check_interval)")
      ->check(CLI::PositiveNumber);
  cmd->add_flag("--all-steps", o.all_steps, "Emit every step in trace CSVs, not only check steps");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mini-batch SGD with gradient-norm-triggered batch-size and LR schedulers"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(adasgd_version()));

  Overrides run_o, sweep_o, compare_o;
  std::string run_config, sweep_config;
  std::vector<std::string> compare_configs;
  std::vector<std::size_t> batches;
  double compare_eps = 0.0;

  auto* run = app.add_subcommand("run", "Run SGD for every seed of a config");
  run->add_option("config", run_config, "Experiment config (JSON)")->required();
  add_overrides(run, run_o);

  auto* sweep = app.add_subcommand("sweep", "Empirical SFO-vs-batch-size curve");
  sweep->add_option("config", sweep_config, "Experiment config (JSON)")->required();
  sweep->add_option("--batches", batches, "Comma-separated batch grid (overrides sweep.batches)")
      ->delimiter(',');
  add_overrides(sweep, sweep_o);

  auto* compare = app.add_subcommand("compare", "Compare schedulers on one problem");
  compare->add_option("configs", compare_configs, "Two or more experiment configs")
      ->required()
      ->expected(2, -1);
  compare->add_option("--eps", compare_eps, "Target precision (default: first config's stop_eps)")
      ->check(CLI::PositiveNumber);
  add_overrides(compare, compare_o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (*run) {
    ExperimentPtr e;
    if (auto st = load(run_config, run_o, e); st != ADASGD_OK) return report(st);
    const adasgd_status st = adasgd_cmd_run(e.get());
    print_warnings(e.get());
    return report(st);
  }
  if (*sweep) {
    ExperimentPtr e;
    if (auto st = load(sweep_config, sweep_o, e); st != ADASGD_OK) return report(st);
    if (!batches.empty()) {
      if (auto st = adasgd_experiment_set_batches(e.get(), batches.data(), batches.size());
          st != ADASGD_OK)
        return report(st);
    }
    const adasgd_status st = adasgd_cmd_sweep(e.get());
    print_warnings(e.get());
    return report(st);
  }
  if (*compare) {
    std::vector<ExperimentPtr> owned;
    std::vector<adasgd_experiment*> handles;
    for (const auto& path : compare_configs) {
      ExperimentPtr e;
      if (auto st = load(path, compare_o, e); st != ADASGD_OK) return report(st);
      handles.push_back(e.get());
      owned.push_back(std::move(e));
    }
    const std::string out = compare_o.out.empty() ? std::string("out/compare") : compare_o.out;
    return report(adasgd_cmd_compare(handles.data(), handles.size(), out.c_str(), compare_eps));
  }
  return 1;
}
