// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "adasgd/param_vector.hpp"
#include "adasgd/problems.hpp"
#include "adasgd/rng.hpp"
#include "adasgd/schedulers.hpp"

namespace adasgd {

struct RunConfig {
  std::uint64_t max_steps = 1000;
  std::uint64_t seed = 0;
  std::uint64_t check_interval = 1;
  std::optional<double> stop_eps;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// One SGD step. Record t describes the iterate theta_t produced by the t-th
/// update (t >= 1): batch_size and lr are the values used to produce it, stage
/// is the stage the update ran in, loss = f(theta_t), and grad_norm is
/// |grad f(theta_t)| on check steps.
struct StepRecord {
  std::uint64_t t = 0;
  double loss = 0.0;
  std::optional<double> grad_norm;
  std::size_t batch_size = 0;
  double lr = 0.0;
  int stage = 0;
  std::uint64_t sfo_cumulative = 0;

  friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

struct RunTrace {
  double initial_loss = 0.0;
  double initial_grad_norm = 0.0;
  std::vector<StepRecord> records;
  ParamVector terminal_theta;
  /// Number of updates after which |grad f| <= stop_eps was first observed
  /// (0 when theta0 already satisfies it).
  std::optional<std::uint64_t> hit_step;
  /// Per-sample gradient evaluations spent on full-gradient monitoring; kept
  /// apart from the SFO count.
  std::uint64_t monitor_grad_evals = 0;
  /// Stage index at the end of the run.
  int final_stage = 0;
  /// Adaptive kinds: the last stage's threshold was met as well.
  bool final_stage_reached_eps = false;
  bool cap_binding = false;
  /// Step t at which each stage transition fired, in order.
  std::vector<std::uint64_t> transitions;

  /// Thresholds met: one per transition plus the final stage's own.
  int stages_completed() const noexcept {
    return static_cast<int>(transitions.size()) + (final_stage_reached_eps ? 1 : 0);
  }
  std::uint64_t total_sfo() const noexcept {
    return records.empty() ? 0 : records.back().sfo_cumulative;
  }
  /// Smallest monitored grad norm among theta_0 .. theta_{T-1}.
  double min_grad_norm_before(std::uint64_t T) const;
  double min_grad_norm() const;

  friend bool operator==(const RunTrace&, const RunTrace&) = default;
};

/// Non-finite or exploding loss/gradient. Carries the trace up to failure.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, RunTrace trace)
      : std::runtime_error(what), trace_(std::move(trace)) {}
  const RunTrace& trace() const noexcept { return trace_; }

 private:
  RunTrace trace_;
};

inline constexpr double kDivergenceLoss = 1e12;

/// b indices drawn i.i.d. uniformly with replacement from [0, n).
std::vector<std::size_t> sample_batch(const Problem& problem, std::size_t b, Rng& rng);

/// (1/b) sum over the batch of per-sample gradients.
ParamVector minibatch_grad(const Problem& problem, const ParamVector& theta,
                           std::span<const std::size_t> batch);

/// Mini-batch SGD driven by a scheduler. The scheduler is validated
/// structurally and its batch cap defaults to problem.n().
RunTrace run(const Problem& problem, const ParamVector& theta0, const SchedulerParams& scheduler,
             const RunConfig& config);

struct RunJob {
  SchedulerParams scheduler;
  RunConfig config;
};

/// Outcome of one job in run_many: either a trace or the divergence error.
struct RunOutcome {
  std::optional<RunTrace> trace;
  std::optional<DivergenceError> divergence;
};

/// Runs independent jobs on up to `threads` workers (0 = hardware
/// concurrency). Output order matches input order. Exceptions other than
/// divergence propagate.
std::vector<RunOutcome> run_many(const Problem& problem, const ParamVector& theta0,
                                 const std::vector<RunJob>& jobs, unsigned threads = 0);

/// CSV with header t,loss,grad_norm,batch_size,lr,stage,sfo_cumulative. Only
/// check steps unless all_steps, in which case non-check rows carry an empty
/// grad_norm cell.
void write_trace_csv(std::ostream& out, const RunTrace& trace, bool all_steps = false);

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

}  // namespace adasgd
