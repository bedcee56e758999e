// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace adasgd {

enum class SchedulerKind { ConstantBSLR, AdaptiveLinear, AdaptiveExponential, CosineLR, FixedInterval };

/// Growth rule applied by the FixedInterval baseline at each interval.
enum class Growth { Linear, Exponential };

std::string_view to_string(SchedulerKind kind);
SchedulerKind scheduler_kind_from_string(std::string_view name);
std::string_view to_string(Growth growth);
Growth growth_from_string(std::string_view name);

/// User-facing scheduler parameters. Fields irrelevant to a kind are ignored;
/// fields it needs must be present (see validate()).
struct SchedulerParams {
  SchedulerKind kind = SchedulerKind::ConstantBSLR;
  int stages = 1;                          // M
  std::size_t b0 = 0;
  double eta0 = 0.0;
  std::optional<double> eps0;              // adaptive kinds
  std::optional<std::size_t> delta_b;      // AdaptiveLinear, FixedInterval/linear
  std::optional<double> delta;             // AdaptiveExponential, FixedInterval/exponential
  std::optional<double> gamma;             // AdaptiveExponential, FixedInterval/exponential
  std::optional<std::uint64_t> interval;   // FixedInterval
  std::optional<std::uint64_t> t_max;      // CosineLR
  double eta_min = 0.0;                    // CosineLR floor
  Growth growth = Growth::Exponential;     // FixedInterval
  std::size_t batch_cap = 0;               // 0 = uncapped; the engine caps at n

  friend bool operator==(const SchedulerParams&, const SchedulerParams&) = default;
};

/// Stage values (b_m, eta_m, eps_m). eps is +inf for kinds without a
/// gradient-norm trigger.
struct StageParams {
  std::size_t batch_size = 0;
  double lr = 0.0;
  double eps = 0.0;
  bool capped = false;

  friend bool operator==(const StageParams&, const StageParams&) = default;
};

/// Scheduler value: parameters plus the current stage. Transitions return new
/// values; nothing is shared between runs.
struct SchedulerState {
  SchedulerParams params;
  int m = 0;
  std::size_t current_b = 0;
  double current_eta = 0.0;
  double current_eps = 0.0;
  /// Set once the batch cap has bound at any stage reached so far.
  bool cap_binding = false;

  friend bool operator==(const SchedulerState&, const SchedulerState&) = default;
};

struct Validated {
  SchedulerState state;
  std::vector<std::string> warnings;
};

/// Structural validation. Throws ConfigError naming the field for missing
/// parameters, b0 < 1, eta0 <= 0, eps0 <= 0, gamma^2 >= delta, stages < 1.
/// Returns the initial (m = 0) state.
SchedulerState validate(const SchedulerParams& params);

/// As above, and warns when the largest scheduled LR reaches 2/L.
Validated validate(const SchedulerParams& params, double L);

/// (b_m, eta_m, eps_m) of stage m. Throws PreconditionError for m outside
/// [0, M). For CosineLR the LR is eta0 (time dependence lives in on_step).
StageParams stage_params(const SchedulerParams& params, int m);
StageParams stage_params(const SchedulerState& state, int m);

struct GradNormUpdate {
  SchedulerState state;
  bool transitioned = false;
};

/// Gradient-norm trigger: advances at most one stage when
/// grad_norm <= current_eps and m < M - 1.
GradNormUpdate on_grad_norm(const SchedulerState& state, double grad_norm);

/// Step-count driven update. CosineLR anneals eta over t_max; FixedInterval
/// sets its stage to min(floor(t / interval), M - 1). Other kinds are
/// returned unchanged.
SchedulerState on_step(const SchedulerState& state, std::uint64_t t);

/// Whether the kind reacts to on_grad_norm.
bool is_adaptive(SchedulerKind kind) noexcept;

}  // namespace adasgd
