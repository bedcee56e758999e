// SPDX-License-Identifier: Apache-2.0
#include "adasgd/schedulers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "adasgd/errors.hpp"

namespace adasgd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool uses_exponential_growth(const SchedulerParams& p) {
  return p.kind == SchedulerKind::AdaptiveExponential ||
         (p.kind == SchedulerKind::FixedInterval && p.growth == Growth::Exponential);
}

bool uses_linear_growth(const SchedulerParams& p) {
  return p.kind == SchedulerKind::AdaptiveLinear ||
         (p.kind == SchedulerKind::FixedInterval && p.growth == Growth::Linear);
}

// round(b0 delta^m) half-up, forced to exceed the previous stage by at least one.
std::size_t exponential_batch(std::size_t b0, double delta, int m) {
  std::size_t prev = b0;
  for (int k = 1; k <= m; ++k) {
    const double exact = static_cast<double>(b0) * std::pow(delta, k);
    auto cand = static_cast<std::size_t>(std::floor(exact + 0.5));
    prev = std::max(cand, prev + 1);
  }
  return prev;
}

double max_scheduled_lr(const SchedulerParams& p) {
  if (uses_exponential_growth(p)) return p.eta0 * std::pow(*p.gamma, p.stages - 1);
  return p.eta0;
}

}  // namespace

std::string_view to_string(SchedulerKind kind) {
  switch (kind) {
    case SchedulerKind::ConstantBSLR: return "constant";
    case SchedulerKind::AdaptiveLinear: return "adaptive_linear";
    case SchedulerKind::AdaptiveExponential: return "adaptive_exponential";
    case SchedulerKind::CosineLR: return "cosine";
    case SchedulerKind::FixedInterval: return "fixed_interval";
  }
  return "unknown";
}

SchedulerKind scheduler_kind_from_string(std::string_view name) {
  if (name == "constant") return SchedulerKind::ConstantBSLR;
  if (name == "adaptive_linear") return SchedulerKind::AdaptiveLinear;
  if (name == "adaptive_exponential") return SchedulerKind::AdaptiveExponential;
  if (name == "cosine") return SchedulerKind::CosineLR;
  if (name == "fixed_interval") return SchedulerKind::FixedInterval;
  throw ConfigError("scheduler.kind", "unknown scheduler kind '" + std::string(name) + "'");
}

std::string_view to_string(Growth growth) {
  return growth == Growth::Linear ? "linear" : "exponential";
}

Growth growth_from_string(std::string_view name) {
  if (name == "linear") return Growth::Linear;
  if (name == "exponential") return Growth::Exponential;
  throw ConfigError("scheduler.growth", "expected 'linear' or 'exponential'");
}

bool is_adaptive(SchedulerKind kind) noexcept {
  return kind == SchedulerKind::AdaptiveLinear || kind == SchedulerKind::AdaptiveExponential;
}

StageParams stage_params(const SchedulerParams& p, int m) {
  if (m < 0 || m >= p.stages)
    throw PreconditionError("stage " + std::to_string(m) + " outside [0, " +
                            std::to_string(p.stages) + ")");
  StageParams s;
  s.batch_size = p.b0;
  s.lr = p.eta0;
  s.eps = kInf;
  const double eps0 = p.eps0.value_or(kInf);

  if (uses_linear_growth(p)) {
    s.batch_size = p.b0 + static_cast<std::size_t>(m) * p.delta_b.value_or(0);
  } else if (uses_exponential_growth(p)) {
    s.batch_size = exponential_batch(p.b0, p.delta.value_or(1.0), m);
    s.lr = p.eta0 * std::pow(p.gamma.value_or(1.0), m);
  }

  if (p.kind == SchedulerKind::AdaptiveLinear)
    s.eps = eps0 / std::sqrt(1.0 + m);
  else if (p.kind == SchedulerKind::AdaptiveExponential)
    s.eps = eps0 / std::sqrt(std::pow(*p.delta, m));

  if (p.batch_cap > 0 && s.batch_size > p.batch_cap) {
    s.batch_size = p.batch_cap;
    s.capped = true;
  }
  return s;
}

StageParams stage_params(const SchedulerState& state, int m) { return stage_params(state.params, m); }

SchedulerState validate(const SchedulerParams& p) {
  auto fail = [](const char* field, const std::string& why) {
    throw ConfigError(std::string("scheduler.") + field, why);
  };
  if (p.stages < 1) fail("stages", "must be >= 1");
  if (p.b0 < 1) fail("b0", "must be >= 1");
  if (!(p.eta0 > 0.0) || !std::isfinite(p.eta0)) fail("eta0", "must be positive and finite");
  if (p.batch_cap > 0 && p.b0 > p.batch_cap)
    fail("b0", "exceeds the dataset size " + std::to_string(p.batch_cap));

  if (is_adaptive(p.kind)) {
    if (!p.eps0) fail("eps0", "required for adaptive schedulers");
    if (!(*p.eps0 > 0.0) || !std::isfinite(*p.eps0)) fail("eps0", "must be positive and finite");
  }
  if (uses_linear_growth(p)) {
    if (!p.delta_b) fail("delta_b", "required for linear batch growth");
    if (*p.delta_b < 1) fail("delta_b", "must be >= 1");
  }
  if (uses_exponential_growth(p)) {
    if (!p.delta) fail("delta", "required for exponential batch growth");
    if (!p.gamma) fail("gamma", "required for exponential LR growth");
    if (!(*p.delta > 1.0) || !std::isfinite(*p.delta)) fail("delta", "must be > 1");
    if (!(*p.gamma > 1.0) || !std::isfinite(*p.gamma)) fail("gamma", "must be > 1");
    if (!(*p.gamma * *p.gamma < *p.delta))
      fail("gamma", "gamma^2 = " + std::to_string(*p.gamma * *p.gamma) +
                        " must be strictly below delta = " + std::to_string(*p.delta));
  }
  if (p.kind == SchedulerKind::FixedInterval) {
    if (!p.interval) fail("interval", "required for fixed_interval");
    if (*p.interval < 1) fail("interval", "must be >= 1");
  }
  if (p.kind == SchedulerKind::CosineLR) {
    if (!p.t_max) fail("t_max", "required for cosine");
    if (*p.t_max < 1) fail("t_max", "must be >= 1");
    if (!(p.eta_min >= 0.0) || !(p.eta_min <= p.eta0)) fail("eta_min", "must lie in [0, eta0]");
  }

  SchedulerState state;
  state.params = p;
  state.m = 0;
  const StageParams s = stage_params(p, 0);
  state.current_b = s.batch_size;
  state.current_eta = s.lr;
  state.current_eps = s.eps;
  state.cap_binding = s.capped;
  return state;
}

Validated validate(const SchedulerParams& p, double L) {
  Validated out{validate(p), {}};
  if (!(L > 0.0)) throw PreconditionError("L must be positive");
  const double peak = max_scheduled_lr(p);
  if (peak >= 2.0 / L) {
    std::ostringstream msg;
    msg << "largest scheduled LR " << peak << " reaches 2/L = " << 2.0 / L
        << "; the convergence bound does not apply";
    out.warnings.push_back(msg.str());
  }
  return out;
}

namespace {

SchedulerState enter_stage(SchedulerState s, int m) {
  const StageParams sp = stage_params(s.params, m);
  s.m = m;
  s.current_b = sp.batch_size;
  s.current_eta = sp.lr;
  s.current_eps = sp.eps;
  s.cap_binding = s.cap_binding || sp.capped;
  return s;
}

}  // namespace

GradNormUpdate on_grad_norm(const SchedulerState& state, double grad_norm) {
  if (!is_adaptive(state.params.kind) || state.m >= state.params.stages - 1 ||
      !(grad_norm <= state.current_eps))
    return {state, false};
  return {enter_stage(state, state.m + 1), true};
}

SchedulerState on_step(const SchedulerState& state, std::uint64_t t) {
  const SchedulerParams& p = state.params;
  if (p.kind == SchedulerKind::CosineLR) {
    SchedulerState s = state;
    const double tmax = static_cast<double>(*p.t_max);
    const double frac = std::min(static_cast<double>(t), tmax) / tmax;
    s.current_eta = p.eta_min + 0.5 * (p.eta0 - p.eta_min) * (1.0 + std::cos(std::numbers::pi * frac));
    return s;
  }
  if (p.kind == SchedulerKind::FixedInterval) {
    const std::uint64_t elapsed = t / *p.interval;
    const int target = static_cast<int>(
        std::min<std::uint64_t>(elapsed, static_cast<std::uint64_t>(p.stages - 1)));
    if (target > state.m) return enter_stage(state, target);
  }
  return state;
}

}  // namespace adasgd
