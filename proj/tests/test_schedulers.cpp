// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <numbers>

#include "adasgd/errors.hpp"
#include "adasgd/schedulers.hpp"
#include "oracles.hpp"

using namespace adasgd;

namespace {

SchedulerParams linear(int M = 21) {
  SchedulerParams p;
  p.kind = SchedulerKind::AdaptiveLinear;
  p.stages = M;
  p.b0 = 8;
  p.eta0 = 0.05;
  p.eps0 = 2.0;
  p.delta_b = 4;
  return p;
}

SchedulerParams exponential(int M = 21) {
  SchedulerParams p;
  p.kind = SchedulerKind::AdaptiveExponential;
  p.stages = M;
  p.b0 = 16;
  p.eta0 = 0.1;
  p.eps0 = 1.0;
  p.delta = 2.0;
  p.gamma = 1.4;
  return p;
}

}  // namespace

TEST_CASE("linear stage formulas") {
  const auto p = linear();
  for (int m = 0; m <= 20; ++m) {
    const auto s = stage_params(p, m);
    CHECK(s.batch_size == 8u + 4u * unsigned(m));
    CHECK(s.lr == 0.05);
    CHECK(std::abs(s.eps - oracle::linear_eps(2.0, m)) <= 1e-12);
  }
  CHECK(stage_params(p, 1).eps == doctest::Approx(2.0 / std::numbers::sqrt2).epsilon(1e-15));
}

TEST_CASE("exponential stage formulas") {
  const auto p = exponential();
  double b = 16.0, eta = 0.1;
  for (int m = 0; m <= 20; ++m) {
    const auto s = stage_params(p, m);
    CHECK(double(s.batch_size) == std::floor(b + 0.5));
    CHECK(std::abs(s.lr - oracle::exp_lr(0.1, 1.4, m)) <= 1e-12 * std::max(1.0, s.lr));
    CHECK(std::abs(s.lr - eta) <= 1e-12 * std::max(1.0, eta));
    CHECK(std::abs(s.eps - oracle::exp_eps(1.0, 2.0, m)) <= 1e-12);
    // Coupling eps_m sqrt(b_m / b0) = eps0 on unrounded integral batches.
    CHECK(s.eps * std::sqrt(double(s.batch_size) / 16.0) == doctest::Approx(1.0).epsilon(1e-12));
    b *= 2.0;
    eta *= 1.4;
  }
  const auto s3 = stage_params(p, 3);
  CHECK(s3.batch_size == 128u);
  CHECK(s3.lr == doctest::Approx(0.2744).epsilon(1e-12));
  CHECK(s3.eps == doctest::Approx(0.35355339059327373).epsilon(1e-12));
}

TEST_CASE("rounded exponential batches strictly increase") {
  auto p = exponential(12);
  p.b0 = 1;
  p.delta = 1.1;
  p.gamma = 1.01;
  std::size_t prev = 0;
  for (int m = 0; m < p.stages; ++m) {
    const auto b = stage_params(p, m).batch_size;
    CHECK(b > prev);
    prev = b;
  }
  CHECK(stage_params(p, 0).batch_size == 1u);
  CHECK(stage_params(p, 1).batch_size == 2u);  // round(1.1) = 1, forced up
}

TEST_CASE("batch cap binds and flags the state while LR keeps growing") {
  auto p = exponential(8);
  p.batch_cap = 100;
  const auto s = stage_params(p, 4);
  CHECK(s.batch_size == 100u);
  CHECK(s.capped);
  CHECK(s.lr == doctest::Approx(0.1 * std::pow(1.4, 4)));
  auto st = validate(p);
  CHECK_FALSE(st.cap_binding);
  for (int k = 0; k < 4; ++k) st = on_grad_norm(st, 0.0).state;
  CHECK(st.cap_binding);
  CHECK(st.current_b == 100u);
}

TEST_CASE("threshold ladder strictly decreases") {
  for (const auto& p : {linear(), exponential()})
    for (int m = 0; m + 1 < p.stages; ++m)
      CHECK(stage_params(p, m + 1).eps < stage_params(p, m).eps);
}

TEST_CASE("inclusive threshold and single transition per check") {
  auto st = validate(exponential(5));
  const auto same = on_grad_norm(st, st.current_eps + 1e-9);
  CHECK_FALSE(same.transitioned);
  CHECK(same.state == st);

  const auto hit = on_grad_norm(st, st.current_eps);
  CHECK(hit.transitioned);
  CHECK(hit.state.m == 1);

  // Below eps_3 in one call: only one stage advance.
  const auto deep = on_grad_norm(st, stage_params(st, 3).eps * 0.5);
  CHECK(deep.state.m == 1);
  CHECK(deep.state.current_b == 32u);
}

TEST_CASE("monotone sequence crossing k thresholds triggers k transitions") {
  auto st = validate(linear(10));
  const double floor = stage_params(st, 4).eps;  // crosses eps_0..eps_3 only
  int transitions = 0;
  for (double g = 3.0; g > floor; g -= 1e-3) {
    const auto r = on_grad_norm(st, g);
    transitions += r.transitioned;
    st = r.state;
  }
  CHECK(transitions == 4);
  CHECK(st.m == 4);
}

TEST_CASE("last stage never transitions") {
  auto st = validate(linear(3));
  st = on_grad_norm(st, 0.0).state;
  st = on_grad_norm(st, 0.0).state;
  CHECK(st.m == 2);
  const auto r = on_grad_norm(st, 0.0);
  CHECK_FALSE(r.transitioned);
  CHECK(r.state.m == 2);
}

TEST_CASE("validation") {
  auto p = exponential();
  CHECK_NOTHROW(validate(p));  // 1.96 < 2
  p.gamma = std::sqrt(2.0);
  CHECK_THROWS_AS(validate(p), ConfigError);
  p.gamma = 1.5;
  try {
    validate(p);
    FAIL("expected rejection");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "scheduler.gamma");
  }
  auto q = linear();
  q.eps0.reset();
  CHECK_THROWS_AS(validate(q), ConfigError);
  q = linear();
  q.eps0 = 0.0;
  CHECK_THROWS_AS(validate(q), ConfigError);
  q = linear();
  q.b0 = 0;
  CHECK_THROWS_AS(validate(q), ConfigError);
  q = linear();
  q.delta_b.reset();
  CHECK_THROWS_AS(validate(q), ConfigError);
  SchedulerParams c;
  c.kind = SchedulerKind::CosineLR;
  c.b0 = 4;
  c.eta0 = 0.1;
  CHECK_THROWS_AS(validate(c), ConfigError);
  CHECK_THROWS_AS(stage_params(linear(3), 3), PreconditionError);
  CHECK_THROWS_AS(stage_params(linear(3), -1), PreconditionError);
}

TEST_CASE("LR warning near 2/L is advisory") {
  const auto p = exponential(5);  // peak 0.1 * 1.4^4 = 0.38416
  CHECK(validate(p, 1.0).warnings.empty());
  const auto v = validate(p, 2.0 / 0.38);
  CHECK(v.warnings.size() == 1);
  CHECK(v.state.m == 0);
}

TEST_CASE("single stage degenerates to constants") {
  for (auto p : {linear(1), exponential(1)}) {
    auto st = validate(p);
    const auto r = on_grad_norm(st, 0.0);
    CHECK_FALSE(r.transitioned);
    CHECK(r.state.current_b == p.b0);
    CHECK(r.state.current_eta == p.eta0);
  }
}

TEST_CASE("constant scheduler never changes") {
  SchedulerParams p;
  p.b0 = 5;
  p.eta0 = 0.2;
  auto st = validate(p);
  CHECK(std::isinf(st.current_eps));
  for (std::uint64_t t = 0; t < 50; ++t) {
    st = on_step(st, t);
    st = on_grad_norm(st, 0.0).state;
  }
  CHECK(st.current_b == 5u);
  CHECK(st.current_eta == 0.2);
  CHECK(st.m == 0);
}

TEST_CASE("cosine endpoints") {
  SchedulerParams p;
  p.kind = SchedulerKind::CosineLR;
  p.b0 = 4;
  p.eta0 = 0.3;
  p.t_max = 1000;
  auto st = validate(p);
  CHECK(on_step(st, 0).current_eta == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(on_step(st, 500).current_eta == doctest::Approx(0.15).epsilon(1e-12));
  CHECK(std::abs(on_step(st, 1000).current_eta) <= 1e-15);
  CHECK(std::abs(on_step(st, 5000).current_eta) <= 1e-15);
  p.eta_min = 0.01;
  st = validate(p);
  CHECK(on_step(st, 1000).current_eta == doctest::Approx(0.01).epsilon(1e-12));
  CHECK_FALSE(on_grad_norm(st, 0.0).transitioned);
}

TEST_CASE("fixed interval advances by elapsed intervals") {
  SchedulerParams p;
  p.kind = SchedulerKind::FixedInterval;
  p.stages = 5;
  p.b0 = 4;
  p.eta0 = 0.1;
  p.delta = 2.0;
  p.gamma = 1.2;
  p.interval = 100;
  auto st = validate(p);
  CHECK(std::isinf(st.current_eps));
  const auto s250 = on_step(st, 250);
  CHECK(s250.m == 2);
  CHECK(s250.current_b == 16u);
  CHECK(s250.current_eta == doctest::Approx(0.1 * 1.44));
  CHECK(on_step(st, 99).m == 0);
  CHECK(on_step(st, 100000).m == 4);
  CHECK_FALSE(on_grad_norm(st, 0.0).transitioned);

  p.growth = Growth::Linear;
  p.delta.reset();
  p.gamma.reset();
  CHECK_THROWS_AS(validate(p), ConfigError);
  p.delta_b = 3;
  const auto lin = on_step(validate(p), 250);
  CHECK(lin.current_b == 10u);
  CHECK(lin.current_eta == 0.1);
}

TEST_CASE("kind names round-trip") {
  for (auto k : {SchedulerKind::ConstantBSLR, SchedulerKind::AdaptiveLinear,
                 SchedulerKind::AdaptiveExponential, SchedulerKind::CosineLR,
                 SchedulerKind::FixedInterval})
    CHECK(scheduler_kind_from_string(to_string(k)) == k);
  CHECK_THROWS_AS(scheduler_kind_from_string("warmup"), ConfigError);
}
