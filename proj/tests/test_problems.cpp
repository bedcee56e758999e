// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "adasgd/errors.hpp"
#include "adasgd/problems.hpp"
#include "adasgd/rng.hpp"
#include "oracles.hpp"

using namespace adasgd;

namespace {

ProblemSpec spec_of(ProblemKind kind, std::uint64_t seed = 5) {
  ProblemSpec s;
  s.kind = kind;
  s.n = 40;
  s.dim = 5;
  s.seed = seed;
  s.noise = 0.3;
  s.hidden = 3;
  return s;
}

ParamVector random_point(std::size_t d, Rng& rng, double scale) {
  ParamVector v(d);
  for (std::size_t j = 0; j < d; ++j) v[j] = scale * rng.normal();
  return v;
}

double fd_component(const Problem& p, ParamVector theta, std::size_t i, std::size_t j, double h) {
  const double x = theta[j];
  theta[j] = x + h;
  const double up = p.sample_loss(theta, i);
  theta[j] = x - h;
  const double down = p.sample_loss(theta, i);
  return (up - down) / (2 * h);
}

}  // namespace

TEST_CASE("per-sample gradients match central differences") {
  for (auto kind : {ProblemKind::Quadratic, ProblemKind::Logistic, ProblemKind::TinyMLP}) {
    CAPTURE(to_string(kind));
    const auto p = Problem::generate(spec_of(kind));
    Rng rng(17);
    for (int trial = 0; trial < 25; ++trial) {
      const auto theta = random_point(p.d(), rng, 0.8);
      const auto i = rng.uniform_index(p.n());
      const auto g = p.per_sample_grad(theta, i);
      double err = 0.0;
      for (std::size_t j = 0; j < p.d(); ++j) {
        const double e = g[j] - fd_component(p, theta, i, j, 1e-6);
        err += e * e;
      }
      CHECK(std::sqrt(err) <= 1e-5 * std::max(g.norm(), 1e-3));
    }
  }
}

TEST_CASE("full gradient is the mean of per-sample gradients") {
  for (auto kind : {ProblemKind::Quadratic, ProblemKind::Logistic, ProblemKind::TinyMLP}) {
    const auto p = Problem::generate(spec_of(kind));
    Rng rng(2);
    const auto theta = random_point(p.d(), rng, 1.0);
    ParamVector mean(p.d());
    for (std::size_t i = 0; i < p.n(); ++i) mean += p.per_sample_grad(theta, i);
    mean *= 1.0 / double(p.n());
    const auto full = p.full_grad(theta);
    CHECK((full - mean).norm() <= 1e-10 * std::max(1.0, full.norm()));
    double lsum = 0.0;
    for (std::size_t i = 0; i < p.n(); ++i) {
      const double li = p.sample_loss(theta, i);
      CHECK(li >= 0.0);
      lsum += li;
    }
    CHECK(p.loss(theta) == doctest::Approx(lsum / double(p.n())).epsilon(1e-12));
  }
}

TEST_CASE("tiny MLP parameter count is h(p + 2) + 1") {
  const auto s = spec_of(ProblemKind::TinyMLP);
  const auto p = Problem::generate(s);
  CHECK(p.d() == s.hidden * (s.dim + 2) + 1);
  CHECK(p.feature_dim() == s.dim);
  CHECK_FALSE(p.analytic_L().has_value());
}

TEST_CASE("quadratic smoothness and minimum agree with independent oracles") {
  Rng rng(8);
  const std::size_t n = 30, d = 4;
  std::vector<double> x(n * d), y(n);
  for (auto& v : x) v = rng.normal();
  for (auto& v : y) v = rng.normal();
  const auto p = Problem::quadratic(x, y, n, d);
  REQUIRE(p.analytic_L().has_value());
  REQUIRE(p.analytic_fstar().has_value());
  CHECK(*p.analytic_L() == doctest::Approx(oracle::lambda_max(oracle::gram(x, n, d))).epsilon(1e-9));
  CHECK(*p.analytic_fstar() == doctest::Approx(oracle::quadratic_fstar(x, y, n, d)).epsilon(1e-9));
  double y2 = 0.0;
  for (double v : y) y2 += 0.5 * v * v / double(n);
  CHECK(p.loss(ParamVector(d)) == doctest::Approx(y2).epsilon(1e-12));
}

TEST_CASE("losses at the origin") {
  const auto lg = Problem::generate(spec_of(ProblemKind::Logistic));
  CHECK(lg.loss(ParamVector(lg.d())) == doctest::Approx(std::numbers::ln2).epsilon(1e-12));
  CHECK(lg.smoothness_upper_bound().has_value());
}

TEST_CASE("logistic smoothness bound dominates observed gradient ratios") {
  const auto p = Problem::generate(spec_of(ProblemKind::Logistic));
  Rng rng(4);
  for (int k = 0; k < 50; ++k) {
    const auto a = random_point(p.d(), rng, 1.0);
    const auto b = random_point(p.d(), rng, 1.0);
    const double ratio = (p.full_grad(a) - p.full_grad(b)).norm() / (a - b).norm();
    CHECK(ratio <= *p.smoothness_upper_bound() * (1 + 1e-12));
  }
}

TEST_CASE("gradient variance equals a double-loop oracle") {
  for (auto kind : {ProblemKind::Quadratic, ProblemKind::Logistic, ProblemKind::TinyMLP}) {
    const auto p = Problem::generate(spec_of(kind));
    Rng rng(6);
    const auto theta = random_point(p.d(), rng, 0.5);
    // E|g_i - g_j|^2 / 2 over independent pairs equals the variance.
    double pairs = 0.0;
    for (std::size_t i = 0; i < p.n(); ++i)
      for (std::size_t j = 0; j < p.n(); ++j)
        pairs += (p.per_sample_grad(theta, i) - p.per_sample_grad(theta, j)).squared_norm();
    const double expected = pairs / (2.0 * double(p.n()) * double(p.n()));
    CHECK(p.gradient_variance(theta) == doctest::Approx(expected).epsilon(1e-10));
  }
}

TEST_CASE("generation is deterministic in the seed") {
  const auto s = spec_of(ProblemKind::Logistic, 12);
  const auto a = Problem::generate(s);
  const auto b = Problem::generate(s);
  const auto c = Problem::generate(spec_of(ProblemKind::Logistic, 13));
  CHECK(initial_point(s, a) == initial_point(s, b));
  ParamVector t0(a.d());
  t0.fill(0.4);
  CHECK(a.loss(t0) == b.loss(t0));
  CHECK(a.full_grad(t0) == b.full_grad(t0));
  CHECK(a.loss(t0) != c.loss(t0));
}

TEST_CASE("orthogonal design is exactly isotropic when dim divides n") {
  ProblemSpec s = spec_of(ProblemKind::Quadratic);
  s.design = FeatureDesign::Orthogonal;
  s.n = 64;
  s.dim = 8;
  const auto p = Problem::generate(s);
  CHECK(*p.analytic_L() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(to_string(FeatureDesign::Orthogonal) == "orthogonal");
  CHECK(feature_design_from_string("gaussian") == FeatureDesign::Gaussian);
  CHECK_THROWS_AS(feature_design_from_string("hadamard"), ConfigError);
}

TEST_CASE("kind names round-trip") {
  for (auto kind : {ProblemKind::Quadratic, ProblemKind::Logistic, ProblemKind::TinyMLP})
    CHECK(problem_kind_from_string(to_string(kind)) == kind);
  CHECK_THROWS_AS(problem_kind_from_string("cubic"), ConfigError);
}

TEST_CASE("dimension and index checks") {
  const auto p = Problem::generate(spec_of(ProblemKind::Quadratic));
  CHECK_THROWS_AS(p.loss(ParamVector(p.d() + 1)), PreconditionError);
  CHECK_THROWS_AS(p.sample_loss(ParamVector(p.d()), p.n()), PreconditionError);
  CHECK_THROWS_AS(Problem::quadratic({1.0, 2.0}, {1.0}, 1, 3), PreconditionError);
  ParamVector a(3), b(4);
  CHECK_THROWS_AS(a += b, PreconditionError);
}

TEST_CASE("theory constants") {
  const auto c = TheoryConstants::make(2.0, 3.0, 5.0, 1.0, 0.25);
  CHECK(c.C1() == doctest::Approx(oracle::C1(2.0, 5.0, 1.0, 0.25)).epsilon(1e-14));
  CHECK(c.C2() == doctest::Approx(oracle::C2(2.0, 3.0, 0.25)).epsilon(1e-14));
  CHECK(c.C1() == doctest::Approx(2 * 4.0 / (0.25 * 1.5)).epsilon(1e-14));
  CHECK_THROWS_AS(TheoryConstants::make(2.0, 3.0, 5.0, 1.0, 1.0), DomainError);
  CHECK_THROWS_AS(TheoryConstants::make(2.0, 3.0, 5.0, 1.0, 0.0), DomainError);
  CHECK_THROWS_AS(TheoryConstants::make(2.0, 3.0, 0.5, 1.0, 0.25), PreconditionError);
  CHECK_THROWS_AS(TheoryConstants::make(2.0, -1.0, 5.0, 1.0, 0.25), PreconditionError);
  CHECK(c.with_eta(0.5).C2() == doctest::Approx(oracle::C2(2.0, 3.0, 0.5)));
  CHECK(c.with_sigma_sq(0.0).C2() == 0.0);
}

TEST_CASE("constant estimation") {
  const auto s = spec_of(ProblemKind::Quadratic);
  const auto p = Problem::generate(s);
  const auto t0 = initial_point(s, p);
  const double L = *p.analytic_L();
  CHECK(estimate_smoothness(p, t0, 4, 1) == doctest::Approx(L).epsilon(1e-4));
  const auto c = estimate_constants(p, t0, 0.5 / L, 4, 1);
  CHECK(c.f_star() == doctest::Approx(*p.analytic_fstar()));
  CHECK(c.f_theta0() == doctest::Approx(p.loss(t0)));
  CHECK(c.sigma_sq() >= p.gradient_variance(t0));
  CHECK_THROWS_AS(estimate_constants(p, t0, 0.5 / L, 0, 1), ConfigError);
  CHECK_THROWS_AS(estimate_constants(p, t0, 2.5 / L, 4, 1), ConfigError);

  const auto r = descent_oracle(p, t0, L);
  CHECK(r.value == doctest::Approx(*p.analytic_fstar()).epsilon(1e-9));
  CHECK(r.grad_norm <= 1e-10);

  const auto ms = spec_of(ProblemKind::TinyMLP);
  const auto mp = Problem::generate(ms);
  const auto m0 = initial_point(ms, mp);
  const double mL = estimate_smoothness(mp, m0, 4, 1);
  const auto mc = estimate_constants(mp, m0, 0.5 / mL, 4, 1);
  CHECK(mc.f_star() <= mc.f_theta0());
  CHECK(mc.f_star() >= 0.0);
}
