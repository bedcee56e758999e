// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>

#include "adasgd/errors.hpp"
#include "adasgd/rng.hpp"
#include "adasgd/theory.hpp"
#include "json.hpp"
#include "oracles.hpp"

using namespace adasgd;

namespace {

// L = 1, f0 - f* = 2, eta = 0.5: C1 = 2*2/(0.5*1.5) = 16/3.
TheoryConstants base(double sigma_sq = 3.0) {
  return TheoryConstants::make(1.0, sigma_sq, 3.0, 1.0, 0.5);
}

}  // namespace

TEST_CASE("bias and variance terms for constant schedules") {
  const auto c = base();
  const std::vector<double> etas(100, 0.5);
  const std::vector<std::size_t> bs(100, 8);
  CHECK(bound_B_T(c, etas) == doctest::Approx(c.C1() / 100).epsilon(1e-13));
  CHECK(bound_V_T(c, etas, bs) == doctest::Approx(c.C2() / 8).epsilon(1e-13));
  CHECK(combined_bound(c, etas, bs) ==
        doctest::Approx(std::sqrt(c.C1() / 100 + c.C2() / 8)).epsilon(1e-13));
  const std::vector<double> etas2(200, 0.5);
  CHECK(bound_B_T(c, etas2) == doctest::Approx(bound_B_T(c, etas) / 2).epsilon(1e-13));

  const auto flat = TheoryConstants::make(1.0, 0.0, 1.0, 1.0, 0.5);
  CHECK(bound_B_T(flat, etas) == 0.0);
  CHECK(bound_V_T(flat, etas, bs) == 0.0);
  CHECK(combined_bound(flat, etas, bs) == 0.0);

  double prev = INFINITY;
  for (std::size_t T = 1; T <= 200; T += 7) {
    const std::vector<double> e(T, 0.5);
    const std::vector<std::size_t> b(T, 4);
    const double v = combined_bound(c, e, b);
    CHECK(v <= prev);
    prev = v;
  }
}

TEST_CASE("variance term with exponential schedules matches direct summation") {
  const auto c = base();
  std::vector<double> etas;
  std::vector<std::size_t> bs;
  double num = 0, den = 0, eta_max = 0;
  for (int m = 0; m < 6; ++m)
    for (int k = 0; k < 10; ++k) {
      const double eta = 0.05 * std::pow(1.4, m);
      const std::size_t b = std::size_t(4) << m;
      etas.push_back(eta);
      bs.push_back(b);
      num += eta * eta / double(b);
      den += eta;
      eta_max = std::max(eta_max, eta);
    }
  const double expected = 1.0 * 3.0 / (2.0 - eta_max) * num / den;
  CHECK(bound_V_T(c, etas, bs) == doctest::Approx(expected).epsilon(1e-13));
  // Geometric-series bound: sum (gamma^2/delta)^m <= 1 / (1 - gamma^2/delta).
  double geo = 0.0;
  for (int m = 0; m < 6; ++m) geo += 10 * 0.05 * 0.05 / 4 * std::pow(1.96 / 2, m);
  CHECK(num <= geo * (1 + 1e-12));
  CHECK(num <= 10 * 0.05 * 0.05 / 4 / (1 - 0.98));
}

TEST_CASE("bound domain and preconditions") {
  const auto c = base();
  const std::vector<double> bad{0.5, 2.0};
  const std::vector<std::size_t> bs{1, 1};
  CHECK_THROWS_AS(bound_B_T(c, bad), DomainError);
  CHECK_THROWS_AS(bound_V_T(c, std::vector<double>{0.5}, bs), PreconditionError);
  CHECK_THROWS_AS(bound_B_T(c, std::vector<double>{}), PreconditionError);
}

TEST_CASE("steps and SFO at the critical batch") {
  const auto c = base();
  const double eps = 0.3;
  const double bstar = critical_bs(c, eps);
  CHECK(bstar == doctest::Approx(2 * c.C2() / (eps * eps)).epsilon(1e-14));
  CHECK(steps_required(c, eps, bstar) == doctest::Approx(2 * c.C1() / (eps * eps)).epsilon(1e-12));
  CHECK(sfo_complexity(c, eps, bstar) ==
        doctest::Approx(4 * c.C1() * c.C2() / std::pow(eps, 4)).epsilon(1e-12));
  CHECK(critical_bs(c, eps / 2) == doctest::Approx(4 * bstar).epsilon(1e-14));
  CHECK(critical_bs(c.with_sigma_sq(0.0), eps) == 0.0);
  const auto z = c.with_sigma_sq(0.0);
  CHECK(steps_required(z, eps, 1) == doctest::Approx(c.C1() / (eps * eps)));
  CHECK(steps_required(z, eps, 1000) == doctest::Approx(c.C1() / (eps * eps)));
  CHECK(steps_required(c, eps, 1e9) > c.C1() / (eps * eps));
  CHECK(steps_required(c, eps, 1e9) == doctest::Approx(c.C1() / (eps * eps)).epsilon(1e-6));
  const double fl = c.C2() / (eps * eps);
  CHECK_THROWS_AS(steps_required(c, eps, fl), DomainError);
  CHECK_THROWS_AS(sfo_complexity(c, eps, fl * 0.5), DomainError);
  CHECK(min_batch_in_domain(c, eps) == std::size_t(std::ceil(fl)) + 1);
  CHECK_THROWS_AS(critical_bs(c, 0.0), DomainError);
}

TEST_CASE("SFO curve shape on random constant triples") {
  Rng rng(2024);
  for (int k = 0; k < 20; ++k) {
    const double c1 = 1 + 99 * rng.uniform();
    const double c2 = 0.1 + 10 * rng.uniform();
    const double eps = 0.05 + 0.5 * rng.uniform();
    // Recover TheoryConstants with these C1, C2: L = 1, eta = 1, f0 - f* = c1/2, sigma^2 = c2.
    const auto c = TheoryConstants::make(1.0, c2, c1 / 2, 0.0, 1.0);
    REQUIRE(c.C1() == doctest::Approx(c1));
    REQUIRE(c.C2() == doctest::Approx(c2));
    const double bstar = critical_bs(c, eps);
    const auto lo = min_batch_in_domain(c, eps);
    const auto hi = static_cast<std::size_t>(4 * bstar) + 10;
    std::size_t arg = lo;
    for (std::size_t b = lo; b <= hi; ++b) {
      const double n = sfo_complexity(c, eps, double(b));
      CHECK(n == doctest::Approx(oracle::sfo(c1, c2, eps, double(b))).epsilon(1e-12));
      if (n < sfo_complexity(c, eps, double(arg))) arg = b;
      if (b > lo && b < hi) {
        const double d2 = sfo_complexity(c, eps, b - 1.0) - 2 * n + sfo_complexity(c, eps, b + 1.0);
        CHECK(d2 > 0.0);
        CHECK(steps_required(c, eps, b + 1.0) < steps_required(c, eps, double(b)));
        if (b + 1.0 < bstar) CHECK(sfo_complexity(c, eps, b + 1.0) < n);
        if (double(b) > bstar) CHECK(sfo_complexity(c, eps, b + 1.0) > n);
      }
    }
    CHECK(std::abs(double(arg) - std::round(bstar)) <= 1.0);
    const double h = 1e-4 * bstar;
    const double d1 = (sfo_complexity(c, eps, bstar + h) - sfo_complexity(c, eps, bstar - h)) / (2 * h);
    CHECK(std::abs(d1) * bstar / sfo_complexity(c, eps, bstar) <= 1e-6);
  }
}

TEST_CASE("linear batch growth bound decays like one over root T") {
  // Bias-dominated regime; stage m has 10 steps at b = 100 + 10 m.
  const auto c = TheoryConstants::make(1.0, 1e-3, 11.0, 1.0, 0.1);
  std::vector<double> etas, logT, logv;
  std::vector<std::size_t> bs;
  for (int m = 0; m < 2000; ++m) {
    for (int k = 0; k < 10; ++k) {
      etas.push_back(0.1);
      bs.push_back(100 + 10 * std::size_t(m));
    }
    if (m >= 10 && (m % 50 == 0)) {
      logT.push_back(std::log(double(etas.size())));
      logv.push_back(std::log(combined_bound(c, etas, bs)));
    }
  }
  const double s = oracle::slope(logT, logv);
  CHECK(s >= -0.55);
  CHECK(s <= -0.45);
}

TEST_CASE("exponential schedule bound decays geometrically per stage") {
  const double gamma = 1.5;  // delta = 4, gamma^2 / delta = 0.5625
  const auto c = TheoryConstants::make(1.0, 1.0, 2.0, 1.0, 1e-6);
  std::vector<double> etas;
  std::vector<std::size_t> bs;
  std::vector<double> ends;
  for (int m = 0; m < 30; ++m) {
    for (int k = 0; k < 5; ++k) {
      etas.push_back(1e-6 * std::pow(gamma, m));
      bs.push_back(std::size_t(2) << (2 * m));  // 2 delta^m
    }
    ends.push_back(combined_bound(c, etas, bs));
  }
  for (int m = 20; m < 30; ++m)
    CHECK(ends[m] / ends[m - 1] == doctest::Approx(1 / std::sqrt(gamma)).epsilon(0.01));
}

TEST_CASE("empirical sweep on a zero-variance problem prefers the smallest batch") {
  const std::size_t n = 16, d = 2;
  std::vector<double> rows, y;
  for (std::size_t i = 0; i < n; ++i) {
    rows.insert(rows.end(), {1.0, 0.5});
    y.push_back(1.0);
  }
  const auto p = Problem::quadratic(rows, y, n, d);
  const ParamVector theta0(d);
  const double L = *p.analytic_L();
  const auto c = TheoryConstants::make(L, 0.0, p.loss(theta0), *p.analytic_fstar(), 0.5 / L);
  CbsSweep sw;
  sw.batch_grid = {1, 2, 4, 8};
  sw.seeds = {0, 1, 2};
  sw.eta = 0.5 / L;
  sw.eps = 1e-3;
  sw.max_steps = 10000;
  const auto curve = empirical_cbs(p, theta0, c, sw);
  REQUIRE(curve.b_star_empirical.has_value());
  CHECK(*curve.b_star_empirical == 1u);
  for (std::size_t k = 0; k + 1 < curve.samples.size(); ++k) {
    CHECK_FALSE(curve.samples[k].censored);
    CHECK(curve.samples[k + 1].sfo_mean == doctest::Approx(2 * curve.samples[k].sfo_mean));
  }
  CHECK(curve.analytic.size() == 4u);

  std::ostringstream csv, js;
  write_sfo_csv(csv, curve);
  write_sfo_summary(js, curve);
  CHECK(csv.str().rfind("b,sfo_mean,sfo_min,sfo_max,censored\n", 0) == 0);
  const auto j = nlohmann::json::parse(js.str());
  CHECK(j.at("b_star_empirical").get<int>() == 1);
  CHECK(j.at("b_star_analytic").get<double>() == 0.0);

  sw.eps = 1e-300;
  sw.max_steps = 5;
  const auto censored = sweep_sfo_curve(p, theta0, c, sw);
  CHECK_FALSE(censored.b_star_empirical.has_value());
  CHECK(censored.samples[0].sfo_mean == 5.0);
  CHECK(censored.samples[0].censored_runs == 3u);
  CHECK_THROWS_AS(empirical_cbs(p, theta0, c, sw), PrecisionUnreachable);
  sw.batch_grid = {32};
  CHECK_THROWS_AS(sweep_sfo_curve(p, theta0, c, sw), ConfigError);
}
