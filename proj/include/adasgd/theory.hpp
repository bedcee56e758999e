// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "adasgd/param_vector.hpp"
#include "adasgd/problems.hpp"

namespace adasgd {

/// Bias term 2(f(theta0) - f*) / (2 - L eta_max) / sum(etas).
double bound_B_T(const TheoryConstants& c, std::span<const double> etas);

/// Variance term L sigma^2 / (2 - L eta_max) * sum(eta_t^2 / b_t) / sum(eta_t).
double bound_V_T(const TheoryConstants& c, std::span<const double> etas,
                 std::span<const std::size_t> batch_sizes);

/// sqrt(B_T + V_T): bound on min_t E|grad f(theta_t)|.
double combined_bound(const TheoryConstants& c, std::span<const double> etas,
                      std::span<const std::size_t> batch_sizes);

/// Smallest admissible batch for precision eps: ceil(C2 / eps^2) + 1.
std::size_t min_batch_in_domain(const TheoryConstants& c, double eps);

/// T(b) = C1 b / (eps^2 b - C2). Throws DomainError unless b > C2 / eps^2.
double steps_required(const TheoryConstants& c, double eps, double b);

/// N(b) = b T(b) = C1 b^2 / (eps^2 b - C2).
double sfo_complexity(const TheoryConstants& c, double eps, double b);

/// b* = 2 C2 / eps^2.
double critical_bs(const TheoryConstants& c, double eps);

/// One point of an empirical SFO curve: seed statistics of first-hit SFO.
/// A censored row had at least one seed that never reached eps; its values
/// are lower bounds (unfinished seeds contribute b * max_steps).
struct SfoSample {
  std::size_t b = 0;
  double sfo_mean = 0.0;
  double sfo_min = 0.0;
  double sfo_max = 0.0;
  bool censored = false;
  std::size_t censored_runs = 0;
  std::size_t diverged_runs = 0;
};

struct SfoCurve {
  double eps = 0.0;
  TheoryConstants constants;
  /// Analytic (b, N(b)) on the grid points inside the domain b > C2/eps^2.
  std::vector<std::pair<std::size_t, double>> analytic;
  std::vector<SfoSample> samples;
  double b_star_analytic = 0.0;
  std::optional<std::size_t> b_star_empirical;
};

struct CbsSweep {
  std::vector<std::size_t> batch_grid;
  std::vector<std::uint64_t> seeds;
  double eta = 0.0;
  double eps = 0.0;
  std::uint64_t max_steps = 0;
  std::uint64_t check_interval = 1;
  unsigned threads = 0;
};

/// Constant-(b, eta) runs over every grid point and seed, recording first-hit
/// SFO for |grad f| <= eps. Never throws on censoring; b_star_empirical is
/// empty when every row is censored.
SfoCurve sweep_sfo_curve(const Problem& problem, const ParamVector& theta0,
                         const TheoryConstants& constants, const CbsSweep& sweep);

/// sweep_sfo_curve, throwing PrecisionUnreachable when every row is censored.
SfoCurve empirical_cbs(const Problem& problem, const ParamVector& theta0,
                       const TheoryConstants& constants, const CbsSweep& sweep);

/// CSV header b,sfo_mean,sfo_min,sfo_max,censored.
void write_sfo_csv(std::ostream& out, const SfoCurve& curve);

/// JSON summary with b_star_analytic, b_star_empirical and the constants.
void write_sfo_summary(std::ostream& out, const SfoCurve& curve);

}  // namespace adasgd
