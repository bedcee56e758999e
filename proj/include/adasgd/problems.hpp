// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "adasgd/param_vector.hpp"

namespace adasgd {

enum class ProblemKind { Quadratic, Logistic, TinyMLP };

/// Feature generator. Orthogonal rows are sqrt(dim) * q_k for a random
/// orthonormal basis {q_k}, cycled over samples with random signs, so
/// (1/n) sum a_i a_i^T = I exactly when dim divides n.
enum class FeatureDesign { Gaussian, Orthogonal };

std::string_view to_string(ProblemKind kind);
ProblemKind problem_kind_from_string(std::string_view name);
std::string_view to_string(FeatureDesign design);
FeatureDesign feature_design_from_string(std::string_view name);

/// Generator description for a synthetic finite-sum problem. `dim` is the
/// feature dimension; for TinyMLP the parameter dimension is
/// hidden * (dim + 2) + 1.
struct ProblemSpec {
  ProblemKind kind = ProblemKind::Quadratic;
  std::size_t n = 64;
  std::size_t dim = 8;
  std::uint64_t seed = 0;
  double noise = 0.1;
  FeatureDesign design = FeatureDesign::Gaussian;
  double l2 = 1e-2;          // Logistic only
  std::size_t hidden = 4;    // TinyMLP only
  double init_scale = 0.0;   // theta0 ~ init_scale * N(0, I); TinyMLP defaults to 0.5 when 0

  friend bool operator==(const ProblemSpec&, const ProblemSpec&) = default;
};

/// Finite-sum objective f(theta) = (1/n) sum_i f_i(theta) with analytic
/// per-sample gradients. Immutable after construction.
///
/// Per-sample losses:
///   Quadratic  f_i = 1/2 (a_i . theta - y_i)^2
///   Logistic   f_i = log(1 + exp(-y_i x_i . theta)) + l2/2 |theta|^2, y_i in {-1, +1}
///   TinyMLP    f_i = 1/2 (v . tanh(W x_i + c) + c0 - y_i)^2
class Problem {
 public:
  /// Quadratic problem from explicit rows (row-major n x d) and targets.
  static Problem quadratic(std::vector<double> rows, std::vector<double> targets,
                           std::size_t n, std::size_t d);
  static Problem logistic(std::vector<double> features, std::vector<double> labels,
                          std::size_t n, std::size_t d, double l2);
  static Problem tiny_mlp(std::vector<double> features, std::vector<double> targets,
                          std::size_t n, std::size_t input_dim, std::size_t hidden);

  /// Seeded synthetic instance.
  static Problem generate(const ProblemSpec& spec);

  ProblemKind kind() const noexcept { return kind_; }
  std::size_t n() const noexcept { return n_; }
  /// Parameter dimension.
  std::size_t d() const noexcept { return d_; }
  std::size_t feature_dim() const noexcept { return feature_dim_; }
  std::size_t hidden() const noexcept { return hidden_; }
  double l2() const noexcept { return l2_; }

  const std::optional<double>& analytic_L() const noexcept { return analytic_L_; }
  const std::optional<double>& analytic_fstar() const noexcept { return analytic_fstar_; }
  /// Upper bound on the smoothness constant when one is known in closed form
  /// (exact for Quadratic, (1/4) lambda_max(X^T X / n) + l2 for Logistic).
  const std::optional<double>& smoothness_upper_bound() const noexcept { return L_upper_; }

  double sample_loss(const ParamVector& theta, std::size_t i) const;
  double loss(const ParamVector& theta) const;

  ParamVector per_sample_grad(const ParamVector& theta, std::size_t i) const;
  /// Accumulates weight * grad f_i(theta) into out without allocating.
  void add_sample_grad(const ParamVector& theta, std::size_t i, double weight,
                       ParamVector& out) const;
  ParamVector full_grad(const ParamVector& theta) const;

  /// Exact empirical variance (1/n) sum_i |grad f_i - grad f|^2.
  double gradient_variance(const ParamVector& theta) const;

 private:
  Problem() = default;
  void require_dim(const ParamVector& theta) const;
  void require_index(std::size_t i) const;

  ProblemKind kind_ = ProblemKind::Quadratic;
  std::size_t n_ = 0;
  std::size_t d_ = 0;
  std::size_t feature_dim_ = 0;
  std::size_t hidden_ = 0;
  double l2_ = 0.0;
  std::vector<double> features_;  // row-major n x feature_dim
  std::vector<double> targets_;
  std::optional<double> analytic_L_;
  std::optional<double> analytic_fstar_;
  std::optional<double> L_upper_;
};

/// Initial point for a generated problem: init_scale * N(0, I) from a stream
/// separate from the data.
ParamVector initial_point(const ProblemSpec& spec, const Problem& problem);

/// Constants entering the constant-BS/LR convergence bound. C1 and C2 are
/// always recomputed from the primary fields.
class TheoryConstants {
 public:
  /// Throws DomainError unless 0 < eta < 2/L, and PreconditionError when
  /// f_theta0 < f_star or sigma_sq < 0.
  static TheoryConstants make(double L, double sigma_sq, double f_theta0, double f_star,
                              double eta);

  double L() const noexcept { return L_; }
  double sigma_sq() const noexcept { return sigma_sq_; }
  double f_theta0() const noexcept { return f_theta0_; }
  double f_star() const noexcept { return f_star_; }
  double eta() const noexcept { return eta_; }

  /// 2 (f(theta0) - f*) / (eta (2 - L eta))
  double C1() const noexcept;
  /// L eta sigma^2 / (2 - L eta)
  double C2() const noexcept;

  TheoryConstants with_eta(double eta) const;
  TheoryConstants with_sigma_sq(double sigma_sq) const;

  friend bool operator==(const TheoryConstants&, const TheoryConstants&) = default;

 private:
  TheoryConstants() = default;
  double L_ = 1.0;
  double sigma_sq_ = 0.0;
  double f_theta0_ = 0.0;
  double f_star_ = 0.0;
  double eta_ = 1.0;
};

/// Result of the deterministic full-gradient descent oracle used for f*.
struct DescentOracleResult {
  ParamVector theta;
  double value = 0.0;
  double grad_norm = 0.0;
  std::size_t iterations = 0;
};

/// Full-gradient descent with step 1/L from theta0 until |grad f| <= tol or
/// max_iter iterations. The step is halved whenever it would increase f.
DescentOracleResult descent_oracle(const Problem& problem, const ParamVector& theta0, double L,
                                   double tol = 1e-10, std::size_t max_iter = 1'000'000);

/// Probe-based smoothness estimate: max over `probes` pairs near theta0 of
/// |grad f(a) - grad f(b)| / |a - b|, pairs aligned by power iteration.
double estimate_smoothness(const Problem& problem, const ParamVector& theta0, int probes,
                           std::uint64_t seed);

/// L, sigma^2, f(theta0), f* for a problem, combined with the learning rate
/// eta into TheoryConstants.
TheoryConstants estimate_constants(const Problem& problem, const ParamVector& theta0,
                                   double eta, int probes, std::uint64_t seed);

}  // namespace adasgd
