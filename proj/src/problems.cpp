// SPDX-License-Identifier: Apache-2.0
#include "adasgd/problems.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "adasgd/errors.hpp"
#include "adasgd/rng.hpp"

namespace adasgd {

namespace {

// Streams of the problem seed.
constexpr std::uint64_t kDataStream = 1;
constexpr std::uint64_t kInitStream = 2;
constexpr std::uint64_t kProbeStream = 3;

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Eigen::MatrixXd second_moment(const std::vector<double>& rows, std::size_t n, std::size_t d) {
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> A(
      rows.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  return (A.transpose() * A) / static_cast<double>(n);
}

double largest_eigenvalue(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
  return std::max(0.0, solver.eigenvalues().maxCoeff());
}

}  // namespace

std::string_view to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::Quadratic: return "quadratic";
    case ProblemKind::Logistic: return "logistic";
    case ProblemKind::TinyMLP: return "tiny_mlp";
  }
  return "unknown";
}

ProblemKind problem_kind_from_string(std::string_view name) {
  if (name == "quadratic") return ProblemKind::Quadratic;
  if (name == "logistic") return ProblemKind::Logistic;
  if (name == "tiny_mlp") return ProblemKind::TinyMLP;
  throw ConfigError("problem.kind", "unknown problem kind '" + std::string(name) + "'");
}

std::string_view to_string(FeatureDesign design) {
  return design == FeatureDesign::Orthogonal ? "orthogonal" : "gaussian";
}

FeatureDesign feature_design_from_string(std::string_view name) {
  if (name == "gaussian") return FeatureDesign::Gaussian;
  if (name == "orthogonal") return FeatureDesign::Orthogonal;
  throw ConfigError("problem.design", "expected 'gaussian' or 'orthogonal'");
}

Problem Problem::quadratic(std::vector<double> rows, std::vector<double> targets, std::size_t n,
                           std::size_t d) {
  if (n == 0 || d == 0) throw PreconditionError("quadratic problem needs n >= 1 and d >= 1");
  if (rows.size() != n * d || targets.size() != n)
    throw PreconditionError("quadratic problem data does not match n x d");
  Problem p;
  p.kind_ = ProblemKind::Quadratic;
  p.n_ = n;
  p.d_ = d;
  p.feature_dim_ = d;
  p.features_ = std::move(rows);
  p.targets_ = std::move(targets);

  // f = 1/2 theta^T H theta - g^T theta + c with H = A^T A / n, so L = lambda_max(H)
  // and f* is attained at the pseudo-inverse solution.
  const Eigen::MatrixXd H = second_moment(p.features_, n, d);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(H);
  const Eigen::VectorXd& evals = solver.eigenvalues();
  const double lmax = std::max(0.0, evals.maxCoeff());
  p.analytic_L_ = lmax;
  p.L_upper_ = lmax;

  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> A(
      p.features_.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  Eigen::Map<const Eigen::VectorXd> y(p.targets_.data(), static_cast<Eigen::Index>(n));
  const Eigen::VectorXd g = A.transpose() * y / static_cast<double>(n);
  const Eigen::VectorXd proj = solver.eigenvectors().transpose() * g;
  Eigen::VectorXd coeff = Eigen::VectorXd::Zero(proj.size());
  const double cutoff = 1e-12 * std::max(lmax, 1e-300);
  for (Eigen::Index k = 0; k < proj.size(); ++k)
    if (evals[k] > cutoff) coeff[k] = proj[k] / evals[k];
  const Eigen::VectorXd theta_star = solver.eigenvectors() * coeff;
  ParamVector ts(std::vector<double>(theta_star.data(), theta_star.data() + theta_star.size()));
  p.analytic_fstar_ = p.loss(ts);
  return p;
}

Problem Problem::logistic(std::vector<double> features, std::vector<double> labels, std::size_t n,
                          std::size_t d, double l2) {
  if (n == 0 || d == 0) throw PreconditionError("logistic problem needs n >= 1 and d >= 1");
  if (features.size() != n * d || labels.size() != n)
    throw PreconditionError("logistic problem data does not match n x d");
  if (!(l2 >= 0.0)) throw PreconditionError("logistic l2 must be nonnegative");
  for (double y : labels)
    if (y != 1.0 && y != -1.0) throw PreconditionError("logistic labels must be +1 or -1");
  Problem p;
  p.kind_ = ProblemKind::Logistic;
  p.n_ = n;
  p.d_ = d;
  p.feature_dim_ = d;
  p.l2_ = l2;
  p.features_ = std::move(features);
  p.targets_ = std::move(labels);
  p.L_upper_ = 0.25 * largest_eigenvalue(second_moment(p.features_, n, d)) + l2;
  return p;
}

Problem Problem::tiny_mlp(std::vector<double> features, std::vector<double> targets,
                          std::size_t n, std::size_t input_dim, std::size_t hidden) {
  if (n == 0 || input_dim == 0 || hidden == 0)
    throw PreconditionError("tiny_mlp problem needs n, input_dim, hidden >= 1");
  if (features.size() != n * input_dim || targets.size() != n)
    throw PreconditionError("tiny_mlp problem data does not match n x input_dim");
  Problem p;
  p.kind_ = ProblemKind::TinyMLP;
  p.n_ = n;
  p.feature_dim_ = input_dim;
  p.hidden_ = hidden;
  p.d_ = hidden * (input_dim + 2) + 1;
  p.features_ = std::move(features);
  p.targets_ = std::move(targets);
  return p;
}

Problem Problem::generate(const ProblemSpec& spec) {
  if (spec.n == 0) throw ConfigError("problem.n", "must be >= 1");
  if (spec.dim == 0) throw ConfigError("problem.dim", "must be >= 1");
  if (!(spec.noise >= 0.0) || !std::isfinite(spec.noise))
    throw ConfigError("problem.noise", "must be a finite nonnegative number");

  Rng rng(spec.seed, kDataStream);
  const std::size_t n = spec.n;
  const std::size_t p = spec.dim;
  std::vector<double> x(n * p);
  if (spec.design == FeatureDesign::Orthogonal) {
    Eigen::MatrixXd g(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
    for (Eigen::Index r = 0; r < g.rows(); ++r)
      for (Eigen::Index c = 0; c < g.cols(); ++c) g(r, c) = rng.normal();
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
    const double scale = std::sqrt(static_cast<double>(p));
    for (std::size_t i = 0; i < n; ++i) {
      const auto k = static_cast<Eigen::Index>(i % p);
      const double sign = rng.uniform() < 0.5 ? -scale : scale;
      for (std::size_t j = 0; j < p; ++j) x[i * p + j] = sign * q(static_cast<Eigen::Index>(j), k);
    }
  } else {
    for (auto& v : x) v = rng.normal();
  }

  switch (spec.kind) {
    case ProblemKind::Quadratic: {
      std::vector<double> w(p);
      for (auto& v : w) v = rng.normal();
      std::vector<double> y(n);
      for (std::size_t i = 0; i < n; ++i) {
        double z = 0.0;
        for (std::size_t k = 0; k < p; ++k) z += x[i * p + k] * w[k];
        y[i] = z + spec.noise * rng.normal();
      }
      return quadratic(std::move(x), std::move(y), n, p);
    }
    case ProblemKind::Logistic: {
      if (!(spec.l2 >= 0.0)) throw ConfigError("problem.l2", "must be nonnegative");
      std::vector<double> w(p);
      for (auto& v : w) v = rng.normal() / std::sqrt(static_cast<double>(p));
      std::vector<double> y(n);
      for (std::size_t i = 0; i < n; ++i) {
        double z = 0.0;
        for (std::size_t k = 0; k < p; ++k) z += x[i * p + k] * w[k];
        y[i] = (z + spec.noise * rng.normal()) >= 0.0 ? 1.0 : -1.0;
      }
      return logistic(std::move(x), std::move(y), n, p, spec.l2);
    }
    case ProblemKind::TinyMLP: {
      if (spec.hidden == 0) throw ConfigError("problem.hidden", "must be >= 1");
      const std::size_t h = spec.hidden;
      // Teacher network of the same shape.
      std::vector<double> W(h * p), c(h), v(h);
      for (auto& a : W) a = rng.normal() / std::sqrt(static_cast<double>(p));
      for (auto& a : c) a = 0.1 * rng.normal();
      for (auto& a : v) a = rng.normal() / std::sqrt(static_cast<double>(h));
      std::vector<double> y(n);
      for (std::size_t i = 0; i < n; ++i) {
        double out = 0.0;
        for (std::size_t j = 0; j < h; ++j) {
          double pre = c[j];
          for (std::size_t k = 0; k < p; ++k) pre += W[j * p + k] * x[i * p + k];
          out += v[j] * std::tanh(pre);
        }
        y[i] = out + spec.noise * rng.normal();
      }
      return tiny_mlp(std::move(x), std::move(y), n, p, h);
    }
  }
  throw ConfigError("problem.kind", "unsupported");
}

ParamVector initial_point(const ProblemSpec& spec, const Problem& problem) {
  double scale = spec.init_scale;
  if (scale == 0.0 && problem.kind() == ProblemKind::TinyMLP) scale = 0.5;
  ParamVector theta(problem.d());
  if (scale == 0.0) return theta;
  Rng rng(spec.seed, kInitStream);
  for (auto& v : theta) v = scale * rng.normal();
  return theta;
}

void Problem::require_dim(const ParamVector& theta) const {
  if (theta.dim() != d_)
    throw PreconditionError("theta has dimension " + std::to_string(theta.dim()) +
                            ", problem expects " + std::to_string(d_));
}

void Problem::require_index(std::size_t i) const {
  if (i >= n_)
    throw PreconditionError("sample index " + std::to_string(i) + " out of range [0, " +
                            std::to_string(n_) + ")");
}

double Problem::sample_loss(const ParamVector& theta, std::size_t i) const {
  require_dim(theta);
  require_index(i);
  const double* x = features_.data() + i * feature_dim_;
  const double y = targets_[i];
  switch (kind_) {
    case ProblemKind::Quadratic: {
      double r = -y;
      for (std::size_t k = 0; k < d_; ++k) r += x[k] * theta[k];
      return 0.5 * r * r;
    }
    case ProblemKind::Logistic: {
      double z = 0.0;
      for (std::size_t k = 0; k < d_; ++k) z += x[k] * theta[k];
      return softplus(-y * z) + 0.5 * l2_ * theta.squared_norm();
    }
    case ProblemKind::TinyMLP: {
      const std::size_t p = feature_dim_, h = hidden_;
      const double* W = theta.span().data();
      const double* c = W + h * p;
      const double* v = c + h;
      double out = v[h];
      for (std::size_t j = 0; j < h; ++j) {
        double pre = c[j];
        for (std::size_t k = 0; k < p; ++k) pre += W[j * p + k] * x[k];
        out += v[j] * std::tanh(pre);
      }
      const double r = out - y;
      return 0.5 * r * r;
    }
  }
  return 0.0;
}

double Problem::loss(const ParamVector& theta) const {
  require_dim(theta);
  double acc = 0.0;
  for (std::size_t i = 0; i < n_; ++i) acc += sample_loss(theta, i);
  return acc / static_cast<double>(n_);
}

void Problem::add_sample_grad(const ParamVector& theta, std::size_t i, double weight,
                              ParamVector& out) const {
  require_dim(theta);
  require_dim(out);
  require_index(i);
  const double* x = features_.data() + i * feature_dim_;
  const double y = targets_[i];
  switch (kind_) {
    case ProblemKind::Quadratic: {
      double r = -y;
      for (std::size_t k = 0; k < d_; ++k) r += x[k] * theta[k];
      const double s = weight * r;
      for (std::size_t k = 0; k < d_; ++k) out[k] += s * x[k];
      return;
    }
    case ProblemKind::Logistic: {
      double z = 0.0;
      for (std::size_t k = 0; k < d_; ++k) z += x[k] * theta[k];
      const double s = -weight * y * sigmoid(-y * z);
      for (std::size_t k = 0; k < d_; ++k) out[k] += s * x[k] + weight * l2_ * theta[k];
      return;
    }
    case ProblemKind::TinyMLP: {
      const std::size_t p = feature_dim_, h = hidden_;
      const double* W = theta.span().data();
      const double* c = W + h * p;
      const double* v = c + h;
      double act[64];
      std::vector<double> heap;
      double* a = act;
      if (h > 64) {
        heap.resize(h);
        a = heap.data();
      }
      double z = v[h];
      for (std::size_t j = 0; j < h; ++j) {
        double pre = c[j];
        for (std::size_t k = 0; k < p; ++k) pre += W[j * p + k] * x[k];
        a[j] = std::tanh(pre);
        z += v[j] * a[j];
      }
      const double r = weight * (z - y);
      double* g = out.span().data();
      double* gW = g;
      double* gc = g + h * p;
      double* gv = gc + h;
      for (std::size_t j = 0; j < h; ++j) {
        const double dpre = r * v[j] * (1.0 - a[j] * a[j]);
        for (std::size_t k = 0; k < p; ++k) gW[j * p + k] += dpre * x[k];
        gc[j] += dpre;
        gv[j] += r * a[j];
      }
      gv[h] += r;
      return;
    }
  }
}

ParamVector Problem::per_sample_grad(const ParamVector& theta, std::size_t i) const {
  ParamVector g(d_);
  add_sample_grad(theta, i, 1.0, g);
  return g;
}

ParamVector Problem::full_grad(const ParamVector& theta) const {
  ParamVector g(d_);
  const double w = 1.0 / static_cast<double>(n_);
  for (std::size_t i = 0; i < n_; ++i) add_sample_grad(theta, i, w, g);
  return g;
}

double Problem::gradient_variance(const ParamVector& theta) const {
  const ParamVector mean = full_grad(theta);
  double acc = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    ParamVector gi = per_sample_grad(theta, i);
    gi -= mean;
    acc += gi.squared_norm();
  }
  return acc / static_cast<double>(n_);
}

// ---------------------------------------------------------------------------

TheoryConstants TheoryConstants::make(double L, double sigma_sq, double f_theta0, double f_star,
                                      double eta) {
  if (!(L > 0.0) || !std::isfinite(L)) throw DomainError("L must be positive and finite");
  if (!(eta > 0.0)) throw DomainError("eta must be positive");
  if (!(eta < 2.0 / L))
    throw DomainError("eta = " + std::to_string(eta) + " violates eta < 2/L = " +
                      std::to_string(2.0 / L));
  if (!(sigma_sq >= 0.0)) throw PreconditionError("sigma_sq must be nonnegative");
  if (!(f_theta0 >= f_star)) throw PreconditionError("f(theta0) must be >= f*");
  TheoryConstants c;
  c.L_ = L;
  c.sigma_sq_ = sigma_sq;
  c.f_theta0_ = f_theta0;
  c.f_star_ = f_star;
  c.eta_ = eta;
  return c;
}

double TheoryConstants::C1() const noexcept {
  return 2.0 * (f_theta0_ - f_star_) / (eta_ * (2.0 - L_ * eta_));
}

double TheoryConstants::C2() const noexcept {
  return L_ * eta_ * sigma_sq_ / (2.0 - L_ * eta_);
}

TheoryConstants TheoryConstants::with_eta(double eta) const {
  return make(L_, sigma_sq_, f_theta0_, f_star_, eta);
}

TheoryConstants TheoryConstants::with_sigma_sq(double sigma_sq) const {
  return make(L_, sigma_sq, f_theta0_, f_star_, eta_);
}

DescentOracleResult descent_oracle(const Problem& problem, const ParamVector& theta0, double L,
                                   double tol, std::size_t max_iter) {
  if (!(L > 0.0)) throw PreconditionError("descent oracle needs L > 0");
  DescentOracleResult res{theta0, problem.loss(theta0), 0.0, 0};
  double step = 1.0 / L;
  ParamVector g = problem.full_grad(res.theta);
  res.grad_norm = g.norm();
  while (res.grad_norm > tol && res.iterations < max_iter) {
    ParamVector next = res.theta;
    next.axpy(-step, g);
    const double value = problem.loss(next);
    ++res.iterations;
    // Rounding slack: near the minimum exact descent steps can read as ties.
    const double slack = 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(res.value));
    if (!(value <= res.value + slack)) {
      step *= 0.5;
      if (step < 1e-30 / L) break;
      continue;
    }
    res.theta = std::move(next);
    res.value = value;
    g = problem.full_grad(res.theta);
    res.grad_norm = g.norm();
  }
  return res;
}

double estimate_smoothness(const Problem& problem, const ParamVector& theta0, int probes,
                           std::uint64_t seed) {
  if (probes < 1) throw ConfigError("probes", "probe budget must be >= 1");
  Rng rng(seed, kProbeStream);
  const std::size_t d = problem.d();
  auto random_unit = [&] {
    ParamVector v(d);
    for (auto& x : v) x = rng.normal();
    const double nv = v.norm();
    if (nv == 0.0) {
      v[0] = 1.0;
      return v;
    }
    return (1.0 / nv) * v;
  };

  constexpr int kPowerIters = 30;
  constexpr double kRadius = 1.0;
  double best = 0.0;
  for (int p = 0; p < probes; ++p) {
    // Centre uniform in the ball of radius kRadius around theta0.
    ParamVector centre = theta0;
    const double r = kRadius * std::pow(rng.uniform(), 1.0 / static_cast<double>(d));
    centre.axpy(r, random_unit());
    const double h = 1e-4 * std::max(1.0, centre.norm());
    ParamVector dir = random_unit();
    for (int it = 0; it < kPowerIters; ++it) {
      ParamVector a = centre, b = centre;
      a.axpy(h, dir);
      b.axpy(-h, dir);
      ParamVector diff = problem.full_grad(a) - problem.full_grad(b);
      const double ratio = diff.norm() / (a - b).norm();
      best = std::max(best, ratio);
      const double nd = diff.norm();
      if (nd == 0.0) break;
      dir = (1.0 / nd) * diff;
    }
  }
  return best;
}

TheoryConstants estimate_constants(const Problem& problem, const ParamVector& theta0, double eta,
                                   int probes, std::uint64_t seed) {
  if (probes < 1) throw ConfigError("probes", "probe budget must be >= 1");
  if (theta0.dim() != problem.d()) throw PreconditionError("theta0 dimension mismatch");
  if (!(eta > 0.0)) throw ConfigError("eta", "must be positive");

  const double L = problem.analytic_L() ? *problem.analytic_L()
                                        : estimate_smoothness(problem, theta0, probes, seed);
  if (!(L > 0.0)) throw ConfigError("eta", "smoothness estimate is zero; bound undefined");
  if (!(eta < 2.0 / L))
    throw ConfigError("eta", "eta = " + std::to_string(eta) + " violates eta < 2/L = " +
                                 std::to_string(2.0 / L));

  const double descent_L = std::max(L, problem.smoothness_upper_bound().value_or(0.0));

  // Variance probes along a deterministic descent path from theta0.
  constexpr std::size_t kProbeSpacing = 50;
  double sigma_sq = problem.gradient_variance(theta0);
  ParamVector theta = theta0;
  for (int p = 1; p < probes; ++p) {
    theta = descent_oracle(problem, theta, descent_L, 0.0, kProbeSpacing).theta;
    sigma_sq = std::max(sigma_sq, problem.gradient_variance(theta));
  }

  const double f0 = problem.loss(theta0);
  double fstar;
  if (problem.analytic_fstar()) {
    fstar = std::min(*problem.analytic_fstar(), f0);
  } else {
    fstar = descent_oracle(problem, theta0, descent_L).value;
  }
  return TheoryConstants::make(L, sigma_sq, f0, fstar, eta);
}

}  // namespace adasgd
