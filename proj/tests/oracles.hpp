// SPDX-License-Identifier: Apache-2.0
// Independent reference computations used by the tests. Nothing here calls
// into the library's numerics.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

// (1/n) X^T X for row-major X.
inline Mat gram(const Vec& x, std::size_t n, std::size_t d) {
  Mat g(d, Vec(d, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t r = 0; r < d; ++r)
      for (std::size_t c = 0; c < d; ++c) g[r][c] += x[i * d + r] * x[i * d + c] / double(n);
  return g;
}

// Largest eigenvalue of a symmetric PSD matrix by plain power iteration.
inline double lambda_max(const Mat& m, int iters = 5000) {
  const std::size_t d = m.size();
  Vec v(d);
  for (std::size_t i = 0; i < d; ++i) v[i] = 1.0 + 0.01 * double(i);
  double lam = 0.0;
  for (int k = 0; k < iters; ++k) {
    Vec w(d, 0.0);
    for (std::size_t r = 0; r < d; ++r)
      for (std::size_t c = 0; c < d; ++c) w[r] += m[r][c] * v[c];
    const double nw = norm(w);
    if (nw == 0.0) return 0.0;
    lam = nw / norm(v);
    for (auto& x : w) x /= nw;
    v = w;
  }
  return lam;
}

// Solves m z = rhs by Gaussian elimination with partial pivoting.
inline Vec solve(Mat m, Vec rhs) {
  const std::size_t d = m.size();
  for (std::size_t k = 0; k < d; ++k) {
    std::size_t p = k;
    for (std::size_t r = k + 1; r < d; ++r)
      if (std::abs(m[r][k]) > std::abs(m[p][k])) p = r;
    std::swap(m[k], m[p]);
    std::swap(rhs[k], rhs[p]);
    for (std::size_t r = k + 1; r < d; ++r) {
      const double f = m[r][k] / m[k][k];
      for (std::size_t c = k; c < d; ++c) m[r][c] -= f * m[k][c];
      rhs[r] -= f * rhs[k];
    }
  }
  Vec z(d);
  for (std::size_t k = d; k-- > 0;) {
    double s = rhs[k];
    for (std::size_t c = k + 1; c < d; ++c) s -= m[k][c] * z[c];
    z[k] = s / m[k][k];
  }
  return z;
}

// Least-squares minimum of (1/2n) |X theta - y|^2 via the normal equations.
inline double quadratic_fstar(const Vec& x, const Vec& y, std::size_t n, std::size_t d) {
  Mat g = gram(x, n, d);
  Vec rhs(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < d; ++c) rhs[c] += x[i * d + c] * y[i] / double(n);
  const Vec z = solve(g, rhs);
  double f = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double r = -y[i];
    for (std::size_t c = 0; c < d; ++c) r += x[i * d + c] * z[c];
    f += 0.5 * r * r / double(n);
  }
  return f;
}

// Convergence-bound oracles for constant (b, eta).
inline double C1(double L, double f0, double fs, double eta) {
  return 2.0 * (f0 - fs) / (eta * (2.0 - L * eta));
}
inline double C2(double L, double s2, double eta) { return L * eta * s2 / (2.0 - L * eta); }
inline double steps(double c1, double c2, double eps, double b) {
  return c1 * b / (eps * eps * b - c2);
}
inline double sfo(double c1, double c2, double eps, double b) { return b * steps(c1, c2, eps, b); }

// Stage formulas written out directly.
inline double linear_eps(double eps0, int m) { return eps0 / std::sqrt(1.0 + m); }
inline double exp_eps(double eps0, double delta, int m) {
  return eps0 / std::sqrt(std::pow(delta, m));
}
inline double exp_lr(double eta0, double gamma, int m) { return eta0 * std::pow(gamma, m); }

// Ordinary least-squares slope of y on x.
inline double slope(const Vec& x, const Vec& y) {
  const double n = double(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i] / n, my += y[i] / n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    sxy += (x[i] - mx) * (y[i] - my), sxx += (x[i] - mx) * (x[i] - mx);
  return sxy / sxx;
}

}  // namespace oracle
