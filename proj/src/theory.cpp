// SPDX-License-Identifier: Apache-2.0
#include "adasgd/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "json.hpp"

#include "adasgd/engine.hpp"
#include "adasgd/errors.hpp"

namespace adasgd {

namespace {

double checked_eta_sum(const TheoryConstants& c, std::span<const double> etas, double& eta_max) {
  if (etas.empty()) throw PreconditionError("learning-rate sequence is empty");
  eta_max = 0.0;
  double sum = 0.0;
  for (double e : etas) {
    if (!(e > 0.0)) throw DomainError("learning rates must be positive");
    eta_max = std::max(eta_max, e);
    sum += e;
  }
  if (!(eta_max < 2.0 / c.L()))
    throw DomainError("eta_max = " + std::to_string(eta_max) + " violates eta < 2/L = " +
                      std::to_string(2.0 / c.L()));
  return sum;
}

void require_eps(double eps) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw DomainError("eps must be positive and finite");
}

}  // namespace

double bound_B_T(const TheoryConstants& c, std::span<const double> etas) {
  double eta_max = 0.0;
  const double sum = checked_eta_sum(c, etas, eta_max);
  return 2.0 * (c.f_theta0() - c.f_star()) / (2.0 - c.L() * eta_max) / sum;
}

double bound_V_T(const TheoryConstants& c, std::span<const double> etas,
                 std::span<const std::size_t> batch_sizes) {
  if (etas.size() != batch_sizes.size())
    throw PreconditionError("learning-rate and batch-size sequences differ in length");
  double eta_max = 0.0;
  const double sum = checked_eta_sum(c, etas, eta_max);
  double weighted = 0.0;
  for (std::size_t t = 0; t < etas.size(); ++t) {
    if (batch_sizes[t] == 0) throw PreconditionError("batch sizes must be >= 1");
    weighted += etas[t] * etas[t] / static_cast<double>(batch_sizes[t]);
  }
  return c.L() * c.sigma_sq() / (2.0 - c.L() * eta_max) * weighted / sum;
}

double combined_bound(const TheoryConstants& c, std::span<const double> etas,
                      std::span<const std::size_t> batch_sizes) {
  return std::sqrt(bound_B_T(c, etas) + bound_V_T(c, etas, batch_sizes));
}

std::size_t min_batch_in_domain(const TheoryConstants& c, double eps) {
  require_eps(eps);
  return static_cast<std::size_t>(std::ceil(c.C2() / (eps * eps))) + 1;
}

double steps_required(const TheoryConstants& c, double eps, double b) {
  require_eps(eps);
  const double denom = eps * eps * b - c.C2();
  if (!(denom > 0.0))
    throw DomainError("batch below variance floor: need b > C2/eps^2 = " +
                      std::to_string(c.C2() / (eps * eps)));
  return c.C1() * b / denom;
}

double sfo_complexity(const TheoryConstants& c, double eps, double b) {
  return b * steps_required(c, eps, b);
}

double critical_bs(const TheoryConstants& c, double eps) {
  require_eps(eps);
  return 2.0 * c.C2() / (eps * eps);
}

SfoCurve sweep_sfo_curve(const Problem& problem, const ParamVector& theta0,
                         const TheoryConstants& constants, const CbsSweep& sweep) {
  if (sweep.batch_grid.empty()) throw ConfigError("sweep.batches", "batch grid is empty");
  if (sweep.seeds.empty()) throw ConfigError("run.seeds", "at least one seed is required");
  require_eps(sweep.eps);
  for (std::size_t b : sweep.batch_grid) {
    if (b < 1) throw ConfigError("sweep.batches", "batch sizes must be >= 1");
    if (b > problem.n())
      throw ConfigError("sweep.batches", "batch size " + std::to_string(b) +
                                             " exceeds the dataset size " +
                                             std::to_string(problem.n()));
  }

  SfoCurve curve{sweep.eps, constants, {}, {}, critical_bs(constants, sweep.eps), std::nullopt};
  const double floor_b = constants.C2() / (sweep.eps * sweep.eps);
  for (std::size_t b : sweep.batch_grid)
    if (static_cast<double>(b) > floor_b)
      curve.analytic.emplace_back(b, sfo_complexity(constants, sweep.eps, static_cast<double>(b)));

  std::vector<RunJob> jobs;
  jobs.reserve(sweep.batch_grid.size() * sweep.seeds.size());
  for (std::size_t b : sweep.batch_grid) {
    for (std::uint64_t seed : sweep.seeds) {
      RunJob job;
      job.scheduler.kind = SchedulerKind::ConstantBSLR;
      job.scheduler.b0 = b;
      job.scheduler.eta0 = sweep.eta;
      job.config.max_steps = sweep.max_steps;
      job.config.seed = seed;
      job.config.check_interval = sweep.check_interval;
      job.config.stop_eps = sweep.eps;
      jobs.push_back(job);
    }
  }
  const auto outcomes = run_many(problem, theta0, jobs, sweep.threads);

  double best = std::numeric_limits<double>::infinity();
  std::size_t k = 0;
  for (std::size_t b : sweep.batch_grid) {
    SfoSample row;
    row.b = b;
    double sum = 0.0;
    row.sfo_min = std::numeric_limits<double>::infinity();
    row.sfo_max = 0.0;
    for (std::size_t s = 0; s < sweep.seeds.size(); ++s, ++k) {
      const RunOutcome& o = outcomes[k];
      double sfo;
      if (o.trace && o.trace->hit_step) {
        sfo = static_cast<double>(o.trace->records.empty() ? 0 : o.trace->total_sfo());
      } else {
        ++row.censored_runs;
        if (o.divergence) ++row.diverged_runs;
        sfo = static_cast<double>(b) * static_cast<double>(sweep.max_steps);
      }
      sum += sfo;
      row.sfo_min = std::min(row.sfo_min, sfo);
      row.sfo_max = std::max(row.sfo_max, sfo);
    }
    row.sfo_mean = sum / static_cast<double>(sweep.seeds.size());
    row.censored = row.censored_runs > 0;
    if (!row.censored && row.sfo_mean < best) {
      best = row.sfo_mean;
      curve.b_star_empirical = b;
    }
    curve.samples.push_back(row);
  }
  return curve;
}

SfoCurve empirical_cbs(const Problem& problem, const ParamVector& theta0,
                       const TheoryConstants& constants, const CbsSweep& sweep) {
  SfoCurve curve = sweep_sfo_curve(problem, theta0, constants, sweep);
  if (!curve.b_star_empirical)
    throw PrecisionUnreachable(
        "no batch size reached |grad f| <= " + format_double(sweep.eps) + " within " +
        std::to_string(sweep.max_steps) +
        " steps on every seed; increase run.max_steps or relax the precision");
  return curve;
}

void write_sfo_csv(std::ostream& out, const SfoCurve& curve) {
  out << "b,sfo_mean,sfo_min,sfo_max,censored\n";
  for (const auto& r : curve.samples)
    out << r.b << ',' << format_double(r.sfo_mean) << ',' << format_double(r.sfo_min) << ','
        << format_double(r.sfo_max) << ',' << (r.censored ? 1 : 0) << '\n';
}

void write_sfo_summary(std::ostream& out, const SfoCurve& curve) {
  nlohmann::ordered_json j;
  j["eps"] = curve.eps;
  j["b_star_analytic"] = curve.b_star_analytic;
  if (curve.b_star_empirical)
    j["b_star_empirical"] = *curve.b_star_empirical;
  else
    j["b_star_empirical"] = nullptr;
  j["constants"] = {{"L", curve.constants.L()},
                    {"sigma_sq", curve.constants.sigma_sq()},
                    {"f_theta0", curve.constants.f_theta0()},
                    {"f_star", curve.constants.f_star()},
                    {"eta", curve.constants.eta()},
                    {"C1", curve.constants.C1()},
                    {"C2", curve.constants.C2()}};
  nlohmann::ordered_json analytic = nlohmann::ordered_json::array();
  for (const auto& [b, n] : curve.analytic) analytic.push_back({{"b", b}, {"sfo", n}});
  j["analytic"] = analytic;
  out << j.dump(2) << '\n';
}

}  // namespace adasgd
