// SPDX-License-Identifier: Apache-2.0
#include "adasgd/engine.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <limits>
#include <ostream>
#include <thread>

#include "adasgd/errors.hpp"

namespace adasgd {

double RunTrace::min_grad_norm_before(std::uint64_t T) const {
  double best = initial_grad_norm;
  for (const auto& r : records) {
    if (r.t >= T) break;
    if (r.grad_norm) best = std::min(best, *r.grad_norm);
  }
  return best;
}

double RunTrace::min_grad_norm() const {
  return min_grad_norm_before(std::numeric_limits<std::uint64_t>::max());
}

std::vector<std::size_t> sample_batch(const Problem& problem, std::size_t b, Rng& rng) {
  if (b == 0) throw PreconditionError("batch size must be >= 1");
  std::vector<std::size_t> idx(b);
  for (auto& i : idx) i = static_cast<std::size_t>(rng.uniform_index(problem.n()));
  return idx;
}

ParamVector minibatch_grad(const Problem& problem, const ParamVector& theta,
                           std::span<const std::size_t> batch) {
  if (batch.empty()) throw PreconditionError("mini-batch is empty");
  ParamVector g(problem.d());
  const double w = 1.0 / static_cast<double>(batch.size());
  for (std::size_t i : batch) problem.add_sample_grad(theta, i, w, g);
  return g;
}

namespace {

bool diverged(double loss) { return !std::isfinite(loss) || loss > kDivergenceLoss; }

}  // namespace

RunTrace run(const Problem& problem, const ParamVector& theta0, const SchedulerParams& scheduler,
             const RunConfig& config) {
  if (theta0.dim() != problem.d()) throw PreconditionError("theta0 dimension mismatch");
  if (config.max_steps < 1) throw ConfigError("run.max_steps", "must be >= 1");
  if (config.check_interval < 1) throw ConfigError("run.check_interval", "must be >= 1");
  if (config.stop_eps && !(*config.stop_eps >= 0.0))
    throw ConfigError("run.stop_eps", "must be nonnegative");

  SchedulerParams params = scheduler;
  if (params.batch_cap == 0) params.batch_cap = problem.n();
  SchedulerState state = validate(params);

  RunTrace trace;
  trace.records.reserve(static_cast<std::size_t>(
      std::min<std::uint64_t>(config.max_steps, 1u << 20)));
  ParamVector theta = theta0;
  trace.initial_loss = problem.loss(theta);
  trace.initial_grad_norm = problem.full_grad(theta).norm();
  trace.monitor_grad_evals += problem.n();
  if (diverged(trace.initial_loss) || !std::isfinite(trace.initial_grad_norm)) {
    trace.terminal_theta = theta;
    throw DivergenceError("non-finite loss or gradient at theta0", std::move(trace));
  }
  if (config.stop_eps && trace.initial_grad_norm <= *config.stop_eps) {
    trace.hit_step = 0;
    trace.terminal_theta = std::move(theta);
    trace.cap_binding = state.cap_binding;
    return trace;
  }

  Rng rng(config.seed, 0);
  ParamVector grad(problem.d());
  ParamVector previous(problem.d());
  std::vector<std::size_t> batch;
  std::uint64_t sfo = 0;

  auto fail = [&](const std::string& why, std::uint64_t t) {
    trace.terminal_theta = previous;
    trace.final_stage = state.m;
    trace.cap_binding = state.cap_binding;
    throw DivergenceError(why + " at step " + std::to_string(t), std::move(trace));
  };

  for (std::uint64_t s = 0; s < config.max_steps; ++s) {
    const int stage_before = state.m;
    state = on_step(state, s);
    for (int k = stage_before; k < state.m; ++k) trace.transitions.push_back(s);

    const std::size_t b = state.current_b;
    const double eta = state.current_eta;
    batch = sample_batch(problem, b, rng);
    grad.fill(0.0);
    const double w = 1.0 / static_cast<double>(b);
    for (std::size_t i : batch) problem.add_sample_grad(theta, i, w, grad);

    previous = theta;
    theta.axpy(-eta, grad);
    sfo += b;

    const std::uint64_t t = s + 1;
    StepRecord rec;
    rec.t = t;
    rec.batch_size = b;
    rec.lr = eta;
    rec.stage = state.m;
    rec.sfo_cumulative = sfo;
    rec.loss = problem.loss(theta);
    if (diverged(rec.loss) || !theta.all_finite()) fail("loss diverged", t);

    if (t % config.check_interval == 0) {
      const double gn = problem.full_grad(theta).norm();
      trace.monitor_grad_evals += problem.n();
      if (!std::isfinite(gn)) fail("non-finite gradient norm", t);
      rec.grad_norm = gn;
      trace.records.push_back(rec);

      if (is_adaptive(state.params.kind) && state.m == state.params.stages - 1 &&
          gn <= state.current_eps)
        trace.final_stage_reached_eps = true;
      const GradNormUpdate upd = on_grad_norm(state, gn);
      if (upd.transitioned) trace.transitions.push_back(t);
      state = upd.state;

      if (config.stop_eps && gn <= *config.stop_eps) {
        trace.hit_step = t;
        break;
      }
    } else {
      trace.records.push_back(rec);
    }
  }

  trace.terminal_theta = std::move(theta);
  trace.final_stage = state.m;
  trace.cap_binding = state.cap_binding;
  return trace;
}

std::vector<RunOutcome> run_many(const Problem& problem, const ParamVector& theta0,
                                 const std::vector<RunJob>& jobs, unsigned threads) {
  std::vector<RunOutcome> out(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(jobs.size(), 1)));

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < jobs.size(); k = next++) {
      try {
        out[k].trace = run(problem, theta0, jobs[k].scheduler, jobs[k].config);
      } catch (const DivergenceError& e) {
        out[k].divergence = e;
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_trace_csv(std::ostream& out, const RunTrace& trace, bool all_steps) {
  out << "t,loss,grad_norm,batch_size,lr,stage,sfo_cumulative\n";
  for (const auto& r : trace.records) {
    if (!r.grad_norm && !all_steps) continue;
    out << r.t << ',' << format_double(r.loss) << ',';
    if (r.grad_norm) out << format_double(*r.grad_norm);
    out << ',' << r.batch_size << ',' << format_double(r.lr) << ',' << r.stage << ','
        << r.sfo_cumulative << '\n';
  }
}

}  // namespace adasgd
