// SPDX-License-Identifier: Apache-2.0
#include "adasgd/adasgd.h"

#include <fstream>
#include <new>
#include <optional>
#include <string>
#include <vector>

#include "adasgd/engine.hpp"
#include "adasgd/errors.hpp"
#include "adasgd/experiment.hpp"
#include "adasgd/problems.hpp"
#include "adasgd/schedulers.hpp"
#include "adasgd/theory.hpp"

struct adasgd_problem {
  adasgd::Problem problem;
  adasgd::ParamVector theta0;
};

struct adasgd_scheduler {
  adasgd::SchedulerState state;
  std::vector<std::string> warnings;
};

struct adasgd_trace {
  adasgd::RunTrace trace;
};

struct adasgd_experiment {
  adasgd::ExperimentConfig config;
  std::string serialized;
  std::vector<std::string> warnings;
};

namespace {

thread_local std::string g_last_error;

adasgd_status fail(adasgd_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

// Maps the library's exception hierarchy onto status codes.
template <class F>
adasgd_status guarded(F&& body) {
  try {
    return body();
  } catch (const adasgd::ConfigError& e) {
    return fail(ADASGD_ERR_CONFIG, e.what());
  } catch (const adasgd::DivergenceError& e) {
    return fail(ADASGD_ERR_DIVERGENCE, e.what());
  } catch (const adasgd::PrecisionUnreachable& e) {
    return fail(ADASGD_ERR_PRECISION_UNREACHABLE, e.what());
  } catch (const adasgd::DomainError& e) {
    return fail(ADASGD_ERR_DOMAIN, e.what());
  } catch (const adasgd::PreconditionError& e) {
    return fail(ADASGD_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::bad_alloc&) {
    return fail(ADASGD_ERR_INTERNAL, "out of memory");
  } catch (const std::ios_base::failure& e) {
    return fail(ADASGD_ERR_IO, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(ADASGD_ERR_IO, e.what());
  } catch (const std::runtime_error& e) {
    return fail(ADASGD_ERR_IO, e.what());
  } catch (const std::exception& e) {
    return fail(ADASGD_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(ADASGD_ERR_INTERNAL, "unknown error");
  }
}

#define ADASGD_REQUIRE(cond, msg) \
  do {                            \
    if (!(cond)) return fail(ADASGD_ERR_INVALID_ARGUMENT, msg); \
  } while (0)

adasgd::ParamVector to_vector(const double* data, size_t d) {
  return adasgd::ParamVector(std::span<const double>(data, d));
}

void copy_out(const adasgd::ParamVector& v, double* out) {
  for (size_t i = 0; i < v.dim(); ++i) out[i] = v[i];
}

adasgd::TheoryConstants to_constants(const adasgd_constants& c) {
  return adasgd::TheoryConstants::make(c.L, c.sigma_sq, c.f_theta0, c.f_star, c.eta);
}

adasgd_constants from_constants(const adasgd::TheoryConstants& c) {
  return {c.L(), c.sigma_sq(), c.f_theta0(), c.f_star(), c.eta(), c.C1(), c.C2()};
}

}  // namespace

extern "C" {

const char* adasgd_version(void) { return "1.0.0"; }

const char* adasgd_last_error(void) { return g_last_error.c_str(); }

const char* adasgd_status_name(adasgd_status status) {
  switch (status) {
    case ADASGD_OK: return "ok";
    case ADASGD_ERR_INVALID_ARGUMENT: return "invalid argument";
    case ADASGD_ERR_CONFIG: return "configuration error";
    case ADASGD_ERR_DIVERGENCE: return "divergence";
    case ADASGD_ERR_PRECISION_UNREACHABLE: return "precision unreachable";
    case ADASGD_ERR_DOMAIN: return "domain error";
    case ADASGD_ERR_IO: return "i/o error";
    case ADASGD_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

// ---- problems --------------------------------------------------------------

adasgd_status adasgd_problem_generate(const char* spec_json, adasgd_problem** out) {
  ADASGD_REQUIRE(spec_json && out, "null argument");
  return guarded([&] {
    const adasgd::ProblemSpec spec = adasgd::parse_problem_spec(spec_json);
    auto problem = adasgd::Problem::generate(spec);
    auto theta0 = adasgd::initial_point(spec, problem);
    *out = new adasgd_problem{std::move(problem), std::move(theta0)};
    return ADASGD_OK;
  });
}

adasgd_status adasgd_problem_quadratic(const double* rows, const double* targets, size_t n,
                                       size_t d, adasgd_problem** out) {
  ADASGD_REQUIRE(rows && targets && out, "null argument");
  return guarded([&] {
    auto problem = adasgd::Problem::quadratic(std::vector<double>(rows, rows + n * d),
                                              std::vector<double>(targets, targets + n), n, d);
    *out = new adasgd_problem{std::move(problem), adasgd::ParamVector(d)};
    return ADASGD_OK;
  });
}

void adasgd_problem_free(adasgd_problem* problem) { delete problem; }

size_t adasgd_problem_samples(const adasgd_problem* problem) {
  return problem ? problem->problem.n() : 0;
}

size_t adasgd_problem_dim(const adasgd_problem* problem) {
  return problem ? problem->problem.d() : 0;
}

adasgd_status adasgd_problem_initial_point(const adasgd_problem* problem, double* theta, size_t d) {
  ADASGD_REQUIRE(problem && theta, "null argument");
  ADASGD_REQUIRE(d == problem->problem.d(), "dimension mismatch");
  copy_out(problem->theta0, theta);
  return ADASGD_OK;
}

adasgd_status adasgd_problem_loss(const adasgd_problem* problem, const double* theta, size_t d,
                                  double* loss) {
  ADASGD_REQUIRE(problem && theta && loss, "null argument");
  return guarded([&] {
    *loss = problem->problem.loss(to_vector(theta, d));
    return ADASGD_OK;
  });
}

adasgd_status adasgd_problem_sample_grad(const adasgd_problem* problem, const double* theta,
                                         size_t d, size_t index, double* grad) {
  ADASGD_REQUIRE(problem && theta && grad, "null argument");
  return guarded([&] {
    copy_out(problem->problem.per_sample_grad(to_vector(theta, d), index), grad);
    return ADASGD_OK;
  });
}

adasgd_status adasgd_problem_full_grad(const adasgd_problem* problem, const double* theta,
                                       size_t d, double* grad) {
  ADASGD_REQUIRE(problem && theta && grad, "null argument");
  return guarded([&] {
    copy_out(problem->problem.full_grad(to_vector(theta, d)), grad);
    return ADASGD_OK;
  });
}

adasgd_status adasgd_estimate_constants(const adasgd_problem* problem, const double* theta0,
                                        size_t d, double eta, int probes, uint64_t seed,
                                        adasgd_constants* out) {
  ADASGD_REQUIRE(problem && theta0 && out, "null argument");
  return guarded([&] {
    *out = from_constants(
        adasgd::estimate_constants(problem->problem, to_vector(theta0, d), eta, probes, seed));
    return ADASGD_OK;
  });
}

adasgd_status adasgd_constants_finalize(adasgd_constants* constants) {
  ADASGD_REQUIRE(constants, "null argument");
  return guarded([&] {
    *constants = from_constants(to_constants(*constants));
    return ADASGD_OK;
  });
}

// ---- schedulers ------------------------------------------------------------

adasgd_status adasgd_scheduler_create(const char* params_json, size_t batch_cap,
                                      adasgd_scheduler** out) {
  ADASGD_REQUIRE(params_json && out, "null argument");
  return guarded([&] {
    adasgd::SchedulerParams params = adasgd::parse_scheduler_params(params_json);
    params.batch_cap = batch_cap;
    *out = new adasgd_scheduler{adasgd::validate(params), {}};
    return ADASGD_OK;
  });
}

void adasgd_scheduler_free(adasgd_scheduler* scheduler) { delete scheduler; }

adasgd_status adasgd_scheduler_clone(const adasgd_scheduler* scheduler, adasgd_scheduler** out) {
  ADASGD_REQUIRE(scheduler && out, "null argument");
  return guarded([&] {
    *out = new adasgd_scheduler(*scheduler);
    return ADASGD_OK;
  });
}

adasgd_status adasgd_scheduler_check_lr(adasgd_scheduler* scheduler, double L,
                                        size_t* warning_count) {
  ADASGD_REQUIRE(scheduler && warning_count, "null argument");
  return guarded([&] {
    scheduler->warnings = adasgd::validate(scheduler->state.params, L).warnings;
    *warning_count = scheduler->warnings.size();
    return ADASGD_OK;
  });
}

const char* adasgd_scheduler_warning(const adasgd_scheduler* scheduler, size_t index) {
  if (!scheduler || index >= scheduler->warnings.size()) return nullptr;
  return scheduler->warnings[index].c_str();
}

adasgd_status adasgd_scheduler_stage_params(const adasgd_scheduler* scheduler, int stage,
                                            size_t* batch_size, double* lr, double* eps) {
  ADASGD_REQUIRE(scheduler && batch_size && lr && eps, "null argument");
  return guarded([&] {
    const auto s = adasgd::stage_params(scheduler->state, stage);
    *batch_size = s.batch_size;
    *lr = s.lr;
    *eps = s.eps;
    return ADASGD_OK;
  });
}

adasgd_status adasgd_scheduler_current(const adasgd_scheduler* scheduler, int* stage,
                                       size_t* batch_size, double* lr, double* eps) {
  ADASGD_REQUIRE(scheduler && stage && batch_size && lr && eps, "null argument");
  *stage = scheduler->state.m;
  *batch_size = scheduler->state.current_b;
  *lr = scheduler->state.current_eta;
  *eps = scheduler->state.current_eps;
  return ADASGD_OK;
}

adasgd_status adasgd_scheduler_on_grad_norm(adasgd_scheduler* scheduler, double grad_norm,
                                            int* transitioned) {
  ADASGD_REQUIRE(scheduler, "null argument");
  ADASGD_REQUIRE(grad_norm >= 0.0, "grad_norm must be nonnegative");
  const auto upd = adasgd::on_grad_norm(scheduler->state, grad_norm);
  scheduler->state = upd.state;
  if (transitioned) *transitioned = upd.transitioned ? 1 : 0;
  return ADASGD_OK;
}

adasgd_status adasgd_scheduler_on_step(adasgd_scheduler* scheduler, uint64_t step) {
  ADASGD_REQUIRE(scheduler, "null argument");
  scheduler->state = adasgd::on_step(scheduler->state, step);
  return ADASGD_OK;
}

// ---- engine ----------------------------------------------------------------

adasgd_status adasgd_run(const adasgd_problem* problem, const double* theta0, size_t d,
                         const adasgd_scheduler* scheduler, const adasgd_run_config* config,
                         adasgd_trace** out) {
  ADASGD_REQUIRE(problem && theta0 && scheduler && config && out, "null argument");
  *out = nullptr;
  return guarded([&] {
    adasgd::RunConfig rc;
    rc.max_steps = config->max_steps;
    rc.seed = config->seed;
    rc.check_interval = config->check_interval;
    if (config->has_stop_eps) rc.stop_eps = config->stop_eps;
    try {
      *out = new adasgd_trace{
          adasgd::run(problem->problem, to_vector(theta0, d), scheduler->state.params, rc)};
    } catch (const adasgd::DivergenceError& e) {
      *out = new adasgd_trace{e.trace()};
      throw;
    }
    return ADASGD_OK;
  });
}

void adasgd_trace_free(adasgd_trace* trace) { delete trace; }

size_t adasgd_trace_length(const adasgd_trace* trace) {
  return trace ? trace->trace.records.size() : 0;
}

adasgd_status adasgd_trace_record(const adasgd_trace* trace, size_t index,
                                  adasgd_step_record* out) {
  ADASGD_REQUIRE(trace && out, "null argument");
  ADASGD_REQUIRE(index < trace->trace.records.size(), "record index out of range");
  const auto& r = trace->trace.records[index];
  *out = {r.t,          r.loss,  r.grad_norm ? 1 : 0, r.grad_norm.value_or(0.0),
          r.batch_size, r.lr,    r.stage,             r.sfo_cumulative};
  return ADASGD_OK;
}

int adasgd_trace_hit_step(const adasgd_trace* trace, uint64_t* step) {
  if (!trace || !trace->trace.hit_step) return 0;
  if (step) *step = *trace->trace.hit_step;
  return 1;
}

uint64_t adasgd_trace_total_sfo(const adasgd_trace* trace) {
  return trace ? trace->trace.total_sfo() : 0;
}

uint64_t adasgd_trace_monitor_evals(const adasgd_trace* trace) {
  return trace ? trace->trace.monitor_grad_evals : 0;
}

double adasgd_trace_initial_grad_norm(const adasgd_trace* trace) {
  return trace ? trace->trace.initial_grad_norm : 0.0;
}

int adasgd_trace_final_stage(const adasgd_trace* trace) {
  return trace ? trace->trace.final_stage : 0;
}

adasgd_status adasgd_trace_terminal_theta(const adasgd_trace* trace, double* theta, size_t d) {
  ADASGD_REQUIRE(trace && theta, "null argument");
  ADASGD_REQUIRE(d == trace->trace.terminal_theta.dim(), "dimension mismatch");
  copy_out(trace->trace.terminal_theta, theta);
  return ADASGD_OK;
}

adasgd_status adasgd_trace_write_csv(const adasgd_trace* trace, const char* path, int all_steps) {
  ADASGD_REQUIRE(trace && path, "null argument");
  return guarded([&] {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) return fail(ADASGD_ERR_IO, std::string("cannot open ") + path);
    adasgd::write_trace_csv(out, trace->trace, all_steps != 0);
    return out ? ADASGD_OK : fail(ADASGD_ERR_IO, std::string("write failed: ") + path);
  });
}

// ---- theory ----------------------------------------------------------------

adasgd_status adasgd_bound_B_T(const adasgd_constants* c, const double* etas, size_t count,
                               double* out) {
  ADASGD_REQUIRE(c && etas && out, "null argument");
  return guarded([&] {
    *out = adasgd::bound_B_T(to_constants(*c), {etas, count});
    return ADASGD_OK;
  });
}

adasgd_status adasgd_bound_V_T(const adasgd_constants* c, const double* etas,
                               const size_t* batch_sizes, size_t count, double* out) {
  ADASGD_REQUIRE(c && etas && batch_sizes && out, "null argument");
  return guarded([&] {
    *out = adasgd::bound_V_T(to_constants(*c), {etas, count}, {batch_sizes, count});
    return ADASGD_OK;
  });
}

adasgd_status adasgd_combined_bound(const adasgd_constants* c, const double* etas,
                                    const size_t* batch_sizes, size_t count, double* out) {
  ADASGD_REQUIRE(c && etas && batch_sizes && out, "null argument");
  return guarded([&] {
    *out = adasgd::combined_bound(to_constants(*c), {etas, count}, {batch_sizes, count});
    return ADASGD_OK;
  });
}

adasgd_status adasgd_steps_required(const adasgd_constants* c, double eps, double b, double* out) {
  ADASGD_REQUIRE(c && out, "null argument");
  return guarded([&] {
    *out = adasgd::steps_required(to_constants(*c), eps, b);
    return ADASGD_OK;
  });
}

adasgd_status adasgd_sfo_complexity(const adasgd_constants* c, double eps, double b, double* out) {
  ADASGD_REQUIRE(c && out, "null argument");
  return guarded([&] {
    *out = adasgd::sfo_complexity(to_constants(*c), eps, b);
    return ADASGD_OK;
  });
}

adasgd_status adasgd_critical_bs(const adasgd_constants* c, double eps, double* out) {
  ADASGD_REQUIRE(c && out, "null argument");
  return guarded([&] {
    *out = adasgd::critical_bs(to_constants(*c), eps);
    return ADASGD_OK;
  });
}

// ---- experiments -----------------------------------------------------------

adasgd_status adasgd_experiment_load(const char* path, adasgd_experiment** out) {
  ADASGD_REQUIRE(path && out, "null argument");
  return guarded([&] {
    *out = new adasgd_experiment{adasgd::load_config(path), {}, {}};
    return ADASGD_OK;
  });
}

adasgd_status adasgd_experiment_parse(const char* text, adasgd_experiment** out) {
  ADASGD_REQUIRE(text && out, "null argument");
  return guarded([&] {
    *out = new adasgd_experiment{adasgd::parse_config(text), {}, {}};
    return ADASGD_OK;
  });
}

void adasgd_experiment_free(adasgd_experiment* experiment) { delete experiment; }

adasgd_status adasgd_experiment_set_seeds(adasgd_experiment* experiment, const uint64_t* seeds,
                                          size_t count) {
  ADASGD_REQUIRE(experiment && seeds && count > 0, "seed list must be nonempty");
  experiment->config.run.seeds.assign(seeds, seeds + count);
  return ADASGD_OK;
}

adasgd_status adasgd_experiment_set_check_interval(adasgd_experiment* experiment,
                                                   uint64_t interval) {
  ADASGD_REQUIRE(experiment, "null argument");
  if (interval < 1) return fail(ADASGD_ERR_CONFIG, "run.check_interval: must be >= 1");
  experiment->config.run.check_interval = interval;
  return ADASGD_OK;
}

adasgd_status adasgd_experiment_set_out_dir(adasgd_experiment* experiment, const char* dir) {
  ADASGD_REQUIRE(experiment && dir && *dir, "output directory must be nonempty");
  experiment->config.output.dir = dir;
  return ADASGD_OK;
}

adasgd_status adasgd_experiment_set_all_steps(adasgd_experiment* experiment, int on) {
  ADASGD_REQUIRE(experiment, "null argument");
  experiment->config.output.emit_all_steps = on != 0;
  return ADASGD_OK;
}

adasgd_status adasgd_experiment_set_batches(adasgd_experiment* experiment, const size_t* batches,
                                            size_t count) {
  ADASGD_REQUIRE(experiment && batches && count > 0, "batch list must be nonempty");
  experiment->config.sweep.batches.assign(batches, batches + count);
  return ADASGD_OK;
}

const char* adasgd_experiment_serialize(adasgd_experiment* experiment) {
  if (!experiment) return nullptr;
  experiment->serialized = adasgd::serialize_config(experiment->config);
  return experiment->serialized.c_str();
}

size_t adasgd_experiment_warning_count(const adasgd_experiment* experiment) {
  return experiment ? experiment->warnings.size() : 0;
}

const char* adasgd_experiment_warning(const adasgd_experiment* experiment, size_t index) {
  if (!experiment || index >= experiment->warnings.size()) return nullptr;
  return experiment->warnings[index].c_str();
}

adasgd_status adasgd_cmd_run(adasgd_experiment* experiment) {
  ADASGD_REQUIRE(experiment, "null argument");
  experiment->warnings.clear();
  return guarded([&] {
    const auto report = adasgd::cmd_run(experiment->config);
    experiment->warnings = report.warnings;
    if (report.any_diverged) {
      std::string seeds;
      for (const auto& r : report.rows)
        if (r.diverged) seeds += (seeds.empty() ? "" : ", ") + std::to_string(r.seed);
      return fail(ADASGD_ERR_DIVERGENCE, "run diverged for seed(s) " + seeds +
                                             "; partial traces were written");
    }
    return ADASGD_OK;
  });
}

adasgd_status adasgd_cmd_sweep(adasgd_experiment* experiment) {
  ADASGD_REQUIRE(experiment, "null argument");
  experiment->warnings.clear();
  return guarded([&] {
    const auto report = adasgd::cmd_sweep(experiment->config);
    for (const auto& s : report.curve.samples)
      if (s.diverged_runs > 0)
        experiment->warnings.push_back("batch " + std::to_string(s.b) + ": " +
                                       std::to_string(s.diverged_runs) + " run(s) diverged");
    return ADASGD_OK;
  });
}

adasgd_status adasgd_cmd_compare(adasgd_experiment* const* experiments, size_t count,
                                 const char* out_dir, double eps) {
  ADASGD_REQUIRE(experiments && out_dir, "null argument");
  return guarded([&] {
    std::vector<adasgd::ExperimentConfig> configs;
    for (size_t i = 0; i < count; ++i) {
      if (!experiments[i]) return fail(ADASGD_ERR_INVALID_ARGUMENT, "null experiment");
      configs.push_back(experiments[i]->config);
    }
    adasgd::cmd_compare(configs, out_dir, eps > 0.0 ? std::optional<double>(eps) : std::nullopt);
    return ADASGD_OK;
  });
}

}  // extern "C"
