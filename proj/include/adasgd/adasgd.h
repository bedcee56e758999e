/* SPDX-License-Identifier: Apache-2.0 */
#ifndef ADASGD_H
#define ADASGD_H

/*
 * C interface to the adasgd library: finite-sum problems, mini-batch SGD
 * under gradient-norm-triggered batch-size/learning-rate schedulers, and the
 * SFO-complexity / critical-batch-size formulas.
 *
 * Every object is an opaque handle released by its *_free function. Every
 * fallible call returns an adasgd_status; on failure a message describing the
 * error is available from adasgd_last_error() on the same thread until the
 * next failing call.
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define ADASGD_API __declspec(dllexport)
#else
#define ADASGD_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status values double as the CLI exit codes for the 2/3/4 cases. */
typedef enum adasgd_status {
  ADASGD_OK = 0,
  ADASGD_ERR_INVALID_ARGUMENT = 1, /* precondition violated (dimension, index, null) */
  ADASGD_ERR_CONFIG = 2,           /* configuration rejected */
  ADASGD_ERR_DIVERGENCE = 3,       /* non-finite or exploding loss */
  ADASGD_ERR_PRECISION_UNREACHABLE = 4,
  ADASGD_ERR_DOMAIN = 5, /* outside the domain of a closed-form bound */
  ADASGD_ERR_IO = 6,
  ADASGD_ERR_INTERNAL = 7
} adasgd_status;

typedef struct adasgd_problem adasgd_problem;
typedef struct adasgd_scheduler adasgd_scheduler;
typedef struct adasgd_trace adasgd_trace;
typedef struct adasgd_experiment adasgd_experiment;

ADASGD_API const char* adasgd_version(void);
ADASGD_API const char* adasgd_last_error(void);
ADASGD_API const char* adasgd_status_name(adasgd_status status);

/* ---- problems ----------------------------------------------------------- */

/* JSON generator spec, same keys as the "problem" section of an experiment
 * config: {"kind": "quadratic"|"logistic"|"tiny_mlp", "n", "dim", "seed",
 * "noise", "design", "l2", "hidden", "init_scale"}. */
ADASGD_API adasgd_status adasgd_problem_generate(const char* spec_json, adasgd_problem** out);

/* Least-squares problem f_i = 1/2 (a_i . theta - y_i)^2 from row-major rows. */
ADASGD_API adasgd_status adasgd_problem_quadratic(const double* rows, const double* targets,
                                                  size_t n, size_t d, adasgd_problem** out);
ADASGD_API void adasgd_problem_free(adasgd_problem* problem);

ADASGD_API size_t adasgd_problem_samples(const adasgd_problem* problem);
ADASGD_API size_t adasgd_problem_dim(const adasgd_problem* problem);

/* Initial point of a generated problem (zeros for explicit quadratics). */
ADASGD_API adasgd_status adasgd_problem_initial_point(const adasgd_problem* problem,
                                                      double* theta, size_t d);

ADASGD_API adasgd_status adasgd_problem_loss(const adasgd_problem* problem, const double* theta,
                                             size_t d, double* loss);
ADASGD_API adasgd_status adasgd_problem_sample_grad(const adasgd_problem* problem,
                                                    const double* theta, size_t d, size_t index,
                                                    double* grad);
ADASGD_API adasgd_status adasgd_problem_full_grad(const adasgd_problem* problem,
                                                  const double* theta, size_t d, double* grad);

typedef struct adasgd_constants {
  double L;
  double sigma_sq;
  double f_theta0;
  double f_star;
  double eta;
  double C1; /* derived: 2 (f_theta0 - f_star) / (eta (2 - L eta)) */
  double C2; /* derived: L eta sigma_sq / (2 - L eta) */
} adasgd_constants;

ADASGD_API adasgd_status adasgd_estimate_constants(const adasgd_problem* problem,
                                                   const double* theta0, size_t d, double eta,
                                                   int probes, uint64_t seed,
                                                   adasgd_constants* out);

/* Fills C1 and C2 from the other fields after checking 0 < eta < 2/L. */
ADASGD_API adasgd_status adasgd_constants_finalize(adasgd_constants* constants);

/* ---- schedulers --------------------------------------------------------- */

/* JSON parameters, same keys as the "scheduler" section of a config. The
 * result is validated and positioned at stage 0. batch_cap = 0 leaves the
 * batch size uncapped. */
ADASGD_API adasgd_status adasgd_scheduler_create(const char* params_json, size_t batch_cap,
                                                 adasgd_scheduler** out);
ADASGD_API void adasgd_scheduler_free(adasgd_scheduler* scheduler);
ADASGD_API adasgd_status adasgd_scheduler_clone(const adasgd_scheduler* scheduler,
                                                adasgd_scheduler** out);

/* Number of warnings for smoothness constant L (the largest scheduled LR
 * reaching 2/L). Message text via adasgd_scheduler_warning. */
ADASGD_API adasgd_status adasgd_scheduler_check_lr(adasgd_scheduler* scheduler, double L,
                                                   size_t* warning_count);
ADASGD_API const char* adasgd_scheduler_warning(const adasgd_scheduler* scheduler, size_t index);

ADASGD_API adasgd_status adasgd_scheduler_stage_params(const adasgd_scheduler* scheduler,
                                                       int stage, size_t* batch_size, double* lr,
                                                       double* eps);
ADASGD_API adasgd_status adasgd_scheduler_current(const adasgd_scheduler* scheduler, int* stage,
                                                  size_t* batch_size, double* lr, double* eps);
ADASGD_API adasgd_status adasgd_scheduler_on_grad_norm(adasgd_scheduler* scheduler,
                                                       double grad_norm, int* transitioned);
ADASGD_API adasgd_status adasgd_scheduler_on_step(adasgd_scheduler* scheduler, uint64_t step);

/* ---- engine ------------------------------------------------------------- */

typedef struct adasgd_run_config {
  uint64_t max_steps;
  uint64_t seed;
  uint64_t check_interval;
  int has_stop_eps;
  double stop_eps;
} adasgd_run_config;

typedef struct adasgd_step_record {
  uint64_t t;
  double loss;
  int has_grad_norm;
  double grad_norm;
  size_t batch_size;
  double lr;
  int stage;
  uint64_t sfo_cumulative;
} adasgd_step_record;

/* Runs SGD from theta0 with the scheduler's parameters (its current stage is
 * ignored; runs always start at stage 0). On ADASGD_ERR_DIVERGENCE *out still
 * receives the trace up to the failure. */
ADASGD_API adasgd_status adasgd_run(const adasgd_problem* problem, const double* theta0, size_t d,
                                    const adasgd_scheduler* scheduler,
                                    const adasgd_run_config* config, adasgd_trace** out);
ADASGD_API void adasgd_trace_free(adasgd_trace* trace);

ADASGD_API size_t adasgd_trace_length(const adasgd_trace* trace);
ADASGD_API adasgd_status adasgd_trace_record(const adasgd_trace* trace, size_t index,
                                             adasgd_step_record* out);
/* Returns 1 and sets *step when the stop precision was reached, else 0. */
ADASGD_API int adasgd_trace_hit_step(const adasgd_trace* trace, uint64_t* step);
ADASGD_API uint64_t adasgd_trace_total_sfo(const adasgd_trace* trace);
ADASGD_API uint64_t adasgd_trace_monitor_evals(const adasgd_trace* trace);
ADASGD_API double adasgd_trace_initial_grad_norm(const adasgd_trace* trace);
ADASGD_API int adasgd_trace_final_stage(const adasgd_trace* trace);
ADASGD_API adasgd_status adasgd_trace_terminal_theta(const adasgd_trace* trace, double* theta,
                                                     size_t d);
/* CSV t,loss,grad_norm,batch_size,lr,stage,sfo_cumulative. */
ADASGD_API adasgd_status adasgd_trace_write_csv(const adasgd_trace* trace, const char* path,
                                                int all_steps);

/* ---- theory ------------------------------------------------------------- */

ADASGD_API adasgd_status adasgd_bound_B_T(const adasgd_constants* c, const double* etas,
                                          size_t count, double* out);
ADASGD_API adasgd_status adasgd_bound_V_T(const adasgd_constants* c, const double* etas,
                                          const size_t* batch_sizes, size_t count, double* out);
ADASGD_API adasgd_status adasgd_combined_bound(const adasgd_constants* c, const double* etas,
                                               const size_t* batch_sizes, size_t count,
                                               double* out);
ADASGD_API adasgd_status adasgd_steps_required(const adasgd_constants* c, double eps, double b,
                                               double* out);
ADASGD_API adasgd_status adasgd_sfo_complexity(const adasgd_constants* c, double eps, double b,
                                               double* out);
ADASGD_API adasgd_status adasgd_critical_bs(const adasgd_constants* c, double eps, double* out);

/* ---- experiments (CLI commands) ----------------------------------------- */

ADASGD_API adasgd_status adasgd_experiment_load(const char* path, adasgd_experiment** out);
ADASGD_API adasgd_status adasgd_experiment_parse(const char* text, adasgd_experiment** out);
ADASGD_API void adasgd_experiment_free(adasgd_experiment* experiment);

ADASGD_API adasgd_status adasgd_experiment_set_seeds(adasgd_experiment* experiment,
                                                     const uint64_t* seeds, size_t count);
ADASGD_API adasgd_status adasgd_experiment_set_check_interval(adasgd_experiment* experiment,
                                                              uint64_t interval);
ADASGD_API adasgd_status adasgd_experiment_set_out_dir(adasgd_experiment* experiment,
                                                       const char* dir);
ADASGD_API adasgd_status adasgd_experiment_set_all_steps(adasgd_experiment* experiment, int on);
ADASGD_API adasgd_status adasgd_experiment_set_batches(adasgd_experiment* experiment,
                                                       const size_t* batches, size_t count);

/* Canonical JSON form of the experiment; the returned string stays valid
 * until the next call on the same handle. */
ADASGD_API const char* adasgd_experiment_serialize(adasgd_experiment* experiment);

/* Warnings produced by the most recent command on this handle. */
ADASGD_API size_t adasgd_experiment_warning_count(const adasgd_experiment* experiment);
ADASGD_API const char* adasgd_experiment_warning(const adasgd_experiment* experiment,
                                                 size_t index);

/* Writes trace_seed<k>.csv per seed and summary.csv. Returns
 * ADASGD_ERR_DIVERGENCE (after writing every file) when any seed diverged. */
ADASGD_API adasgd_status adasgd_cmd_run(adasgd_experiment* experiment);

/* Writes sfo_curve.csv and sweep_summary.json. */
ADASGD_API adasgd_status adasgd_cmd_sweep(adasgd_experiment* experiment);

/* Runs every experiment on their shared problem and seeds. eps <= 0 selects
 * the default target (first config's run.stop_eps). */
ADASGD_API adasgd_status adasgd_cmd_compare(adasgd_experiment* const* experiments, size_t count,
                                            const char* out_dir, double eps);

#ifdef __cplusplus
}
#endif

#endif /* ADASGD_H */
