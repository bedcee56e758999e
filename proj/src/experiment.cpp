// SPDX-License-Identifier: Apache-2.0
#include "adasgd/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"

#include "adasgd/errors.hpp"
#include "adasgd/theory.hpp"

namespace adasgd {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

// ---- parsing helpers -------------------------------------------------------

void reject_unknown(const json& obj, const std::string& path,
                    std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(path, "expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::none_of(allowed.begin(), allowed.end(),
                     [&](const char* a) { return it.key() == a; }))
      throw ConfigError(path.empty() ? it.key() : path + "." + it.key(), "unknown key");
  }
}

std::string key_path(const std::string& path, const char* key) {
  return path.empty() ? key : path + "." + key;
}

double get_real(const json& obj, const std::string& path, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(key_path(path, key), "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(key_path(path, key), "must be finite");
  return x;
}

std::optional<double> get_opt_real(const json& obj, const std::string& path, const char* key) {
  if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
  return get_real(obj, path, key, 0.0);
}

std::uint64_t get_uint(const json& obj, const std::string& path, const char* key,
                       std::uint64_t fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0))
    throw ConfigError(key_path(path, key), "expected a nonnegative integer");
  return v.get<std::uint64_t>();
}

std::optional<std::uint64_t> get_opt_uint(const json& obj, const std::string& path,
                                          const char* key) {
  if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
  return get_uint(obj, path, key, 0);
}

std::string get_string(const json& obj, const std::string& path, const char* key,
                       const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_string()) throw ConfigError(key_path(path, key), "expected a string");
  return v.get<std::string>();
}

bool get_bool(const json& obj, const std::string& path, const char* key, bool fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_boolean()) throw ConfigError(key_path(path, key), "expected true or false");
  return v.get<bool>();
}

std::vector<std::uint64_t> get_uint_list(const json& obj, const std::string& path,
                                         const char* key, std::vector<std::uint64_t> fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_array()) throw ConfigError(key_path(path, key), "expected a list of integers");
  std::vector<std::uint64_t> out;
  for (const auto& e : v) {
    if (!e.is_number_unsigned() && !(e.is_number_integer() && e.get<std::int64_t>() >= 0))
      throw ConfigError(key_path(path, key), "expected nonnegative integers");
    out.push_back(e.get<std::uint64_t>());
  }
  return out;
}

ProblemSpec parse_problem(const json& j) {
  const std::string path = "problem";
  reject_unknown(j, path,
                 {"kind", "n", "dim", "seed", "noise", "design", "l2", "hidden", "init_scale"});
  ProblemSpec p;
  p.kind = problem_kind_from_string(get_string(j, path, "kind", "quadratic"));
  p.n = get_uint(j, path, "n", p.n);
  p.dim = get_uint(j, path, "dim", p.dim);
  p.seed = get_uint(j, path, "seed", p.seed);
  p.noise = get_real(j, path, "noise", p.noise);
  p.design = feature_design_from_string(get_string(j, path, "design", "gaussian"));
  p.l2 = get_real(j, path, "l2", p.l2);
  p.hidden = get_uint(j, path, "hidden", p.hidden);
  p.init_scale = get_real(j, path, "init_scale", p.init_scale);
  return p;
}

SchedulerParams parse_scheduler(const json& j) {
  const std::string path = "scheduler";
  reject_unknown(j, path, {"kind", "stages", "b0", "eta0", "eps0", "delta_b", "delta", "gamma",
                           "interval", "t_max", "eta_min", "growth"});
  SchedulerParams s;
  s.kind = scheduler_kind_from_string(get_string(j, path, "kind", "constant"));
  const std::uint64_t stages = get_uint(j, path, "stages", 1);
  if (stages > 1000) throw ConfigError("scheduler.stages", "must be <= 1000");
  s.stages = static_cast<int>(stages);
  s.b0 = get_uint(j, path, "b0", 0);
  s.eta0 = get_real(j, path, "eta0", 0.0);
  s.eps0 = get_opt_real(j, path, "eps0");
  s.delta_b = get_opt_uint(j, path, "delta_b");
  s.delta = get_opt_real(j, path, "delta");
  s.gamma = get_opt_real(j, path, "gamma");
  s.interval = get_opt_uint(j, path, "interval");
  s.t_max = get_opt_uint(j, path, "t_max");
  s.eta_min = get_real(j, path, "eta_min", 0.0);
  s.growth = growth_from_string(get_string(j, path, "growth", "exponential"));
  return s;
}

RunSpec parse_run(const json& j) {
  const std::string path = "run";
  reject_unknown(j, path, {"max_steps", "seeds", "check_interval", "stop_eps"});
  RunSpec r;
  r.max_steps = get_uint(j, path, "max_steps", r.max_steps);
  r.seeds = get_uint_list(j, path, "seeds", r.seeds);
  r.check_interval = get_uint(j, path, "check_interval", r.check_interval);
  r.stop_eps = get_opt_real(j, path, "stop_eps");
  return r;
}

OutputSpec parse_output(const json& j) {
  const std::string path = "output";
  reject_unknown(j, path, {"dir", "emit_all_steps"});
  OutputSpec o;
  o.dir = get_string(j, path, "dir", o.dir);
  o.emit_all_steps = get_bool(j, path, "emit_all_steps", o.emit_all_steps);
  return o;
}

SweepSpec parse_sweep(const json& j) {
  const std::string path = "sweep";
  reject_unknown(j, path, {"batches", "eps", "eta"});
  SweepSpec s;
  for (auto b : get_uint_list(j, path, "batches", {})) s.batches.push_back(b);
  s.eps = get_opt_real(j, path, "eps");
  s.eta = get_opt_real(j, path, "eta");
  return s;
}

json problem_to_json(const ProblemSpec& p) {
  return json{{"kind", to_string(p.kind)}, {"n", p.n},         {"dim", p.dim},
              {"seed", p.seed},            {"noise", p.noise}, {"design", to_string(p.design)},
              {"l2", p.l2},
              {"hidden", p.hidden},        {"init_scale", p.init_scale}};
}

json scheduler_to_json(const SchedulerParams& s) {
  json j{{"kind", to_string(s.kind)}, {"stages", s.stages}, {"b0", s.b0}, {"eta0", s.eta0}};
  if (s.eps0) j["eps0"] = *s.eps0;
  if (s.delta_b) j["delta_b"] = *s.delta_b;
  if (s.delta) j["delta"] = *s.delta;
  if (s.gamma) j["gamma"] = *s.gamma;
  if (s.interval) j["interval"] = *s.interval;
  if (s.t_max) j["t_max"] = *s.t_max;
  j["eta_min"] = s.eta_min;
  j["growth"] = to_string(s.growth);
  return j;
}

// ---- output helpers --------------------------------------------------------

std::ofstream open_output(const fs::path& file) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + file.string() + " for writing");
  return out;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
}

double smoothness_for_warnings(const Problem& problem, const ParamVector& theta0,
                               const ExperimentConfig& config) {
  if (problem.analytic_L()) return *problem.analytic_L();
  if (problem.smoothness_upper_bound()) return *problem.smoothness_upper_bound();
  return estimate_smoothness(problem, theta0, config.probes, config.problem.seed);
}

std::string cell(const std::optional<std::uint64_t>& v) {
  return v ? std::to_string(*v) : std::string();
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::infinity();
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  if (v.size() % 2 == 1) return v[mid];
  return 0.5 * (v[mid - 1] + v[mid]);
}

// Competition ranking: equal values share a rank, the next value skips.
std::vector<int> rank_of(const std::vector<double>& values) {
  std::vector<int> ranks(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    int better = 0;
    for (double other : values)
      if (other < values[i]) ++better;
    ranks[i] = better + 1;
  }
  return ranks;
}

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end(), nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("malformed config: ") + e.what());
  }
  reject_unknown(j, "", {"name", "problem", "scheduler", "run", "output", "sweep", "probes",
                         "threads"});
  ExperimentConfig c;
  c.name = get_string(j, "", "name", c.name);
  if (j.contains("problem")) c.problem = parse_problem(j.at("problem"));
  if (!j.contains("scheduler")) throw ConfigError("scheduler", "section is required");
  c.scheduler = parse_scheduler(j.at("scheduler"));
  if (j.contains("run")) c.run = parse_run(j.at("run"));
  if (j.contains("output")) c.output = parse_output(j.at("output"));
  if (j.contains("sweep")) c.sweep = parse_sweep(j.at("sweep"));
  const std::uint64_t probes = get_uint(j, "", "probes", static_cast<std::uint64_t>(c.probes));
  if (probes > 1'000'000) throw ConfigError("probes", "too large");
  c.probes = static_cast<int>(probes);
  c.threads = static_cast<unsigned>(get_uint(j, "", "threads", c.threads));
  return c;
}

namespace {

json parse_json(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end(), nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace

ProblemSpec parse_problem_spec(std::string_view text) { return parse_problem(parse_json(text)); }

SchedulerParams parse_scheduler_params(std::string_view text) {
  return parse_scheduler(parse_json(text));
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("", "cannot read config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const ExperimentConfig& c) {
  json j;
  j["name"] = c.name;
  j["problem"] = problem_to_json(c.problem);
  j["scheduler"] = scheduler_to_json(c.scheduler);
  json run{{"max_steps", c.run.max_steps},
           {"seeds", c.run.seeds},
           {"check_interval", c.run.check_interval}};
  if (c.run.stop_eps) run["stop_eps"] = *c.run.stop_eps;
  j["run"] = run;
  j["output"] = {{"dir", c.output.dir}, {"emit_all_steps", c.output.emit_all_steps}};
  json sweep{{"batches", c.sweep.batches}};
  if (c.sweep.eps) sweep["eps"] = *c.sweep.eps;
  if (c.sweep.eta) sweep["eta"] = *c.sweep.eta;
  j["sweep"] = sweep;
  j["probes"] = c.probes;
  j["threads"] = c.threads;
  return j.dump(2) + "\n";
}

void validate_config(const ExperimentConfig& c) {
  if (c.name.empty() || c.name.find_first_of("/\\") != std::string::npos)
    throw ConfigError("name", "must be a nonempty file-name-safe string");
  const ProblemSpec& p = c.problem;
  if (p.n < 1) throw ConfigError("problem.n", "must be >= 1");
  if (p.dim < 1) throw ConfigError("problem.dim", "must be >= 1");
  if (!(p.noise >= 0.0)) throw ConfigError("problem.noise", "must be nonnegative");
  if (!(p.l2 >= 0.0)) throw ConfigError("problem.l2", "must be nonnegative");
  if (p.kind == ProblemKind::TinyMLP && p.hidden < 1)
    throw ConfigError("problem.hidden", "must be >= 1");
  if (!(p.init_scale >= 0.0)) throw ConfigError("problem.init_scale", "must be nonnegative");

  SchedulerParams sched = c.scheduler;
  sched.batch_cap = p.n;
  validate(sched);

  if (c.run.max_steps < 1) throw ConfigError("run.max_steps", "must be >= 1");
  if (c.run.seeds.empty()) throw ConfigError("run.seeds", "at least one seed is required");
  if (std::set<std::uint64_t>(c.run.seeds.begin(), c.run.seeds.end()).size() != c.run.seeds.size())
    throw ConfigError("run.seeds", "seeds must be distinct");
  if (c.run.check_interval < 1) throw ConfigError("run.check_interval", "must be >= 1");
  if (c.run.stop_eps && !(*c.run.stop_eps >= 0.0))
    throw ConfigError("run.stop_eps", "must be nonnegative");

  for (std::size_t b : c.sweep.batches) {
    if (b < 1) throw ConfigError("sweep.batches", "batch sizes must be >= 1");
    if (b > p.n) throw ConfigError("sweep.batches", "batch size exceeds problem.n");
  }
  if (c.sweep.eps && !(*c.sweep.eps > 0.0)) throw ConfigError("sweep.eps", "must be positive");
  if (c.sweep.eta && !(*c.sweep.eta > 0.0)) throw ConfigError("sweep.eta", "must be positive");
  if (c.probes < 1) throw ConfigError("probes", "probe budget must be >= 1");
  if (c.output.dir.empty()) throw ConfigError("output.dir", "must be nonempty");
}

RunReport cmd_run(const ExperimentConfig& config) {
  validate_config(config);
  const Problem problem = Problem::generate(config.problem);
  const ParamVector theta0 = initial_point(config.problem, problem);

  RunReport report;
  report.warnings =
      validate(config.scheduler, smoothness_for_warnings(problem, theta0, config)).warnings;

  std::vector<RunJob> jobs;
  for (std::uint64_t seed : config.run.seeds) {
    RunJob job{config.scheduler,
               RunConfig{config.run.max_steps, seed, config.run.check_interval, config.run.stop_eps}};
    jobs.push_back(job);
  }
  const auto outcomes = run_many(problem, theta0, jobs, config.threads);

  const fs::path dir(config.output.dir);
  ensure_dir(dir);
  for (std::size_t k = 0; k < outcomes.size(); ++k) {
    const RunOutcome& o = outcomes[k];
    const RunTrace& trace = o.trace ? *o.trace : o.divergence->trace();
    const fs::path file = dir / ("trace_seed" + std::to_string(config.run.seeds[k]) + ".csv");
    {
      auto out = open_output(file);
      write_trace_csv(out, trace, config.output.emit_all_steps);
    }
    report.files.push_back(file);

    RunSummaryRow row;
    row.seed = config.run.seeds[k];
    row.final_loss = trace.records.empty() ? trace.initial_loss : trace.records.back().loss;
    row.min_grad_norm = trace.min_grad_norm();
    row.total_sfo = trace.total_sfo();
    row.monitor_grad_evals = trace.monitor_grad_evals;
    row.stages_completed = trace.stages_completed();
    row.hit_step = trace.hit_step;
    row.cap_binding = trace.cap_binding;
    row.diverged = o.divergence.has_value();
    report.any_diverged = report.any_diverged || row.diverged;
    report.rows.push_back(row);
  }

  const fs::path summary = dir / "summary.csv";
  {
    auto out = open_output(summary);
    out << "seed,final_loss,min_grad_norm,total_sfo,monitor_grad_evals,stages_completed,"
           "hit_step,cap_binding,diverged\n";
    for (const auto& r : report.rows)
      out << r.seed << ',' << format_double(r.final_loss) << ',' << format_double(r.min_grad_norm)
          << ',' << r.total_sfo << ',' << r.monitor_grad_evals << ',' << r.stages_completed << ','
          << cell(r.hit_step) << ',' << (r.cap_binding ? 1 : 0) << ',' << (r.diverged ? 1 : 0)
          << '\n';
  }
  report.files.push_back(summary);
  return report;
}

SweepReport cmd_sweep(const ExperimentConfig& config) {
  validate_config(config);
  if (config.sweep.batches.empty())
    throw ConfigError("sweep.batches", "a batch grid is required (config or --batches)");
  const std::optional<double> eps = config.sweep.eps ? config.sweep.eps : config.run.stop_eps;
  if (!eps || !(*eps > 0.0)) throw ConfigError("sweep.eps", "set sweep.eps or run.stop_eps");
  const double eta = config.sweep.eta.value_or(config.scheduler.eta0);

  const Problem problem = Problem::generate(config.problem);
  const ParamVector theta0 = initial_point(config.problem, problem);
  const TheoryConstants constants =
      estimate_constants(problem, theta0, eta, config.probes, config.problem.seed);

  CbsSweep sweep;
  sweep.batch_grid = config.sweep.batches;
  sweep.seeds = config.run.seeds;
  sweep.eta = eta;
  sweep.eps = *eps;
  sweep.max_steps = config.run.max_steps;
  sweep.check_interval = config.run.check_interval;
  sweep.threads = config.threads;

  SweepReport report{sweep_sfo_curve(problem, theta0, constants, sweep), {}};
  const fs::path dir(config.output.dir);
  ensure_dir(dir);
  const fs::path csv = dir / "sfo_curve.csv";
  {
    auto out = open_output(csv);
    write_sfo_csv(out, report.curve);
  }
  const fs::path summary = dir / "sweep_summary.json";
  {
    auto out = open_output(summary);
    write_sfo_summary(out, report.curve);
  }
  report.files = {csv, summary};
  if (!report.curve.b_star_empirical)
    throw PrecisionUnreachable("no batch size reached |grad f| <= " + format_double(*eps) +
                               " on every seed within " + std::to_string(config.run.max_steps) +
                               " steps; increase run.max_steps or relax the precision");
  return report;
}

CompareReport cmd_compare(const std::vector<ExperimentConfig>& configs, const fs::path& out_dir,
                          std::optional<double> eps) {
  if (configs.size() < 2) throw ConfigError("", "compare needs at least two configs");
  for (const auto& c : configs) validate_config(c);
  for (std::size_t i = 1; i < configs.size(); ++i) {
    if (!(configs[i].problem == configs[0].problem))
      throw ConfigError("problem", "config " + std::to_string(i) +
                                       " describes a different problem than config 0");
    if (configs[i].run.seeds != configs[0].run.seeds)
      throw ConfigError("run.seeds", "config " + std::to_string(i) + " uses different seeds");
  }

  if (!eps) eps = configs[0].run.stop_eps;
  if (!eps) {
    for (const auto& c : configs) {
      if (!is_adaptive(c.scheduler.kind)) continue;
      const double last = stage_params(c.scheduler, c.scheduler.stages - 1).eps;
      eps = eps ? std::min(*eps, last) : last;
    }
  }
  if (!eps || !(*eps >= 0.0))
    throw ConfigError("run.stop_eps", "compare needs a target precision");

  const Problem problem = Problem::generate(configs[0].problem);
  const ParamVector theta0 = initial_point(configs[0].problem, problem);
  const auto& seeds = configs[0].run.seeds;

  std::vector<RunJob> jobs;
  for (const auto& c : configs)
    for (std::uint64_t seed : seeds)
      jobs.push_back({c.scheduler, RunConfig{c.run.max_steps, seed, c.run.check_interval, eps}});
  const auto outcomes = run_many(problem, theta0, jobs, configs[0].threads);

  ensure_dir(out_dir);
  CompareReport report;
  report.eps = *eps;
  std::size_t k = 0;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    CompareRow row;
    row.index = i;
    row.name = configs[i].name;
    row.kind = configs[i].scheduler.kind;
    row.seeds = seeds.size();
    std::vector<double> steps, sfo;
    for (std::size_t s = 0; s < seeds.size(); ++s, ++k) {
      const RunOutcome& o = outcomes[k];
      const RunTrace& trace = o.trace ? *o.trace : o.divergence->trace();
      const fs::path file = out_dir / (std::to_string(i) + "_" + configs[i].name + "_seed" +
                                       std::to_string(seeds[s]) + ".csv");
      {
        auto out = open_output(file);
        write_trace_csv(out, trace, configs[i].output.emit_all_steps);
      }
      report.files.push_back(file);
      std::optional<std::uint64_t> hit, hit_sfo;
      if (o.trace && trace.hit_step) {
        hit = *trace.hit_step;
        hit_sfo = trace.total_sfo();
        ++row.hits;
      }
      row.steps_to_eps.push_back(hit);
      row.sfo_to_eps.push_back(hit_sfo);
      steps.push_back(hit ? static_cast<double>(*hit) : std::numeric_limits<double>::infinity());
      sfo.push_back(hit_sfo ? static_cast<double>(*hit_sfo)
                            : std::numeric_limits<double>::infinity());
    }
    row.median_steps_to_eps = median(steps);
    row.median_sfo_to_eps = median(sfo);
    report.rows.push_back(std::move(row));
  }

  std::vector<double> by_steps, by_sfo;
  for (const auto& r : report.rows) {
    by_steps.push_back(r.median_steps_to_eps);
    by_sfo.push_back(r.median_sfo_to_eps);
  }
  const auto rs = rank_of(by_steps);
  const auto rf = rank_of(by_sfo);
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    report.rows[i].rank_steps = rs[i];
    report.rows[i].rank_sfo = rf[i];
  }

  const fs::path ranking = out_dir / "ranking.csv";
  {
    auto out = open_output(ranking);
    out << "index,name,kind,eps,hits,seeds,median_steps_to_eps,median_sfo_to_eps,rank_steps,"
           "rank_sfo\n";
    for (const auto& r : report.rows)
      out << r.index << ',' << r.name << ',' << to_string(r.kind) << ','
          << format_double(report.eps) << ',' << r.hits << ',' << r.seeds << ','
          << format_double(r.median_steps_to_eps) << ',' << format_double(r.median_sfo_to_eps)
          << ',' << r.rank_steps << ',' << r.rank_sfo << '\n';
  }
  const fs::path per_seed = out_dir / "compare_seeds.csv";
  {
    auto out = open_output(per_seed);
    out << "index,name,seed,steps_to_eps,sfo_to_eps\n";
    for (const auto& r : report.rows)
      for (std::size_t s = 0; s < seeds.size(); ++s)
        out << r.index << ',' << r.name << ',' << seeds[s] << ',' << cell(r.steps_to_eps[s]) << ','
            << cell(r.sfo_to_eps[s]) << '\n';
  }
  report.files.push_back(ranking);
  report.files.push_back(per_seed);
  return report;
}

}  // namespace adasgd
