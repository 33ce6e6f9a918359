#pragma once

/**
 * @file experiments.hpp
 * @brief Experiment drivers behind the command line: decay runs (optionally
 * swept over one coefficient), spatial convergence and the eps study. Each
 * writes CSV files with a metadata block that carries the resolved config.
 */

#include "penalty_stab/analysis.hpp"
#include "penalty_stab/harness/config.hpp"
#include "penalty_stab/harness/csv.hpp"
#include "penalty_stab/harness/svg.hpp"
#include "penalty_stab/mesh_fem.hpp"
#include "penalty_stab/model_params.hpp"
#include "penalty_stab/solver.hpp"

#include <cstdio>
#include <filesystem>
#include <future>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace penalty_stab::harness {

inline std::string version_string() {
#ifdef PENALTY_STAB_VERSION
  return PENALTY_STAB_VERSION;
#else
  return "unversioned";
#endif
}

struct ExperimentOutcome {
  std::vector<std::filesystem::path> files;
  std::vector<std::string> failures; ///< one entry per failed run
  std::vector<std::string> warnings;
  bool failed() const { return !failures.empty(); }
};

inline const std::vector<std::string> kDecayColumns{"t", "l2_norm", "linf_norm", "control"};
inline const std::vector<std::string> kConvergenceColumns{
    "h",          "epsilon",    "k",       "error_l2",           "error_linf",
    "order_l2",   "order_linf", "control_error_linf", "order_control"};

/// Epsilon-study columns; the diff columns are dropped for a single eps.
inline std::vector<std::string> epsilon_study_columns(bool with_diffs) {
  std::vector<std::string> cols{"epsilon", "r", "state_l2", "state_linf", "control_linf"};
  if (with_diffs) cols.insert(cols.end(), {"diff_l2", "diff_linf", "control_diff_linf"});
  cols.insert(cols.end(), {"state_l2_sup", "state_linf_sup"});
  return cols;
}

// ---------------------------------------------------------------------------
// metadata

/// Rate report lines; @p tag distinguishes several parameter sets in one file.
inline std::vector<std::string> rate_lines(const ModelParams &p, const std::string &tag = "") {
  const auto rep = rate_report(p);
  const std::string sfx = tag.empty() ? "" : "[" + tag + "]";
  std::vector<std::string> out;
  out.push_back("params" + sfx + ": nu=" + format_number(p.nu) + " alpha=" +
                format_number(p.alpha) + " delta=" + format_number(p.delta) + " epsilon=" +
                format_number(p.epsilon) + " r=" + format_number(p.r));
  out.push_back("a1" + sfx + ": " + (rep.a1_satisfied ? "satisfied" : "violated") + " (" +
                rep.a1_explanation + ")");
  if (rep.gamma_max) {
    out.push_back("gamma_max" + sfx + ": " + format_number(*rep.gamma_max));
    out.push_back("beta_at_half_gamma_max" + sfx + ": " + format_number(*rep.beta));
  } else {
    out.push_back("gamma_max" + sfx + ": none (2nu - 2nu r^2/(3eps) - alpha = " +
                  format_number(rep.gamma_bound) + ")");
  }
  if (rep.gamma_dirichlet_max) {
    out.push_back("dirichlet" + sfx + ": gamma_max=" + format_number(*rep.gamma_dirichlet_max) +
                  " beta_star=" + format_number(*rep.beta_star) +
                  " r_max=" + format_number(rep.r_max_dirichlet));
  } else {
    out.push_back("dirichlet" + sfx + ": inadmissible (r_max=" +
                  format_number(rep.r_max_dirichlet) + ")");
  }
  return out;
}

inline std::vector<std::string> common_metadata(const ExperimentConfig &cfg) {
  return {"penalty-stab " + version_string(),
          "experiment: " + to_string(cfg.kind),
          std::string(kConfigMetadataKey) + to_json(cfg).dump(),
          "newton: tol=" + format_number(cfg.newton.tol) +
              " max_iter=" + std::to_string(cfg.newton.max_iter) + " control=" +
              (cfg.control == ControlTreatment::implicit ? "implicit" : "lagged")};
}

// ---------------------------------------------------------------------------
// tables

inline CsvTable decay_table(const StateTrajectory &traj, std::vector<std::string> metadata) {
  CsvTable t;
  t.metadata = std::move(metadata);
  t.header = kDecayColumns;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    t.rows.push_back({traj.times[i], traj.norms[i].l2, traj.norms[i].l_inf, traj.controls[i]});
  }
  return t;
}

inline CsvTable convergence_table(const ConvergenceReport &rep,
                                  std::vector<std::string> metadata) {
  CsvTable t;
  t.metadata = std::move(metadata);
  t.metadata.push_back("reference: " + rep.reference_description);
  for (const auto &f : rep.failures) t.metadata.push_back("failure: " + f);
  t.header = kConvergenceColumns;
  for (const auto &r : rep.rows) {
    t.rows.push_back({r.h, r.epsilon, r.k, r.error_l2, r.error_linf, optional_cell(r.order_l2),
                      optional_cell(r.order_linf), r.control_error_linf,
                      optional_cell(r.order_control)});
  }
  return t;
}

inline CsvTable epsilon_study_table(const EpsilonStudyReport &rep,
                                    std::vector<std::string> metadata) {
  CsvTable t;
  t.metadata = std::move(metadata);
  for (const auto &f : rep.failures) t.metadata.push_back("failure: " + f);
  const bool diffs = rep.rows.size() > 1;
  t.header = epsilon_study_columns(diffs);
  for (const auto &r : rep.rows) {
    std::vector<Cell> row{r.epsilon, r.r, r.state_l2, r.state_linf, r.control_linf};
    if (diffs) {
      row.push_back(optional_cell(r.diff_l2));
      row.push_back(optional_cell(r.diff_linf));
      row.push_back(optional_cell(r.control_diff_linf));
    }
    row.push_back(r.state_l2_sup);
    row.push_back(r.state_linf_sup);
    t.rows.push_back(std::move(row));
  }
  return t;
}

namespace detail {

inline void ensure_directory(const std::filesystem::path &dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw OutputError("cannot create output directory " + dir.string() + ": " + ec.message());
  }
}

inline std::string value_tag(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

inline ExperimentConfig with_sweep_value(ExperimentConfig cfg, const std::string &param,
                                         double v) {
  if (param == "nu") cfg.nu = v;
  if (param == "alpha") cfg.alpha = v;
  if (param == "delta") cfg.delta = v;
  if (param == "epsilon") cfg.epsilon = v;
  return cfg;
}

} // namespace detail

// ---------------------------------------------------------------------------
// drivers

/**
 * One CSV (and optionally one SVG of l2_norm vs t) per variant and sweep
 * value. Failed runs keep their partial rows and are listed in the outcome.
 */
inline ExperimentOutcome run_decay_experiment(const ExperimentConfig &cfg,
                                              const std::filesystem::path &out_dir) {
  validate(cfg);
  detail::ensure_directory(out_dir);

  struct Job {
    std::optional<double> sweep_value;
    Variant variant;
    ModelParams params;
    std::string stem;
  };
  std::vector<Job> jobs;
  std::vector<std::optional<double>> values{std::nullopt};
  if (cfg.decay.sweep) values.assign(cfg.decay.sweep->values.begin(), cfg.decay.sweep->values.end());
  for (const auto &v : values) {
    const ExperimentConfig c =
        v ? detail::with_sweep_value(cfg, cfg.decay.sweep->parameter, *v) : cfg;
    for (Variant var : cfg.decay.variants) {
      std::string stem = "decay_" + to_string(var);
      if (v) stem += "_" + cfg.decay.sweep->parameter + "_" + detail::value_tag(*v);
      jobs.push_back({v, var, c.params(), stem});
    }
  }

  const AssembledSystem sys = assemble(make_uniform_mesh(cfg.n_elements.front()));
  const StateVector y0 = project_initial(sys, profile_function(cfg.initial), cfg.projection);
  const TimeGrid grid = cfg.grid();

  std::vector<std::future<StateTrajectory>> futures;
  for (const auto &job : jobs) {
    futures.push_back(std::async(std::launch::async, [&, job] {
      SchemeOptions opts;
      opts.variant = job.variant;
      opts.control = cfg.control;
      return simulate(job.params, sys, y0, grid, opts, cfg.newton);
    }));
  }

  ExperimentOutcome outcome;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    const Job &job = jobs[j];
    const StateTrajectory traj = futures[j].get();

    auto meta = common_metadata(cfg);
    meta.push_back("variant: " + to_string(job.variant));
    if (job.sweep_value) {
      meta.push_back("sweep: " + cfg.decay.sweep->parameter + "=" +
                     format_number(*job.sweep_value));
    }
    for (auto &line : rate_lines(job.params)) meta.push_back(std::move(line));
    for (const auto &w : traj.warnings) meta.push_back("warning: " + w);
    if (traj.failed) {
      meta.push_back("run: failed: " + traj.failure_message);
      outcome.failures.push_back(job.stem + ": " + traj.failure_message);
    } else {
      meta.push_back("run: ok (" + std::to_string(traj.size() - 1) + " steps)");
    }
    if (job.variant == Variant::penalized_feedback && !traj.failed) {
      try {
        const auto fit = fit_decay_rate(traj, cfg.decay.fit_window);
        meta.push_back("decay_fit: gamma_fit=" + format_number(fit.gamma_fit) + " window=[" +
                       format_number(fit.window.first) + "," + format_number(fit.window.second) +
                       "] residual=" + format_number(fit.residual) +
                       " samples=" + std::to_string(fit.samples));
      } catch (const AnalysisError &e) {
        meta.push_back(std::string("decay_fit: unavailable (") + e.what() + ")");
      }
      const auto rep = rate_report(job.params);
      if (rep.gamma_max) {
        const auto v = energy_monitor(traj, *rep.gamma_max);
        meta.push_back("energy_monitor: gamma=" + format_number(*rep.gamma_max) +
                       (v.passed ? " passed" : " violated at step " +
                                                   std::to_string(*v.first_violation)) +
                       " worst_ratio=" + format_number(v.worst_ratio));
      }
    }

    const auto csv_path = out_dir / (job.stem + ".csv");
    decay_table(traj, std::move(meta)).write(csv_path);
    outcome.files.push_back(csv_path);

    if (cfg.decay.svg) {
      const auto svg_path = out_dir / (job.stem + ".svg");
      try {
        LineChart chart;
        chart.title = job.stem;
        chart.y_label = "l2_norm";
        chart.log_y = cfg.decay.log_y;
        const auto l2 = l2_series(traj);
        write_svg(svg_path, traj.times, l2, chart);
        outcome.files.push_back(svg_path);
      } catch (const OutputError &e) {
        outcome.warnings.push_back(e.what());
      }
    }
  }
  return outcome;
}

inline ExperimentOutcome run_space_convergence(const ExperimentConfig &cfg,
                                               const std::filesystem::path &out_dir) {
  validate(cfg);
  detail::ensure_directory(out_dir);

  ConvergenceSetup conv;
  conv.n_elements = cfg.n_elements;
  conv.reference_n = cfg.convergence.reference_n_elements;
  conv.c = cfg.convergence.c;
  conv.l = cfg.convergence.l;
  conv.state_reference = cfg.convergence.state_reference;
  conv.control_reference = cfg.convergence.control_reference;
  const ConvergenceReport rep = space_convergence_study(cfg.run_setup(), conv);

  auto meta = common_metadata(cfg);
  for (const auto &row : rep.rows) {
    ExperimentConfig c = cfg;
    c.epsilon = row.epsilon;
    const auto a1 = check_a1(c.params());
    meta.push_back("a1[h=1/" + std::to_string(row.n) + "]: " +
                   (a1.satisfied ? "satisfied" : "violated") + " (" + a1.explanation + ")");
  }
  ExperimentOutcome outcome;
  outcome.failures = rep.failures;
  const auto path = out_dir / "convergence.csv";
  convergence_table(rep, std::move(meta)).write(path);
  outcome.files.push_back(path);
  return outcome;
}

inline ExperimentOutcome run_epsilon_study(const ExperimentConfig &cfg,
                                           const std::filesystem::path &out_dir) {
  validate(cfg);
  detail::ensure_directory(out_dir);

  const auto &eps = cfg.epsilon_study.epsilons;
  const EpsilonStudyReport rep =
      epsilon_cauchy_study(cfg.run_setup(), make_uniform_mesh(cfg.n_elements.front()), eps);

  auto meta = common_metadata(cfg);
  for (double e : eps) {
    ExperimentConfig c = cfg;
    c.epsilon = e;
    const auto a1 = check_a1(c.params());
    meta.push_back("a1[epsilon=" + format_number(e) + "]: " +
                   (a1.satisfied ? "satisfied" : "violated") + " (" + a1.explanation + ")");
  }
  ExperimentOutcome outcome;
  outcome.failures = rep.failures;
  const auto path = out_dir / "epsilon_study.csv";
  epsilon_study_table(rep, std::move(meta)).write(path);
  outcome.files.push_back(path);
  return outcome;
}

/// Dispatch on the experiment kind.
inline ExperimentOutcome run_experiment(const ExperimentConfig &cfg,
                                        const std::filesystem::path &out_dir) {
  switch (cfg.kind) {
  case ExperimentKind::decay: return run_decay_experiment(cfg, out_dir);
  case ExperimentKind::convergence: return run_space_convergence(cfg, out_dir);
  case ExperimentKind::epsilon_study: return run_epsilon_study(cfg, out_dir);
  }
  return {};
}

} // namespace penalty_stab::harness
