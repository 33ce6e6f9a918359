#pragma once

/**
 * @file analysis.hpp
 * @brief Post-processing of trajectories: decay-rate fits, the discrete
 * energy inequality, errors against a nested reference mesh, observed orders
 * and the two parameter studies built on top of them (spatial convergence
 * with eps = c h^l, and successive differences in eps).
 */

#include "penalty_stab/mesh_fem.hpp"
#include "penalty_stab/model_params.hpp"
#include "penalty_stab/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <future>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace penalty_stab {

class AnalysisError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------------------
// decay fit

struct DecayFit {
  double gamma_fit = 0.0;
  std::pair<double, double> window{0.0, 0.0};
  double residual = 0.0; ///< RMS misfit of log-norm vs the fitted line
  std::size_t samples = 0;
  bool trimmed = false; ///< samples dropped because the norm underflowed
};

/**
 * Least-squares slope of log||Y^n|| against t_n over the window;
 * gamma_fit = -slope. Samples at or below 100 * machine eps * ||Y^0|| are
 * excluded.
 */
inline DecayFit fit_decay_rate(std::span<const double> times, std::span<const double> l2_norms,
                               std::pair<double, double> window) {
  if (times.size() != l2_norms.size() || times.empty()) {
    throw AnalysisError("fit_decay_rate: times and norms must be non-empty and of equal length");
  }
  const double floor = 100.0 * std::numeric_limits<double>::epsilon() * l2_norms.front();
  DecayFit fit;
  fit.window = window;
  std::vector<double> ts, ls;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < window.first || times[i] > window.second) continue;
    if (!(l2_norms[i] > floor)) {
      fit.trimmed = true;
      continue;
    }
    ts.push_back(times[i]);
    ls.push_back(std::log(l2_norms[i]));
  }
  if (ts.size() < 3) {
    throw AnalysisError("fit_decay_rate: fewer than 3 usable samples in window" +
                        std::string(fit.trimmed ? " (norm underflow trimmed samples)" : ""));
  }
  const double n = static_cast<double>(ts.size());
  double tm = 0.0, lm = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    tm += ts[i];
    lm += ls[i];
  }
  tm /= n;
  lm /= n;
  double stt = 0.0, stl = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    stt += (ts[i] - tm) * (ts[i] - tm);
    stl += (ts[i] - tm) * (ls[i] - lm);
  }
  const double slope = stl / stt;
  double ss = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double d = ls[i] - (lm + slope * (ts[i] - tm));
    ss += d * d;
  }
  fit.gamma_fit = -slope;
  fit.residual = std::sqrt(ss / n);
  fit.samples = ts.size();
  return fit;
}

inline std::vector<double> l2_series(const StateTrajectory &traj) {
  std::vector<double> out;
  out.reserve(traj.norms.size());
  for (const auto &n : traj.norms) out.push_back(n.l2);
  return out;
}

/// Default window [0.1 T, T].
inline DecayFit fit_decay_rate(const StateTrajectory &traj,
                               std::optional<std::pair<double, double>> window = std::nullopt) {
  if (traj.times.empty()) throw AnalysisError("fit_decay_rate: empty trajectory");
  const double t_end = traj.times.back();
  const auto norms = l2_series(traj);
  return fit_decay_rate(traj.times, norms, window.value_or(std::pair{0.1 * t_end, t_end}));
}

// ---------------------------------------------------------------------------
// energy inequality ||Y^n||^2 <= exp(-2 gamma t_n) ||Y^0||^2

struct EnergyVerdict {
  bool passed = true;
  std::optional<std::size_t> first_violation;
  double worst_ratio = 0.0; ///< max_n ||Y^n||^2 / (exp(-2 gamma t_n) ||Y^0||^2)
};

inline EnergyVerdict energy_monitor(std::span<const double> times,
                                    std::span<const double> l2_norms, double gamma) {
  if (times.size() != l2_norms.size()) throw AnalysisError("energy_monitor: length mismatch");
  EnergyVerdict v;
  if (times.empty()) return v;
  const double e0 = l2_norms.front() * l2_norms.front();
  // relative slack for rounding in the norm evaluation only
  constexpr double slack = 1e-12;
  for (std::size_t n = 0; n < times.size(); ++n) {
    const double en = l2_norms[n] * l2_norms[n];
    const double bound = std::exp(-2.0 * gamma * (times[n] - times.front())) * e0;
    if (bound > 0.0) v.worst_ratio = std::max(v.worst_ratio, en / bound);
    if (en > bound * (1.0 + slack) + std::numeric_limits<double>::min()) {
      if (v.passed) v.first_violation = n;
      v.passed = false;
    }
  }
  return v;
}

inline EnergyVerdict energy_monitor(const StateTrajectory &traj, double gamma) {
  const auto norms = l2_series(traj);
  return energy_monitor(traj.times, norms, gamma);
}

// ---------------------------------------------------------------------------
// nested meshes

/// Index map coarse DOF -> fine DOF; throws unless every coarse node is a fine node.
inline std::vector<std::size_t> nested_dof_map(const MeshPartition &fine,
                                               const MeshPartition &coarse) {
  const auto &fn = fine.nodes();
  const auto &cn = coarse.nodes();
  std::vector<std::size_t> map(coarse.n_dofs());
  std::size_t j = 0;
  for (std::size_t i = 1; i < cn.size(); ++i) {
    const double tol = 1e-12 * std::max(1.0, std::abs(cn[i]));
    while (j < fn.size() && fn[j] < cn[i] - tol) ++j;
    if (j == fn.size() || std::abs(fn[j] - cn[i]) > tol) {
      throw AnalysisError("restrict_to_coarse: coarse node " + std::to_string(cn[i]) +
                          " is not a fine node (meshes not nested)");
    }
    map[i - 1] = j - 1;
  }
  return map;
}

/// Nodal sampling of a fine-mesh solution at the coarse nodes.
inline StateVector restrict_to_coarse(const StateVector &fine_solution,
                                      const MeshPartition &fine, const MeshPartition &coarse) {
  if (fine_solution.size() != fine.n_dofs()) {
    throw AnalysisError("restrict_to_coarse: solution does not match the fine mesh");
  }
  const auto map = nested_dof_map(fine, coarse);
  StateVector out(coarse.n_dofs());
  for (std::size_t i = 0; i < map.size(); ++i) out[i] = fine_solution[map[i]];
  return out;
}

struct ErrorNorms {
  double l2 = 0.0;
  double linf = 0.0;
};

/// e = coarse - restrict(reference); L2 through the coarse mass matrix, Linf nodal.
inline ErrorNorms error_vs_reference(const StateVector &coarse_solution,
                                     const StateVector &reference_solution,
                                     const MeshPartition &reference_mesh,
                                     const AssembledSystem &coarse) {
  if (coarse_solution.size() != coarse.size()) {
    throw AnalysisError("error_vs_reference: coarse solution does not match the coarse mesh");
  }
  const StateVector r = restrict_to_coarse(reference_solution, reference_mesh, coarse.mesh);
  Vector e(coarse.size());
  for (std::size_t i = 0; i < e.size(); ++i) e[i] = coarse_solution[i] - r[i];
  return {l2_norm(coarse, e), linf_norm(e)};
}

// ---------------------------------------------------------------------------
// observed orders

/**
 * order_j = log2(e_{j-1} / e_j) for mesh sizes halving at each step. Entry 0
 * is empty; a zero or non-finite error yields NaN rather than throwing.
 */
inline std::vector<std::optional<double>> observed_orders(std::span<const double> errors,
                                                          std::span<const double> hs) {
  if (errors.size() != hs.size()) throw AnalysisError("observed_orders: length mismatch");
  for (std::size_t j = 1; j < hs.size(); ++j) {
    if (!(hs[j] > 0.0) || std::abs(hs[j - 1] / hs[j] - 2.0) > 1e-9) {
      throw AnalysisError("observed_orders: mesh sizes must halve between rows");
    }
  }
  std::vector<std::optional<double>> out(errors.size());
  for (std::size_t j = 1; j < errors.size(); ++j) {
    const double a = errors[j - 1], b = errors[j];
    out[j] = (a > 0.0 && b > 0.0 && std::isfinite(a) && std::isfinite(b))
                 ? std::log2(a / b)
                 : std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

// ---------------------------------------------------------------------------
// shared study setup

/// Everything about a run except mesh and penalty.
struct RunSetup {
  double nu = 0.1;
  double alpha = 0.13;
  double delta = 0.13;
  GainRule gain;
  std::function<double(double)> initial;
  ProjectionMode projection = ProjectionMode::l2;
  double k = 1.0 / 1050.0;
  std::size_t n_steps = 1050;
  SchemeOptions scheme;
  NewtonOptions newton;

  ModelParams params(double epsilon) const { return {nu, alpha, delta, gain(epsilon), epsilon}; }
  TimeGrid grid() const { return {k, n_steps}; }
};

struct RunResult {
  ModelParams params;
  StateTrajectory trajectory;
};

inline RunResult run_once(const RunSetup &setup, const AssembledSystem &sys, double epsilon) {
  const ModelParams p = setup.params(epsilon);
  const StateVector y0 = project_initial(sys, setup.initial, setup.projection);
  return {p, simulate(p, sys, y0, setup.grid(), setup.scheme, setup.newton)};
}

/// sup_n |a_n - b_n| over the common prefix.
inline double sup_difference(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double sup_abs(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

// ---------------------------------------------------------------------------
// spatial convergence with eps = c h^l

enum class ReferenceEpsilon {
  matched, ///< reference solves the row's own (eps, r)
  own      ///< reference uses eps = c h_ref^l and r = gain(eps_ref)
};

struct ConvergenceSetup {
  std::vector<std::size_t> n_elements; ///< increasing, each twice the previous
  std::size_t reference_n = 2048;
  double c = 0.01;
  double l = 2.0;
  ReferenceEpsilon state_reference = ReferenceEpsilon::matched;
  ReferenceEpsilon control_reference = ReferenceEpsilon::own;
};

struct ConvergenceRow {
  std::size_t n = 0;
  double h = 0.0;
  double epsilon = 0.0;
  double r = 0.0;
  double k = 0.0;
  double error_l2 = 0.0;
  double error_linf = 0.0;
  std::optional<double> order_l2;
  std::optional<double> order_linf;
  double control_error_linf = 0.0; ///< sup_n |u_h(t_n) - u_ref(t_n)|
  std::optional<double> order_control;
  bool failed = false;
  std::string failure;
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
  std::string reference_description;
  std::vector<std::string> failures;
  bool any_failed() const { return !failures.empty(); }
};

inline double penalty_rule(double c, double l, double h) { return c * std::pow(h, l); }

/**
 * For each coarse mesh: simulate at eps = c h^l, compare the final state with
 * the reference run restricted to the coarse nodes, and the control history
 * with the reference control. Independent runs execute concurrently.
 */
inline ConvergenceReport space_convergence_study(const RunSetup &setup,
                                                 const ConvergenceSetup &conv) {
  if (conv.n_elements.empty()) throw AnalysisError("convergence: empty mesh list");
  for (std::size_t i = 0; i < conv.n_elements.size(); ++i) {
    const std::size_t n = conv.n_elements[i];
    if (n < 2) throw AnalysisError("convergence: meshes need at least 2 elements");
    if (i > 0 && n != 2 * conv.n_elements[i - 1]) {
      throw AnalysisError("convergence: mesh sizes must be nested powers of two (each n twice "
                          "the previous)");
    }
    if (conv.reference_n % n != 0 || conv.reference_n <= n) {
      throw AnalysisError("convergence: reference mesh " + std::to_string(conv.reference_n) +
                          " is not a strict refinement of " + std::to_string(n));
    }
  }

  const AssembledSystem ref_sys = assemble(make_uniform_mesh(conv.reference_n));
  const double h_ref = 1.0 / static_cast<double>(conv.reference_n);
  const double eps_ref_own = penalty_rule(conv.c, conv.l, h_ref);

  std::vector<AssembledSystem> systems;
  std::vector<double> epsilons;
  for (std::size_t n : conv.n_elements) {
    systems.push_back(assemble(make_uniform_mesh(n)));
    epsilons.push_back(penalty_rule(conv.c, conv.l, 1.0 / static_cast<double>(n)));
  }

  const bool need_own =
      conv.state_reference == ReferenceEpsilon::own || conv.control_reference == ReferenceEpsilon::own;
  const bool need_matched = conv.state_reference == ReferenceEpsilon::matched ||
                            conv.control_reference == ReferenceEpsilon::matched;

  std::vector<std::future<RunResult>> coarse_runs, matched_runs;
  for (std::size_t i = 0; i < systems.size(); ++i) {
    coarse_runs.push_back(std::async(std::launch::async, [&, i] {
      return run_once(setup, systems[i], epsilons[i]);
    }));
    if (need_matched) {
      matched_runs.push_back(std::async(std::launch::async, [&, i] {
        return run_once(setup, ref_sys, epsilons[i]);
      }));
    }
  }
  std::optional<RunResult> own_ref;
  if (need_own) own_ref = run_once(setup, ref_sys, eps_ref_own);

  ConvergenceReport rep;
  std::vector<RunResult> coarse, matched;
  for (auto &f : coarse_runs) coarse.push_back(f.get());
  for (auto &f : matched_runs) matched.push_back(f.get());

  auto pick = [&](ReferenceEpsilon which, std::size_t i) -> const RunResult & {
    return which == ReferenceEpsilon::own ? *own_ref : matched[i];
  };

  std::vector<double> e2, einf, eu, hs;
  for (std::size_t i = 0; i < systems.size(); ++i) {
    ConvergenceRow row;
    row.n = conv.n_elements[i];
    row.h = 1.0 / static_cast<double>(row.n);
    row.epsilon = epsilons[i];
    row.r = coarse[i].params.r;
    row.k = setup.k;
    const auto &c = coarse[i].trajectory;
    const auto &rs = pick(conv.state_reference, i).trajectory;
    const auto &rc = pick(conv.control_reference, i).trajectory;
    for (const auto *t : {&c, &rs, &rc}) {
      if (t->failed) {
        row.failed = true;
        row.failure = t->failure_message;
      }
    }
    if (row.failed) {
      row.error_l2 = row.error_linf = row.control_error_linf =
          std::numeric_limits<double>::quiet_NaN();
      rep.failures.push_back("h=1/" + std::to_string(row.n) + ": " + row.failure);
    } else {
      const auto err = error_vs_reference(c.states.back(), rs.states.back(), ref_sys.mesh,
                                          systems[i]);
      row.error_l2 = err.l2;
      row.error_linf = err.linf;
      row.control_error_linf = sup_difference(c.controls, rc.controls);
    }
    e2.push_back(row.error_l2);
    einf.push_back(row.error_linf);
    eu.push_back(row.control_error_linf);
    hs.push_back(row.h);
    rep.rows.push_back(std::move(row));
  }
  const auto o2 = observed_orders(e2, hs);
  const auto oinf = observed_orders(einf, hs);
  const auto ou = observed_orders(eu, hs);
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    rep.rows[i].order_l2 = o2[i];
    rep.rows[i].order_linf = oinf[i];
    rep.rows[i].order_control = ou[i];
  }

  auto describe = [&](ReferenceEpsilon which) {
    return which == ReferenceEpsilon::own
               ? "own eps = c*h_ref^l = " + std::to_string(eps_ref_own)
               : std::string("matched eps (each row's eps and r)");
  };
  rep.reference_description = "reference n_elements=" + std::to_string(conv.reference_n) +
                              "; state reference: " + describe(conv.state_reference) +
                              "; control reference: " + describe(conv.control_reference);
  return rep;
}

// ---------------------------------------------------------------------------
// successive differences in eps

struct EpsilonStudyRow {
  double epsilon = 0.0;
  double r = 0.0;
  double state_l2 = 0.0;   ///< final time
  double state_linf = 0.0; ///< final time
  double control_linf = 0.0; ///< sup over time
  std::optional<double> diff_l2;
  std::optional<double> diff_linf;
  std::optional<double> control_diff_linf;
  double state_l2_sup = 0.0;   ///< sup over time
  double state_linf_sup = 0.0; ///< sup over time
  bool failed = false;
  std::string failure;
};

struct EpsilonStudyReport {
  std::vector<EpsilonStudyRow> rows;
  std::vector<std::string> failures;
  bool any_failed() const { return !failures.empty(); }
};

/**
 * Run the same space-time grid for each eps (descending) with r = gain(eps).
 * Differences compare row i with row i-1: final-state norms and the sup over
 * time of the control difference.
 */
inline EpsilonStudyReport epsilon_cauchy_study(const RunSetup &setup, const MeshPartition &mesh,
                                               std::span<const double> epsilons) {
  if (epsilons.empty()) throw AnalysisError("epsilon study: empty eps list");
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    if (!(epsilons[i] > 0.0)) throw AnalysisError("epsilon study: eps must be positive");
    if (i > 0 && epsilons[i] > epsilons[i - 1]) {
      throw AnalysisError("epsilon study: eps list must be descending");
    }
  }
  const AssembledSystem sys = assemble(mesh);
  std::vector<std::future<RunResult>> futures;
  for (double eps : epsilons) {
    futures.push_back(
        std::async(std::launch::async, [&, eps] { return run_once(setup, sys, eps); }));
  }
  std::vector<RunResult> runs;
  for (auto &f : futures) runs.push_back(f.get());

  EpsilonStudyReport rep;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto &t = runs[i].trajectory;
    EpsilonStudyRow row;
    row.epsilon = epsilons[i];
    row.r = runs[i].params.r;
    row.failed = t.failed;
    row.failure = t.failure_message;
    if (t.failed) {
      row.state_l2 = row.state_linf = row.control_linf = nan;
      row.state_l2_sup = row.state_linf_sup = nan;
      rep.failures.push_back("eps=" + std::to_string(row.epsilon) + ": " + t.failure_message);
    } else {
      row.state_l2 = t.norms.back().l2;
      row.state_linf = t.norms.back().l_inf;
      row.control_linf = sup_abs(t.controls);
      for (const auto &n : t.norms) {
        row.state_l2_sup = std::max(row.state_l2_sup, n.l2);
        row.state_linf_sup = std::max(row.state_linf_sup, n.l_inf);
      }
    }
    if (i > 0) {
      const auto &prev = runs[i - 1].trajectory;
      if (t.failed || prev.failed) {
        row.diff_l2 = row.diff_linf = row.control_diff_linf = nan;
      } else {
        Vector d(sys.size());
        for (std::size_t j = 0; j < d.size(); ++j) {
          d[j] = t.states.back()[j] - prev.states.back()[j];
        }
        row.diff_l2 = l2_norm(sys, d);
        row.diff_linf = linf_norm(d);
        row.control_diff_linf = sup_difference(t.controls, prev.controls);
      }
    }
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

} // namespace penalty_stab
