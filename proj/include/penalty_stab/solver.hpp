#pragma once

/**
 * @file solver.hpp
 * @brief Backward Euler in time with a Newton iteration per step for the
 * penalized feedback problem
 *
 *   (Y^n - Y^{n-1})/k, chi) + nu (Y^n_x, chi_x) + nu/eps Y^n(1) chi(1)
 *       + delta ((Y^n)^3, chi) = nu/eps u^n chi(1) + alpha (Y^n, chi),
 *   u^n = -r int_0^1 x Y^n dx.
 *
 * With the control treated implicitly the Newton matrix is symmetric
 * tridiagonal plus a single dense row at the boundary DOF.
 */

#include "penalty_stab/mesh_fem.hpp"
#include "penalty_stab/model_params.hpp"
#include "penalty_stab/tridiagonal.hpp"

#include <cmath>
#include <cstddef>
#include <optional>
#include <sstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace penalty_stab {

/// Uniform time grid t_n = n k, n = 0..n_steps.
class TimeGrid {
public:
  TimeGrid(double k, std::size_t n_steps) : k_(k), n_steps_(n_steps) {
    if (!(k > 0.0) || !std::isfinite(k)) throw ParameterError("time step must be positive");
    if (n_steps == 0) throw ParameterError("time grid needs at least one step");
  }

  /// Grid reaching @p final_time with steps as close to @p k as an integer
  /// step count allows. Rejects a k that does not divide T up to 1e-9 relative.
  static TimeGrid from_final_time(double final_time, double k) {
    if (!(final_time > 0.0) || !(k > 0.0)) throw ParameterError("T and k must be positive");
    const double steps = std::round(final_time / k);
    if (steps < 1.0 || std::abs(steps * k - final_time) > 1e-9 * final_time) {
      throw ParameterError("time step k = " + std::to_string(k) +
                           " does not divide T = " + std::to_string(final_time));
    }
    return {k, static_cast<std::size_t>(steps)};
  }

  double k() const noexcept { return k_; }
  std::size_t n_steps() const noexcept { return n_steps_; }
  double final_time() const noexcept { return k_ * static_cast<double>(n_steps_); }
  double time(std::size_t n) const noexcept { return k_ * static_cast<double>(n); }

private:
  double k_;
  std::size_t n_steps_;
};

enum class Variant { penalized_feedback, uncontrolled_dirichlet };
enum class ControlTreatment { implicit, lagged };

struct SchemeOptions {
  Variant variant = Variant::penalized_feedback;
  ControlTreatment control = ControlTreatment::implicit;
};

struct NewtonOptions {
  double tol = 1e-12;
  std::size_t max_iter = 25;
};

namespace detail {
inline void require_same_size(std::size_t a, std::size_t b, const char *what) {
  if (a != b) throw MeshError(std::string(what) + ": vector size does not match the mesh");
}
} // namespace detail

/**
 * Residual of one backward Euler step.
 *
 *   F(Y) = M(Y - Y_prev)/k + nu K Y - alpha M Y + delta (Y^3, phi)
 *          + (nu/eps) Y_N e_N + (nu r/eps)(w.Y) e_N
 *
 * The lagged control uses w.Y_prev in the last term. The uncontrolled
 * Dirichlet variant replaces the boundary row by F_N = Y_N.
 */
inline Vector residual(const ModelParams &p, const AssembledSystem &sys,
                       std::span<const double> y, std::span<const double> y_prev, double k,
                       const SchemeOptions &opts = {}) {
  detail::require_same_size(y.size(), sys.size(), "residual");
  detail::require_same_size(y_prev.size(), sys.size(), "residual");
  const std::size_t n = sys.size();

  Vector diff(n);
  for (std::size_t i = 0; i < n; ++i) diff[i] = y[i] - y_prev[i];
  const Vector m_diff = sys.mass.apply(diff);
  const Vector ky = sys.stiffness.apply(y);
  const Vector my = sys.mass.apply(y);
  const Vector cubic = cubic_term(sys.mesh, y);

  Vector f(n);
  for (std::size_t i = 0; i < n; ++i) {
    f[i] = m_diff[i] / k + p.nu * ky[i] - p.alpha * my[i] + p.delta * cubic[i];
  }
  const std::size_t b = sys.boundary_index;
  if (opts.variant == Variant::uncontrolled_dirichlet) {
    f[b] = y[b];
    return f;
  }
  const double penalty = p.nu / p.epsilon;
  const double moment =
      opts.control == ControlTreatment::implicit ? sys.moment_of(y) : sys.moment_of(y_prev);
  f[b] += penalty * y[b] + penalty * p.r * moment;
  return f;
}

/// Newton matrix split as symmetric tridiagonal core + dense boundary row.
struct NewtonMatrix {
  SymTridiagonal core;
  RowUpdate rank_one;

  /// Dense copy of core + e_row v^T.
  std::vector<Vector> to_dense() const {
    auto a = core.to_dense();
    if (!rank_one.empty()) {
      for (std::size_t j = 0; j < a.size(); ++j) a[rank_one.row][j] += rank_one.values[j];
    }
    return a;
  }
};

inline NewtonMatrix jacobian(const ModelParams &p, const AssembledSystem &sys,
                             std::span<const double> y, double k,
                             const SchemeOptions &opts = {}) {
  detail::require_same_size(y.size(), sys.size(), "jacobian");
  NewtonMatrix jac;
  jac.core = sys.mass.scaled(1.0 / k - p.alpha);
  jac.core.add_scaled(sys.stiffness, p.nu);
  jac.core.add_scaled(cubic_jacobian(sys.mesh, y), p.delta);

  const std::size_t b = sys.boundary_index;
  if (opts.variant == Variant::uncontrolled_dirichlet) {
    jac.core.diag[b] = 1.0;
    // Y_b stays zero, so the column coupling can be dropped as well
    if (b > 0) jac.core.off[b - 1] = 0.0;
    return jac;
  }
  jac.core.diag[b] += p.nu / p.epsilon;
  if (opts.control == ControlTreatment::implicit && p.r != 0.0) {
    jac.rank_one.row = b;
    jac.rank_one.values = sys.moment;
    for (auto &v : jac.rank_one.values) v *= p.nu * p.r / p.epsilon;
  }
  return jac;
}

struct StepReport {
  std::size_t newton_iterations = 0;
  double final_residual_norm = 0.0;
  double control_value = 0.0;
  bool converged = true;
  std::vector<double> residual_history; ///< ||F|| before the first and after each update
};

struct StepResult {
  StateVector state;
  StepReport report;
};

inline double euclidean_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

/// Control value -r (w.Y) for the feedback variant, 0 otherwise.
inline double control_of(const ModelParams &p, const AssembledSystem &sys,
                         std::span<const double> y, Variant variant) {
  if (variant == Variant::uncontrolled_dirichlet) return 0.0;
  return -p.r * sys.moment_of(y);
}

/**
 * One backward Euler step. Starts from Y_prev and performs at least one
 * Newton update; stops as soon as ||F(Y)||_2 <= tol. Non-convergence after
 * max_iter updates is reported, not thrown. Linear-solve failures propagate.
 */
inline StepResult newton_solve(const ModelParams &p, const AssembledSystem &sys,
                               const StateVector &y_prev, double k,
                               const NewtonOptions &newton = {}, const SchemeOptions &opts = {}) {
  if (!(newton.tol > 0.0)) throw ParameterError("newton tolerance must be positive");
  if (newton.max_iter < 1) throw ParameterError("newton max_iter must be at least 1");
  detail::require_same_size(y_prev.size(), sys.size(), "newton_solve");

  StepResult out{y_prev, {}};
  auto &y = out.state.coefficients;
  auto &rep = out.report;
  rep.converged = false;

  Vector f = residual(p, sys, y, y_prev, k, opts);
  rep.residual_history.push_back(euclidean_norm(f));
  for (std::size_t it = 1; it <= newton.max_iter; ++it) {
    const NewtonMatrix jac = jacobian(p, sys, y, k, opts);
    const Vector step = solve_structured(jac.core, jac.rank_one, f);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] -= step[i];
    f = residual(p, sys, y, y_prev, k, opts);
    rep.newton_iterations = it;
    rep.final_residual_norm = euclidean_norm(f);
    rep.residual_history.push_back(rep.final_residual_norm);
    if (rep.final_residual_norm <= newton.tol) {
      rep.converged = true;
      break;
    }
  }
  rep.control_value = control_of(p, sys, y, opts.variant);
  return out;
}

struct StateTrajectory {
  std::vector<double> times;
  std::vector<StateVector> states;
  std::vector<double> controls;
  std::vector<Norms> norms;
  std::vector<StepReport> step_reports;

  bool failed = false;
  std::optional<std::size_t> failed_step; ///< step index n whose solve failed
  std::string failure_message;
  std::vector<std::string> warnings;

  std::size_t size() const noexcept { return states.size(); }
};

/**
 * Run the scheme from y0 over the time grid. A failed step truncates the
 * trajectory after the last good state and sets the failure marker.
 */
inline StateTrajectory simulate(const ModelParams &p, const AssembledSystem &sys,
                                const StateVector &y0, const TimeGrid &grid,
                                const SchemeOptions &opts = {},
                                const NewtonOptions &newton = {}) {
  p.validate();
  detail::require_same_size(y0.size(), sys.size(), "simulate");

  StateTrajectory traj;
  if (opts.variant == Variant::penalized_feedback) {
    const auto a1 = check_a1(p);
    if (!a1.satisfied) traj.warnings.push_back("stability condition a1 violated: " + a1.explanation);
  }
  const std::size_t count = grid.n_steps() + 1;
  traj.times.reserve(count);
  traj.states.reserve(count);
  traj.controls.reserve(count);
  traj.norms.reserve(count);
  traj.step_reports.reserve(count);

  StateVector current = y0;
  if (opts.variant == Variant::uncontrolled_dirichlet) current[sys.boundary_index] = 0.0;

  auto record = [&](std::size_t n, StateVector state, StepReport rep) {
    traj.times.push_back(grid.time(n));
    traj.controls.push_back(control_of(p, sys, state, opts.variant));
    traj.norms.push_back(norms(sys, state));
    rep.control_value = traj.controls.back();
    traj.step_reports.push_back(std::move(rep));
    traj.states.push_back(std::move(state));
  };
  record(0, current, StepReport{});

  for (std::size_t n = 1; n <= grid.n_steps(); ++n) {
    try {
      StepResult step = newton_solve(p, sys, current, grid.k(), newton, opts);
      if (!step.report.converged) {
        traj.failed = true;
        traj.failed_step = n;
        std::ostringstream msg;
        msg << "Newton did not converge at step " << n << " (residual "
            << step.report.final_residual_norm << " after " << step.report.newton_iterations
            << " iterations)";
        traj.failure_message = msg.str();
        break;
      }
      current = step.state;
      record(n, std::move(step.state), std::move(step.report));
    } catch (const LinearSolveError &e) {
      traj.failed = true;
      traj.failed_step = n;
      traj.failure_message = "linear solve failed at step " + std::to_string(n) + ": " + e.what();
      break;
    }
  }
  return traj;
}

inline StateTrajectory simulate(const ModelParams &p, const MeshPartition &mesh,
                                const StateVector &y0, const TimeGrid &grid,
                                const SchemeOptions &opts = {},
                                const NewtonOptions &newton = {}) {
  return simulate(p, assemble(mesh), y0, grid, opts, newton);
}

} // namespace penalty_stab
