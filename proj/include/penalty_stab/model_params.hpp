#pragma once

/**
 * @file model_params.hpp
 * @brief Coefficients of the penalized Chafee-Infante feedback problem and the
 * closed-form admissibility conditions, decay rates and energy constants that
 * go with them.
 */

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

namespace penalty_stab {

/// Raised when a parameter lies outside its mathematical domain.
class ParameterError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/**
 * @brief Physical and control coefficients.
 *
 * Model: y_t = nu*y_xx + alpha*y - delta*y^3 on (0,1), y(t,0) = 0 and the
 * Robin condition epsilon*y_x(t,1) + y(t,1) = u(t) with the feedback
 * u(t) = -r * int_0^1 x*y(t,x) dx.
 */
struct ModelParams {
  double nu = 0.1;       ///< diffusion
  double alpha = 0.13;   ///< linear reaction
  double delta = 0.13;   ///< cubic reaction
  double r = 0.1;        ///< feedback gain
  double epsilon = 0.01; ///< boundary penalty

  void validate() const {
    auto require_positive = [](double v, const char *name) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw ParameterError(std::string(name) + " must be positive and finite, got " +
                             std::to_string(v));
      }
    };
    require_positive(nu, "nu");
    require_positive(alpha, "alpha");
    require_positive(delta, "delta");
    require_positive(epsilon, "epsilon");
    if (!(r >= 0.0) || !std::isfinite(r)) {
      throw ParameterError("r must be non-negative and finite, got " + std::to_string(r));
    }
  }
};

/// Feedback gain as a function of the penalty: sqrt(eps), sqrt(2 eps) or a constant.
struct GainRule {
  enum class Kind { sqrt_eps, sqrt_2eps, constant };
  Kind kind = Kind::sqrt_eps;
  double value = 0.0; ///< used by Kind::constant

  double operator()(double epsilon) const {
    switch (kind) {
    case Kind::sqrt_eps: return std::sqrt(epsilon);
    case Kind::sqrt_2eps: return std::sqrt(2.0 * epsilon);
    case Kind::constant: return value;
    }
    return value;
  }

  std::string name() const {
    switch (kind) {
    case Kind::sqrt_eps: return "sqrt_eps";
    case Kind::sqrt_2eps: return "sqrt_2eps";
    case Kind::constant: return "constant";
    }
    return "constant";
  }
};

/// Product ||x||_{L^4} * ||x||_{L^{4/3}} on (0,1), i.e. (1/5)^{1/4} (3/7)^{3/4}.
inline const double kMomentNormProduct = std::pow(0.2, 0.25) * std::pow(3.0 / 7.0, 0.75);

struct A1Verdict {
  bool satisfied = false;
  std::string explanation;
};

/**
 * Admissibility for exponential stabilization of the penalized problem:
 * r^2 < 3 eps and alpha/nu <= 2 (3 eps - r^2) / (3 eps). Equality in the
 * second condition counts as admissible.
 */
inline A1Verdict check_a1(const ModelParams &p) {
  if (!(p.nu > 0.0)) throw ParameterError("check_a1: nu must be positive");
  if (!(p.epsilon > 0.0)) throw ParameterError("check_a1: epsilon must be positive");

  const double r2 = p.r * p.r;
  const double three_eps = 3.0 * p.epsilon;
  const double ratio = p.alpha / p.nu;
  const double bound = 2.0 * (three_eps - r2) / three_eps;

  std::ostringstream os;
  os.precision(6);
  bool ok = true;
  if (!(r2 < three_eps)) {
    ok = false;
    os << "r^2 < 3*epsilon fails: " << r2 << " >= " << three_eps << "; ";
  }
  if (!(ratio <= bound)) {
    ok = false;
    os << "alpha/nu <= 2(3eps - r^2)/(3eps) fails: " << ratio << " > " << bound << "; ";
  }
  if (ok) {
    os << "r^2 = " << r2 << " < " << three_eps << " and alpha/nu = " << ratio << " <= " << bound;
  }
  std::string text = os.str();
  if (!ok && text.size() >= 2) text.resize(text.size() - 2);
  return {ok, text};
}

/// 2 nu - 2 nu r^2 / (3 eps) - alpha, without any sign check.
inline double gamma_bound(const ModelParams &p) {
  return 2.0 * p.nu - 2.0 * p.nu * p.r * p.r / (3.0 * p.epsilon) - p.alpha;
}

/// Largest admissible decay rate of the penalized energy. Throws when no
/// positive rate exists.
inline double gamma_max(const ModelParams &p) {
  p.validate();
  const double g = gamma_bound(p);
  if (!(g > 0.0)) {
    throw ParameterError("no admissible decay rate: 2nu - 2nu r^2/(3eps) - alpha = " +
                         std::to_string(g));
  }
  return g;
}

/// beta = min{2nu - gamma - 2nu r^2/(3eps) - alpha, nu/eps} for 0 < gamma <= gamma_max.
/// At gamma == gamma_max the first argument is exactly zero.
inline double beta(const ModelParams &p, double gamma) {
  const double gmax = gamma_max(p);
  // a few ulps of slack so that beta(p, gamma_max(p)) is accepted
  if (!(gamma > 0.0) || gamma > gmax * (1.0 + 4.0 * std::numeric_limits<double>::epsilon())) {
    throw ParameterError("beta: gamma must lie in (0, " + std::to_string(gmax) + "], got " +
                         std::to_string(gamma));
  }
  const double first = std::max(0.0, gmax - gamma);
  return std::min(first, p.nu / p.epsilon);
}

struct DirichletRates {
  double gamma_max = 0.0;
  double beta_star = 0.0;
  double r_max = 0.0;
};

/// min{1/||x||_4 ||x||_{4/3}, sqrt(6)}
inline double r_max_dirichlet() { return std::min(1.0 / kMomentNormProduct, std::sqrt(6.0)); }

/**
 * Rates for the unpenalized Dirichlet feedback problem. beta_star is
 * evaluated at @p gamma; when omitted, half of the maximal rate is used
 * (at the maximal rate the first argument of the min vanishes).
 */
inline DirichletRates dirichlet_rate_bounds(const ModelParams &p,
                                            std::optional<double> gamma = std::nullopt) {
  p.validate();
  const double rmax = r_max_dirichlet();
  if (!(p.r < rmax)) {
    throw ParameterError("dirichlet_rate_bounds: r = " + std::to_string(p.r) +
                         " must be below " + std::to_string(rmax));
  }
  const double ratio_bound = (6.0 - p.r * p.r) / (p.r + 3.0);
  if (!(p.alpha / p.nu <= ratio_bound)) {
    throw ParameterError("dirichlet_rate_bounds: alpha/nu = " + std::to_string(p.alpha / p.nu) +
                         " exceeds (6 - r^2)/(r + 3) = " + std::to_string(ratio_bound));
  }
  const double coupling = (p.r * p.alpha + p.r * p.r * p.nu) / 3.0;
  const double gmax = 3.0 * (2.0 * p.nu - p.alpha - coupling) / (p.r + 3.0);
  const double g = gamma.value_or(0.5 * gmax);
  if (g < 0.0 || g > gmax) {
    throw ParameterError("dirichlet_rate_bounds: gamma outside [0, gamma_max]");
  }
  const double first = 2.0 * p.nu - p.alpha - g * (p.r + 3.0) / 3.0 - coupling;
  const double second = p.delta * (1.0 - p.r * kMomentNormProduct);
  return {gmax, std::min(first, second), rmax};
}

/// Admissibility verdict plus every rate/constant that can be computed for the
/// parameter set. Quantities that do not exist are left empty.
struct RateReport {
  bool a1_satisfied = false;
  std::string a1_explanation;
  double gamma_bound = 0.0; ///< 2nu - 2nu r^2/(3eps) - alpha, possibly <= 0
  bool gamma_positive = false;
  std::optional<double> gamma_max;
  std::optional<double> beta; ///< at gamma = gamma_max / 2
  std::optional<double> gamma_dirichlet_max;
  std::optional<double> beta_star;
  double r_max_dirichlet = 0.0;
};

inline RateReport rate_report(const ModelParams &p) {
  p.validate();
  RateReport rep;
  const auto a1 = check_a1(p);
  rep.a1_satisfied = a1.satisfied;
  rep.a1_explanation = a1.explanation;
  rep.gamma_bound = gamma_bound(p);
  rep.gamma_positive = rep.gamma_bound > 0.0;
  if (rep.gamma_positive) {
    rep.gamma_max = rep.gamma_bound;
    rep.beta = beta(p, 0.5 * rep.gamma_bound);
  }
  rep.r_max_dirichlet = r_max_dirichlet();
  try {
    const auto d = dirichlet_rate_bounds(p);
    rep.gamma_dirichlet_max = d.gamma_max;
    rep.beta_star = d.beta_star;
  } catch (const ParameterError &) {
    // inadmissible for the Dirichlet analysis; leave empty
  }
  return rep;
}

} // namespace penalty_stab
