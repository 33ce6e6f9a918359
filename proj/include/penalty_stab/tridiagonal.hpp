#pragma once

/**
 * @file tridiagonal.hpp
 * @brief Symmetric tridiagonal storage, the Thomas algorithm and the
 * Sherman-Morrison correction for a tridiagonal matrix plus one dense row.
 */

#include <cassert>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace penalty_stab {

using Vector = std::vector<double>;

/// Base for every failure of a linear solve.
class LinearSolveError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Zero (or numerically zero) pivot in the tridiagonal elimination.
class SingularCoreError : public LinearSolveError {
public:
  explicit SingularCoreError(std::size_t row)
      : LinearSolveError("singular tridiagonal core: vanishing pivot at row " +
                         std::to_string(row)),
        row_(row) {}
  std::size_t row() const noexcept { return row_; }

private:
  std::size_t row_;
};

/// The rank-one update makes the matrix singular: 1 + v^T core^{-1} u = 0.
class SingularUpdateError : public LinearSolveError {
public:
  explicit SingularUpdateError(double denominator)
      : LinearSolveError("singular rank-one update: 1 + v^T A^{-1} u = " +
                         std::to_string(denominator)),
        denominator_(denominator) {}
  double denominator() const noexcept { return denominator_; }

private:
  double denominator_;
};

/**
 * @brief Symmetric tridiagonal matrix. diag has n entries, off has n-1,
 * off[i] couples rows i and i+1.
 */
struct SymTridiagonal {
  Vector diag;
  Vector off;

  SymTridiagonal() = default;
  explicit SymTridiagonal(std::size_t n) : diag(n, 0.0), off(n > 0 ? n - 1 : 0, 0.0) {}

  std::size_t size() const noexcept { return diag.size(); }

  /// y = A x
  Vector apply(std::span<const double> x) const {
    const std::size_t n = size();
    assert(x.size() == n);
    Vector y(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double s = diag[i] * x[i];
      if (i > 0) s += off[i - 1] * x[i - 1];
      if (i + 1 < n) s += off[i] * x[i + 1];
      y[i] = s;
    }
    return y;
  }

  /// x^T A x
  double quadratic_form(std::span<const double> x) const {
    const std::size_t n = size();
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      s += diag[i] * x[i] * x[i];
      if (i + 1 < n) s += 2.0 * off[i] * x[i] * x[i + 1];
    }
    return s;
  }

  /// this += scale * other
  SymTridiagonal &add_scaled(const SymTridiagonal &other, double scale) {
    assert(other.size() == size());
    for (std::size_t i = 0; i < diag.size(); ++i) diag[i] += scale * other.diag[i];
    for (std::size_t i = 0; i < off.size(); ++i) off[i] += scale * other.off[i];
    return *this;
  }

  SymTridiagonal scaled(double s) const {
    SymTridiagonal out = *this;
    for (auto &d : out.diag) d *= s;
    for (auto &o : out.off) o *= s;
    return out;
  }

  /// Dense row-major copy, for tests and diagnostics.
  std::vector<Vector> to_dense() const {
    const std::size_t n = size();
    std::vector<Vector> a(n, Vector(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      a[i][i] = diag[i];
      if (i + 1 < n) a[i][i + 1] = a[i + 1][i] = off[i];
    }
    return a;
  }
};

/**
 * @brief Factored symmetric tridiagonal matrix, reusable for several
 * right-hand sides. No pivoting; a pivot that is zero relative to the
 * magnitude of its row raises SingularCoreError.
 */
class ThomasFactor {
public:
  explicit ThomasFactor(const SymTridiagonal &a) : off_(a.off), pivot_(a.size()) {
    const std::size_t n = a.size();
    if (n == 0) return;
    constexpr double tiny = 64.0 * std::numeric_limits<double>::epsilon();
    for (std::size_t i = 0; i < n; ++i) {
      double p = a.diag[i];
      double row_scale = std::abs(a.diag[i]);
      if (i > 0) {
        p -= off_[i - 1] * off_[i - 1] / pivot_[i - 1];
        row_scale += std::abs(off_[i - 1]);
      }
      if (i + 1 < n) row_scale += std::abs(off_[i]);
      if (!std::isfinite(p) || std::abs(p) <= tiny * row_scale || row_scale == 0.0) {
        throw SingularCoreError(i);
      }
      pivot_[i] = p;
    }
  }

  Vector solve(std::span<const double> rhs) const {
    const std::size_t n = pivot_.size();
    assert(rhs.size() == n);
    Vector x(rhs.begin(), rhs.end());
    for (std::size_t i = 1; i < n; ++i) x[i] -= off_[i - 1] / pivot_[i - 1] * x[i - 1];
    for (std::size_t i = n; i-- > 0;) {
      if (i + 1 < n) x[i] -= off_[i] * x[i + 1];
      x[i] /= pivot_[i];
    }
    return x;
  }

private:
  Vector off_;
  Vector pivot_;
};

inline Vector thomas_solve(const SymTridiagonal &a, std::span<const double> rhs) {
  return ThomasFactor(a).solve(rhs);
}

/// Rank-one term u v^T where u is the unit vector of row @c row.
struct RowUpdate {
  std::size_t row = 0;
  Vector values; ///< v; empty means no update

  bool empty() const noexcept { return values.empty(); }
};

/**
 * Solve (core + e_row v^T) x = rhs.
 *
 * Two Thomas solves against the same factorization (rhs and e_row), then
 * x = z - (v.z)/(1 + v.q) q.
 */
inline Vector solve_structured(const SymTridiagonal &core, const RowUpdate &update,
                               std::span<const double> rhs) {
  const ThomasFactor factor(core);
  Vector z = factor.solve(rhs);
  if (update.empty()) return z;

  const std::size_t n = core.size();
  assert(update.values.size() == n && update.row < n);
  Vector unit(n, 0.0);
  unit[update.row] = 1.0;
  const Vector q = factor.solve(unit);

  double vz = 0.0, vq = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    vz += update.values[i] * z[i];
    vq += update.values[i] * q[i];
    scale += std::abs(update.values[i] * q[i]);
  }
  const double denom = 1.0 + vq;
  constexpr double tiny = 64.0 * std::numeric_limits<double>::epsilon();
  if (!std::isfinite(denom) || std::abs(denom) <= tiny * (1.0 + scale)) {
    throw SingularUpdateError(denom);
  }
  const double coef = vz / denom;
  for (std::size_t i = 0; i < n; ++i) z[i] -= coef * q[i];
  return z;
}

} // namespace penalty_stab
