#include "oracles.hpp"
#include "penalty_stab/tridiagonal.hpp"

#include <gtest/gtest.h>

#include <random>

namespace ps = penalty_stab;

namespace {

ps::SymTridiagonal random_core(std::mt19937 &rng, std::size_t n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ps::SymTridiagonal a(n);
  for (auto &o : a.off) o = u(rng);
  // diagonally dominant keeps the unpivoted elimination stable
  for (std::size_t i = 0; i < n; ++i) a.diag[i] = (u(rng) < 0 ? -1.0 : 1.0) * (3.5 + u(rng));
  return a;
}

double rel_error(const ps::Vector &x, const ps::Vector &ref) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    num += (x[i] - ref[i]) * (x[i] - ref[i]);
    den += ref[i] * ref[i];
  }
  return std::sqrt(num / den);
}

} // namespace

TEST(Thomas, IdentityReturnsRhs) {
  ps::SymTridiagonal a(5);
  for (auto &d : a.diag) d = 1.0;
  const ps::Vector b{1, -2, 3, -4, 5};
  EXPECT_EQ(ps::thomas_solve(a, b), b);
  EXPECT_EQ(ps::solve_structured(a, {}, b), b);
}

TEST(Thomas, ApplyInverts) {
  std::mt19937 rng(7);
  const auto a = random_core(rng, 12);
  ps::Vector b(12);
  for (std::size_t i = 0; i < b.size(); ++i) b[i] = std::sin(1.0 + i);
  const auto x = ps::thomas_solve(a, b);
  EXPECT_LT(rel_error(a.apply(x), b), 1e-14);
}

TEST(Structured, MatchesDenseEliminationOnRandomSystems) {
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<std::size_t> size(2, 16);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = size(rng);
    const auto core = random_core(rng, n);
    ps::RowUpdate upd;
    upd.row = n - 1;
    upd.values.resize(n);
    for (auto &v : upd.values) v = 0.5 * u(rng);
    ps::Vector b(n);
    for (auto &v : b) v = u(rng);

    auto dense = core.to_dense();
    for (std::size_t j = 0; j < n; ++j) dense[upd.row][j] += upd.values[j];
    const auto ref = oracle::dense_solve(dense, b);
    const auto x = ps::solve_structured(core, upd, b);
    worst = std::max(worst, rel_error(x, ref));
  }
  EXPECT_LE(worst, 1e-12);
}

TEST(Structured, UpdateOnInteriorRow) {
  std::mt19937 rng(3);
  const auto core = random_core(rng, 8);
  ps::RowUpdate upd{3, ps::Vector{0.1, -0.2, 0.3, 0.4, -0.5, 0.6, 0.7, -0.8}};
  const ps::Vector b{1, 2, 3, 4, 5, 6, 7, 8};
  auto dense = core.to_dense();
  for (std::size_t j = 0; j < 8; ++j) dense[3][j] += upd.values[j];
  EXPECT_LT(rel_error(ps::solve_structured(core, upd, b), oracle::dense_solve(dense, b)), 1e-13);
}

TEST(Structured, EngineeredSingularUpdate) {
  std::mt19937 rng(11);
  const std::size_t n = 8;
  const auto core = random_core(rng, n);
  // q = core^{-1} e_N from the dense oracle; pick v with 1 + v.q = 0
  oracle::Vec e(n, 0.0);
  e[n - 1] = 1.0;
  const auto q = oracle::dense_solve(core.to_dense(), e);
  ps::Vector v(n);
  double vq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = 1.0 + 0.1 * static_cast<double>(i);
    vq += v[i] * q[i];
  }
  for (auto &x : v) x *= -1.0 / vq;
  const ps::Vector b(n, 1.0);
  try {
    ps::solve_structured(core, {n - 1, v}, b);
    FAIL() << "expected SingularUpdateError";
  } catch (const ps::SingularUpdateError &err) {
    EXPECT_LT(std::abs(err.denominator()), 1e-12);
  }
}

TEST(Structured, SingularCoreDetected) {
  ps::SymTridiagonal a(4);
  a.diag = {1.0, 1.0, 1.0, 1.0};
  a.off = {1.0, 0.0, 0.0}; // rows 0 and 1 identical
  const ps::Vector b(4, 1.0);
  try {
    ps::thomas_solve(a, b);
    FAIL() << "expected SingularCoreError";
  } catch (const ps::SingularCoreError &err) {
    EXPECT_EQ(err.row(), 1u);
  }
  EXPECT_THROW(ps::solve_structured(a, {3, ps::Vector(4, 0.1)}, b), ps::LinearSolveError);
}

TEST(SymTridiagonal, QuadraticFormMatchesApply) {
  std::mt19937 rng(5);
  const auto a = random_core(rng, 9);
  ps::Vector x(9);
  for (std::size_t i = 0; i < 9; ++i) x[i] = std::cos(0.3 * i);
  const auto ax = a.apply(x);
  double s = 0.0;
  for (std::size_t i = 0; i < 9; ++i) s += x[i] * ax[i];
  EXPECT_NEAR(a.quadratic_form(x), s, 1e-13);
}
