#include "oracles.hpp"
#include "penalty_stab/mesh_fem.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

namespace ps = penalty_stab;

namespace {

ps::MeshPartition graded_mesh() {
  return ps::MeshPartition({0.0, 0.07, 0.2, 0.31, 0.5, 0.56, 0.74, 0.9, 1.0});
}

ps::Vector random_state(std::size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  ps::Vector y(n);
  for (auto &v : y) v = u(rng);
  return y;
}

} // namespace

TEST(Mesh, UniformSizes) {
  const auto m2 = ps::make_uniform_mesh(2);
  EXPECT_EQ(m2.nodes(), (std::vector<double>{0.0, 0.5, 1.0}));
  EXPECT_DOUBLE_EQ(m2.h(), 0.5);
  const auto m8 = ps::make_uniform_mesh(8);
  EXPECT_DOUBLE_EQ(m8.h(), 0.125);
  EXPECT_EQ(m8.n_dofs(), 8u);
  EXPECT_DOUBLE_EQ(m8.dof_coordinate(7), 1.0);
}

TEST(Mesh, RejectsBadPartitions) {
  EXPECT_THROW(ps::make_uniform_mesh(1), ps::MeshError);
  EXPECT_THROW(ps::MeshPartition({0.0, 1.0}), ps::MeshError);
  EXPECT_THROW(ps::MeshPartition({0.0, 0.6, 0.4, 1.0}), ps::MeshError);
  EXPECT_THROW(ps::MeshPartition({0.1, 0.5, 1.0}), ps::MeshError);
  EXPECT_THROW(ps::MeshPartition({0.0, 0.5, 0.9}), ps::MeshError);
}

TEST(Assembly, MatricesMatchQuadratureOracle) {
  const auto mesh = graded_mesh();
  const auto sys = ps::assemble(mesh);
  const auto &nodes = mesh.nodes();
  const auto mass = sys.mass.to_dense();
  const auto stiff = sys.stiffness.to_dense();
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    for (std::size_t j = 1; j < nodes.size(); ++j) {
      const double m = oracle::integrate_on_mesh(
          nodes, [&](double x) { return oracle::hat(nodes, i, x) * oracle::hat(nodes, j, x); });
      const double k = oracle::integrate_on_mesh(nodes, [&](double x) {
        return oracle::hat_dx(nodes, i, x) * oracle::hat_dx(nodes, j, x);
      });
      EXPECT_NEAR(mass[i - 1][j - 1], m, 1e-12);
      EXPECT_NEAR(stiff[i - 1][j - 1], k, 1e-12 * (1.0 + std::abs(k)));
    }
    const double w = oracle::integrate_on_mesh(nodes, [&](double x) { return x * oracle::hat(nodes, i, x); });
    EXPECT_NEAR(sys.moment[i - 1], w, 1e-12);
  }
  EXPECT_EQ(sys.boundary_index, nodes.size() - 2);
}

TEST(Assembly, MomentSumOnUniformMeshes) {
  for (std::size_t n : {2u, 3u, 8u, 64u, 1000u, 2048u}) {
    const auto sys = ps::assemble(ps::make_uniform_mesh(n));
    double s = 0.0;
    for (double w : sys.moment) s += w;
    const double h = 1.0 / static_cast<double>(n);
    EXPECT_NEAR(s, 0.5 - h * h / 6.0, 8.0 * std::numeric_limits<double>::epsilon()) << n;
  }
}

TEST(Assembly, UnpinnedStiffnessAnnihilatesConstants) {
  const auto full = ps::assemble_unpinned(graded_mesh());
  const ps::Vector ones(full.stiffness.size(), 1.0);
  for (double v : full.stiffness.apply(ones)) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(Assembly, PinnedMatricesArePositiveDefinite) {
  const auto sys = ps::assemble(graded_mesh());
  for (unsigned seed = 0; seed < 20; ++seed) {
    const auto y = random_state(sys.size(), seed);
    EXPECT_GT(sys.mass.quadratic_form(y), 0.0);
    EXPECT_GT(sys.stiffness.quadratic_form(y), 0.0);
  }
  EXPECT_NO_THROW(ps::ThomasFactor{sys.mass});
  EXPECT_NO_THROW(ps::ThomasFactor{sys.stiffness});
}

TEST(Cubic, ZeroState) {
  const auto mesh = ps::make_uniform_mesh(6);
  const ps::Vector y(6, 0.0);
  for (double v : ps::cubic_term(mesh, y)) EXPECT_EQ(v, 0.0);
  const auto j = ps::cubic_jacobian(mesh, y);
  for (double v : j.diag) EXPECT_EQ(v, 0.0);
  for (double v : j.off) EXPECT_EQ(v, 0.0);
}

TEST(Cubic, MatchesQuadratureOracle) {
  const auto mesh = graded_mesh();
  const auto &nodes = mesh.nodes();
  const auto y = random_state(mesh.n_dofs(), 42);
  const auto f = ps::cubic_term(mesh, y);
  const auto jac = ps::cubic_jacobian(mesh, y).to_dense();
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    const double ref = oracle::integrate_on_mesh(nodes, [&](double x) {
      const double v = oracle::p1_value(nodes, y, x);
      return v * v * v * oracle::hat(nodes, i, x);
    });
    EXPECT_NEAR(f[i - 1], ref, 1e-13 * (1.0 + std::abs(ref)));
    for (std::size_t j = 1; j < nodes.size(); ++j) {
      const double rj = oracle::integrate_on_mesh(nodes, [&](double x) {
        const double v = oracle::p1_value(nodes, y, x);
        return 3.0 * v * v * oracle::hat(nodes, i, x) * oracle::hat(nodes, j, x);
      });
      EXPECT_NEAR(jac[i - 1][j - 1], rj, 1e-12);
    }
  }
}

TEST(Cubic, UniformQuarterMesh) {
  const auto mesh = ps::make_uniform_mesh(4);
  const auto y = random_state(4, 9);
  const auto f = ps::cubic_term(mesh, y);
  for (std::size_t i = 1; i <= 4; ++i) {
    const double ref = oracle::integrate_on_mesh(mesh.nodes(), [&](double x) {
      const double v = oracle::p1_value(mesh.nodes(), y, x);
      return v * v * v * oracle::hat(mesh.nodes(), i, x);
    });
    EXPECT_NEAR(f[i - 1], ref, 1e-13 * std::abs(ref) + 1e-16);
  }
}

TEST(Cubic, ConstantStateGivesScaledHatIntegrals) {
  const auto mesh = ps::make_uniform_mesh(5);
  const double c = 1.7, h = 0.2;
  const ps::Vector y(5, c);
  const auto f = ps::cubic_term(mesh, y);
  // Y is c everywhere except on the first element, where it ramps from 0
  // interior node i >= 2 sees c on its whole support: c^3 h
  for (std::size_t i = 1; i < 4; ++i) EXPECT_NEAR(f[i], c * c * c * h, 1e-14);
  EXPECT_NEAR(f[4], c * c * c * h / 2.0, 1e-14);
}

TEST(Cubic, UnitStateJacobianIsThreeMass) {
  const auto mesh = ps::make_uniform_mesh(7);
  const auto sys = ps::assemble(mesh);
  ps::Vector y(7, 1.0);
  const auto j = ps::cubic_jacobian(mesh, y);
  // the first element carries the ramp from the pinned node, so compare rows >= 1
  for (std::size_t i = 1; i < 7; ++i) EXPECT_NEAR(j.diag[i], 3.0 * sys.mass.diag[i], 1e-14);
  for (std::size_t i = 1; i < 6; ++i) EXPECT_NEAR(j.off[i], 3.0 * sys.mass.off[i], 1e-14);
}

TEST(Cubic, OddInState) {
  const auto mesh = graded_mesh();
  auto y = random_state(mesh.n_dofs(), 3);
  const auto f = ps::cubic_term(mesh, y);
  for (auto &v : y) v = -v;
  const auto g = ps::cubic_term(mesh, y);
  for (std::size_t i = 0; i < f.size(); ++i) EXPECT_EQ(f[i], -g[i]);
}

TEST(Cubic, JacobianMatchesForwardDifferencesAtFirstOrder) {
  const auto mesh = graded_mesh();
  const auto y = random_state(mesh.n_dofs(), 17);
  const auto dir = random_state(mesh.n_dofs(), 18);
  const auto jdir = ps::cubic_jacobian(mesh, y).apply(dir);
  const auto f0 = ps::cubic_term(mesh, y);
  std::vector<double> errs;
  for (double tau : {1e-2, 5e-3, 2.5e-3, 1.25e-3}) {
    ps::Vector yp = y;
    for (std::size_t i = 0; i < yp.size(); ++i) yp[i] += tau * dir[i];
    const auto f1 = ps::cubic_term(mesh, yp);
    double e = 0.0;
    for (std::size_t i = 0; i < f1.size(); ++i) {
      e = std::max(e, std::abs((f1[i] - f0[i]) / tau - jdir[i]));
    }
    errs.push_back(e);
  }
  for (std::size_t i = 1; i < errs.size(); ++i) {
    EXPECT_NEAR(std::log2(errs[i - 1] / errs[i]), 1.0, 0.1);
  }
}

TEST(Projection, ZeroFunction) {
  const auto mesh = ps::make_uniform_mesh(8);
  for (auto mode : {ps::ProjectionMode::l2, ps::ProjectionMode::interpolation}) {
    const auto y = ps::project_initial(mesh, [](double) { return 0.0; }, mode);
    for (std::size_t i = 0; i < y.size(); ++i) EXPECT_EQ(y[i], 0.0);
  }
}

TEST(Projection, ReproducesDiscreteFunctions) {
  const auto mesh = graded_mesh();
  for (auto mode : {ps::ProjectionMode::l2, ps::ProjectionMode::interpolation}) {
    const auto y = ps::project_initial(mesh, [](double x) { return x; }, mode);
    for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y[i], mesh.dof_coordinate(i), 1e-14);
  }
}

TEST(Projection, L2MatchesDenseOracle) {
  const auto mesh = ps::make_uniform_mesh(8);
  const auto &nodes = mesh.nodes();
  auto f = [](double x) { return std::sin(std::numbers::pi * x); };
  const auto y = ps::project_initial(mesh, f, ps::ProjectionMode::l2);
  const std::size_t n = mesh.n_dofs();
  oracle::Mat m(n, oracle::Vec(n));
  oracle::Vec b(n);
  for (std::size_t i = 1; i <= n; ++i) {
    b[i - 1] = oracle::integrate_on_mesh(nodes, [&](double x) { return f(x) * oracle::hat(nodes, i, x); });
    for (std::size_t j = 1; j <= n; ++j) {
      m[i - 1][j - 1] = oracle::integrate_on_mesh(
          nodes, [&](double x) { return oracle::hat(nodes, i, x) * oracle::hat(nodes, j, x); });
    }
  }
  const auto ref = oracle::dense_solve(m, b);
  double diff_interp = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    // 3-point Gauss is not exact for sin; the gap is O(h^6)
    EXPECT_NEAR(y[i], ref[i], 1e-7);
    diff_interp = std::max(diff_interp, std::abs(y[i] - f(mesh.dof_coordinate(i))));
  }
  EXPECT_GT(diff_interp, 1e-4);
  EXPECT_LT(diff_interp, 0.1);
}

TEST(Norms, ZeroState) {
  const auto sys = ps::assemble(ps::make_uniform_mesh(8));
  const auto n = ps::norms(sys, ps::Vector(8, 0.0));
  EXPECT_EQ(n.l2, 0.0);
  EXPECT_EQ(n.l_inf, 0.0);
  EXPECT_EQ(n.l4, 0.0);
  EXPECT_EQ(n.h1_semi, 0.0);
}

TEST(Norms, InterpolantOfIdentity) {
  for (std::size_t n : {2u, 8u, 100u, 1024u}) {
    const auto sys = ps::assemble(ps::make_uniform_mesh(n));
    const auto y = ps::project_initial(sys, [](double x) { return x; },
                                       ps::ProjectionMode::interpolation);
    const auto nr = ps::norms(sys, y);
    EXPECT_NEAR(nr.l2, 1.0 / std::sqrt(3.0), 1e-14) << n;
    EXPECT_NEAR(nr.l_inf, 1.0, 0.0);
    EXPECT_NEAR(nr.l4, std::pow(0.2, 0.25), 1e-14);
    EXPECT_NEAR(nr.h1_semi, 1.0, 1e-12);
  }
}

TEST(Norms, MatchQuadratureOracle) {
  const auto mesh = graded_mesh();
  const auto sys = ps::assemble(mesh);
  const auto y = random_state(mesh.n_dofs(), 23);
  const auto &nodes = mesh.nodes();
  const auto nr = ps::norms(sys, y);
  const double l2 = std::sqrt(oracle::integrate_on_mesh(nodes, [&](double x) {
    const double v = oracle::p1_value(nodes, y, x);
    return v * v;
  }));
  const double l4 = std::pow(oracle::integrate_on_mesh(nodes, [&](double x) {
    const double v = oracle::p1_value(nodes, y, x);
    return v * v * v * v;
  }), 0.25);
  const double h1 = std::sqrt(oracle::integrate_on_mesh(nodes, [&](double x) {
    const double v = oracle::p1_dx(nodes, y, x);
    return v * v;
  }));
  EXPECT_NEAR(nr.l2, l2, 1e-12);
  EXPECT_NEAR(nr.l4, l4, 1e-12);
  EXPECT_NEAR(nr.h1_semi, h1, 1e-12);
}

TEST(Norms, SizeMismatchThrows) {
  const auto sys = ps::assemble(ps::make_uniform_mesh(8));
  EXPECT_THROW(ps::norms(sys, ps::Vector(7, 0.0)), ps::MeshError);
}

TEST(StateVector, EvaluatesPiecewiseLinear) {
  const auto mesh = graded_mesh();
  const ps::StateVector y(random_state(mesh.n_dofs(), 1));
  for (double x : {0.0, 0.03, 0.07, 0.4, 0.74, 0.95, 1.0}) {
    EXPECT_NEAR(y.evaluate(mesh, x), oracle::p1_value(mesh.nodes(), y.coefficients, x), 1e-14);
  }
}
