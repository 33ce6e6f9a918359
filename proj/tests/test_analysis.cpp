#include "penalty_stab/analysis.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

namespace ps = penalty_stab;

namespace {

const ps::ModelParams kExampleOne{0.1, 0.13, 0.13, 0.1, 0.01};

ps::StateTrajectory example_one_run(std::size_t n) {
  const auto sys = ps::assemble(ps::make_uniform_mesh(n));
  const auto y0 = ps::project_initial(sys, [](double x) { return std::sin(std::numbers::pi * x); });
  return ps::simulate(kExampleOne, sys, y0, ps::TimeGrid::from_final_time(1.0, 1.0 / 1050.0));
}

ps::RunSetup short_setup() {
  ps::RunSetup s;
  s.initial = [](double x) { return std::sin(std::numbers::pi * x); };
  s.k = 0.01;
  s.n_steps = 20;
  return s;
}

} // namespace

TEST(DecayFit, ExactExponential) {
  std::vector<double> t, y;
  for (int i = 0; i <= 100; ++i) {
    t.push_back(0.05 * i);
    y.push_back(3.0 * std::exp(-1.5 * t.back()));
  }
  const auto fit = ps::fit_decay_rate(t, y, {0.5, 5.0});
  EXPECT_NEAR(fit.gamma_fit, 1.5, 1e-10);
  EXPECT_LT(fit.residual, 1e-12);
  EXPECT_EQ(fit.samples, 91u);
  EXPECT_FALSE(fit.trimmed);
}

TEST(DecayFit, ConstantNorm) {
  const std::vector<double> t{0, 1, 2, 3, 4}, y(5, 0.7);
  EXPECT_NEAR(ps::fit_decay_rate(t, y, {0.0, 4.0}).gamma_fit, 0.0, 1e-15);
}

TEST(DecayFit, ScaleInvariant) {
  std::vector<double> t, y, z;
  for (int i = 0; i <= 40; ++i) {
    t.push_back(0.1 * i);
    y.push_back(std::exp(-0.8 * t.back()) * (1.0 + 0.1 * std::sin(7.0 * t.back())));
    z.push_back(1e-3 * y.back());
  }
  EXPECT_NEAR(ps::fit_decay_rate(t, y, {0.0, 4.0}).gamma_fit,
              ps::fit_decay_rate(t, z, {0.0, 4.0}).gamma_fit, 1e-12);
}

TEST(DecayFit, TrimsUnderflowAndNeedsThreeSamples) {
  const std::vector<double> t{0, 1, 2, 3, 4}, y{1.0, 0.5, 0.25, 1e-20, 0.0};
  const auto fit = ps::fit_decay_rate(t, y, {0.0, 4.0});
  EXPECT_TRUE(fit.trimmed);
  EXPECT_EQ(fit.samples, 3u);
  EXPECT_NEAR(fit.gamma_fit, std::log(2.0), 1e-14);
  EXPECT_THROW(ps::fit_decay_rate(t, y, {2.0, 4.0}), ps::AnalysisError);
}

TEST(DecayFit, ExampleOneBeatsGammaMax) {
  const auto traj = example_one_run(32);
  ASSERT_FALSE(traj.failed);
  const auto fit = ps::fit_decay_rate(traj);
  EXPECT_GT(fit.gamma_fit, ps::gamma_max(kExampleOne));
  // linear-stability sanity: roughly nu pi^2 - alpha with the feedback on top
  EXPECT_GT(fit.gamma_fit, 0.5);
  EXPECT_LT(fit.gamma_fit, 2.0);
}

TEST(EnergyMonitor, ZeroTrajectoryPasses) {
  const std::vector<double> t{0, 1, 2}, y{0, 0, 0};
  EXPECT_TRUE(ps::energy_monitor(t, y, 1.0).passed);
}

TEST(EnergyMonitor, InflatedLastStateFails) {
  std::vector<double> t, y;
  for (int i = 0; i <= 10; ++i) {
    t.push_back(0.1 * i);
    y.push_back(std::exp(-2.0 * t.back()));
  }
  EXPECT_TRUE(ps::energy_monitor(t, y, 1.0).passed);
  y.back() *= 10.0;
  const auto v = ps::energy_monitor(t, y, 1.0);
  EXPECT_FALSE(v.passed);
  ASSERT_TRUE(v.first_violation.has_value());
  EXPECT_EQ(*v.first_violation, 10u);
  EXPECT_GT(v.worst_ratio, 1.0);
}

TEST(EnergyMonitor, ExampleOnePassesAtGammaMax) {
  const auto traj = example_one_run(32);
  const auto v = ps::energy_monitor(traj, ps::gamma_max(kExampleOne));
  EXPECT_TRUE(v.passed);
  EXPECT_LE(v.worst_ratio, 1.0 + 1e-12);
}

TEST(Restriction, IdentityOnSameMesh) {
  const auto mesh = ps::make_uniform_mesh(8);
  const ps::StateVector y(ps::Vector{1, 2, 3, 4, 5, 6, 7, 8});
  EXPECT_EQ(ps::restrict_to_coarse(y, mesh, mesh), y);
}

TEST(Restriction, PicksEveryNestedNode) {
  const auto fine = ps::make_uniform_mesh(2048), coarse = ps::make_uniform_mesh(8);
  ps::StateVector y(fine.n_dofs());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<double>(i);
  const auto r = ps::restrict_to_coarse(y, fine, coarse);
  for (std::size_t j = 0; j < 8; ++j) EXPECT_EQ(r[j], static_cast<double>(256 * (j + 1) - 1));
}

TEST(Restriction, ReproducesCoarseLinearFunctions) {
  const auto fine = ps::make_uniform_mesh(64), coarse = ps::make_uniform_mesh(8);
  const auto coarse_fn = ps::StateVector(ps::Vector{0.3, -1.0, 2.0, 0.5, 0.5, -0.7, 1.1, 0.2});
  ps::StateVector y(fine.n_dofs());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = coarse_fn.evaluate(coarse, fine.dof_coordinate(i));
  const auto r = ps::restrict_to_coarse(y, fine, coarse);
  for (std::size_t j = 0; j < 8; ++j) EXPECT_NEAR(r[j], coarse_fn[j], 1e-15);
}

TEST(Restriction, RejectsNonNestedMeshes) {
  const auto fine = ps::make_uniform_mesh(12), coarse = ps::make_uniform_mesh(8);
  EXPECT_THROW(ps::restrict_to_coarse(ps::StateVector(12), fine, coarse), ps::AnalysisError);
}

TEST(ErrorVsReference, IdenticalSolutions) {
  const auto fine = ps::make_uniform_mesh(32);
  const auto coarse = ps::assemble(ps::make_uniform_mesh(8));
  ps::StateVector f(32);
  for (std::size_t i = 0; i < 32; ++i) f[i] = std::sin(0.1 * i);
  const auto c = ps::restrict_to_coarse(f, fine, coarse.mesh);
  const auto e = ps::error_vs_reference(c, f, fine, coarse);
  EXPECT_EQ(e.l2, 0.0);
  EXPECT_EQ(e.linf, 0.0);
}

TEST(ErrorVsReference, SingleNodalBump) {
  const auto fine = ps::make_uniform_mesh(32);
  const auto coarse = ps::assemble(ps::make_uniform_mesh(8));
  ps::StateVector c(8);
  c[3] = 1.0;
  const auto e = ps::error_vs_reference(c, ps::StateVector(32), fine, coarse);
  EXPECT_DOUBLE_EQ(e.linf, 1.0);
  EXPECT_NEAR(e.l2, std::sqrt(2.0 * 0.125 / 3.0), 1e-15);
}

TEST(ObservedOrders, Basics) {
  const std::vector<double> hs{0.5, 0.25, 0.125};
  const auto o = ps::observed_orders(std::vector<double>{4e-4, 1e-4, 1e-4}, hs);
  EXPECT_FALSE(o[0].has_value());
  EXPECT_NEAR(*o[1], 2.0, 1e-14);
  EXPECT_NEAR(*o[2], 0.0, 1e-14);
}

TEST(ObservedOrders, ReferenceErrorPair) {
  const auto o = ps::observed_orders(std::vector<double>{8.3928e-06, 2.1253e-06},
                                     std::vector<double>{1.0 / 16, 1.0 / 32});
  EXPECT_NEAR(*o[1], 1.98, 0.005);
}

TEST(ObservedOrders, ZeroErrorGivesNaN) {
  const auto o = ps::observed_orders(std::vector<double>{1e-3, 0.0}, std::vector<double>{0.5, 0.25});
  ASSERT_TRUE(o[1].has_value());
  EXPECT_TRUE(std::isnan(*o[1]));
}

TEST(ObservedOrders, RejectsNonHalvingMeshes) {
  EXPECT_THROW(ps::observed_orders(std::vector<double>{1, 2}, std::vector<double>{0.5, 0.2}),
               ps::AnalysisError);
}

TEST(EpsilonStudy, IdenticalEpsilonsGiveZeroDiffs) {
  const std::vector<double> eps{0.01, 0.01};
  const auto rep = ps::epsilon_cauchy_study(short_setup(), ps::make_uniform_mesh(16), eps);
  ASSERT_EQ(rep.rows.size(), 2u);
  EXPECT_FALSE(rep.rows[0].diff_l2.has_value());
  EXPECT_EQ(*rep.rows[1].diff_l2, 0.0);
  EXPECT_EQ(*rep.rows[1].diff_linf, 0.0);
  EXPECT_EQ(*rep.rows[1].control_diff_linf, 0.0);
}

TEST(EpsilonStudy, RowsCarryGainAndControlPeak) {
  const std::vector<double> eps{1.0, 0.01};
  const auto rep = ps::epsilon_cauchy_study(short_setup(), ps::make_uniform_mesh(32), eps);
  EXPECT_DOUBLE_EQ(rep.rows[0].r, 1.0);
  EXPECT_DOUBLE_EQ(rep.rows[1].r, 0.1);
  EXPECT_NEAR(rep.rows[1].control_linf, 0.1 / std::numbers::pi, 1e-6);
  EXPECT_GE(rep.rows[1].state_l2_sup, rep.rows[1].state_l2);
}

TEST(EpsilonStudy, RejectsAscendingList) {
  const std::vector<double> eps{0.01, 0.1};
  EXPECT_THROW(ps::epsilon_cauchy_study(short_setup(), ps::make_uniform_mesh(8), eps),
               ps::AnalysisError);
}

TEST(Convergence, SmallStudyShape) {
  ps::ConvergenceSetup conv;
  conv.n_elements = {4, 8, 16};
  conv.reference_n = 64;
  const auto rep = ps::space_convergence_study(short_setup(), conv);
  ASSERT_EQ(rep.rows.size(), 3u);
  EXPECT_FALSE(rep.any_failed());
  EXPECT_FALSE(rep.rows[0].order_l2.has_value());
  EXPECT_FALSE(rep.rows[0].order_control.has_value());
  for (std::size_t i = 1; i < 3; ++i) {
    EXPECT_TRUE(rep.rows[i].order_l2.has_value());
    EXPECT_LT(rep.rows[i].error_l2, rep.rows[i - 1].error_l2);
  }
  EXPECT_DOUBLE_EQ(rep.rows[1].epsilon, 0.01 / 64.0);
  EXPECT_NE(rep.reference_description.find("64"), std::string::npos);
}

TEST(Convergence, RejectsNonNestedList) {
  ps::ConvergenceSetup conv;
  conv.n_elements = {4, 12};
  conv.reference_n = 48;
  EXPECT_THROW(ps::space_convergence_study(short_setup(), conv), ps::AnalysisError);
  conv.n_elements = {4, 8};
  conv.reference_n = 12;
  EXPECT_THROW(ps::space_convergence_study(short_setup(), conv), ps::AnalysisError);
}
