#include "pmpnet/problems.hpp"

#include <cmath>

#include <gtest/gtest.h>

#include "pmpnet/diff.hpp"
#include "test_util.hpp"

namespace pmpnet {
namespace {

using testing::Gen;

const ProblemId kAll[] = {ProblemId::kOcp1, ProblemId::kOcp2, ProblemId::kOcp3};

TEST(MakeProblem, Ocp1) {
  const auto p = make_problem(ProblemId::kOcp1);
  EXPECT_EQ(p.horizon_T, 1.0);
  EXPECT_EQ(p.lambda_T, 0.0);
  ASSERT_EQ(p.x0_train.size(), 21u);
  EXPECT_EQ(p.x0_train.front(), 0.0);
  EXPECT_EQ(p.x0_train.back(), 1.0);
  EXPECT_DOUBLE_EQ(p.x0_train[1], 0.05);
  EXPECT_EQ(p.running_cost(2.0, 3.0, 0.5), 13.0);
  EXPECT_EQ(p.dynamics(2.0, 3.0, 0.5), 3.0);
  EXPECT_EQ(p.terminal_cost(7.0), 0.0);
}

TEST(MakeProblem, Ocp2) {
  const auto p = make_problem(ProblemId::kOcp2);
  EXPECT_EQ(p.horizon_T, 2.0);
  EXPECT_EQ(p.lambda_T, -1.0);
  EXPECT_EQ(p.x0_train.size(), 21u);
  EXPECT_EQ(p.running_cost(0.3, 0.4, 1.0), 0.0);
  // 2.5 (−x + ux − u²) at x = 1, u = 0.5: 2.5 (−1 + 0.5 − 0.25).
  EXPECT_DOUBLE_EQ(p.dynamics(1.0, 0.5, 0.0), -1.875);
  EXPECT_EQ(p.terminal_cost(0.7), -0.7);
}

TEST(MakeProblem, Ocp3) {
  const auto p = make_problem(ProblemId::kOcp3);
  EXPECT_EQ(p.horizon_T, 8.0);
  EXPECT_EQ(p.lambda_T, 0.0);
  ASSERT_EQ(p.x0_train.size(), 41u);
  for (std::size_t i = 0; i < 41; ++i) EXPECT_EQ(p.x0_train[i], static_cast<double>(i));
  EXPECT_TRUE(p.has_dg_dt);
  EXPECT_EQ(ProblemDef::demand(0.0), 30.0);
  EXPECT_EQ(ProblemDef::demand(2.0), 54.0);
  EXPECT_EQ(ProblemDef::demand(8.0), 30.0);
  EXPECT_EQ(p.running_cost(15.0, 30.0, 3.0), 0.0);
  EXPECT_EQ(p.running_cost(17.0, 27.0, 3.0), 6.5);
  EXPECT_EQ(p.dynamics(0.0, 40.0, 2.0), -14.0);
  EXPECT_EQ(p.dg_dt(0.0, 0.0, 1.0), -ProblemDef::demand_rate(1.0));
}

TEST(MakeProblem, UnknownIdIsConfigError) {
  EXPECT_THROW(make_problem(0), ConfigError);
  EXPECT_THROW(make_problem(4), ConfigError);
  EXPECT_THROW(parse_problem_id("ocp9"), ConfigError);
  EXPECT_EQ(parse_problem_id("ocp2"), ProblemId::kOcp2);
  EXPECT_EQ(to_string(ProblemId::kOcp3), "ocp3");
}

TEST(MakeProblem, InitialConditionsIncreasingInsideHull) {
  for (auto id : kAll) {
    const auto p = make_problem(id);
    EXPECT_GT(p.horizon_T, 0.0);
    for (std::size_t i = 0; i + 1 < p.x0_train.size(); ++i)
      EXPECT_LT(p.x0_train[i], p.x0_train[i + 1]);
    for (double x0 : p.x0_train) EXPECT_TRUE(p.in_hull(x0));
    EXPECT_FALSE(p.in_hull(p.x0_max + 1e-9));
    EXPECT_FALSE(p.in_hull(p.x0_min - 1e-9));
  }
}

TEST(MakeProblem, TerminalCostateMatchesTerminalCostSlope) {
  Gen gen(11);
  for (auto id : kAll) {
    const auto p = make_problem(id);
    for (int k = 0; k < 100; ++k) EXPECT_EQ(p.dpsi_dx(gen.uniform(-50, 50)), p.lambda_T);
  }
}

TEST(Hamiltonian, CostateDerivativeIsDynamicsBitwise) {
  Gen gen(1);
  for (auto id : kAll) {
    const auto p = make_problem(id);
    for (int k = 0; k < 1000; ++k) {
      const double x = gen.uniform(-50, 50), u = gen.uniform(-50, 50);
      const double lam = gen.uniform(-50, 50), t = gen.time(p.horizon_T);
      const auto h = hamiltonian(p, x, u, lam, t);
      EXPECT_EQ(h.dH_dlambda, p.dynamics(x, u, t));
      EXPECT_EQ(h.value, p.running_cost(x, u, t) + lam * p.dynamics(x, u, t));
    }
  }
}

TEST(Hamiltonian, Ocp1WorkedExample) {
  const auto p = make_problem(ProblemId::kOcp1);
  const auto h = hamiltonian(p, 1.0, -1.0, 2.0, 0.3);
  EXPECT_EQ(h.value, 0.0);
  EXPECT_EQ(h.dH_dx, 2.0);
  EXPECT_EQ(h.dH_du, 0.0);
  EXPECT_EQ(h.dH_dlambda, -1.0);
}

// Every hand-written partial against forward-mode differentiation of the
// cost and dynamics templates.
TEST(Hamiltonian, PartialsMatchDuals) {
  using D = diff::Dual<2>;
  Gen gen(2);
  for (auto id : kAll) {
    const auto p = make_problem(id);
    for (int k = 0; k < 500; ++k) {
      const double x = gen.uniform(-40, 40), u = gen.uniform(-40, 40), t = gen.time(p.horizon_T);
      const D xd = D::seed(x, 0), ud = D::seed(u, 1);
      const D f = p.running_cost(xd, ud, t);
      const D g = p.dynamics(xd, ud, t);
      const D psi = p.terminal_cost(xd);
      const double tol = 1e-12 * (1.0 + std::abs(f.v));
      EXPECT_NEAR(p.df_dx(x, u, t), f.d[0], tol);
      EXPECT_NEAR(p.df_du(x, u, t), f.d[1], tol);
      EXPECT_NEAR(p.dg_dx(x, u, t), g.d[0], 1e-12 * (1.0 + std::abs(g.v)));
      EXPECT_NEAR(p.dg_du(x, u, t), g.d[1], 1e-12 * (1.0 + std::abs(g.v)));
      EXPECT_EQ(p.dpsi_dx(x), psi.d[0]);
    }
  }
}

TEST(Hamiltonian, TimePartialOfDynamicsMatchesFiniteDifference) {
  const auto p = make_problem(ProblemId::kOcp3);
  Gen gen(3);
  for (int k = 0; k < 100; ++k) {
    const double t = gen.uniform(0.01, 7.99), h = 1e-5;
    const double fd = (p.dynamics(1.0, 2.0, t + h) - p.dynamics(1.0, 2.0, t - h)) / (2 * h);
    EXPECT_NEAR(p.dg_dt(1.0, 2.0, t), fd, 1e-6);
  }
  EXPECT_EQ(make_problem(ProblemId::kOcp1).dg_dt(1.0, 2.0, 0.5), 0.0);
}

TEST(StationaryControl, ZeroesControlPartial) {
  Gen gen(4);
  for (auto id : kAll) {
    const auto p = make_problem(id);
    for (int k = 0; k < 1000; ++k) {
      const double x = gen.uniform(-40, 40), t = gen.time(p.horizon_T);
      double lam = gen.uniform(-40, 40);
      if (lam == 0.0) lam = 1.0;
      const auto u = p.stationary_control(x, lam, t);
      ASSERT_TRUE(u.has_value());
      EXPECT_NEAR(hamiltonian(p, x, *u, lam, t).dH_du, 0.0, 1e-12 * (1 + std::abs(lam * x)));
    }
  }
}

TEST(StationaryControl, Ocp2NeedsNonzeroCostate) {
  const auto p = make_problem(ProblemId::kOcp2);
  EXPECT_FALSE(p.stationary_control(0.5, 0.0, 1.0).has_value());
  EXPECT_EQ(*p.stationary_control(0.5, -1.0, 1.0), 0.25);
}

TEST(InventoryParams, DiscountEntersCostAndControl) {
  InventoryParams ip;
  ip.rho = 0.1;
  const auto p = make_problem(ProblemId::kOcp3, ip);
  EXPECT_DOUBLE_EQ(p.running_cost(16.0, 30.0, 2.0), std::exp(0.2) * 0.5);
  EXPECT_DOUBLE_EQ(*p.stationary_control(0.0, 2.0, 2.0), 30.0 - 2.0 * std::exp(-0.2));
}

}  // namespace
}  // namespace pmpnet
