#include "pmpnet/oracle.hpp"

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace pmpnet {
namespace {

std::vector<double> nodes(double T, std::size_t n) { return detail::uniform_points(0.0, T, n); }

TEST(LqrClosedForm, KnownValues) {
  const auto p = make_problem(ProblemId::kOcp1);
  const auto r = lqr_closed_form(p, 1.0, nodes(1.0, 11));
  EXPECT_EQ(r.source, ReferenceSource::kClosedForm);
  EXPECT_NEAR(r.J_star, 0.7615941559557649, 1e-15);  // tanh(1)
  EXPECT_EQ(r.x_star.front(), 1.0);
  EXPECT_NEAR(r.x_star.back(), 1.0 / std::cosh(1.0), 1e-15);
  EXPECT_EQ(r.u_star.back(), 0.0);
  EXPECT_EQ(r.lambda_star.back(), 0.0);
  EXPECT_NEAR(r.u_star.front(), -std::tanh(1.0), 1e-15);
  for (std::size_t k = 0; k < r.times.size(); ++k) EXPECT_EQ(r.lambda_star[k], -2.0 * r.u_star[k]);
}

TEST(LqrClosedForm, OnlyForOcp1) {
  EXPECT_THROW(lqr_closed_form(make_problem(ProblemId::kOcp2), 1.0, nodes(2.0, 5)), ConfigError);
}

TEST(CostOf, TrapezoidOnClosedForm) {
  const auto p = make_problem(ProblemId::kOcp1);
  const auto r = lqr_closed_form(p, 0.8, nodes(1.0, 2001));
  EXPECT_NEAR(cost_of(p, r.x_star, r.u_star, r.times), r.J_star, 1e-7);
  EXPECT_THROW(cost_of(p, {1.0}, {1.0, 2.0}, {0.0, 1.0}), InputError);
  EXPECT_THROW(cost_of(p, {1.0, 1.0}, {1.0, 2.0}, {1.0, 0.0}), InputError);
}

TEST(CostOf, IncludesTerminalCost) {
  const auto p = make_problem(ProblemId::kOcp2);
  EXPECT_EQ(cost_of(p, {0.3, 0.6}, {0.0, 0.0}, {0.0, 2.0}), -0.6);
}

TEST(Shooting, MatchesLqrClosedForm) {
  const auto p = make_problem(ProblemId::kOcp1);
  const auto times = nodes(1.0, 101);
  for (double x0 : {0.0, 0.5, 1.0}) {
    const auto s = shoot_tpbvp(p, x0, times);
    const auto c = lqr_closed_form(p, x0, times);
    EXPECT_EQ(s.source, ReferenceSource::kShooting);
    for (std::size_t k = 0; k < times.size(); ++k) {
      EXPECT_NEAR(s.x_star[k], c.x_star[k], 1e-8);
      EXPECT_NEAR(s.u_star[k], c.u_star[k], 1e-8);
      EXPECT_NEAR(s.lambda_star[k], c.lambda_star[k], 1e-8);
    }
    EXPECT_NEAR(s.J_star, x0 * x0 * std::tanh(1.0), 1e-8);
  }
}

TEST(Shooting, Ocp2MatchesBernoulliSolution) {
  const auto p = make_problem(ProblemId::kOcp2);
  const auto times = nodes(2.0, 41);
  for (double x0 : {0.0, 0.05, 0.3, 0.75, 1.0}) {
    const auto s = reference_solution(p, x0, times);
    for (std::size_t k = 0; k < times.size(); ++k) {
      const double x = testing::ocp2_state(x0, times[k]);
      EXPECT_NEAR(s.x_star[k], x, 1e-9);
      EXPECT_NEAR(s.u_star[k], 0.5 * x, 1e-9);
    }
    EXPECT_NEAR(s.J_star, -testing::ocp2_state(x0, 2.0), 1e-9);
    EXPECT_NEAR(s.lambda_star.back(), -1.0, 1e-10);
  }
  // x0 = 1: J* = −1/(1/4 + 3/4 e^5).
  EXPECT_NEAR(reference_solution(p, 1.0, times).J_star, -0.00896379680285788, 1e-11);
}

TEST(Shooting, Ocp3MatchesLinearQuadraticSolution) {
  const auto p = make_problem(ProblemId::kOcp3);
  const auto times = nodes(8.0, 101);
  for (double x0 : {0.0, 7.0, 15.0, 33.0, 40.0}) {
    const auto s = reference_solution(p, x0, times);
    for (std::size_t k = 0; k < times.size(); ++k) {
      const auto e = testing::ocp3_exact(x0, times[k]);
      EXPECT_NEAR(s.x_star[k], e.x, 1e-7);
      EXPECT_NEAR(s.u_star[k], e.u, 1e-7);
      EXPECT_NEAR(s.lambda_star[k], e.lambda, 1e-7);
    }
    EXPECT_NEAR(s.J_star, testing::ocp3_cost(x0), 1e-6 * testing::ocp3_cost(x0));
  }
}

TEST(Shooting, PmpResidualsSmall) {
  for (auto id : {ProblemId::kOcp2, ProblemId::kOcp3}) {
    const auto p = make_problem(id);
    const auto times = nodes(p.horizon_T, 2001);
    for (double x0 : {p.x0_min, 0.5 * (p.x0_min + p.x0_max), p.x0_max}) {
      const auto r = shoot_tpbvp(p, x0, times);
      EXPECT_LE(pmp_residual_sup(p, r), 1e-6) << to_string(id) << " x0=" << x0;
    }
  }
}

TEST(Shooting, InputValidation) {
  const auto p = make_problem(ProblemId::kOcp2);
  EXPECT_THROW(shoot_tpbvp(p, 0.5, {0.5, 1.0, 2.0}), InputError);
  EXPECT_THROW(shoot_tpbvp(p, 0.5, {0.0, 1.0, 3.0}), DomainError);
  EXPECT_THROW(shoot_tpbvp(p, 0.5, {0.0, 1.0, 1.0}), InputError);
  EXPECT_THROW(shoot_tpbvp(p, 0.5, {0.0}), InputError);
}

TEST(Shooting, NonConvergenceReportsResidual) {
  const auto p = make_problem(ProblemId::kOcp3);
  ShootingOptions opt;
  opt.max_iterations = 0;
  try {
    shoot_tpbvp(p, 10.0, nodes(8.0, 11), opt);
    FAIL() << "expected OracleError";
  } catch (const OracleError& e) {
    EXPECT_GT(std::abs(e.residual()), 0.0);
  }
}

TEST(PmpResidualSup, NeedsFiveNodes) {
  const auto p = make_problem(ProblemId::kOcp1);
  EXPECT_THROW(pmp_residual_sup(p, lqr_closed_form(p, 1.0, nodes(1.0, 4))), InputError);
  EXPECT_LE(pmp_residual_sup(p, lqr_closed_form(p, 1.0, nodes(1.0, 1001))), 1e-10);
}

}  // namespace
}  // namespace pmpnet
