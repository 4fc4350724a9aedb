#include "pmpnet/pmploss.hpp"

#include <algorithm>
#include <cstdlib>
#include <random>
#include <limits>
#include <utility>
#include <vector>

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace pmpnet {
namespace {

using testing::Gen;

GridSpec small_grid(const ProblemDef& p, std::size_t nt, std::size_t nx) {
  GridSpec g;
  g.time_points = detail::uniform_points(0.0, p.horizon_T, nt);
  g.x0_points = detail::uniform_points(p.x0_min, p.x0_max, nx);
  return g;
}

TEST(Residuals, VanishOnExactOcp1Solution) {
  const auto p = make_problem(ProblemId::kOcp1);
  Gen gen(51);
  for (int k = 0; k < 200; ++k) {
    const double x0 = gen.uniform(0, 1), t = gen.time(1.0);
    const auto r = residuals(p, testing::as_bundle(testing::ocp1_exact(x0, t)), t, x0);
    EXPECT_NEAR(r.e1, 0.0, 1e-14);
    EXPECT_NEAR(r.e2, 0.0, 1e-14);
    EXPECT_NEAR(r.e3, 0.0, 1e-14);
  }
}

TEST(Residuals, VanishOnExactOcp3Solution) {
  const auto p = make_problem(ProblemId::kOcp3);
  Gen gen(52);
  for (int k = 0; k < 200; ++k) {
    const double x0 = gen.uniform(0, 40), t = gen.time(8.0);
    const auto r = residuals(p, testing::as_bundle(testing::ocp3_exact(x0, t)), t, x0);
    EXPECT_NEAR(r.e1, 0.0, 1e-9);
    EXPECT_NEAR(r.e2, 0.0, 1e-9);
    EXPECT_NEAR(r.e3, 0.0, 1e-9);
  }
}

TEST(Residuals, HandComputedOcp2Point) {
  const auto p = make_problem(ProblemId::kOcp2);
  // x=1, λ=−1, u=0.25, ẋ=0.5, λ̇=2.
  const TrialBundle<double> tb{1.0, -1.0, 0.25, 0.5, 2.0};
  const auto r = residuals(p, tb, 1.0);
  EXPECT_DOUBLE_EQ(r.e1, -1.0 * 2.5 * (0.25 - 1.0) + 2.0);
  EXPECT_DOUBLE_EQ(r.e2, 2.5 * (0.25 - 1.0 - 0.0625) - 0.5);
  EXPECT_DOUBLE_EQ(r.e3, -1.0 * 2.5 * (1.0 - 0.5));
  EXPECT_DOUBLE_EQ(point_energy(r), r.e1 * r.e1 + r.e2 * r.e2 + r.e3 * r.e3);
}

TEST(Residuals, Ocp1PointAtOrigin) {
  const auto p = make_problem(ProblemId::kOcp1);
  const auto r = residuals(p, TrialBundle<double>{1.0, 0.0, 0.0, 0.0, 0.0}, 0.0);
  EXPECT_EQ(r.e1, 2.0);  // H_x = 2x
  EXPECT_EQ(r.e2, 0.0);
  EXPECT_EQ(r.e3, 0.0);
}

TEST(Residuals, Ocp3VanishAtTargetsWhenStateRateMatchesDynamics) {
  const auto p = make_problem(ProblemId::kOcp3);
  Gen gen(57);
  for (int k = 0; k < 100; ++k) {
    const double t = gen.time(8.0);
    const double s = ((t - 12.0) * t + 32.0) * t + 30.0;
    const auto r = residuals(p, TrialBundle<double>{15.0, 0.0, 30.0, 30.0 - s, 0.0}, t);
    EXPECT_EQ(r.e1, 0.0);
    EXPECT_NEAR(r.e2, 0.0, 1e-13);
    EXPECT_EQ(r.e3, 0.0);
  }
}

TEST(PointEnergy, SumOfSquares) {
  EXPECT_EQ(point_energy(ResidualTriple<double>{1.0, 2.0, 3.0}), 14.0);
}

TEST(PmpLoss, InvariantToPointOrder) {
  const auto p = make_problem(ProblemId::kOcp3);
  const Method2Model m(p, 3, 2, 2);
  const auto phi = m.initial_params(8);
  std::vector<std::pair<double, double>> pts;
  for (double x0 : {0.0, 13.0, 40.0})
    for (double t : {0.0, 2.5, 8.0}) pts.emplace_back(t, x0);
  const double base = pmp_loss<Method2Model, double>(m, phi, p, std::span<const std::pair<double, double>>(pts));
  std::mt19937_64 rng(58);
  for (int k = 0; k < 20; ++k) {
    std::shuffle(pts.begin(), pts.end(), rng);
    EXPECT_NEAR((pmp_loss<Method2Model, double>(m, phi, p, std::span<const std::pair<double, double>>(pts))),
                base, 1e-12 * base);
  }
}

TEST(ResidualEnergy, GradientMatchesFiniteDifferences) {
  Gen gen(53);
  for (auto id : {ProblemId::kOcp1, ProblemId::kOcp2, ProblemId::kOcp3}) {
    const auto p = make_problem(id);
    for (int k = 0; k < 50; ++k) {
      std::array<double, 5> v;
      for (double& x : v) x = gen.uniform(-3, 3);
      const double t = gen.time(p.horizon_T);
      auto energy = [&](const std::array<double, 5>& a) {
        return point_energy(residuals(p, TrialBundle<double>{a[0], a[1], a[2], a[3], a[4]}, t));
      };
      const auto eg = residual_energy(p, {v[0], v[1], v[2], v[3], v[4]}, t);
      EXPECT_DOUBLE_EQ(eg.energy, energy(v));
      for (std::size_t j = 0; j < 5; ++j) {
        auto up = v, dn = v;
        up[j] += 1e-6;
        dn[j] -= 1e-6;
        EXPECT_NEAR(eg.grad[j], (energy(up) - energy(dn)) / 2e-6, 1e-5 * (1 + std::abs(eg.grad[j])));
      }
    }
  }
}

TEST(PmpLoss, NonNegativeAndZeroOnlyWhenResidualsVanish) {
  Gen gen(54);
  const auto p = make_problem(ProblemId::kOcp2);
  const Method1Model m(p, 3);
  const auto g = small_grid(p, 5, 4);
  for (int k = 0; k < 50; ++k) {
    const auto phi = gen.vec(m.param_count(), -3, 3);
    EXPECT_GT((pmp_loss<Method1Model, double>(m, phi, p, g)), 0.0);
  }
}

TEST(PmpLoss, PointListAgreesWithGrid) {
  const auto p = make_problem(ProblemId::kOcp1);
  const Method2Model m(p, 3, 2, 2);
  const auto phi = m.initial_params(5);
  const auto g = small_grid(p, 4, 3);
  std::vector<std::pair<double, double>> pts;
  for (double x0 : g.x0_points)
    for (double t : g.time_points) pts.emplace_back(t, x0);
  EXPECT_EQ((pmp_loss<Method2Model, double>(m, phi, p, g)),
            (pmp_loss<Method2Model, double>(m, phi, p, std::span<const std::pair<double, double>>(pts))));
  EXPECT_THROW((pmp_loss<Method2Model, double>(m, phi, p, GridSpec{})), InputError);
}

template <class Obj>
void expect_objective_consistent(const Obj& obj, const std::vector<double>& phi) {
  const auto hand = obj.value_and_gradient(phi);
  const auto tape = diff::grad_of([&](auto x) { return obj(x); }, std::span<const double>(phi));
  EXPECT_NEAR(hand.loss, tape.loss, 1e-12 * tape.loss);
  EXPECT_EQ(hand.loss, obj.value(phi));
  for (std::size_t i = 0; i < phi.size(); ++i)
    EXPECT_NEAR(hand.grad[i], tape.grad[i], 1e-10 * (1 + std::abs(tape.grad[i])));
}

TEST(Method1Objective, HandGradientMatchesTape) {
  Gen gen(55);
  for (auto id : {ProblemId::kOcp1, ProblemId::kOcp2, ProblemId::kOcp3}) {
    const auto p = make_problem(id);
    const Method1Model m(p, 3);
    const Method1Objective obj(m, p, small_grid(p, 6, 4));
    expect_objective_consistent(obj, gen.vec(m.param_count(), -1, 1));
  }
}

TEST(Method2Objective, HandGradientMatchesTape) {
  Gen gen(56);
  for (auto id : {ProblemId::kOcp1, ProblemId::kOcp2, ProblemId::kOcp3}) {
    const auto p = make_problem(id);
    const Method2Model m(p, 3, 3, 2);
    const Method2Objective obj(m, p, small_grid(p, 6, 4));
    expect_objective_consistent(obj, gen.vec(m.param_count(), -1, 1));
  }
}

TEST(Objectives, ThreadCountDoesNotChangeBits) {
  const auto p = make_problem(ProblemId::kOcp3);
  const Method2Model m2(p, 4, 3, 3);
  const Method1Model m1(p, 4);
  const auto g = small_grid(p, 11, 9);
  const Method2Objective o2(m2, p, g);
  const Method1Objective o1(m1, p, g);
  const auto phi2 = m2.initial_params(3), phi1 = m1.initial_params(3);

  setenv("PMPNET_THREADS", "1", 1);
  const auto a2 = o2.value_and_gradient(phi2), a1 = o1.value_and_gradient(phi1);
  setenv("PMPNET_THREADS", "4", 1);
  const auto b2 = o2.value_and_gradient(phi2), b1 = o1.value_and_gradient(phi1);
  unsetenv("PMPNET_THREADS");
  EXPECT_EQ(a2.loss, b2.loss);
  EXPECT_EQ(a2.grad, b2.grad);
  EXPECT_EQ(a1.loss, b1.loss);
  EXPECT_EQ(a1.grad, b1.grad);
}

TEST(Objectives, NonFiniteResidualNamesGridPoint) {
  const auto p = make_problem(ProblemId::kOcp1);
  const Method1Model m(p, 2);
  const Method1Objective obj(m, p, small_grid(p, 3, 2));
  auto phi = m.initial_params(1);
  phi[m.layout().find("u/v").offset] = std::numeric_limits<double>::infinity();
  try {
    obj.value_and_gradient(phi);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(e.where().find("t="), std::string::npos);
    EXPECT_NE(e.where().find("x0="), std::string::npos);
  }
}

TEST(Objectives, EmptyGridIsRejected) {
  const auto p = make_problem(ProblemId::kOcp1);
  EXPECT_THROW(Method1Objective(Method1Model(p, 2), p, GridSpec{}), InputError);
}

}  // namespace
}  // namespace pmpnet
