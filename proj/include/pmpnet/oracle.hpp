#pragma once

// Reference optimal solutions used to score trained models: the closed-form
// LQR solution for OCP1 and an RK4 + secant shooting solver for the
// state–costate boundary value problem otherwise.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "pmpnet/errors.hpp"
#include "pmpnet/problems.hpp"

namespace pmpnet {

enum class ReferenceSource { kClosedForm, kShooting };

inline const char* to_string(ReferenceSource s) {
  return s == ReferenceSource::kClosedForm ? "closed-form" : "shooting";
}

struct ReferenceSolution {
  double x0 = 0.0;
  std::vector<double> times;
  std::vector<double> x_star;
  std::vector<double> u_star;
  std::vector<double> lambda_star;
  double J_star = 0.0;
  ReferenceSource source = ReferenceSource::kClosedForm;
};

namespace detail {

inline void require_times(const std::vector<double>& times, double horizon) {
  if (times.size() < 2) throw InputError("need at least two time nodes");
  for (std::size_t i = 0; i + 1 < times.size(); ++i)
    if (!(times[i + 1] > times[i])) throw InputError("time nodes must be strictly increasing");
  if (times.front() < 0.0 || times.back() > horizon)
    throw DomainError("time nodes must lie in [0, T]");
}

}  // namespace detail

// x*(t) = x0 cosh(T−t)/cosh T, u*(t) = −x0 sinh(T−t)/cosh T, λ* = −2u*,
// J* = x0² tanh T.
inline ReferenceSolution lqr_closed_form(const ProblemDef& p, double x0,
                                         const std::vector<double>& times) {
  if (p.id != ProblemId::kOcp1) throw ConfigError("closed form exists only for OCP1");
  detail::require_times(times, p.horizon_T);
  const double T = p.horizon_T;
  const double ch = std::cosh(T);
  ReferenceSolution r;
  r.x0 = x0;
  r.times = times;
  r.source = ReferenceSource::kClosedForm;
  for (double t : times) {
    const double u = -x0 * std::sinh(T - t) / ch;
    r.x_star.push_back(x0 * std::cosh(T - t) / ch);
    r.u_star.push_back(u);
    r.lambda_star.push_back(-2.0 * u);
  }
  r.J_star = x0 * x0 * std::tanh(T);
  return r;
}

// Trapezoidal ∫ f dt over `times` plus Ψ(x at the last node).
inline double cost_of(const ProblemDef& p, const std::vector<double>& x_traj,
                      const std::vector<double>& u_traj, const std::vector<double>& times) {
  if (x_traj.size() != times.size() || u_traj.size() != times.size())
    throw InputError("trajectory lengths do not match the time grid");
  if (times.size() < 2) throw InputError("need at least two time nodes");
  for (std::size_t i = 0; i + 1 < times.size(); ++i)
    if (!(times[i + 1] > times[i])) throw InputError("time nodes must be strictly increasing");
  double J = 0.0;
  for (std::size_t k = 0; k + 1 < times.size(); ++k) {
    const double fa = p.running_cost(x_traj[k], u_traj[k], times[k]);
    const double fb = p.running_cost(x_traj[k + 1], u_traj[k + 1], times[k + 1]);
    J += 0.5 * (times[k + 1] - times[k]) * (fa + fb);
  }
  return J + p.terminal_cost(x_traj.back());
}

struct ShootingOptions {
  double tol = 1e-10;
  // Total RK4 steps over [0, T] is at least this, and at least 10 per
  // output interval.
  std::size_t min_steps = 1000;
  std::size_t max_iterations = 100;
};

namespace detail {

// Augmented state (x, λ, ∫f).
using ShootState = std::array<double, 3>;

inline double control_at(const ProblemDef& p, double x, double lam, double t) {
  const auto u = p.stationary_control(x, lam, t);
  if (!u) throw OracleError("stationary control is not unique on this branch", std::nan(""));
  return *u;
}

inline ShootState shoot_rhs(const ProblemDef& p, const ShootState& s, double t) {
  const double u = control_at(p, s[0], s[1], t);
  const auto h = hamiltonian(p, s[0], u, s[1], t);
  return {h.dH_dlambda, -h.dH_dx, p.running_cost(s[0], u, t)};
}

inline ShootState rk4_step(const ProblemDef& p, const ShootState& s, double t, double h) {
  auto axpy = [](const ShootState& a, double c, const ShootState& b) {
    return ShootState{a[0] + c * b[0], a[1] + c * b[1], a[2] + c * b[2]};
  };
  const auto k1 = shoot_rhs(p, s, t);
  const auto k2 = shoot_rhs(p, axpy(s, 0.5 * h, k1), t + 0.5 * h);
  const auto k3 = shoot_rhs(p, axpy(s, 0.5 * h, k2), t + 0.5 * h);
  const auto k4 = shoot_rhs(p, axpy(s, h, k3), t + h);
  ShootState out;
  for (std::size_t i = 0; i < 3; ++i)
    out[i] = s[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return out;
}

// Integrates from t = 0 to T, recording the state at each output node.
// `times` must start at 0; the last output node is extended to T.
inline std::vector<ShootState> integrate(const ProblemDef& p, double x0, double lambda0,
                                         const std::vector<double>& times, std::size_t substeps,
                                         ShootState* terminal) {
  std::vector<ShootState> out;
  out.reserve(times.size());
  ShootState s{x0, lambda0, 0.0};
  double t = 0.0;
  auto advance = [&](double t_next) {
    const double h = (t_next - t) / static_cast<double>(substeps);
    for (std::size_t j = 0; j < substeps; ++j) s = rk4_step(p, s, t + h * static_cast<double>(j), h);
    t = t_next;
  };
  for (double tk : times) {
    if (tk > t) advance(tk);
    out.push_back(s);
  }
  if (t < p.horizon_T) advance(p.horizon_T);
  if (terminal) *terminal = s;
  return out;
}

}  // namespace detail

// Solves ẋ = ∂H/∂λ, λ̇ = −∂H/∂x with u from ∂H/∂u = 0, matching λ(T) = λ_T
// by secant iteration on λ(0). J* is integrated alongside as a third state.
inline ReferenceSolution shoot_tpbvp(const ProblemDef& p, double x0, const std::vector<double>& times,
                                     const ShootingOptions& opt = {}) {
  detail::require_times(times, p.horizon_T);
  if (times.front() != 0.0) throw InputError("shooting output grid must start at t = 0");
  const std::size_t intervals = times.size() - 1;
  const std::size_t substeps =
      std::max<std::size_t>(10, (opt.min_steps + intervals - 1) / intervals);

  auto miss = [&](double lambda0) {
    detail::ShootState end{};
    detail::integrate(p, x0, lambda0, times, substeps, &end);
    return end[1] - p.lambda_T;
  };

  const double scale = 1.0 + std::abs(x0) + std::abs(p.lambda_T);
  double l_prev = -10.0 * scale, l_cur = 10.0 * scale;
  double f_prev = miss(l_prev), f_cur = miss(l_cur);
  std::size_t it = 0;
  while (std::abs(f_cur) > opt.tol) {
    if (++it > opt.max_iterations)
      throw OracleError("shooting did not converge in " + std::to_string(opt.max_iterations) +
                            " secant iterations",
                        f_cur);
    const double denom = f_cur - f_prev;
    if (denom == 0.0 || !std::isfinite(denom))
      throw OracleError("secant step degenerate", f_cur);
    const double l_next = l_cur - f_cur * (l_cur - l_prev) / denom;
    l_prev = l_cur;
    f_prev = f_cur;
    l_cur = l_next;
    f_cur = miss(l_cur);
  }

  detail::ShootState end{};
  const auto states = detail::integrate(p, x0, l_cur, times, substeps, &end);
  ReferenceSolution r;
  r.x0 = x0;
  r.times = times;
  r.source = ReferenceSource::kShooting;
  for (std::size_t k = 0; k < times.size(); ++k) {
    r.x_star.push_back(states[k][0]);
    r.lambda_star.push_back(states[k][1]);
    r.u_star.push_back(detail::control_at(p, states[k][0], states[k][1], times[k]));
  }
  r.J_star = end[2] + p.terminal_cost(end[0]);
  return r;
}

// Closed form where available, shooting otherwise.
inline ReferenceSolution reference_solution(const ProblemDef& p, double x0,
                                            const std::vector<double>& times) {
  if (p.id == ProblemId::kOcp1) return lqr_closed_form(p, x0, times);
  return shoot_tpbvp(p, x0, times);
}

// Sup-norm of the PMP residuals along a reference trajectory on a uniform
// time grid: |ẋ − ∂H/∂λ|, |λ̇ + ∂H/∂x|, |∂H/∂u|, with ẋ and λ̇ from
// fourth-order finite differences (needs at least 5 nodes).
inline double pmp_residual_sup(const ProblemDef& p, const ReferenceSolution& r) {
  const std::size_t n = r.times.size();
  if (n < 5) throw InputError("residual check needs at least 5 nodes");
  const double h = (r.times.back() - r.times.front()) / static_cast<double>(n - 1);
  auto deriv = [&](const std::vector<double>& y, std::size_t k) {
    if (k >= 2 && k + 2 < n) return (y[k - 2] - 8.0 * y[k - 1] + 8.0 * y[k + 1] - y[k + 2]) / (12.0 * h);
    if (k < 2) {
      // Forward five-point stencil.
      return (-25.0 * y[k] + 48.0 * y[k + 1] - 36.0 * y[k + 2] + 16.0 * y[k + 3] - 3.0 * y[k + 4]) /
             (12.0 * h);
    }
    return (25.0 * y[k] - 48.0 * y[k - 1] + 36.0 * y[k - 2] - 16.0 * y[k - 3] + 3.0 * y[k - 4]) /
           (12.0 * h);
  };
  double worst = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const auto hm = hamiltonian(p, r.x_star[k], r.u_star[k], r.lambda_star[k], r.times[k]);
    worst = std::max(worst, std::abs(deriv(r.x_star, k) - hm.dH_dlambda));
    worst = std::max(worst, std::abs(deriv(r.lambda_star, k) + hm.dH_dx));
    worst = std::max(worst, std::abs(hm.dH_du));
  }
  return worst;
}

}  // namespace pmpnet
