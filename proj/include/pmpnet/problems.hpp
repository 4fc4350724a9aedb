#pragma once

// Scalar Bolza problems
//
//   min_u  ∫_0^T f(x, u, t) dt + Ψ(x(T))   s.t.  ẋ = g(x, u, t),  x(0) = x0
//
// and the three benchmark instances. All cost/dynamics functions and their
// first partials are templates on the scalar type so the same closed forms
// serve plain doubles, forward duals, and reverse-mode tape variables.

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pmpnet/errors.hpp"

namespace pmpnet {

enum class ProblemId { kOcp1 = 1, kOcp2 = 2, kOcp3 = 3 };

inline std::string to_string(ProblemId id) {
  return "ocp" + std::to_string(static_cast<int>(id));
}

inline ProblemId problem_id_from_int(int k) {
  if (k < 1 || k > 3) throw ConfigError("unknown problem id " + std::to_string(k));
  return static_cast<ProblemId>(k);
}

inline ProblemId parse_problem_id(std::string_view s) {
  if (s == "1" || s == "ocp1" || s == "OCP1") return ProblemId::kOcp1;
  if (s == "2" || s == "ocp2" || s == "OCP2") return ProblemId::kOcp2;
  if (s == "3" || s == "ocp3" || s == "OCP3") return ProblemId::kOcp3;
  throw ConfigError("unknown problem id '" + std::string(s) + "'");
}

// Inventory-control parameters (OCP3). rho is the discount rate of the
// e^{rho t} running-cost factor.
struct InventoryParams {
  double rho = 0.0;
  double h = 1.0;
  double c = 1.0;
  double x_target = 15.0;
  double u_target = 30.0;
};

template <class S>
struct HamiltonianEval {
  S value;
  S dH_dx;
  S dH_du;
  S dH_dlambda;
};

class ProblemDef {
 public:
  ProblemId id = ProblemId::kOcp1;
  double horizon_T = 1.0;
  double lambda_T = 0.0;
  std::vector<double> x0_train;
  double x0_min = 0.0;
  double x0_max = 1.0;
  InventoryParams inventory;
  bool has_dg_dt = false;

  // Demand S(t) of the inventory problem.
  static double demand(double t) { return ((t - 12.0) * t + 32.0) * t + 30.0; }
  static double demand_rate(double t) { return (3.0 * t - 24.0) * t + 32.0; }

  double discount(double t) const { return std::exp(inventory.rho * t); }

  template <class S>
  S running_cost(const S& x, const S& u, double t) const {
    switch (id) {
      case ProblemId::kOcp1:
        return x * x + u * u;
      case ProblemId::kOcp2:
        return S(0.0);
      case ProblemId::kOcp3: {
        const S dx = x - inventory.x_target;
        const S du = u - inventory.u_target;
        return discount(t) * (0.5 * inventory.h * dx * dx + 0.5 * inventory.c * du * du);
      }
    }
    return S(0.0);
  }

  template <class S>
  S dynamics(const S& x, const S& u, double t) const {
    switch (id) {
      case ProblemId::kOcp1:
        return u;
      case ProblemId::kOcp2:
        return 2.5 * (u * x - x - u * u);
      case ProblemId::kOcp3:
        return u - demand(t);
    }
    return S(0.0);
  }

  template <class S>
  S terminal_cost(const S& x) const {
    if (id == ProblemId::kOcp2) return -x;
    return S(0.0);
  }

  template <class S>
  S df_dx(const S& x, const S& /*u*/, double t) const {
    switch (id) {
      case ProblemId::kOcp1:
        return 2.0 * x;
      case ProblemId::kOcp2:
        return S(0.0);
      case ProblemId::kOcp3:
        return discount(t) * inventory.h * (x - inventory.x_target);
    }
    return S(0.0);
  }

  template <class S>
  S df_du(const S& /*x*/, const S& u, double t) const {
    switch (id) {
      case ProblemId::kOcp1:
        return 2.0 * u;
      case ProblemId::kOcp2:
        return S(0.0);
      case ProblemId::kOcp3:
        return discount(t) * inventory.c * (u - inventory.u_target);
    }
    return S(0.0);
  }

  template <class S>
  S dg_dx(const S& /*x*/, const S& u, double /*t*/) const {
    if (id == ProblemId::kOcp2) return 2.5 * (u - 1.0);
    return S(0.0);
  }

  template <class S>
  S dg_du(const S& x, const S& u, double /*t*/) const {
    if (id == ProblemId::kOcp2) return 2.5 * (x - 2.0 * u);
    return S(1.0);
  }

  template <class S>
  S dpsi_dx(const S& /*x*/) const {
    return S(id == ProblemId::kOcp2 ? -1.0 : 0.0);
  }

  double dg_dt(double /*x*/, double /*u*/, double t) const {
    return id == ProblemId::kOcp3 ? -demand_rate(t) : 0.0;
  }

  // Root in u of ∂H/∂u = 0, when it is unique and closed-form. For OCP2 the
  // root u = x/2 holds for every λ ≠ 0.
  std::optional<double> stationary_control(double x, double lambda, double t) const {
    switch (id) {
      case ProblemId::kOcp1:
        return -0.5 * lambda;
      case ProblemId::kOcp2:
        if (lambda == 0.0) return std::nullopt;
        return 0.5 * x;
      case ProblemId::kOcp3:
        return inventory.u_target - lambda / (inventory.c * discount(t));
    }
    return std::nullopt;
  }

  bool in_hull(double x0) const { return x0 >= x0_min && x0 <= x0_max; }
};

template <class S>
HamiltonianEval<S> hamiltonian(const ProblemDef& p, const S& x, const S& u, const S& lam,
                               double t) {
  HamiltonianEval<S> h{S(0.0), S(0.0), S(0.0), S(0.0)};
  h.dH_dlambda = p.dynamics(x, u, t);
  h.value = p.running_cost(x, u, t) + lam * h.dH_dlambda;
  h.dH_dx = p.df_dx(x, u, t) + lam * p.dg_dx(x, u, t);
  h.dH_du = p.df_du(x, u, t) + lam * p.dg_du(x, u, t);
  return h;
}

namespace detail {

// count >= 2 points from lo to hi inclusive, computed as lo + (hi-lo)*i/(count-1).
inline std::vector<double> uniform_points(double lo, double hi, std::size_t count) {
  std::vector<double> out(count);
  const double n = static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) out[i] = lo + (hi - lo) * static_cast<double>(i) / n;
  out.back() = hi;
  return out;
}

}  // namespace detail

inline ProblemDef make_problem(ProblemId id, const InventoryParams& inventory = {}) {
  ProblemDef p;
  p.id = id;
  switch (id) {
    case ProblemId::kOcp1:
      p.horizon_T = 1.0;
      p.lambda_T = 0.0;
      p.x0_train = detail::uniform_points(0.0, 1.0, 21);
      break;
    case ProblemId::kOcp2:
      p.horizon_T = 2.0;
      p.lambda_T = -1.0;
      p.x0_train = detail::uniform_points(0.0, 1.0, 21);
      break;
    case ProblemId::kOcp3:
      p.horizon_T = 8.0;
      p.lambda_T = 0.0;
      p.x0_train = detail::uniform_points(0.0, 40.0, 41);
      p.inventory = inventory;
      p.has_dg_dt = true;
      break;
    default:
      throw ConfigError("unknown problem id " + std::to_string(static_cast<int>(id)));
  }
  p.x0_min = p.x0_train.front();
  p.x0_max = p.x0_train.back();
  return p;
}

inline ProblemDef make_problem(int k) { return make_problem(problem_id_from_int(k)); }

}  // namespace pmpnet
