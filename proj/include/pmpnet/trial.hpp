#pragma once

// Shared vocabulary for trial solutions: the evaluated bundle (x̂, λ̂, û and
// the two time derivatives), input scaling, and the logistic sigmoid.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>

#include "pmpnet/diff.hpp"
#include "pmpnet/errors.hpp"
#include "pmpnet/problems.hpp"

namespace pmpnet {

enum class Target { kState = 0, kCostate = 1, kControl = 2 };

inline const char* target_prefix(Target t) {
  switch (t) {
    case Target::kState:
      return "x";
    case Target::kCostate:
      return "lambda";
    case Target::kControl:
      return "u";
  }
  return "?";
}

template <class S>
struct TrialBundle {
  S x_hat{};
  S lambda_hat{};
  S u_hat{};
  S x_hat_dot{};
  S lambda_hat_dot{};
};

// Index of each bundle entry in a flattened 5-vector.
enum BundleSlot : std::size_t { kX = 0, kLambda = 1, kU = 2, kXDot = 3, kLambdaDot = 4 };
using BundleGrad = std::array<double, 5>;

// Multipliers applied to (t, x0) before they enter a network. The trial
// formulas always use the unscaled values.
struct InputScaling {
  double t_scale = 1.0;
  double x0_scale = 1.0;
  bool operator==(const InputScaling&) const = default;
};

// OCP3's domains (t up to 8, x0 up to 40) saturate raw sigmoids, so its
// inputs are mapped to [0, 1]. The other problems already live there.
inline InputScaling default_scaling(const ProblemDef& p) {
  if (p.id == ProblemId::kOcp3) return {1.0 / p.horizon_T, 1.0 / 40.0};
  return {};
}

template <class S>
S sigmoid(const S& z) {
  using std::exp;
  return 1.0 / (1.0 + exp(-z));
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

inline void check_time(double t, double horizon) {
  if (!(t >= 0.0 && t <= horizon))
    throw DomainError("t = " + std::to_string(t) + " outside [0, " + std::to_string(horizon) + "]");
}

inline void fill_uniform(std::span<double> out, double lo, double hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(lo, hi);
  for (double& x : out) x = dist(rng);
}

}  // namespace pmpnet
