#pragma once

// Time-and-initial-condition network: three parallel single-hidden-layer
// sigmoid sub-networks n_x, n_λ, n_u of (t, x0), wrapped in trial solutions
//
//   x̂ = x0 + t·n_x,   λ̂ = λ_T + (t − T)·n_λ,   û = n_u
//
// that satisfy x̂(0) = x0 and λ̂(T) = λ_T for every parameter value.

#include <array>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "pmpnet/diff.hpp"
#include "pmpnet/problems.hpp"
#include "pmpnet/trial.hpp"

namespace pmpnet {

// Views into Φ for one sub-network. w is I×2 row-major: column 0 multiplies
// the (scaled) time input, column 1 the (scaled) initial condition.
template <class S>
struct SubNetParams {
  std::span<const S> w;
  std::span<const S> b;
  std::span<const S> v;
  std::size_t width() const { return b.size(); }
};

template <class S>
struct SubNetOutput {
  S value{};
  S dvalue_dt{};
};

// n(t, x0) = vᵀσ(w·[t, x0] + b) and its exact derivative in t.
template <class S>
SubNetOutput<S> subnet_eval(const SubNetParams<S>& p, double t, double x0,
                            const InputScaling& scaling = {}) {
  const double ts = t * scaling.t_scale;
  const double xs = x0 * scaling.x0_scale;
  SubNetOutput<S> out{S(0.0), S(0.0)};
  for (std::size_t i = 0; i < p.width(); ++i) {
    const S z = p.w[2 * i] * ts + p.w[2 * i + 1] * xs + p.b[i];
    const S s = sigmoid(z);
    out.value += p.v[i] * s;
    out.dvalue_dt += p.v[i] * (s * (1.0 - s)) * p.w[2 * i];
  }
  out.dvalue_dt = out.dvalue_dt * scaling.t_scale;
  return out;
}

class Method1Model {
 public:
  Method1Model(const ProblemDef& p, std::size_t hidden)
      : Method1Model(p, hidden, default_scaling(p)) {}

  Method1Model(const ProblemDef& p, std::size_t hidden, InputScaling scaling)
      : problem_id_(p.id),
        hidden_(hidden),
        horizon_(p.horizon_T),
        lambda_T_(p.lambda_T),
        scaling_(scaling) {
    if (hidden == 0) throw ConfigError("hidden width I must be >= 1");
    for (Target tg : {Target::kState, Target::kCostate, Target::kControl}) {
      const std::string pre = target_prefix(tg);
      layout_.add(pre + "/w", hidden, 2);
      layout_.add(pre + "/b", hidden, 1);
      layout_.add(pre + "/v", hidden, 1);
    }
  }

  ProblemId problem_id() const { return problem_id_; }
  std::size_t hidden() const { return hidden_; }
  double horizon() const { return horizon_; }
  double lambda_T() const { return lambda_T_; }
  const InputScaling& scaling() const { return scaling_; }
  const diff::ParamLayout& layout() const { return layout_; }
  std::size_t param_count() const { return layout_.size(); }

  template <class S>
  SubNetParams<S> net(std::span<const S> phi, Target tg) const {
    const std::size_t base = 3 * static_cast<std::size_t>(tg);
    return {layout_.slice(phi, base), layout_.slice(phi, base + 1),
            layout_.slice(phi, base + 2)};
  }

  // Uniform [-1, 1] for every weight and bias.
  std::vector<double> initial_params(std::uint64_t seed) const {
    std::vector<double> phi(layout_.size());
    std::mt19937_64 rng(seed);
    fill_uniform(phi, -1.0, 1.0, rng);
    return phi;
  }

  template <class S>
  TrialBundle<S> trial(std::span<const S> phi, double t, double x0) const {
    const auto nx = subnet_eval(net(phi, Target::kState), t, x0, scaling_);
    const auto nl = subnet_eval(net(phi, Target::kCostate), t, x0, scaling_);
    const auto nu = subnet_eval(net(phi, Target::kControl), t, x0, scaling_);
    const double tm = t - horizon_;
    TrialBundle<S> b;
    b.x_hat = x0 + t * nx.value;
    b.lambda_hat = lambda_T_ + tm * nl.value;
    b.u_hat = nu.value;
    b.x_hat_dot = nx.value + t * nx.dvalue_dt;
    b.lambda_hat_dot = nl.value + tm * nl.dvalue_dt;
    return b;
  }

  // Hidden activations of the three sub-networks at one (t, x0), reused by
  // the forward value and the backward pass.
  struct Scratch {
    std::vector<double> sig;
  };

  TrialBundle<double> trial_cached(std::span<const double> phi, double t, double x0,
                                   Scratch& scratch) const {
    scratch.sig.resize(3 * hidden_);
    const double ts = t * scaling_.t_scale;
    const double xs = x0 * scaling_.x0_scale;
    std::array<SubNetOutput<double>, 3> n{};
    for (std::size_t k = 0; k < 3; ++k) {
      const auto p = net(phi, static_cast<Target>(k));
      double val = 0.0, dval = 0.0;
      for (std::size_t i = 0; i < hidden_; ++i) {
        const double s = sigmoid(p.w[2 * i] * ts + p.w[2 * i + 1] * xs + p.b[i]);
        scratch.sig[k * hidden_ + i] = s;
        val += p.v[i] * s;
        dval += p.v[i] * (s * (1.0 - s)) * p.w[2 * i];
      }
      n[k] = {val, dval * scaling_.t_scale};
    }
    const double tm = t - horizon_;
    TrialBundle<double> b;
    b.x_hat = x0 + t * n[0].value;
    b.lambda_hat = lambda_T_ + tm * n[1].value;
    b.u_hat = n[2].value;
    b.x_hat_dot = n[0].value + t * n[0].dvalue_dt;
    b.lambda_hat_dot = n[1].value + tm * n[1].dvalue_dt;
    return b;
  }

  // grad += (∂bundle/∂Φ)ᵀ · g, using activations from trial_cached at the
  // same (t, x0).
  void backprop(std::span<const double> phi, double t, double x0, const Scratch& scratch,
                const BundleGrad& g, std::span<double> grad) const {
    const double tm = t - horizon_;
    // Upstream sensitivities to (n, ∂n/∂t) of each sub-network.
    const std::array<double, 3> d_value = {g[kX] * t + g[kXDot], g[kLambda] * tm + g[kLambdaDot],
                                           g[kU]};
    const std::array<double, 3> d_rate = {g[kXDot] * t, g[kLambdaDot] * tm, 0.0};
    const double st = scaling_.t_scale;
    const double ts = t * st;
    const double xs = x0 * scaling_.x0_scale;
    for (std::size_t k = 0; k < 3; ++k) {
      const std::size_t base = 3 * k;
      const auto w = layout_.slice(phi, base);
      const auto v = layout_.slice(phi, base + 2);
      auto gw = layout_.slice(grad, base);
      auto gb = layout_.slice(grad, base + 1);
      auto gv = layout_.slice(grad, base + 2);
      const double alpha = d_value[k];
      const double beta = d_rate[k] * st;
      for (std::size_t i = 0; i < hidden_; ++i) {
        const double s = scratch.sig[k * hidden_ + i];
        const double ds = s * (1.0 - s);
        const double wt = w[2 * i];
        gv[i] += alpha * s + beta * ds * wt;
        const double gz = v[i] * ds * (alpha + beta * wt * (1.0 - 2.0 * s));
        gw[2 * i] += gz * ts + beta * v[i] * ds;
        gw[2 * i + 1] += gz * xs;
        gb[i] += gz;
      }
    }
  }

 private:
  ProblemId problem_id_;
  std::size_t hidden_;
  double horizon_;
  double lambda_T_;
  InputScaling scaling_;
  diff::ParamLayout layout_;
};

template <class S>
TrialBundle<S> trial_eval(const Method1Model& m, std::span<const S> phi, double t, double x0) {
  check_time(t, m.horizon());
  return m.trial(phi, t, x0);
}

}  // namespace pmpnet
