#pragma once

// Initial-condition network with a Fourier output layer. For each target a
// sigmoid network maps x0 to a coefficient vector
//
//   Θ(x0) = vᵀσ(w·x0 + b1) + b2
//
// and the trial functions are finite half-range Fourier series on [0, T]:
//
//   û = a0 + Σ_m a_m sin(mπt/T) + b_m cos(mπt/T)
//   x̂ = (x0 − Σ b_n) + Σ_n a_n sin(nπt/T) + b_n cos(nπt/T)
//   λ̂ = (λ_T − Σ b_n (−1)ⁿ) + Σ_n a_n sin(nπt/T) + b_n cos(nπt/T)
//
// The shifted constants give x̂(0) = x0 and λ̂(T) = λ_T identically. The
// series are evaluated in the equivalent form x0 + Σ a_n s_n + b_n (c_n − 1)
// so the boundary values come out exact in floating point too.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "pmpnet/diff.hpp"
#include "pmpnet/problems.hpp"
#include "pmpnet/trial.hpp"

namespace pmpnet {

namespace detail {

// sin(πr) and cos(πr), exact at integer and half-integer r.
inline double sinpi(double r) {
  double q = std::fmod(r, 2.0);
  if (q < 0) q += 2.0;
  if (q == 0.0 || q == 1.0) return 0.0;
  if (q == 0.5) return 1.0;
  if (q == 1.5) return -1.0;
  return std::sin(std::numbers::pi * q);
}

inline double cospi(double r) {
  double q = std::fmod(r, 2.0);
  if (q < 0) q += 2.0;
  if (q == 0.5 || q == 1.5) return 0.0;
  if (q == 0.0) return 1.0;
  if (q == 1.0) return -1.0;
  return std::cos(std::numbers::pi * q);
}

}  // namespace detail

// sin(kπt/T), cos(kπt/T) for k = 1..K at one time, plus the angular rates kπ/T.
struct FourierBasis {
  std::vector<double> s, c, rate;

  FourierBasis() = default;
  FourierBasis(double t, double horizon, std::size_t K) : s(K), c(K), rate(K) {
    const double r = t / horizon;
    for (std::size_t k = 1; k <= K; ++k) {
      const double kd = static_cast<double>(k);
      s[k - 1] = detail::sinpi(kd * r);
      c[k - 1] = detail::cospi(kd * r);
      rate[k - 1] = kd * std::numbers::pi / horizon;
    }
  }
  std::size_t size() const { return s.size(); }
};

inline double alternating_sign(std::size_t n) { return (n % 2 == 0) ? 1.0 : -1.0; }

// One Fourier-layer sub-network. v is K×I row-major.
template <class S>
struct FourierLayerParams {
  std::span<const S> w;
  std::span<const S> b1;
  std::span<const S> v;
  std::span<const S> b2;
  std::size_t width() const { return w.size(); }
  std::size_t outputs() const { return b2.size(); }
};

// Coefficients of one trial series. `a` multiplies sines, `b` cosines; a0
// is the free constant of the control series and unused otherwise.
template <class S>
struct FourierCoeffs {
  Target target = Target::kControl;
  S a0{};
  std::vector<S> a;
  std::vector<S> b;
};

inline std::size_t coeff_count(Target tg, std::size_t terms) {
  return tg == Target::kControl ? 2 * terms + 1 : 2 * terms;
}

// Splits a flat Θ into FourierCoeffs. Control: [a0, a1..aM, b1..bM];
// state/costate: [a1..aN, b1..bN].
template <class S>
FourierCoeffs<S> unpack_coeffs(Target tg, std::span<const S> theta) {
  FourierCoeffs<S> c;
  c.target = tg;
  std::size_t off = 0;
  if (tg == Target::kControl) {
    c.a0 = theta[0];
    off = 1;
  } else {
    c.a0 = S(0.0);
  }
  const std::size_t n = (theta.size() - off) / 2;
  c.a.assign(theta.begin() + static_cast<std::ptrdiff_t>(off),
             theta.begin() + static_cast<std::ptrdiff_t>(off + n));
  c.b.assign(theta.begin() + static_cast<std::ptrdiff_t>(off + n), theta.end());
  return c;
}

// Θ(x0) = vᵀσ(w·x0 + b1) + b2; x0 already scaled.
template <class S>
std::vector<S> coeff_vector(const FourierLayerParams<S>& p, double x0_scaled) {
  const std::size_t I = p.width();
  std::vector<S> sig(I);
  for (std::size_t i = 0; i < I; ++i) sig[i] = sigmoid(p.w[i] * x0_scaled + p.b1[i]);
  std::vector<S> theta(p.outputs());
  for (std::size_t k = 0; k < theta.size(); ++k) {
    S acc = p.b2[k];
    for (std::size_t i = 0; i < I; ++i) acc += p.v[k * I + i] * sig[i];
    theta[k] = acc;
  }
  return theta;
}

template <class S>
FourierCoeffs<S> coeffs_of(const FourierLayerParams<S>& p, Target tg, double x0,
                           const InputScaling& scaling = {}) {
  const auto theta = coeff_vector(p, x0 * scaling.x0_scale);
  return unpack_coeffs<S>(tg, theta);
}

namespace detail {

// Value and time derivative of Σ a_k s_k + b_k (c_k − shift_k).
template <class S>
std::pair<S, S> series(const FourierCoeffs<S>& cf, const FourierBasis& basis, bool costate_shift,
                       bool state_shift) {
  S val(0.0), rate(0.0);
  for (std::size_t k = 0; k < cf.a.size(); ++k) {
    const double shift = state_shift ? 1.0 : (costate_shift ? alternating_sign(k + 1) : 0.0);
    val += cf.a[k] * basis.s[k] + cf.b[k] * (basis.c[k] - shift);
    rate += basis.rate[k] * (cf.a[k] * basis.c[k] - cf.b[k] * basis.s[k]);
  }
  return {val, rate};
}

}  // namespace detail

// Series-with-basis form; `basis` must hold at least max(M, N) terms.
template <class S>
TrialBundle<S> fourier_trial_eval(const FourierCoeffs<S>& x_c, const FourierCoeffs<S>* lambda_c,
                                  const FourierCoeffs<S>& u_c, const FourierBasis& basis,
                                  double lambda_T, double x0) {
  TrialBundle<S> b;
  const auto [xv, xr] = detail::series(x_c, basis, false, true);
  b.x_hat = x0 + xv;
  b.x_hat_dot = xr;
  const auto [uv, ur] = detail::series(u_c, basis, false, false);
  (void)ur;
  b.u_hat = u_c.a0 + uv;
  if (lambda_c) {
    const auto [lv, lr] = detail::series(*lambda_c, basis, true, false);
    b.lambda_hat = lambda_T + lv;
    b.lambda_hat_dot = lr;
  } else {
    b.lambda_hat = S(std::nan(""));
    b.lambda_hat_dot = S(std::nan(""));
  }
  return b;
}

template <class S>
TrialBundle<S> fourier_trial_eval(const FourierCoeffs<S>& x_c, const FourierCoeffs<S>& lambda_c,
                                  const FourierCoeffs<S>& u_c, const ProblemDef& p, double t,
                                  double x0) {
  check_time(t, p.horizon_T);
  const std::size_t K = std::max({x_c.a.size(), lambda_c.a.size(), u_c.a.size()});
  const FourierBasis basis(t, p.horizon_T, K);
  return fourier_trial_eval(x_c, &lambda_c, u_c, basis, p.lambda_T, x0);
}

class Method2Model {
 public:
  Method2Model(const ProblemDef& p, std::size_t hidden, std::size_t m_terms, std::size_t n_terms)
      : Method2Model(p, hidden, m_terms, n_terms, default_scaling(p)) {}

  Method2Model(const ProblemDef& p, std::size_t hidden, std::size_t m_terms, std::size_t n_terms,
               InputScaling scaling)
      : problem_id_(p.id),
        hidden_(hidden),
        m_(m_terms),
        n_(n_terms),
        horizon_(p.horizon_T),
        lambda_T_(p.lambda_T),
        scaling_(scaling) {
    if (hidden == 0) throw ConfigError("hidden width I must be >= 1");
    if (m_terms == 0 || n_terms == 0) throw ConfigError("Fourier term counts M, N must be >= 1");
    for (Target tg : {Target::kState, Target::kCostate, Target::kControl}) {
      const std::string pre = target_prefix(tg);
      const std::size_t K = outputs(tg);
      layout_.add(pre + "/w", hidden, 1);
      layout_.add(pre + "/b1", hidden, 1);
      layout_.add(pre + "/v", K, hidden);
      layout_.add(pre + "/b2", K, 1);
    }
  }

  ProblemId problem_id() const { return problem_id_; }
  std::size_t hidden() const { return hidden_; }
  std::size_t m_terms() const { return m_; }
  std::size_t n_terms() const { return n_; }
  double horizon() const { return horizon_; }
  double lambda_T() const { return lambda_T_; }
  const InputScaling& scaling() const { return scaling_; }
  const diff::ParamLayout& layout() const { return layout_; }
  std::size_t param_count() const { return layout_.size(); }
  std::size_t max_terms() const { return std::max(m_, n_); }

  std::size_t outputs(Target tg) const {
    return coeff_count(tg, tg == Target::kControl ? m_ : n_);
  }

  template <class S>
  FourierLayerParams<S> layer(std::span<const S> phi, Target tg) const {
    const std::size_t base = 4 * static_cast<std::size_t>(tg);
    return {layout_.slice(phi, base), layout_.slice(phi, base + 1), layout_.slice(phi, base + 2),
            layout_.slice(phi, base + 3)};
  }

  // w, b1, v uniform [-1, 1]; b2 zero.
  std::vector<double> initial_params(std::uint64_t seed) const {
    std::vector<double> phi(layout_.size(), 0.0);
    std::mt19937_64 rng(seed);
    std::span<double> all(phi);
    for (std::size_t k = 0; k < 3; ++k)
      for (std::size_t j = 0; j < 3; ++j) fill_uniform(layout_.slice(all, 4 * k + j), -1.0, 1.0, rng);
    return phi;
  }

  template <class S>
  FourierCoeffs<S> coeffs(std::span<const S> phi, Target tg, double x0) const {
    return coeffs_of(layer(phi, tg), tg, x0, scaling_);
  }

  template <class S>
  TrialBundle<S> trial(std::span<const S> phi, const FourierBasis& basis, double x0) const {
    const auto cx = coeffs(phi, Target::kState, x0);
    const auto cl = coeffs(phi, Target::kCostate, x0);
    const auto cu = coeffs(phi, Target::kControl, x0);
    return fourier_trial_eval(cx, &cl, cu, basis, lambda_T_, x0);
  }

  template <class S>
  TrialBundle<S> trial(std::span<const S> phi, double t, double x0) const {
    return trial(phi, FourierBasis(t, horizon_, max_terms()), x0);
  }

  // Per-x0 cache of hidden activations and coefficient vectors.
  struct Scratch {
    std::array<std::vector<double>, 3> sig;
    std::array<std::vector<double>, 3> theta;
    std::array<FourierCoeffs<double>, 3> coeffs;
    std::array<std::vector<double>, 3> dtheta;
  };

  void forward_x0(std::span<const double> phi, double x0, Scratch& sc) const {
    const double xs = x0 * scaling_.x0_scale;
    for (std::size_t k = 0; k < 3; ++k) {
      const auto tg = static_cast<Target>(k);
      const auto p = layer(phi, tg);
      auto& sig = sc.sig[k];
      sig.resize(hidden_);
      for (std::size_t i = 0; i < hidden_; ++i) sig[i] = sigmoid(p.w[i] * xs + p.b1[i]);
      auto& th = sc.theta[k];
      th.resize(p.outputs());
      for (std::size_t o = 0; o < th.size(); ++o) {
        double acc = p.b2[o];
        for (std::size_t i = 0; i < hidden_; ++i) acc += p.v[o * hidden_ + i] * sig[i];
        th[o] = acc;
      }
      sc.coeffs[k] = unpack_coeffs<double>(tg, th);
      sc.dtheta[k].assign(th.size(), 0.0);
    }
  }

  TrialBundle<double> trial_cached(const Scratch& sc, const FourierBasis& basis, double x0) const {
    return fourier_trial_eval(sc.coeffs[0], &sc.coeffs[1], sc.coeffs[2], basis, lambda_T_, x0);
  }

  // dΘ += (∂bundle/∂Θ)ᵀ g at one time node.
  void accumulate_theta(const FourierBasis& basis, const BundleGrad& g, Scratch& sc) const {
    auto& dx = sc.dtheta[0];
    auto& dl = sc.dtheta[1];
    auto& du = sc.dtheta[2];
    for (std::size_t n = 0; n < n_; ++n) {
      const double s = basis.s[n], c = basis.c[n], w = basis.rate[n];
      dx[n] += g[kX] * s + g[kXDot] * w * c;
      dx[n_ + n] += g[kX] * (c - 1.0) - g[kXDot] * w * s;
      dl[n] += g[kLambda] * s + g[kLambdaDot] * w * c;
      dl[n_ + n] += g[kLambda] * (c - alternating_sign(n + 1)) - g[kLambdaDot] * w * s;
    }
    du[0] += g[kU];
    for (std::size_t m = 0; m < m_; ++m) {
      du[1 + m] += g[kU] * basis.s[m];
      du[1 + m_ + m] += g[kU] * basis.c[m];
    }
  }

  // grad += (∂Θ/∂Φ)ᵀ dΘ for the cached x0.
  void backprop_x0(std::span<const double> phi, double x0, const Scratch& sc,
                   std::span<double> grad) const {
    const double xs = x0 * scaling_.x0_scale;
    for (std::size_t k = 0; k < 3; ++k) {
      const std::size_t base = 4 * k;
      const auto v = layout_.slice(phi, base + 2);
      auto gw = layout_.slice(grad, base);
      auto gb1 = layout_.slice(grad, base + 1);
      auto gv = layout_.slice(grad, base + 2);
      auto gb2 = layout_.slice(grad, base + 3);
      const auto& sig = sc.sig[k];
      const auto& dth = sc.dtheta[k];
      for (std::size_t o = 0; o < dth.size(); ++o) {
        gb2[o] += dth[o];
        for (std::size_t i = 0; i < hidden_; ++i) gv[o * hidden_ + i] += dth[o] * sig[i];
      }
      for (std::size_t i = 0; i < hidden_; ++i) {
        double acc = 0.0;
        for (std::size_t o = 0; o < dth.size(); ++o) acc += dth[o] * v[o * hidden_ + i];
        const double gz = acc * sig[i] * (1.0 - sig[i]);
        gw[i] += gz * xs;
        gb1[i] += gz;
      }
    }
  }

 private:
  ProblemId problem_id_;
  std::size_t hidden_;
  std::size_t m_;
  std::size_t n_;
  double horizon_;
  double lambda_T_;
  InputScaling scaling_;
  diff::ParamLayout layout_;
};

template <class S>
TrialBundle<S> trial_eval(const Method2Model& m, std::span<const S> phi, double t, double x0) {
  check_time(t, m.horizon());
  return m.trial(phi, t, x0);
}

}  // namespace pmpnet
