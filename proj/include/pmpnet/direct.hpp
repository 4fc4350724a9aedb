#pragma once

// Direct Fourier baseline: a two-dimensional Fourier series in (t, x0).
// State and control are the same boundary-corrected series in t as the
// Fourier-layer model, with no costate and no hidden layer. Each time
// coefficient is itself a half-range series in y = (x0 − x0_min)/(x0_max − x0_min),
//
//   Θ_k(x0) = C[k][0] + Σ_{j=1..J} C[k][j] sin(jπy) + C[k][J+j] cos(jπy),
//
// with J = N for the state and J = M for the control.
//
// The dynamics are priced into the objective by a quadratic penalty (see
// direct_loss in pmploss.hpp).

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "pmpnet/diff.hpp"
#include "pmpnet/method2.hpp"
#include "pmpnet/problems.hpp"
#include "pmpnet/trial.hpp"

namespace pmpnet {

// 1, sin(πy)..sin(Jπy), cos(πy)..cos(Jπy).
inline std::vector<double> x0_features(double y, std::size_t terms) {
  std::vector<double> f(2 * terms + 1);
  f[0] = 1.0;
  for (std::size_t j = 1; j <= terms; ++j) {
    const double a = static_cast<double>(j) * y;
    f[j] = detail::sinpi(a);
    f[terms + j] = detail::cospi(a);
  }
  return f;
}

class DirectModel {
 public:
  DirectModel(const ProblemDef& p, std::size_t m_terms, std::size_t n_terms)
      : problem_id_(p.id),
        m_(m_terms),
        n_(n_terms),
        horizon_(p.horizon_T),
        x0_min_(p.x0_min),
        x0_max_(p.x0_max) {
    if (m_terms == 0 || n_terms == 0) throw ConfigError("Fourier term counts M, N must be >= 1");
    layout_.add("x/coef", coeff_count(Target::kState, n_), 2 * n_ + 1);
    layout_.add("u/coef", coeff_count(Target::kControl, m_), 2 * m_ + 1);
  }

  ProblemId problem_id() const { return problem_id_; }
  std::size_t m_terms() const { return m_; }
  std::size_t n_terms() const { return n_; }
  double horizon() const { return horizon_; }
  const diff::ParamLayout& layout() const { return layout_; }
  std::size_t param_count() const { return layout_.size(); }
  std::size_t max_terms() const { return std::max(m_, n_); }

  double normalized(double x0) const {
    const double span = x0_max_ - x0_min_;
    return span > 0.0 ? (x0 - x0_min_) / span : 0.0;
  }

  // Features for block 0 (state) or 1 (control).
  std::vector<double> features(double x0, std::size_t block) const {
    return x0_features(normalized(x0), block == 0 ? n_ : m_);
  }

  // Uniform [-0.1, 0.1].
  std::vector<double> initial_params(std::uint64_t seed) const {
    std::vector<double> phi(layout_.size());
    std::mt19937_64 rng(seed);
    fill_uniform(phi, -0.1, 0.1, rng);
    return phi;
  }

  // block 0 = state, block 1 = control.
  template <class S>
  std::vector<S> coeff_vector(std::span<const S> phi, std::size_t block,
                              const std::vector<double>& feats) const {
    const auto& b = layout_.block(block);
    const auto c = layout_.slice(phi, block);
    std::vector<S> theta(b.rows);
    for (std::size_t k = 0; k < b.rows; ++k) {
      S acc(0.0);
      for (std::size_t j = 0; j < b.cols; ++j) acc += c[k * b.cols + j] * feats[j];
      theta[k] = acc;
    }
    return theta;
  }

  template <class S>
  FourierCoeffs<S> coeffs(std::span<const S> phi, Target tg, double x0) const {
    if (tg == Target::kCostate) throw ConfigError("direct model has no costate");
    const std::size_t block = tg == Target::kState ? 0 : 1;
    const auto theta = coeff_vector(phi, block, features(x0, block));
    return unpack_coeffs<S>(tg, theta);
  }

  // λ̂ and its derivative are NaN: the direct model carries no costate.
  template <class S>
  TrialBundle<S> trial(std::span<const S> phi, const FourierBasis& basis, double x0) const {
    const auto cx = coeffs(phi, Target::kState, x0);
    const auto cu = coeffs(phi, Target::kControl, x0);
    return fourier_trial_eval<S>(cx, nullptr, cu, basis, 0.0, x0);
  }

  template <class S>
  TrialBundle<S> trial(std::span<const S> phi, double t, double x0) const {
    return trial(phi, FourierBasis(t, horizon_, max_terms()), x0);
  }

 private:
  ProblemId problem_id_;
  std::size_t m_;
  std::size_t n_;
  double horizon_;
  double x0_min_;
  double x0_max_;
  diff::ParamLayout layout_;
};

template <class S>
TrialBundle<S> trial_eval(const DirectModel& m, std::span<const S> phi, double t, double x0) {
  check_time(t, m.horizon());
  return m.trial(phi, t, x0);
}

}  // namespace pmpnet
