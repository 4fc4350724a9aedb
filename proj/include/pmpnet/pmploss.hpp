#pragma once

// PMP residual loss and the direct-method penalty loss.
//
// For a trial bundle at (t, x0) the residuals of the necessary conditions are
//
//   e1 = ∂Ĥ/∂x̂ + λ̂̇,   e2 = ∂Ĥ/∂λ̂ − ẋ̂,   e3 = ∂Ĥ/∂û
//
// and the loss is Σ over the grid of e1² + e2² + e3², unweighted and not
// averaged.
//
// Every loss has two evaluation paths: a generic template over the scalar
// type (plain doubles, or tape variables for reverse-mode checks), and an
// objective class with a hand-derived gradient used for training. The inner
// Jacobian d(e1² + e2² + e3²)/d(bundle) comes from a Dual<5> pass over the
// same residual template, so problem second derivatives are never written
// out by hand.

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pmpnet/detail/parallel.hpp"
#include "pmpnet/diff.hpp"
#include "pmpnet/direct.hpp"
#include "pmpnet/errors.hpp"
#include "pmpnet/grid.hpp"
#include "pmpnet/method1.hpp"
#include "pmpnet/method2.hpp"
#include "pmpnet/problems.hpp"
#include "pmpnet/trial.hpp"

namespace pmpnet {

template <class S>
struct ResidualTriple {
  S e1{};
  S e2{};
  S e3{};
};

template <class S>
ResidualTriple<S> residuals(const ProblemDef& p, const TrialBundle<S>& tb, double t,
                            double /*x0*/ = 0.0) {
  const auto h = hamiltonian(p, tb.x_hat, tb.u_hat, tb.lambda_hat, t);
  return {h.dH_dx + tb.lambda_hat_dot, h.dH_dlambda - tb.x_hat_dot, h.dH_du};
}

template <class S>
S point_energy(const ResidualTriple<S>& r) {
  return r.e1 * r.e1 + r.e2 * r.e2 + r.e3 * r.e3;
}

namespace detail {

inline std::string grid_point(double t, double x0) {
  return "t=" + std::to_string(t) + ", x0=" + std::to_string(x0);
}

inline void require_finite(double v, double t, double x0) {
  if (!std::isfinite(v)) throw NumericalError("non-finite residual", grid_point(t, x0));
}

inline void require_grid(const GridSpec& g) {
  if (g.time_points.empty() || g.x0_points.empty()) throw InputError("loss grid is empty");
}

}  // namespace detail

struct EnergyGrad {
  double energy = 0.0;
  BundleGrad grad{};
};

// e1² + e2² + e3² and its gradient with respect to the five bundle entries.
inline EnergyGrad residual_energy(const ProblemDef& p, const TrialBundle<double>& tb, double t) {
  using D = diff::Dual<5>;
  TrialBundle<D> d;
  d.x_hat = D::seed(tb.x_hat, kX);
  d.lambda_hat = D::seed(tb.lambda_hat, kLambda);
  d.u_hat = D::seed(tb.u_hat, kU);
  d.x_hat_dot = D::seed(tb.x_hat_dot, kXDot);
  d.lambda_hat_dot = D::seed(tb.lambda_hat_dot, kLambdaDot);
  const D e = point_energy(residuals(p, d, t));
  return {e.v, e.d};
}

// Σ_{(t, x0) ∈ grid} e1² + e2² + e3² for any model exposing trial<S>().
template <class Model, class S>
S pmp_loss(const Model& m, std::span<const S> phi, const ProblemDef& p, const GridSpec& grid) {
  detail::require_grid(grid);
  S total(0.0);
  for (double x0 : grid.x0_points) {
    for (double t : grid.time_points) {
      const S e = point_energy(residuals(p, m.trial(phi, t, x0), t));
      if constexpr (std::is_same_v<S, double>) detail::require_finite(e, t, x0);
      total += e;
    }
  }
  return total;
}

// Same loss over an explicit list of (t, x0) points.
template <class Model, class S>
S pmp_loss(const Model& m, std::span<const S> phi, const ProblemDef& p,
           std::span<const std::pair<double, double>> points) {
  if (points.empty()) throw InputError("loss grid is empty");
  S total(0.0);
  for (const auto& [t, x0] : points) {
    const S e = point_energy(residuals(p, m.trial(phi, t, x0), t));
    if constexpr (std::is_same_v<S, double>) detail::require_finite(e, t, x0);
    total += e;
  }
  return total;
}

namespace detail {

// Per-x0 partial sums reduced in x0 order.
struct ChunkResult {
  double loss = 0.0;
  std::vector<double> grad;
};

inline diff::GradResult reduce_chunks(std::vector<ChunkResult>& chunks, std::size_t n_params,
                                      bool with_grad) {
  diff::GradResult r;
  if (with_grad) r.grad.assign(n_params, 0.0);
  for (const auto& c : chunks) {
    r.loss += c.loss;
    if (with_grad)
      for (std::size_t i = 0; i < n_params; ++i) r.grad[i] += c.grad[i];
  }
  return r;
}

inline std::vector<double> trapezoid_weights(const std::vector<double>& times) {
  std::vector<double> w(times.size(), 0.0);
  for (std::size_t k = 0; k + 1 < times.size(); ++k) {
    const double h = times[k + 1] - times[k];
    w[k] += 0.5 * h;
    w[k + 1] += 0.5 * h;
  }
  return w;
}

inline double mean_spacing(const std::vector<double>& times) {
  if (times.size() < 2) return 0.0;
  return (times.back() - times.front()) / static_cast<double>(times.size() - 1);
}

}  // namespace detail

// PMP loss of the time-and-initial-condition network.
class Method1Objective {
 public:
  Method1Objective(Method1Model model, ProblemDef p, GridSpec grid)
      : model_(std::move(model)), p_(std::move(p)), grid_(std::move(grid)) {
    detail::require_grid(grid_);
  }

  const Method1Model& model() const { return model_; }
  const GridSpec& grid() const { return grid_; }

  double value(std::span<const double> phi) const { return evaluate(phi, false).loss; }
  diff::GradResult value_and_gradient(std::span<const double> phi) const {
    return evaluate(phi, true);
  }

  template <class S>
  S operator()(std::span<const S> phi) const {
    return pmp_loss(model_, phi, p_, grid_);
  }

 private:
  diff::GradResult evaluate(std::span<const double> phi, bool with_grad) const {
    const std::size_t n_x0 = grid_.x0_points.size();
    std::vector<detail::ChunkResult> chunks(n_x0);
    detail::for_each_chunk(n_x0, [&](std::size_t c) {
      auto& out = chunks[c];
      if (with_grad) out.grad.assign(model_.param_count(), 0.0);
      Method1Model::Scratch scratch;
      const double x0 = grid_.x0_points[c];
      for (double t : grid_.time_points) {
        const auto tb = model_.trial_cached(phi, t, x0, scratch);
        const auto eg = residual_energy(p_, tb, t);
        detail::require_finite(eg.energy, t, x0);
        out.loss += eg.energy;
        if (with_grad) model_.backprop(phi, t, x0, scratch, eg.grad, out.grad);
      }
    });
    return detail::reduce_chunks(chunks, model_.param_count(), with_grad);
  }

  Method1Model model_;
  ProblemDef p_;
  GridSpec grid_;
};

// PMP loss of the Fourier-layer network.
class Method2Objective {
 public:
  Method2Objective(Method2Model model, ProblemDef p, GridSpec grid)
      : model_(std::move(model)), p_(std::move(p)), grid_(std::move(grid)) {
    detail::require_grid(grid_);
    for (double t : grid_.time_points)
      bases_.emplace_back(t, model_.horizon(), model_.max_terms());
  }

  const Method2Model& model() const { return model_; }
  const GridSpec& grid() const { return grid_; }

  double value(std::span<const double> phi) const { return evaluate(phi, false).loss; }
  diff::GradResult value_and_gradient(std::span<const double> phi) const {
    return evaluate(phi, true);
  }

  template <class S>
  S operator()(std::span<const S> phi) const {
    return pmp_loss(model_, phi, p_, grid_);
  }

 private:
  diff::GradResult evaluate(std::span<const double> phi, bool with_grad) const {
    const std::size_t n_x0 = grid_.x0_points.size();
    std::vector<detail::ChunkResult> chunks(n_x0);
    detail::for_each_chunk(n_x0, [&](std::size_t c) {
      auto& out = chunks[c];
      Method2Model::Scratch sc;
      const double x0 = grid_.x0_points[c];
      model_.forward_x0(phi, x0, sc);
      for (std::size_t k = 0; k < bases_.size(); ++k) {
        const double t = grid_.time_points[k];
        const auto tb = model_.trial_cached(sc, bases_[k], x0);
        const auto eg = residual_energy(p_, tb, t);
        detail::require_finite(eg.energy, t, x0);
        out.loss += eg.energy;
        if (with_grad) model_.accumulate_theta(bases_[k], eg.grad, sc);
      }
      if (with_grad) {
        out.grad.assign(model_.param_count(), 0.0);
        model_.backprop_x0(phi, x0, sc, out.grad);
      }
    });
    return detail::reduce_chunks(chunks, model_.param_count(), with_grad);
  }

  Method2Model model_;
  ProblemDef p_;
  GridSpec grid_;
  std::vector<FourierBasis> bases_;
};

// ---------------------------------------------------------------------------
// Direct method
// ---------------------------------------------------------------------------

// One initial condition: trapezoidal ∫f + Ψ(x̂(T)) + μ·Δt·Σ_t (ẋ̂ − g)².
// `times` must run from 0 to T.
template <class S>
S direct_loss(const FourierCoeffs<S>& x_c, const FourierCoeffs<S>& u_c, const ProblemDef& p,
              const std::vector<double>& times, double x0, double penalty_mu) {
  if (!(penalty_mu > 0.0)) throw ConfigError("penalty_mu must be > 0");
  if (times.size() < 2) throw InputError("direct loss needs at least two time nodes");
  const auto w = detail::trapezoid_weights(times);
  const double dt = detail::mean_spacing(times);
  const std::size_t K = std::max(x_c.a.size(), u_c.a.size());
  S running(0.0), penalty(0.0), x_end(0.0);
  for (std::size_t k = 0; k < times.size(); ++k) {
    const FourierBasis basis(times[k], p.horizon_T, K);
    const auto tb = fourier_trial_eval<S>(x_c, nullptr, u_c, basis, 0.0, x0);
    running += w[k] * p.running_cost(tb.x_hat, tb.u_hat, times[k]);
    const S r = tb.x_hat_dot - p.dynamics(tb.x_hat, tb.u_hat, times[k]);
    penalty += r * r;
    x_end = tb.x_hat;
  }
  return running + p.terminal_cost(x_end) + penalty_mu * dt * penalty;
}

// Summed over the grid's initial conditions.
template <class S>
S direct_loss(const DirectModel& m, std::span<const S> phi, const ProblemDef& p,
              const GridSpec& grid, double penalty_mu) {
  detail::require_grid(grid);
  S total(0.0);
  for (double x0 : grid.x0_points) {
    const S v = direct_loss(m.coeffs(phi, Target::kState, x0), m.coeffs(phi, Target::kControl, x0),
                            p, grid.time_points, x0, penalty_mu);
    if constexpr (std::is_same_v<S, double>) detail::require_finite(v, p.horizon_T, x0);
    total += v;
  }
  return total;
}

class DirectObjective {
 public:
  DirectObjective(DirectModel model, ProblemDef p, GridSpec grid, double penalty_mu)
      : model_(std::move(model)), p_(std::move(p)), grid_(std::move(grid)), mu_(penalty_mu) {
    detail::require_grid(grid_);
    if (!(mu_ > 0.0)) throw ConfigError("penalty_mu must be > 0");
    for (double t : grid_.time_points)
      bases_.emplace_back(t, model_.horizon(), model_.max_terms());
    weights_ = detail::trapezoid_weights(grid_.time_points);
    dt_ = detail::mean_spacing(grid_.time_points);
  }

  const DirectModel& model() const { return model_; }
  double penalty_mu() const { return mu_; }

  double value(std::span<const double> phi) const { return evaluate(phi, false).loss; }
  diff::GradResult value_and_gradient(std::span<const double> phi) const {
    return evaluate(phi, true);
  }

  template <class S>
  S operator()(std::span<const S> phi) const {
    return direct_loss(model_, phi, p_, grid_, mu_);
  }

 private:
  diff::GradResult evaluate(std::span<const double> phi, bool with_grad) const {
    const std::size_t n_x0 = grid_.x0_points.size();
    const std::size_t N = model_.n_terms(), M = model_.m_terms();
    std::vector<detail::ChunkResult> chunks(n_x0);
    detail::for_each_chunk(n_x0, [&](std::size_t c) {
      auto& out = chunks[c];
      const double x0 = grid_.x0_points[c];
      const std::vector<double> feats[2] = {model_.features(x0, 0), model_.features(x0, 1)};
      const auto cx = unpack_coeffs<double>(Target::kState, model_.coeff_vector(phi, 0, feats[0]));
      const auto cu = unpack_coeffs<double>(Target::kControl, model_.coeff_vector(phi, 1, feats[1]));
      std::vector<double> dx(2 * N, 0.0), du(2 * M + 1, 0.0);
      double running = 0.0, penalty = 0.0;
      const std::size_t last = bases_.size() - 1;
      for (std::size_t k = 0; k < bases_.size(); ++k) {
        const double t = grid_.time_points[k];
        const auto& basis = bases_[k];
        const auto tb = fourier_trial_eval<double>(cx, nullptr, cu, basis, 0.0, x0);
        const double r = tb.x_hat_dot - p_.dynamics(tb.x_hat, tb.u_hat, t);
        running += weights_[k] * p_.running_cost(tb.x_hat, tb.u_hat, t);
        penalty += r * r;
        if (!with_grad) continue;
        const double pr = 2.0 * mu_ * dt_ * r;
        double gx = weights_[k] * p_.df_dx(tb.x_hat, tb.u_hat, t) -
                    pr * p_.dg_dx(tb.x_hat, tb.u_hat, t);
        if (k == last) gx += p_.dpsi_dx(tb.x_hat);
        const double gu = weights_[k] * p_.df_du(tb.x_hat, tb.u_hat, t) -
                          pr * p_.dg_du(tb.x_hat, tb.u_hat, t);
        const double gxd = pr;
        for (std::size_t n = 0; n < N; ++n) {
          const double s = basis.s[n], co = basis.c[n], w = basis.rate[n];
          dx[n] += gx * s + gxd * w * co;
          dx[N + n] += gx * (co - 1.0) - gxd * w * s;
        }
        du[0] += gu;
        for (std::size_t m = 0; m < M; ++m) {
          du[1 + m] += gu * basis.s[m];
          du[1 + M + m] += gu * basis.c[m];
        }
      }
      const FourierBasis end_basis = bases_[last];
      const double x_end = fourier_trial_eval<double>(cx, nullptr, cu, end_basis, 0.0, x0).x_hat;
      out.loss = running + p_.terminal_cost(x_end) + mu_ * dt_ * penalty;
      detail::require_finite(out.loss, p_.horizon_T, x0);
      if (!with_grad) return;
      out.grad.assign(model_.param_count(), 0.0);
      std::span<double> g(out.grad);
      const std::vector<double>* dth[2] = {&dx, &du};
      for (std::size_t blk = 0; blk < 2; ++blk) {
        const auto& b = model_.layout().block(blk);
        auto gc = model_.layout().slice(g, blk);
        for (std::size_t k = 0; k < b.rows; ++k)
          for (std::size_t j = 0; j < b.cols; ++j) gc[k * b.cols + j] += (*dth[blk])[k] * feats[blk][j];
      }
    });
    return detail::reduce_chunks(chunks, model_.param_count(), with_grad);
  }

  DirectModel model_;
  ProblemDef p_;
  GridSpec grid_;
  double mu_;
  std::vector<FourierBasis> bases_;
  std::vector<double> weights_;
  double dt_ = 0.0;
};

}  // namespace pmpnet
