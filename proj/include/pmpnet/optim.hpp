#pragma once

#include <cmath>
#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <vector>

#include "pmpnet/diff.hpp"

namespace pmpnet::optim {

struct AdamSettings {
  double learning_rate = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double decay_factor = 0.5;
  std::size_t decay_every = 2000;
  std::size_t iterations = 20000;
};

// Step size after `iteration` completed steps: lr · factor^⌊iteration / every⌋.
inline double scheduled_rate(const AdamSettings& s, std::size_t iteration) {
  if (s.decay_every == 0) return s.learning_rate;
  return s.learning_rate *
         std::pow(s.decay_factor, static_cast<double>(iteration / s.decay_every));
}

class Adam {
 public:
  Adam(std::size_t n, AdamSettings s) : s_(s), m_(n, 0.0), v_(n, 0.0) {}

  void step(std::span<double> x, std::span<const double> g) {
    const double lr = scheduled_rate(s_, t_);
    ++t_;
    const double c1 = 1.0 - std::pow(s_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(s_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < x.size(); ++i) {
      m_[i] = s_.beta1 * m_[i] + (1.0 - s_.beta1) * g[i];
      v_[i] = s_.beta2 * v_[i] + (1.0 - s_.beta2) * g[i] * g[i];
      x[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + s_.epsilon);
    }
  }

  std::size_t steps() const { return t_; }

 private:
  AdamSettings s_;
  std::vector<double> m_, v_;
  std::size_t t_ = 0;
};

struct LbfgsSettings {
  std::size_t iterations = 5000;
  std::size_t memory = 10;
  double armijo = 1e-4;
  std::size_t max_backtracks = 40;
  // Stop once the relative decrease over one iteration stays below this for
  // `patience` consecutive iterations.
  double rel_tol = 1e-14;
  std::size_t patience = 10;
};

// Limited-memory BFGS with backtracking Armijo line search. `fg` returns the
// loss and gradient at a point; `on_iter` sees each accepted loss. Returns
// the number of accepted iterations. x is updated in place and the loss
// never increases.
template <class Fg>
std::size_t lbfgs(Fg&& fg, std::vector<double>& x, const LbfgsSettings& s,
                  const std::function<void(double)>& on_iter = {}) {
  const std::size_t n = x.size();
  auto dot = [n](const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
  };
  diff::GradResult cur = fg(std::span<const double>(x));
  std::deque<std::vector<double>> S, Y;
  std::deque<double> rho;
  std::vector<double> d(n), x_new(n), alpha;
  std::size_t stall = 0, accepted = 0;

  for (std::size_t it = 0; it < s.iterations; ++it) {
    // Two-loop recursion: d = −H·g.
    d = cur.grad;
    alpha.assign(S.size(), 0.0);
    for (std::size_t j = S.size(); j-- > 0;) {
      alpha[j] = rho[j] * dot(S[j], d);
      for (std::size_t i = 0; i < n; ++i) d[i] -= alpha[j] * Y[j][i];
    }
    double gamma = 1.0;
    if (!S.empty()) gamma = dot(S.back(), Y.back()) / dot(Y.back(), Y.back());
    else gamma = 1.0 / std::max(1.0, std::sqrt(dot(cur.grad, cur.grad)));
    for (auto& di : d) di *= gamma;
    for (std::size_t j = 0; j < S.size(); ++j) {
      const double beta = rho[j] * dot(Y[j], d);
      for (std::size_t i = 0; i < n; ++i) d[i] += (alpha[j] - beta) * S[j][i];
    }
    for (auto& di : d) di = -di;

    double slope = dot(cur.grad, d);
    if (!(slope < 0.0)) {
      // Not a descent direction: restart from steepest descent.
      S.clear();
      Y.clear();
      rho.clear();
      const double gn = std::sqrt(dot(cur.grad, cur.grad));
      if (gn == 0.0) break;
      for (std::size_t i = 0; i < n; ++i) d[i] = -cur.grad[i] / std::max(1.0, gn);
      slope = dot(cur.grad, d);
    }

    double step = 1.0;
    bool ok = false;
    diff::GradResult next;
    for (std::size_t b = 0; b < s.max_backtracks; ++b) {
      for (std::size_t i = 0; i < n; ++i) x_new[i] = x[i] + step * d[i];
      next = fg(std::span<const double>(x_new));
      if (std::isfinite(next.loss) && next.loss <= cur.loss + s.armijo * step * slope) {
        ok = true;
        break;
      }
      step *= 0.5;
    }
    if (!ok) break;

    std::vector<double> sv(n), yv(n);
    for (std::size_t i = 0; i < n; ++i) {
      sv[i] = x_new[i] - x[i];
      yv[i] = next.grad[i] - cur.grad[i];
    }
    const double sy = dot(sv, yv);
    if (sy > 1e-12 * std::sqrt(dot(sv, sv) * dot(yv, yv))) {
      S.push_back(std::move(sv));
      Y.push_back(std::move(yv));
      rho.push_back(1.0 / sy);
      if (S.size() > s.memory) {
        S.pop_front();
        Y.pop_front();
        rho.pop_front();
      }
    }

    const double rel = (cur.loss - next.loss) / std::max(std::abs(cur.loss), 1e-300);
    x = x_new;
    cur = std::move(next);
    ++accepted;
    if (on_iter) on_iter(cur.loss);
    stall = rel < s.rel_tol ? stall + 1 : 0;
    if (stall >= s.patience || cur.loss == 0.0) break;
  }
  return accepted;
}

}  // namespace pmpnet::optim
