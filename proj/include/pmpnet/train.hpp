#pragma once

// Grids, training, metrics, and the benchmark experiment registry.

#include <array>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "pmpnet/diff.hpp"
#include "pmpnet/direct.hpp"
#include "pmpnet/errors.hpp"
#include "pmpnet/grid.hpp"
#include "pmpnet/method1.hpp"
#include "pmpnet/method2.hpp"
#include "pmpnet/optim.hpp"
#include "pmpnet/oracle.hpp"
#include "pmpnet/pmploss.hpp"
#include "pmpnet/problems.hpp"

namespace pmpnet {

enum class Method { kMethod1, kFourierLayer, kDirect };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::kMethod1:
      return "method1";
    case Method::kFourierLayer:
      return "fourier-layer";
    case Method::kDirect:
      return "direct";
  }
  return "?";
}

inline Method parse_method(std::string_view s) {
  if (s == "method1" || s == "1") return Method::kMethod1;
  if (s == "fourier-layer" || s == "method2" || s == "2") return Method::kFourierLayer;
  if (s == "direct") return Method::kDirect;
  throw ConfigError("unknown method '" + std::string(s) + "'");
}

struct TrainingSettings {
  optim::AdamSettings adam;
  bool polish = true;
  optim::LbfgsSettings lbfgs;
  std::size_t n_time = 100;
  double penalty_mu = 100.0;
};

struct ExperimentSpec {
  int exp_id = 0;  // 0 for ad hoc runs
  Method method = Method::kMethod1;
  ProblemId problem = ProblemId::kOcp1;
  std::optional<std::size_t> M;
  std::optional<std::size_t> N;
  std::optional<std::size_t> I;
  std::uint64_t seed = 1;
  TrainingSettings settings;

  // Method 1 takes I only; the Fourier layer takes M, N, I; direct takes M, N.
  void validate() const {
    auto need = [](bool ok, const char* what) {
      if (!ok) throw ConfigError(what);
    };
    switch (method) {
      case Method::kMethod1:
        need(I.has_value(), "method1 requires I");
        need(!M && !N, "method1 does not take M or N");
        break;
      case Method::kFourierLayer:
        need(I && M && N, "fourier-layer requires M, N and I");
        break;
      case Method::kDirect:
        need(M && N, "direct requires M and N");
        need(!I, "direct does not take I");
        break;
    }
    if (I) need(*I >= 1, "I must be >= 1");
    if (M) need(*M >= 1, "M must be >= 1");
    if (N) need(*N >= 1, "N must be >= 1");
    need(settings.n_time >= 2, "n_time must be >= 2");
    need(settings.penalty_mu > 0.0, "penalty_mu must be > 0");
  }
};

using Architecture = std::variant<Method1Model, Method2Model, DirectModel>;

// Everything needed to rebuild and evaluate a trained model.
struct TrainedModel {
  Method method = Method::kMethod1;
  ProblemId problem = ProblemId::kOcp1;
  std::size_t I = 0;  // 0 when absent
  std::size_t M = 0;
  std::size_t N = 0;
  std::uint64_t seed = 1;
  int exp_id = 0;
  InputScaling scaling;
  double final_loss = std::numeric_limits<double>::quiet_NaN();
  diff::ParamVector params;
};

inline Architecture build_architecture(Method method, const ProblemDef& p, std::size_t I,
                                       std::size_t M, std::size_t N,
                                       const InputScaling& scaling) {
  switch (method) {
    case Method::kMethod1:
      return Method1Model(p, I, scaling);
    case Method::kFourierLayer:
      return Method2Model(p, I, M, N, scaling);
    case Method::kDirect:
      return DirectModel(p, M, N);
  }
  throw ConfigError("unknown method");
}

inline Architecture build_architecture(const TrainedModel& m, const ProblemDef& p) {
  return build_architecture(m.method, p, m.I, m.M, m.N, m.scaling);
}

inline const diff::ParamLayout& layout_of(const Architecture& a) {
  return std::visit([](const auto& m) -> const diff::ParamLayout& { return m.layout(); }, a);
}

inline TrialBundle<double> trial_eval(const Architecture& a, std::span<const double> phi, double t,
                                      double x0) {
  return std::visit([&](const auto& m) { return trial_eval(m, phi, t, x0); }, a);
}

// Evaluated trial values of a trained model.
inline TrialBundle<double> trial_eval(const TrainedModel& m, double t, double x0) {
  const auto p = make_problem(m.problem);
  return trial_eval(build_architecture(m, p), m.params.view(), t, x0);
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

struct MetricsReport {
  double rmse_u = 0.0;
  double mae_u = 0.0;
  double mape_u = 0.0;
  double j_pct_error = 0.0;
  double final_loss = std::numeric_limits<double>::quiet_NaN();
  GridKind grid_kind = GridKind::kTraining;
  std::size_t n_points = 0;
  std::size_t mape_excluded = 0;  // points with |u*| <= kMapeGuard
  std::size_t n_x0 = 0;
  std::size_t j_excluded = 0;  // initial conditions with |J*| <= kJGuard
};

inline constexpr double kMapeGuard = 1e-9;
inline constexpr double kJGuard = 1e-12;

// RMSE / MAE / MAPE of u_hat against u_star. MAPE skips |u*| <= kMapeGuard
// and is NaN if every point is skipped.
inline void control_errors(std::span<const double> u_hat, std::span<const double> u_star,
                           MetricsReport& rep) {
  if (u_hat.size() != u_star.size()) throw InputError("control arrays differ in length");
  if (u_hat.empty()) throw InputError("no points to score");
  double sq = 0.0, ab = 0.0, pct = 0.0;
  std::size_t kept = 0;
  for (std::size_t i = 0; i < u_hat.size(); ++i) {
    const double e = std::abs(u_hat[i] - u_star[i]);
    sq += e * e;
    ab += e;
    if (std::abs(u_star[i]) > kMapeGuard) {
      pct += e / std::abs(u_star[i]);
      ++kept;
    }
  }
  const double n = static_cast<double>(u_hat.size());
  rep.n_points = u_hat.size();
  rep.rmse_u = std::sqrt(sq / n);
  rep.mae_u = ab / n;
  rep.mape_excluded = u_hat.size() - kept;
  rep.mape_u = kept ? 100.0 * pct / static_cast<double>(kept)
                    : std::numeric_limits<double>::quiet_NaN();
}

// Mean of 100·|J − J*|/|J*| over initial conditions with |J*| > kJGuard.
inline void cost_errors(std::span<const double> J_hat, std::span<const double> J_star,
                        MetricsReport& rep) {
  if (J_hat.size() != J_star.size()) throw InputError("cost arrays differ in length");
  double acc = 0.0;
  std::size_t kept = 0;
  for (std::size_t i = 0; i < J_hat.size(); ++i) {
    if (std::abs(J_star[i]) <= kJGuard) continue;
    acc += 100.0 * std::abs(J_hat[i] - J_star[i]) / std::abs(J_star[i]);
    ++kept;
  }
  rep.n_x0 = J_hat.size();
  rep.j_excluded = J_hat.size() - kept;
  rep.j_pct_error = kept ? acc / static_cast<double>(kept) : std::numeric_limits<double>::quiet_NaN();
}

// Scores a model on a grid against the oracle. J for the model comes from
// its own (x̂, û) trajectories via cost_of.
inline MetricsReport evaluate(const Architecture& arch, std::span<const double> phi,
                              const ProblemDef& p, const GridSpec& grid,
                              double final_loss = std::numeric_limits<double>::quiet_NaN()) {
  std::vector<double> u_hat, u_star, J_hat, J_star;
  const std::size_t nt = grid.time_points.size();
  u_hat.reserve(grid.size());
  u_star.reserve(grid.size());
  std::vector<double> xs(nt), us(nt);
  for (double x0 : grid.x0_points) {
    const auto ref = reference_solution(p, x0, grid.time_points);
    for (std::size_t k = 0; k < nt; ++k) {
      const auto tb = trial_eval(arch, phi, grid.time_points[k], x0);
      xs[k] = tb.x_hat;
      us[k] = tb.u_hat;
      u_hat.push_back(tb.u_hat);
      u_star.push_back(ref.u_star[k]);
    }
    J_hat.push_back(cost_of(p, xs, us, grid.time_points));
    J_star.push_back(ref.J_star);
  }
  MetricsReport rep;
  rep.grid_kind = grid.kind;
  rep.final_loss = final_loss;
  control_errors(u_hat, u_star, rep);
  cost_errors(J_hat, J_star, rep);
  return rep;
}

inline MetricsReport evaluate(const TrainedModel& m, const GridSpec& grid) {
  const auto p = make_problem(m.problem);
  return evaluate(build_architecture(m, p), m.params.view(), p, grid, m.final_loss);
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct FitResult {
  TrainedModel model;
  std::vector<double> loss_history;
  double initial_loss = 0.0;
  std::size_t adam_steps = 0;
  std::size_t polish_steps = 0;
};

// Called every `progress_every` Adam steps and after polishing.
using ProgressFn = std::function<void(std::string_view phase, std::size_t iter, double loss)>;

namespace detail {

template <class Obj>
FitResult run_fit(const Obj& obj, std::vector<double> phi, const TrainingSettings& s,
                  const ProgressFn& progress, std::size_t progress_every) {
  FitResult out;
  std::vector<double> best = phi;
  double best_loss = std::numeric_limits<double>::infinity();
  optim::Adam adam(phi.size(), s.adam);
  auto eval = [&](std::span<const double> x, std::size_t it) {
    try {
      auto r = obj.value_and_gradient(x);
      if (!std::isfinite(r.loss)) throw NumericalError("non-finite loss", "loss");
      for (double g : r.grad)
        if (!std::isfinite(g)) throw NumericalError("non-finite gradient", "gradient");
      return r;
    } catch (const NumericalError& e) {
      throw TrainingError(std::string("training diverged: ") + e.what(), it, best);
    }
  };
  for (std::size_t it = 0; it < s.adam.iterations; ++it) {
    const auto r = eval(phi, it);
    if (it == 0) out.initial_loss = r.loss;
    out.loss_history.push_back(r.loss);
    if (r.loss < best_loss) {
      best_loss = r.loss;
      best = phi;
    }
    if (progress && progress_every && it % progress_every == 0) progress("adam", it, r.loss);
    adam.step(phi, r.grad);
    ++out.adam_steps;
  }
  {
    const auto r = eval(phi, s.adam.iterations);
    if (out.loss_history.empty()) out.initial_loss = r.loss;
    out.loss_history.push_back(r.loss);
    if (r.loss < best_loss) {
      best_loss = r.loss;
      best = phi;
    }
  }
  if (s.polish && s.lbfgs.iterations > 0) {
    auto fg = [&](std::span<const double> x) {
      try {
        return obj.value_and_gradient(x);
      } catch (const NumericalError&) {
        // Treated as a failed line-search trial.
        return diff::GradResult{std::numeric_limits<double>::infinity(),
                                std::vector<double>(x.size(), 0.0)};
      }
    };
    out.polish_steps = optim::lbfgs(fg, best, s.lbfgs,
                                    [&](double l) { out.loss_history.push_back(l); });
    best_loss = obj.value(best);
    if (progress) progress("polish", out.polish_steps, best_loss);
  }
  out.model.final_loss = best_loss;
  out.model.params.values = std::move(best);
  return out;
}

}  // namespace detail

inline FitResult fit(const ExperimentSpec& spec, const ProgressFn& progress = {},
                     std::size_t progress_every = 1000) {
  spec.validate();
  const auto p = make_problem(spec.problem);
  const auto grids = make_grids(p, spec.settings.n_time);
  const std::size_t I = spec.I.value_or(0), M = spec.M.value_or(0), N = spec.N.value_or(0);
  const InputScaling scaling = default_scaling(p);
  const Architecture arch = build_architecture(spec.method, p, I, M, N, scaling);

  FitResult res = std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        auto phi = m.initial_params(spec.seed);
        if constexpr (std::is_same_v<T, Method1Model>) {
          return detail::run_fit(Method1Objective(m, p, grids.first), std::move(phi),
                                 spec.settings, progress, progress_every);
        } else if constexpr (std::is_same_v<T, Method2Model>) {
          return detail::run_fit(Method2Objective(m, p, grids.first), std::move(phi),
                                 spec.settings, progress, progress_every);
        } else {
          return detail::run_fit(DirectObjective(m, p, grids.first, spec.settings.penalty_mu),
                                 std::move(phi), spec.settings, progress, progress_every);
        }
      },
      arch);

  auto& tm = res.model;
  tm.method = spec.method;
  tm.problem = spec.problem;
  tm.I = I;
  tm.M = M;
  tm.N = N;
  tm.seed = spec.seed;
  tm.exp_id = spec.exp_id;
  tm.scaling = scaling;
  tm.params = diff::ParamVector(std::move(tm.params.values), layout_of(arch));
  return res;
}

// ---------------------------------------------------------------------------
// Experiment registry
// ---------------------------------------------------------------------------

struct MetricValues {
  double rmse_u, mae_u, mape_u, j_pct_error;
};

struct PaperResult {
  MetricValues train;
  MetricValues test;
};

// Acceptance band for one experiment; unset bounds are not checked.
struct Band {
  std::optional<double> max_train_rmse{};
  std::optional<double> min_train_rmse{};
  std::optional<double> max_test_rmse{};
  std::optional<double> max_train_mape{};
  std::optional<double> max_train_j{};

  bool empty() const {
    return !max_train_rmse && !min_train_rmse && !max_test_rmse && !max_train_mape && !max_train_j;
  }

  bool check(const MetricsReport& train, const MetricsReport& test) const {
    bool ok = true;
    if (max_train_rmse) ok = ok && train.rmse_u <= *max_train_rmse;
    if (min_train_rmse) ok = ok && train.rmse_u >= *min_train_rmse;
    if (max_test_rmse) ok = ok && test.rmse_u <= *max_test_rmse;
    if (max_train_mape) ok = ok && train.mape_u <= *max_train_mape;
    if (max_train_j) ok = ok && train.j_pct_error <= *max_train_j;
    return ok;
  }

  // e.g. "train_rmse_u<=0.001; test_rmse_u<=0.001".
  std::string describe() const {
    std::string out;
    auto add = [&](const char* what, const char* op, const std::optional<double>& v) {
      if (!v) return;
      char buf[64];
      std::snprintf(buf, sizeof buf, "%s%s%g", what, op, *v);
      out += (out.empty() ? "" : "; ") + std::string(buf);
    };
    add("train_rmse_u", ">=", min_train_rmse);
    add("train_rmse_u", "<=", max_train_rmse);
    add("test_rmse_u", "<=", max_test_rmse);
    add("train_mape_u", "<=", max_train_mape);
    add("train_j_pct_error", "<=", max_train_j);
    return out;
  }
};

struct RegistryEntry {
  int exp_id;
  Method method;
  ProblemId problem;
  std::optional<std::size_t> M, N, I;
  PaperResult paper;
  Band band;
};

inline const std::vector<RegistryEntry>& experiment_registry() {
  using enum Method;
  constexpr auto o1 = ProblemId::kOcp1, o2 = ProblemId::kOcp2, o3 = ProblemId::kOcp3;
  const std::nullopt_t na = std::nullopt;
  // Reference metrics per experiment (train | test): rmse_u, mae_u, mape_u, j_pct_error.
  static const std::vector<RegistryEntry> reg = {
      {1, kMethod1, o1, na, na, 2, {{1.50e-02, 1.03e-02, 17.81, 0.55}, {1.33e-02, 9.40e-03, 25.02, 0.61}}, {}},
      {2, kMethod1, o1, na, na, 6, {{7.09e-05, 5.27e-05, 0.10, 0.02}, {5.91e-05, 4.68e-05, 0.17, 0.03}},
       {.max_train_rmse = 1e-3, .max_test_rmse = 1e-3}},
      {3, kMethod1, o2, na, na, 2, {{8.90e-03, 5.50e-03, 86.73, 1.08e+03}, {8.00e-03, 5.10e-03, 122.79, 1.44e+03}}, {}},
      {4, kMethod1, o2, na, na, 6, {{1.95e-04, 1.31e-04, 1.75, 2.35}, {1.69e-04, 1.20e-04, 2.24, 1.97}},
       {.max_train_rmse = 2e-3, .max_train_j = 25.0}},
      {5, kMethod1, o3, na, na, 10, {{4.32e-01, 2.43e-01, 0.77, 1.80}, {3.74e-01, 2.25e-01, 0.70, 1.78}}, {}},
      {6, kMethod1, o3, na, na, 30, {{3.87e-02, 2.84e-02, 0.09, 0.09}, {3.65e-02, 2.72e-02, 0.09, 0.09}}, {}},
      {7, kFourierLayer, o1, 4, 4, 2, {{3.70e-04, 2.82e-04, 0.39, 0.06}, {3.48e-04, 2.69e-04, 0.50, 0.07}}, {}},
      {8, kFourierLayer, o1, 4, 4, 6, {{3.52e-04, 2.56e-04, 0.32, 0.05}, {3.39e-04, 2.50e-04, 0.40, 0.05}}, {}},
      {9, kFourierLayer, o1, 5, 5, 2, {{4.71e-04, 3.52e-04, 1.02, 0.07}, {4.29e-04, 3.29e-04, 1.50, 0.08}}, {}},
      {10, kFourierLayer, o1, 5, 5, 6, {{3.14e-04, 2.34e-04, 0.65, 0.05}, {2.99e-04, 2.28e-04, 1.00, 0.07}},
       {.max_train_rmse = 3e-3}},
      {11, kFourierLayer, o1, 6, 4, 2, {{3.55e-04, 2.55e-04, 0.36, 0.04}, {3.46e-04, 2.52e-04, 0.48, 0.04}}, {}},
      {12, kFourierLayer, o1, 6, 4, 6, {{3.88e-04, 2.84e-04, 0.44, 0.06}, {3.76e-04, 2.79e-04, 0.66, 0.08}}, {}},
      {13, kFourierLayer, o2, 4, 4, 2, {{2.20e-03, 1.40e-03, 38.28, 6.33}, {1.80e-03, 1.30e-03, 51.98, 10.51}}, {}},
      {14, kFourierLayer, o2, 4, 4, 6, {{2.20e-03, 1.40e-03, 39.09, 11.26}, {1.80e-03, 1.30e-03, 53.74, 17.13}}, {}},
      {15, kFourierLayer, o2, 5, 5, 2, {{6.57e-04, 4.93e-04, 10.26, 3.90}, {5.58e-04, 4.42e-04, 11.52, 5.25}}, {}},
      {16, kFourierLayer, o2, 5, 5, 6, {{6.18e-04, 4.51e-04, 7.37, 5.84}, {5.25e-04, 3.97e-04, 8.16, 7.87}}, {}},
      {17, kFourierLayer, o2, 6, 4, 2, {{2.20e-03, 1.10e-03, 37.70, 7.48}, {1.70e-03, 9.67e-04, 50.59, 12.35}}, {}},
      {18, kFourierLayer, o2, 6, 4, 6, {{2.20e-03, 1.10e-03, 37.90, 7.81}, {1.70e-03, 9.79e-04, 50.19, 12.90}}, {}},
      {19, kFourierLayer, o2, 8, 8, 2, {{2.63e-04, 1.95e-04, 3.83, 2.32}, {2.28e-04, 1.79e-04, 4.94, 3.91}}, {}},
      {20, kFourierLayer, o3, 4, 4, 3, {{1.97e-01, 1.34e-01, 0.47, 0.12}, {1.58e-01, 1.20e-01, 0.43, 0.07}}, {}},
      {21, kFourierLayer, o3, 4, 4, 6, {{1.72e-01, 1.17e-01, 0.41, 0.10}, {1.40e-01, 1.05e-01, 0.37, 0.06}},
       {.max_train_rmse = 1.0, .max_train_mape = 2.0}},
      {22, kFourierLayer, o3, 5, 5, 3, {{2.87e-01, 1.93e-01, 0.65, 0.14}, {2.34e-01, 1.76e-01, 0.59, 0.13}}, {}},
      {23, kFourierLayer, o3, 5, 5, 6, {{5.87e-02, 4.10e-02, 0.14, 0.06}, {4.92e-02, 3.67e-02, 0.13, 0.06}}, {}},
      {24, kFourierLayer, o3, 6, 4, 3, {{2.19e-01, 1.23e-01, 0.39, 0.21}, {1.61e-01, 1.06e-01, 0.34, 0.24}}, {}},
      {25, kFourierLayer, o3, 6, 4, 6, {{2.17e-01, 1.28e-01, 0.44, 0.17}, {1.63e-01, 1.11e-01, 0.39, 0.12}}, {}},
      {26, kDirect, o3, 4, 4, na, {{3.50e+00, 2.17e+00, 6.13, 7.41}, {3.23e+00, 2.08e+00, 5.95, 8.67}}, {}},
      {27, kDirect, o3, 5, 5, na, {{2.92e+00, 1.87e+00, 5.48, 3.59}, {2.65e+00, 1.79e+00, 5.32, 4.42}},
       {.max_train_rmse = 9.0, .min_train_rmse = 1.0}},
      {28, kDirect, o3, 6, 4, na, {{4.54e+00, 2.85e+00, 8.27, 13.82}, {4.22e+00, 2.73e+00, 7.96, 15.36}}, {}},
  };
  return reg;
}

inline const RegistryEntry& registry_entry(int exp_id) {
  for (const auto& e : experiment_registry())
    if (e.exp_id == exp_id) return e;
  throw ConfigError("unknown experiment id " + std::to_string(exp_id) + " (valid: 1-28)");
}

inline std::uint64_t default_seed(int exp_id) { return static_cast<std::uint64_t>(exp_id); }

inline ExperimentSpec experiment_spec(int exp_id) {
  const auto& e = registry_entry(exp_id);
  ExperimentSpec s;
  s.exp_id = e.exp_id;
  s.method = e.method;
  s.problem = e.problem;
  s.M = e.M;
  s.N = e.N;
  s.I = e.I;
  s.seed = default_seed(exp_id);
  return s;
}

struct ExperimentResult {
  ExperimentSpec spec;
  FitResult fit;
  MetricsReport train;
  MetricsReport test;
  double wall_time_s = 0.0;
};

inline ExperimentResult run_experiment(const ExperimentSpec& spec, const ProgressFn& progress = {}) {
  const auto start = std::chrono::steady_clock::now();
  ExperimentResult out;
  out.spec = spec;
  out.fit = fit(spec, progress);
  const auto p = make_problem(spec.problem);
  const auto grids = make_grids(p, spec.settings.n_time);
  out.train = evaluate(out.fit.model, grids.first);
  out.test = evaluate(out.fit.model, grids.second);
  out.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

inline ExperimentResult run_experiment(int exp_id) { return run_experiment(experiment_spec(exp_id)); }

}  // namespace pmpnet
