// pmpnet command-line front end.
//
//   pmpnet train        --config run.json [overrides]
//   pmpnet evaluate     --model m.json
//   pmpnet oracle       --problem 3 [--x0 ...]
//   pmpnet surfaces     --model m.json [--grid training|testing]
//   pmpnet trajectories --model m.json --x0 0,20,40
//   pmpnet reproduce    all | <exp ids...>
//
// Exit codes: 0 success, 2 configuration/input error, 3 numerical or
// training failure, 4 acceptance-band failure.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pmpnet/io.hpp"
#include "pmpnet/pmpnet.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pmpnet;

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitBand = 4;

// Settings gathered from the config file and then the command line.
struct RunConfig {
  std::optional<int> exp;
  std::optional<std::string> method;
  std::optional<std::string> problem;
  std::optional<std::size_t> M, N, I;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n_time;
  std::optional<double> penalty_mu;
  std::optional<std::size_t> adam_iterations, decay_every, polish_iterations;
  std::optional<double> learning_rate, decay_factor;
  std::optional<bool> polish;
  std::optional<std::string> output_dir;
};

template <class T>
T config_value(const json& v, const std::string& path) {
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError("");
    } else if constexpr (std::is_unsigned_v<T>) {
      if (!v.is_number_unsigned()) throw ConfigError("");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError("");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError("");
    } else {
      if (!v.is_string()) throw ConfigError("");
    }
    return v.get<T>();
  } catch (const std::exception&) {
    throw ConfigError("config key '" + path + "' has the wrong type (" + v.dump() + ")");
  }
}

void require_object(const json& j, const std::string& path) {
  if (!j.is_object())
    throw ConfigError("config " + (path.empty() ? std::string("root") : "'" + path + "'") +
                      " must be an object");
}

RunConfig parse_config(const json& j) {
  require_object(j, "");
  RunConfig c;
  for (const auto& [key, v] : j.items()) {
    if (key == "exp") c.exp = config_value<int>(v, key);
    else if (key == "method") c.method = config_value<std::string>(v, key);
    else if (key == "problem") c.problem = v.is_number_integer() ? std::to_string(v.get<int>())
                                                                  : config_value<std::string>(v, key);
    else if (key == "M") c.M = config_value<std::size_t>(v, key);
    else if (key == "N") c.N = config_value<std::size_t>(v, key);
    else if (key == "I") c.I = config_value<std::size_t>(v, key);
    else if (key == "seed") c.seed = config_value<std::uint64_t>(v, key);
    else if (key == "n_time") c.n_time = config_value<std::size_t>(v, key);
    else if (key == "penalty_mu") c.penalty_mu = config_value<double>(v, key);
    else if (key == "output_dir") c.output_dir = config_value<std::string>(v, key);
    else if (key == "optimizer") {
      require_object(v, key);
      for (const auto& [k2, v2] : v.items()) {
        const std::string path = key + "." + k2;
        if (k2 == "adam_iterations") c.adam_iterations = config_value<std::size_t>(v2, path);
        else if (k2 == "learning_rate") c.learning_rate = config_value<double>(v2, path);
        else if (k2 == "decay_every") c.decay_every = config_value<std::size_t>(v2, path);
        else if (k2 == "decay_factor") c.decay_factor = config_value<double>(v2, path);
        else if (k2 == "polish") c.polish = config_value<bool>(v2, path);
        else if (k2 == "polish_iterations") c.polish_iterations = config_value<std::size_t>(v2, path);
        else throw ConfigError("unknown config key '" + path + "'");
      }
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  if (path.empty()) return {};
  json j;
  try {
    j = json::parse(io::read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return parse_config(j);
}

// Command-line values; each one overrides the config file when given.
struct Overrides {
  std::string config_path;
  int exp = 0;
  std::string method, problem, output_dir;
  std::size_t M = 0, N = 0, I = 0, n_time = 0, adam_iterations = 0, decay_every = 0,
              polish_iterations = 0;
  std::uint64_t seed = 0;
  double penalty_mu = 0, learning_rate = 0, decay_factor = 0;
  bool no_polish = false;
  std::map<std::string, CLI::Option*> opts;

  bool given(const std::string& name) const {
    auto it = opts.find(name);
    return it != opts.end() && it->second->count() > 0;
  }
};

void add_config_options(CLI::App* cmd, Overrides& o, bool architecture) {
  o.opts["config"] = cmd->add_option("-c,--config", o.config_path, "JSON run configuration");
  o.opts["output-dir"] = cmd->add_option("-o,--output-dir", o.output_dir, "output directory");
  o.opts["n-time"] = cmd->add_option("--n-time", o.n_time, "time intervals on [0, T]");
  if (!architecture) return;
  o.opts["exp"] = cmd->add_option("--exp", o.exp, "benchmark experiment id (1-28)");
  o.opts["method"] = cmd->add_option("--method", o.method, "method1 | fourier-layer | direct");
  o.opts["problem"] = cmd->add_option("--problem", o.problem, "1, 2 or 3");
  o.opts["M"] = cmd->add_option("--M", o.M, "Fourier terms for the control");
  o.opts["N"] = cmd->add_option("--N", o.N, "Fourier terms for the state");
  o.opts["I"] = cmd->add_option("--I", o.I, "hidden neurons");
  o.opts["seed"] = cmd->add_option("--seed", o.seed, "initialization seed");
  o.opts["penalty-mu"] = cmd->add_option("--penalty-mu", o.penalty_mu, "direct-method penalty weight");
  o.opts["adam-iterations"] = cmd->add_option("--adam-iterations", o.adam_iterations);
  o.opts["learning-rate"] = cmd->add_option("--learning-rate", o.learning_rate);
  o.opts["decay-every"] = cmd->add_option("--decay-every", o.decay_every);
  o.opts["decay-factor"] = cmd->add_option("--decay-factor", o.decay_factor);
  o.opts["polish-iterations"] = cmd->add_option("--polish-iterations", o.polish_iterations);
  o.opts["no-polish"] = cmd->add_flag("--no-polish", o.no_polish, "skip the L-BFGS polish");
}

RunConfig merged(const Overrides& o) {
  RunConfig c = load_config(o.config_path);
  if (o.given("exp")) c.exp = o.exp;
  if (o.given("method")) c.method = o.method;
  if (o.given("problem")) c.problem = o.problem;
  if (o.given("M")) c.M = o.M;
  if (o.given("N")) c.N = o.N;
  if (o.given("I")) c.I = o.I;
  if (o.given("seed")) c.seed = o.seed;
  if (o.given("n-time")) c.n_time = o.n_time;
  if (o.given("penalty-mu")) c.penalty_mu = o.penalty_mu;
  if (o.given("adam-iterations")) c.adam_iterations = o.adam_iterations;
  if (o.given("learning-rate")) c.learning_rate = o.learning_rate;
  if (o.given("decay-every")) c.decay_every = o.decay_every;
  if (o.given("decay-factor")) c.decay_factor = o.decay_factor;
  if (o.given("polish-iterations")) c.polish_iterations = o.polish_iterations;
  if (o.given("no-polish")) c.polish = false;
  // Precedence for the output directory: flag, then environment, then file.
  if (const char* env = std::getenv("PMPNET_OUTPUT_DIR"); env && *env) c.output_dir = env;
  if (o.given("output-dir")) c.output_dir = o.output_dir;
  return c;
}

ProblemId problem_of(const std::string& s) {
  if (s.size() == 1 && s[0] >= '1' && s[0] <= '3') return problem_id_from_int(s[0] - '0');
  return parse_problem_id(s);
}

void apply_settings(const RunConfig& c, TrainingSettings& s) {
  if (c.n_time) s.n_time = *c.n_time;
  if (c.penalty_mu) s.penalty_mu = *c.penalty_mu;
  if (c.adam_iterations) s.adam.iterations = *c.adam_iterations;
  if (c.learning_rate) s.adam.learning_rate = *c.learning_rate;
  if (c.decay_every) s.adam.decay_every = *c.decay_every;
  if (c.decay_factor) s.adam.decay_factor = *c.decay_factor;
  if (c.polish) s.polish = *c.polish;
  if (c.polish_iterations) s.lbfgs.iterations = *c.polish_iterations;
  if (s.adam.decay_every == 0) throw ConfigError("optimizer.decay_every must be >= 1");
  if (!(s.adam.learning_rate > 0.0)) throw ConfigError("optimizer.learning_rate must be > 0");
}

ExperimentSpec spec_from(const RunConfig& c) {
  ExperimentSpec s;
  if (c.exp) {
    if (c.method || c.problem || c.M || c.N || c.I)
      throw ConfigError("'exp' fixes method, problem, M, N and I; do not set them as well");
    s = experiment_spec(*c.exp);
  } else {
    if (!c.method) throw ConfigError("missing required config key 'method'");
    if (!c.problem) throw ConfigError("missing required config key 'problem'");
    s.method = parse_method(*c.method);
    s.problem = problem_of(*c.problem);
    s.M = c.M;
    s.N = c.N;
    s.I = c.I;
  }
  if (c.seed) s.seed = *c.seed;
  apply_settings(c, s.settings);
  s.validate();
  return s;
}

fs::path output_dir(const RunConfig& c) {
  fs::path dir = c.output_dir.value_or(".");
  fs::create_directories(dir);
  return dir;
}

std::string model_tag(const ExperimentSpec& s) {
  if (s.exp_id) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "exp%02d", s.exp_id);
    return buf;
  }
  std::string tag = std::string(to_string(s.method)) + "_" + to_string(s.problem);
  if (s.M) tag += "_M" + std::to_string(*s.M);
  if (s.N) tag += "_N" + std::to_string(*s.N);
  if (s.I) tag += "_I" + std::to_string(*s.I);
  return tag + "_seed" + std::to_string(s.seed);
}

ProgressFn stderr_progress(bool quiet) {
  if (quiet) return {};
  return [](std::string_view phase, std::size_t iter, double loss) {
    std::fprintf(stderr, "  %.*s %zu: loss %.6e\n", static_cast<int>(phase.size()), phase.data(),
                 iter, loss);
  };
}

std::string f(double v) { return io::format_double(v); }

// ---------------------------------------------------------------------------
// train / evaluate
// ---------------------------------------------------------------------------

int cmd_train(const Overrides& o, const std::string& model_out, bool quiet) {
  const RunConfig c = merged(o);
  const ExperimentSpec spec = spec_from(c);
  const fs::path dir = output_dir(c);
  const fs::path model_path = model_out.empty() ? dir / (model_tag(spec) + ".json") : fs::path(model_out);

  const auto r = run_experiment(spec, stderr_progress(quiet));
  io::save_model(r.fit.model, model_path);
  io::append_csv_row(dir / "metrics.csv", io::results_header(),
                     io::results_row(r.fit.model, r.train, r.test, r.wall_time_s));
  std::printf("%s on %s: loss %s, train rmse_u %s, test rmse_u %s, %.1f s -> %s\n",
              to_string(spec.method), to_string(spec.problem).c_str(), f(r.fit.model.final_loss).c_str(),
              f(r.train.rmse_u).c_str(), f(r.test.rmse_u).c_str(), r.wall_time_s,
              model_path.string().c_str());
  return 0;
}

int cmd_evaluate(const std::string& model_path, std::size_t n_time, const std::string& out) {
  const auto m = io::load_model(model_path);
  const auto grids = make_grids(make_problem(m.problem), n_time);
  const io::CsvRow header = {"grid", "n_points", "rmse_u", "mae_u", "mape_u", "j_pct_error",
                             "mape_excluded", "j_excluded", "final_loss"};
  std::vector<io::CsvRow> rows;
  for (const auto* g : {&grids.first, &grids.second}) {
    const auto r = evaluate(m, *g);
    rows.push_back({to_string(g->kind), std::to_string(r.n_points), f(r.rmse_u), f(r.mae_u), f(r.mape_u),
                    f(r.j_pct_error), std::to_string(r.mape_excluded), std::to_string(r.j_excluded),
                    f(r.final_loss)});
  }
  if (out.empty()) std::cout << io::csv_text(header, rows);
  else io::write_csv(out, header, rows);
  return 0;
}

// ---------------------------------------------------------------------------
// oracle / surfaces / trajectories
// ---------------------------------------------------------------------------

int cmd_oracle(const Overrides& o, std::vector<double> x0s) {
  const RunConfig c = merged(o);
  if (!c.problem) throw ConfigError("missing required config key 'problem'");
  const auto p = make_problem(problem_of(*c.problem));
  const std::size_t n_time = c.n_time.value_or(100);
  const auto times = make_grids(p, n_time).first.time_points;
  if (x0s.empty()) x0s = p.x0_train;

  std::vector<io::CsvRow> rows;
  json side = {{"problem", to_string(p.id)}, {"n_time", n_time}, {"solutions", json::array()}};
  for (double x0 : x0s) {
    const auto r = reference_solution(p, x0, times);
    for (std::size_t k = 0; k < times.size(); ++k)
      rows.push_back({f(x0), f(times[k]), f(r.x_star[k]), f(r.u_star[k]), f(r.lambda_star[k])});
    side["solutions"].push_back({{"x0", x0}, {"J_star", r.J_star}, {"source", to_string(r.source)}});
  }
  const fs::path dir = output_dir(c);
  const fs::path csv = dir / ("oracle_" + to_string(p.id) + ".csv");
  io::write_csv(csv, {"x0", "t", "x_star", "u_star", "lambda_star"}, rows);
  io::write_atomic(dir / ("oracle_" + to_string(p.id) + ".json"), side.dump(2) + "\n");
  std::printf("%zu reference trajectories -> %s\n", x0s.size(), csv.string().c_str());
  return 0;
}

std::string ape(double approx, double exact) {
  if (!(std::abs(exact) > kMapeGuard)) return "";
  return f(100.0 * std::abs(approx - exact) / std::abs(exact));
}

// One block of rows per x0, t ascending. Surfaces and trajectories share it,
// so a trajectory at a training x0 equals the surface slice bit for bit.
std::vector<io::CsvRow> surface_rows(const TrainedModel& m, const ProblemDef& p,
                                     const std::vector<double>& times, double x0, bool flag_hull) {
  const auto arch = build_architecture(m, p);
  const bool outside = x0 < p.x0_min || x0 > p.x0_max;
  std::optional<ReferenceSolution> ref;
  try {
    ref = reference_solution(p, x0, times);
  } catch (const std::exception& e) {
    if (!outside) throw;
    std::fprintf(stderr, "warning: no reference solution at x0=%g: %s\n", x0, e.what());
  }
  std::vector<io::CsvRow> rows;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const auto b = trial_eval(arch, m.params.view(), times[k], x0);
    const double us = ref ? ref->u_star[k] : NAN, xs = ref ? ref->x_star[k] : NAN;
    io::CsvRow row = {f(times[k]), f(x0), f(b.u_hat), f(b.x_hat), f(b.lambda_hat), f(us), f(xs),
                      ref ? ape(b.u_hat, us) : "", ref ? ape(b.x_hat, xs) : ""};
    if (flag_hull) row.push_back(outside ? "1" : "0");
    rows.push_back(std::move(row));
  }
  return rows;
}

io::CsvRow surface_header() {
  return {"t", "x0", "u_hat", "x_hat", "lambda_hat", "u_star", "x_star", "ape_u", "ape_x"};
}

int cmd_surfaces(const std::string& model_path, std::size_t n_time, const std::string& grid,
                 const std::string& out) {
  const auto m = io::load_model(model_path);
  const auto p = make_problem(m.problem);
  const auto grids = make_grids(p, n_time);
  if (grid != "training" && grid != "testing") throw ConfigError("--grid must be training or testing");
  const GridSpec& g = grid == "training" ? grids.first : grids.second;
  std::vector<io::CsvRow> rows;
  for (double x0 : g.x0_points) {
    auto block = surface_rows(m, p, g.time_points, x0, false);
    rows.insert(rows.end(), block.begin(), block.end());
  }
  io::write_csv(out, surface_header(), rows);
  std::printf("%zu surface rows -> %s\n", rows.size(), out.c_str());
  return 0;
}

int cmd_trajectories(const std::string& model_path, std::size_t n_time, const std::vector<double>& x0s,
                     const std::string& out) {
  if (x0s.empty()) throw ConfigError("--x0 needs at least one value");
  const auto m = io::load_model(model_path);
  const auto p = make_problem(m.problem);
  const auto times = make_grids(p, n_time).first.time_points;
  std::vector<io::CsvRow> rows;
  for (double x0 : x0s) {
    if (x0 < p.x0_min || x0 > p.x0_max)
      std::fprintf(stderr, "warning: x0=%g is outside [%g, %g]; extrapolating\n", x0, p.x0_min, p.x0_max);
    auto block = surface_rows(m, p, times, x0, true);
    rows.insert(rows.end(), block.begin(), block.end());
  }
  auto header = surface_header();
  header.push_back("extrapolated");
  io::write_csv(out, header, rows);
  std::printf("%zu trajectories (%zu rows) -> %s\n", x0s.size(), rows.size(), out.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// reproduce
// ---------------------------------------------------------------------------

io::CsvRow reproduce_header() {
  io::CsvRow h = {"exp", "method", "ocp", "M", "N", "I", "seed", "status"};
  for (const char* who : {"", "paper_"})
    for (const char* split : {"train", "test"})
      for (const char* m : {"rmse_u", "mae_u", "mape_u", "j_pct_error"})
        h.push_back(std::string(who) + split + "_" + m);
  h.insert(h.end(), {"band", "band_rule", "final_loss", "wall_time_s"});
  return h;
}

std::string opt(const std::optional<std::size_t>& v) { return v ? std::to_string(*v) : ""; }

int cmd_reproduce(const Overrides& o, const std::vector<std::string>& which, bool quiet) {
  const RunConfig c = merged(o);
  if (c.exp || c.method || c.problem || c.M || c.N || c.I || c.seed)
    throw ConfigError("reproduce takes experiment ids, not architecture or seed settings");
  std::vector<int> ids;
  for (const auto& w : which) {
    if (w == "all") {
      for (const auto& e : experiment_registry()) ids.push_back(e.exp_id);
      continue;
    }
    int id = 0;
    try {
      std::size_t used = 0;
      id = std::stoi(w, &used);
      if (used != w.size()) throw std::invalid_argument(w);
    } catch (const std::exception&) {
      throw ConfigError("not an experiment id: '" + w + "'");
    }
    registry_entry(id);
    ids.push_back(id);
  }
  if (ids.empty()) throw ConfigError("reproduce needs experiment ids or 'all'");

  const fs::path dir = output_dir(c);
  fs::create_directories(dir / "models");
  const fs::path out = dir / "reproduce.csv";
  std::vector<io::CsvRow> rows;
  bool band_failed = false;
  for (int id : ids) {
    const auto& e = registry_entry(id);
    auto spec = experiment_spec(id);
    apply_settings(c, spec.settings);
    io::CsvRow row = {std::to_string(id), to_string(e.method), std::to_string(static_cast<int>(e.problem)),
                      opt(e.M), opt(e.N), opt(e.I), std::to_string(spec.seed)};
    std::string band = e.band.empty() ? "n/a" : "fail";
    try {
      const auto r = run_experiment(spec, stderr_progress(quiet));
      io::save_model(r.fit.model, dir / "models" / (model_tag(spec) + ".json"));
      row.push_back("ok");
      for (const auto* rep : {&r.train, &r.test})
        for (double v : {rep->rmse_u, rep->mae_u, rep->mape_u, rep->j_pct_error}) row.push_back(f(v));
      if (!e.band.empty()) band = e.band.check(r.train, r.test) ? "pass" : "fail";
      for (const auto* pv : {&e.paper.train, &e.paper.test})
        for (double v : {pv->rmse_u, pv->mae_u, pv->mape_u, pv->j_pct_error}) row.push_back(f(v));
      row.insert(row.end(), {band, e.band.describe(), f(r.fit.model.final_loss), f(r.wall_time_s)});
      std::printf("exp %2d: train rmse_u %s (reference %s), band %s\n", id, f(r.train.rmse_u).c_str(),
                  f(e.paper.train.rmse_u).c_str(), band.c_str());
    } catch (const std::exception& ex) {
      row.push_back(std::string("failed: ") + ex.what());
      for (int k = 0; k < 8; ++k) row.push_back("");
      for (const auto* pv : {&e.paper.train, &e.paper.test})
        for (double v : {pv->rmse_u, pv->mae_u, pv->mape_u, pv->j_pct_error}) row.push_back(f(v));
      row.insert(row.end(), {band, e.band.describe(), "", ""});
      std::printf("exp %2d: failed (%s), band %s\n", id, ex.what(), band.c_str());
    }
    std::fflush(stdout);
    band_failed = band_failed || band == "fail";
    rows.push_back(std::move(row));
    io::write_csv(out, reproduce_header(), rows);
  }
  std::printf("%zu rows -> %s\n", rows.size(), out.string().c_str());
  return band_failed ? kExitBand : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neural solvers for families of optimal control problems"};
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "no training progress on stderr");

  Overrides train_o;
  std::string model_out;
  auto* train = app.add_subcommand("train", "train one model and append its metrics");
  add_config_options(train, train_o, true);
  train->add_option("--model-out", model_out, "model file (default <output-dir>/<tag>.json)");

  std::string model_path, out_path, grid = "training";
  std::size_t n_time = 100;
  std::vector<double> x0s;

  auto* evaluate_cmd = app.add_subcommand("evaluate", "score a saved model on the training and testing grids");
  evaluate_cmd->add_option("-m,--model", model_path)->required();
  evaluate_cmd->add_option("--n-time", n_time);
  evaluate_cmd->add_option("--out", out_path, "CSV file (default stdout)");

  Overrides oracle_o;
  auto* oracle = app.add_subcommand("oracle", "reference solutions by shooting");
  add_config_options(oracle, oracle_o, false);
  oracle_o.opts["problem"] = oracle->add_option("--problem", oracle_o.problem, "1, 2 or 3");
  oracle->add_option("--x0", x0s, "initial conditions (default: training set)")->delimiter(',');

  auto* surfaces = app.add_subcommand("surfaces", "approximate and reference surfaces over a grid");
  surfaces->add_option("-m,--model", model_path)->required();
  surfaces->add_option("--n-time", n_time);
  surfaces->add_option("--grid", grid, "training | testing");
  surfaces->add_option("--out", out_path, "CSV file (default <output-dir>/surfaces.csv)");

  auto* trajectories = app.add_subcommand("trajectories", "time series at chosen initial conditions");
  trajectories->add_option("-m,--model", model_path)->required();
  trajectories->add_option("--n-time", n_time);
  trajectories->add_option("--x0", x0s, "initial conditions")->required()->delimiter(',');
  trajectories->add_option("--out", out_path, "CSV file (default <output-dir>/trajectories.csv)");

  Overrides repro_o;
  std::vector<std::string> which;
  auto* reproduce = app.add_subcommand("reproduce", "run benchmark experiments against reference values");
  add_config_options(reproduce, repro_o, false);
  repro_o.opts["adam-iterations"] = reproduce->add_option("--adam-iterations", repro_o.adam_iterations);
  repro_o.opts["polish-iterations"] = reproduce->add_option("--polish-iterations", repro_o.polish_iterations);
  repro_o.opts["no-polish"] = reproduce->add_flag("--no-polish", repro_o.no_polish);
  reproduce->add_option("ids", which, "experiment ids or 'all'")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  auto default_out = [&](const char* name) {
    if (!out_path.empty()) return out_path;
    RunConfig c;
    if (const char* env = std::getenv("PMPNET_OUTPUT_DIR"); env && *env) c.output_dir = env;
    return (output_dir(c) / name).string();
  };

  try {
    if (*train) return cmd_train(train_o, model_out, quiet);
    if (*evaluate_cmd) return cmd_evaluate(model_path, n_time, out_path);
    if (*oracle) return cmd_oracle(oracle_o, x0s);
    if (*surfaces) return cmd_surfaces(model_path, n_time, grid, default_out("surfaces.csv"));
    if (*trajectories) return cmd_trajectories(model_path, n_time, x0s, default_out("trajectories.csv"));
    if (*reproduce) return cmd_reproduce(repro_o, which, quiet);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const InputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const TrainingError& e) {
    std::fprintf(stderr, "training failed at iteration %zu: %s\n", e.iteration(), e.what());
    return kExitNumerical;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kExitNumerical;
  } catch (const OracleError& e) {
    std::fprintf(stderr, "oracle failure: %s\n", e.what());
    return kExitNumerical;
  } catch (const DomainError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
