#pragma once

// Model persistence (JSON) and CSV output helpers.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "pmpnet/errors.hpp"
#include "pmpnet/train.hpp"

namespace pmpnet::io {

inline constexpr std::string_view kModelFormat = "pmpnet-model";
inline constexpr int kModelVersion = 1;

// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline nlohmann::json to_json(const TrainedModel& m) {
  nlohmann::json j;
  j["format"] = kModelFormat;
  j["version"] = kModelVersion;
  j["method"] = to_string(m.method);
  j["problem"] = to_string(m.problem);
  if (m.I) j["I"] = m.I;
  if (m.M) j["M"] = m.M;
  if (m.N) j["N"] = m.N;
  j["seed"] = m.seed;
  j["exp_id"] = m.exp_id;
  j["scaling"] = {{"t_scale", m.scaling.t_scale}, {"x0_scale", m.scaling.x0_scale}};
  if (std::isfinite(m.final_loss))
    j["final_loss"] = m.final_loss;
  else
    j["final_loss"] = nullptr;
  auto blocks = nlohmann::json::array();
  for (const auto& b : m.params.layout.blocks()) {
    nlohmann::json jb;
    jb["name"] = b.name;
    jb["rows"] = b.rows;
    jb["cols"] = b.cols;
    jb["values"] = std::vector<double>(m.params.values.begin() + static_cast<std::ptrdiff_t>(b.offset),
                                       m.params.values.begin() +
                                           static_cast<std::ptrdiff_t>(b.offset + b.size()));
    blocks.push_back(std::move(jb));
  }
  j["blocks"] = std::move(blocks);
  return j;
}

inline TrainedModel from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != kModelFormat)
      throw InputError("not a pmpnet model file");
    if (j.at("version").get<int>() != kModelVersion)
      throw InputError("unsupported model version " + j.at("version").dump());
    TrainedModel m;
    m.method = parse_method(j.at("method").get<std::string>());
    m.problem = parse_problem_id(j.at("problem").get<std::string>());
    m.I = j.value("I", std::size_t{0});
    m.M = j.value("M", std::size_t{0});
    m.N = j.value("N", std::size_t{0});
    m.seed = j.at("seed").get<std::uint64_t>();
    m.exp_id = j.value("exp_id", 0);
    m.scaling.t_scale = j.at("scaling").at("t_scale").get<double>();
    m.scaling.x0_scale = j.at("scaling").at("x0_scale").get<double>();
    const auto& fl = j.at("final_loss");
    m.final_loss = fl.is_null() ? std::numeric_limits<double>::quiet_NaN() : fl.get<double>();

    const auto p = make_problem(m.problem);
    const auto arch = build_architecture(m, p);
    const auto& layout = layout_of(arch);
    const auto& jb = j.at("blocks");
    if (jb.size() != layout.blocks().size())
      throw InputError("model has " + std::to_string(jb.size()) + " blocks, architecture expects " +
                       std::to_string(layout.blocks().size()));
    std::vector<double> values(layout.size());
    for (std::size_t i = 0; i < jb.size(); ++i) {
      const auto& b = layout.blocks()[i];
      const auto name = jb[i].at("name").get<std::string>();
      if (name != b.name) throw InputError("block " + std::to_string(i) + " is '" + name +
                                           "', expected '" + b.name + "'");
      if (jb[i].at("rows").get<std::size_t>() != b.rows || jb[i].at("cols").get<std::size_t>() != b.cols)
        throw InputError("block '" + name + "' has the wrong shape");
      const auto v = jb[i].at("values").get<std::vector<double>>();
      if (v.size() != b.size()) throw InputError("block '" + name + "' has the wrong length");
      std::copy(v.begin(), v.end(), values.begin() + static_cast<std::ptrdiff_t>(b.offset));
    }
    m.params = diff::ParamVector(std::move(values), layout);
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed model file: ") + e.what());
  }
}

// Writes `content` to a sibling temp file, then renames it over `path`.
inline void write_atomic(const std::filesystem::path& path, std::string_view content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw InputError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw InputError("cannot rename " + tmp.string() + ": " + ec.message());
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void save_model(const TrainedModel& m, const std::filesystem::path& path) {
  write_atomic(path, to_json(m).dump(2) + "\n");
}

inline TrainedModel load_model(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  return from_json(j);
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

using CsvRow = std::vector<std::string>;

inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string csv_line(const CsvRow& row) {
  std::string line;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) line += ',';
    line += csv_field(row[i]);
  }
  return line + "\n";
}

inline std::string csv_text(const CsvRow& header, const std::vector<CsvRow>& rows) {
  std::string s = csv_line(header);
  for (const auto& r : rows) {
    if (r.size() != header.size()) throw InputError("CSV row width does not match header");
    s += csv_line(r);
  }
  return s;
}

inline void write_csv(const std::filesystem::path& path, const CsvRow& header,
                      const std::vector<CsvRow>& rows) {
  write_atomic(path, csv_text(header, rows));
}

// Appends one row, creating the file with `header` if needed. The whole file
// is rewritten atomically so readers never see a partial row.
inline void append_csv_row(const std::filesystem::path& path, const CsvRow& header,
                           const CsvRow& row) {
  if (row.size() != header.size()) throw InputError("CSV row width does not match header");
  std::string content;
  if (std::filesystem::exists(path)) {
    content = read_file(path);
    const auto first = content.substr(0, content.find('\n') + 1);
    if (first != csv_line(header))
      throw InputError(path.string() + " has a different header");
    if (!content.empty() && content.back() != '\n') content += '\n';
  } else {
    content = csv_line(header);
  }
  write_atomic(path, content + csv_line(row));
}

// Header of the results table: exp, method, ocp, M, N, I, train and test
// metrics, final_loss, seed, wall_time_s.
inline CsvRow results_header() {
  CsvRow h = {"exp", "method", "ocp", "M", "N", "I"};
  for (const char* split : {"train", "test"})
    for (const char* m : {"rmse_u", "mae_u", "mape_u", "j_pct_error"})
      h.push_back(std::string(split) + "_" + m);
  h.insert(h.end(), {"final_loss", "seed", "wall_time_s"});
  return h;
}

inline std::string opt_count(std::size_t v) { return v ? std::to_string(v) : std::string(); }

inline CsvRow results_row(const TrainedModel& m, const MetricsReport& train,
                          const MetricsReport& test, double wall_time_s) {
  CsvRow r = {std::to_string(m.exp_id), to_string(m.method), std::to_string(static_cast<int>(m.problem)),
              opt_count(m.M), opt_count(m.N), opt_count(m.I)};
  for (const auto* rep : {&train, &test}) {
    r.push_back(format_double(rep->rmse_u));
    r.push_back(format_double(rep->mae_u));
    r.push_back(format_double(rep->mape_u));
    r.push_back(format_double(rep->j_pct_error));
  }
  r.push_back(format_double(m.final_loss));
  r.push_back(std::to_string(m.seed));
  r.push_back(format_double(wall_time_s));
  return r;
}

}  // namespace pmpnet::io
