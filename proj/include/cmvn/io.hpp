#pragma once

// File formats: three-way datasets (JSON and long CSV), fitted models, sweep
// tables and outlier reports. Every JSON document carries "schema_version";
// matrices are flattened row-major. Output is canonical: keys are written in a
// fixed order and doubles use the shortest representation that round-trips.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"

#include "cmvn/dataset.hpp"
#include "cmvn/ecm.hpp"
#include "cmvn/error.hpp"
#include "cmvn/evaluation.hpp"
#include "cmvn/selection.hpp"

namespace cmvn {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

enum class DataFormat { json, csv_long };

inline DataFormat parse_data_format(const std::string& s) {
  if (s == "json") return DataFormat::json;
  if (s == "csv-long" || s == "csv") return DataFormat::csv_long;
  throw DomainError("unknown data format '" + s + "' (expected json or csv-long)");
}

inline DataFormat format_from_path(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? DataFormat::csv_long : DataFormat::json;
}

namespace detail {

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error while reading '" + path.string() + "'");
  return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("error while writing '" + path.string() + "'");
}

inline void require_finite(const Matrix& m, const std::string& what) {
  if (!m.all_finite()) throw DomainError(what + ": refusing to serialize a non-finite value");
}

inline void require_finite(double v, const std::string& what) {
  if (!std::isfinite(v)) throw DomainError(what + ": refusing to serialize a non-finite value");
}

inline ordered_json flat(const Matrix& m, const std::string& what) {
  require_finite(m, what);
  ordered_json a = ordered_json::array();
  for (double v : m.entries()) a.push_back(v);
  return a;
}

inline ordered_json nested_rows(const Matrix& m, const std::string& what) {
  require_finite(m, what);
  ordered_json rows = ordered_json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (double v : m.row(i)) row.push_back(v);
    rows.push_back(std::move(row));
  }
  return rows;
}

inline const json& field(const json& obj, const char* key, const std::string& ctx) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(ctx + ": missing field '" + key + "'");
  return *it;
}

inline double number(const json& v, const std::string& ctx) {
  if (!v.is_number()) throw ParseError(ctx + ": expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ParseError(ctx + ": number is not finite");
  return d;
}

inline std::size_t count(const json& v, const std::string& ctx) {
  if (!v.is_number_integer() || v.get<long long>() < 0) throw ParseError(ctx + ": expected a non-negative integer");
  return v.get<std::size_t>();
}

inline Matrix matrix_from_flat(const json& v, std::size_t rows, std::size_t cols, const std::string& ctx) {
  if (!v.is_array()) throw ParseError(ctx + ": expected an array");
  if (v.size() != rows * cols)
    throw ShapeError(ctx + ": expected " + std::to_string(rows * cols) + " values, got " + std::to_string(v.size()));
  std::vector<double> e;
  e.reserve(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) e.push_back(number(v[k], ctx + "[" + std::to_string(k) + "]"));
  return Matrix(rows, cols, std::move(e));
}

inline Matrix matrix_from_rows(const json& v, std::size_t rows, std::size_t cols, const std::string& ctx) {
  if (!v.is_array() || v.size() != rows)
    throw ShapeError(ctx + ": expected " + std::to_string(rows) + " rows");
  std::vector<double> e;
  e.reserve(rows * cols);
  for (std::size_t i = 0; i < rows; ++i) {
    const auto& row = v[i];
    if (!row.is_array() || row.size() != cols)
      throw ShapeError(ctx + "[" + std::to_string(i) + "]: expected " + std::to_string(cols) + " values");
    for (std::size_t j = 0; j < cols; ++j)
      e.push_back(number(row[j], ctx + "[" + std::to_string(i) + "][" + std::to_string(j) + "]"));
  }
  return Matrix(rows, cols, std::move(e));
}

inline void check_schema_version(const json& doc, const std::string& ctx, bool required) {
  auto it = doc.find("schema_version");
  if (it == doc.end()) {
    if (required) throw SchemaError(ctx + ": missing schema_version");
    return;
  }
  if (!it->is_number_integer() || it->get<long long>() != kSchemaVersion)
    throw SchemaError(ctx + ": unsupported schema_version " + it->dump() + " (this build reads version " +
                      std::to_string(kSchemaVersion) + ")");
}

inline void check_layout(const json& doc, const std::string& ctx) {
  auto it = doc.find("layout");
  if (it != doc.end() && (!it->is_string() || it->get<std::string>() != "row-major"))
    throw SchemaError(ctx + ": only row-major layout is supported");
}

inline json parse_json(const std::string& text, const std::string& ctx) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(ctx + ": " + e.what());
  }
}

template <class Fn>
auto guard_json(const std::string& ctx, Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw ParseError(ctx + ": " + e.what());
  }
}

}  // namespace detail

// ---------------------------------------------------------------- datasets

inline std::string dataset_to_json(const Dataset& data) {
  data.validate();
  ordered_json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["n"] = data.n();
  doc["r"] = data.r;
  doc["p"] = data.p;
  doc["layout"] = "row-major";
  ordered_json samples = ordered_json::array();
  for (std::size_t i = 0; i < data.n(); ++i)
    samples.push_back(detail::flat(data.samples[i], "dataset unit " + std::to_string(i + 1)));
  doc["samples"] = std::move(samples);
  if (data.labels) doc["labels"] = *data.labels;
  if (data.good_flags) doc["good_flags"] = *data.good_flags;
  if (data.names) doc["names"] = *data.names;
  return doc.dump(1) + "\n";
}

inline Dataset dataset_from_json(const std::string& text) {
  const std::string ctx = "dataset";
  const json doc = detail::parse_json(text, ctx);
  return detail::guard_json(ctx, [&] {
    if (!doc.is_object()) throw ParseError(ctx + ": top level must be an object");
    detail::check_schema_version(doc, ctx, false);
    detail::check_layout(doc, ctx);
    Dataset d;
    const std::size_t n = detail::count(detail::field(doc, "n", ctx), ctx + ".n");
    d.r = detail::count(detail::field(doc, "r", ctx), ctx + ".r");
    d.p = detail::count(detail::field(doc, "p", ctx), ctx + ".p");
    if (d.r == 0 || d.p == 0) throw ShapeError(ctx + ": r and p must be positive");
    const auto& samples = detail::field(doc, "samples", ctx);
    if (!samples.is_array() || samples.size() != n)
      throw ShapeError(ctx + ".samples: expected " + std::to_string(n) + " units");
    for (std::size_t i = 0; i < n; ++i)
      d.samples.push_back(
          detail::matrix_from_flat(samples[i], d.r, d.p, ctx + ".samples[" + std::to_string(i) + "]"));
    if (auto it = doc.find("labels"); it != doc.end() && !it->is_null()) {
      if (!it->is_array()) throw ParseError(ctx + ".labels: expected an array");
      d.labels = it->get<std::vector<int>>();
    }
    if (auto it = doc.find("good_flags"); it != doc.end() && !it->is_null()) {
      if (!it->is_array()) throw ParseError(ctx + ".good_flags: expected an array");
      d.good_flags = it->get<std::vector<bool>>();
    }
    if (auto it = doc.find("names"); it != doc.end() && !it->is_null()) {
      if (!it->is_array()) throw ParseError(ctx + ".names: expected an array");
      d.names = it->get<std::vector<std::string>>();
    }
    d.validate();
    return d;
  });
}

inline std::string format_double(double v) {
  char buf[40];
  const int len = std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(len));
}

// Header `unit,row,col,value[,label]`; indices are 1-based; rows sorted by (unit, row, col).
inline std::string dataset_to_csv(const Dataset& data) {
  data.validate();
  std::string out = data.labels ? "unit,row,col,value,label\n" : "unit,row,col,value\n";
  for (std::size_t i = 0; i < data.n(); ++i) {
    detail::require_finite(data.samples[i], "dataset unit " + std::to_string(i + 1));
    for (std::size_t a = 0; a < data.r; ++a)
      for (std::size_t b = 0; b < data.p; ++b) {
        out += std::to_string(i + 1) + ',' + std::to_string(a + 1) + ',' + std::to_string(b + 1) + ',' +
               format_double(data.samples[i](a, b));
        if (data.labels) out += ',' + std::to_string((*data.labels)[i]);
        out += '\n';
      }
  }
  return out;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <class T>
T parse_csv_number(std::string_view s, std::size_t line, const char* column) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw ParseError("csv line " + std::to_string(line) + ", field '" + column + "': cannot parse '" +
                     std::string(s) + "'");
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(v))
      throw ParseError("csv line " + std::to_string(line) + ", field '" + column + "': value is not finite");
  }
  return v;
}

}  // namespace detail

inline Dataset dataset_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  bool have_header = false, has_label = false;
  std::map<std::tuple<long, long, long>, double> cells;
  std::map<long, int> unit_labels;
  long max_unit = 0, max_row = 0, max_col = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = detail::trim(raw);
    if (line.empty()) continue;
    const auto fields = detail::split_commas(line);
    if (!have_header) {
      const bool base_ok = fields.size() >= 4 && fields[0] == "unit" && fields[1] == "row" && fields[2] == "col" &&
                           fields[3] == "value";
      has_label = fields.size() == 5 && fields[4] == "label";
      if (!base_ok || (fields.size() != 4 && !has_label))
        throw ParseError("csv line " + std::to_string(line_no) + ": expected header 'unit,row,col,value[,label]'");
      have_header = true;
      continue;
    }
    if (fields.size() != (has_label ? 5u : 4u))
      throw ParseError("csv line " + std::to_string(line_no) + ": expected " + std::to_string(has_label ? 5 : 4) +
                       " fields, got " + std::to_string(fields.size()));
    const long unit = detail::parse_csv_number<long>(fields[0], line_no, "unit");
    const long row = detail::parse_csv_number<long>(fields[1], line_no, "row");
    const long col = detail::parse_csv_number<long>(fields[2], line_no, "col");
    const double value = detail::parse_csv_number<double>(fields[3], line_no, "value");
    if (unit < 1 || row < 1 || col < 1)
      throw ParseError("csv line " + std::to_string(line_no) + ": unit, row and col are 1-based");
    if (!cells.emplace(std::tuple{unit, row, col}, value).second)
      throw ShapeError("csv: duplicate cell (unit=" + std::to_string(unit) + ",row=" + std::to_string(row) +
                       ",col=" + std::to_string(col) + ") at line " + std::to_string(line_no));
    if (has_label) {
      const int label = detail::parse_csv_number<int>(fields[4], line_no, "label");
      auto [it, inserted] = unit_labels.emplace(unit, label);
      if (!inserted && it->second != label)
        throw ShapeError("csv line " + std::to_string(line_no) + ": unit " + std::to_string(unit) +
                         " has conflicting labels");
    }
    max_unit = std::max(max_unit, unit);
    max_row = std::max(max_row, row);
    max_col = std::max(max_col, col);
  }
  if (!have_header) throw ParseError("csv: missing header");
  if (cells.empty()) throw ShapeError("csv: no data rows");
  Dataset d;
  d.r = static_cast<std::size_t>(max_row);
  d.p = static_cast<std::size_t>(max_col);
  for (long u = 1; u <= max_unit; ++u) {
    std::vector<double> e;
    e.reserve(d.r * d.p);
    for (long a = 1; a <= max_row; ++a)
      for (long b = 1; b <= max_col; ++b) {
        auto it = cells.find({u, a, b});
        if (it == cells.end())
          throw ShapeError("csv: missing cell (unit=" + std::to_string(u) + ",row=" + std::to_string(a) +
                           ",col=" + std::to_string(b) + ")");
        e.push_back(it->second);
      }
    d.samples.emplace_back(d.r, d.p, std::move(e));
  }
  if (has_label) {
    std::vector<int> labels;
    for (long u = 1; u <= max_unit; ++u) labels.push_back(unit_labels.at(u));
    d.labels = std::move(labels);
  }
  d.validate();
  return d;
}

inline void write_dataset(const Dataset& data, const std::filesystem::path& path, DataFormat format) {
  detail::write_text_file(path, format == DataFormat::json ? dataset_to_json(data) : dataset_to_csv(data));
}

inline Dataset read_dataset(const std::filesystem::path& path, DataFormat format) {
  const std::string text = detail::read_text_file(path);
  try {
    return format == DataFormat::json ? dataset_from_json(text) : dataset_from_csv(text);
  } catch (const SchemaError& e) {
    throw;
  } catch (const InvalidArgument& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

inline Dataset read_dataset(const std::filesystem::path& path) { return read_dataset(path, format_from_path(path)); }

// ---------------------------------------------------------------- fits

inline ordered_json fit_config_to_json(const FitConfig& c) {
  ordered_json j;
  j["g"] = c.g;
  j["n_starts"] = c.n_starts;
  j["max_iter"] = c.max_iter;
  j["tol"] = c.tol;
  j["eta_min"] = c.eta_min;
  j["seed"] = c.seed;
  if (c.min_cluster_weight) j["min_cluster_weight"] = *c.min_cluster_weight;
  j["eta_update"] = to_string(c.eta_update);
  j["initial_eta"] = c.initial_eta;
  return j;
}

inline FitConfig fit_config_from_json(const json& j, const std::string& ctx) {
  FitConfig c;
  c.g = detail::count(detail::field(j, "g", ctx), ctx + ".g");
  c.n_starts = detail::count(detail::field(j, "n_starts", ctx), ctx + ".n_starts");
  c.max_iter = detail::count(detail::field(j, "max_iter", ctx), ctx + ".max_iter");
  c.tol = detail::number(detail::field(j, "tol", ctx), ctx + ".tol");
  c.eta_min = detail::number(detail::field(j, "eta_min", ctx), ctx + ".eta_min");
  c.seed = detail::field(j, "seed", ctx).get<std::uint64_t>();
  if (auto it = j.find("min_cluster_weight"); it != j.end())
    c.min_cluster_weight = detail::number(*it, ctx + ".min_cluster_weight");
  c.eta_update = parse_eta_update(detail::field(j, "eta_update", ctx).get<std::string>());
  c.initial_eta = detail::number(detail::field(j, "initial_eta", ctx), ctx + ".initial_eta");
  return c;
}

// Mixture parameters alone; also the parameter file accepted by `simulate --spec`.
inline ordered_json mixture_to_json(const MixtureModel& m) {
  m.check();
  const bool contaminated = m.kind == ModelKind::cmvn;
  ordered_json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["kind"] = to_string(m.kind);
  doc["g"] = m.g();
  doc["r"] = m.rows();
  doc["p"] = m.cols();
  doc["layout"] = "row-major";
  doc["weights"] = m.weights;
  ordered_json comps = ordered_json::array();
  for (const auto& c : m.components) {
    ordered_json jc;
    jc["mean"] = detail::flat(c.base.mean, "mean");
    jc["sigma"] = detail::flat(c.base.sigma.matrix(), "sigma");
    jc["psi"] = detail::flat(c.base.psi.matrix(), "psi");
    if (contaminated) {
      detail::require_finite(c.alpha, "alpha");
      detail::require_finite(c.eta, "eta");
      jc["alpha"] = c.alpha;
      jc["eta"] = c.eta;
    }
    comps.push_back(std::move(jc));
  }
  doc["components"] = std::move(comps);
  return doc;
}

inline MixtureModel mixture_from_json(const json& doc, const std::string& ctx) {
  return detail::guard_json(ctx, [&] {
    if (!doc.is_object()) throw ParseError(ctx + ": top level must be an object");
    detail::check_schema_version(doc, ctx, true);
    detail::check_layout(doc, ctx);
    MixtureModel m;
    m.kind = parse_model_kind(detail::field(doc, "kind", ctx).get<std::string>());
    const bool contaminated = m.kind == ModelKind::cmvn;
    const std::size_t G = detail::count(detail::field(doc, "g", ctx), ctx + ".g");
    const std::size_t r = detail::count(detail::field(doc, "r", ctx), ctx + ".r");
    const std::size_t p = detail::count(detail::field(doc, "p", ctx), ctx + ".p");
    if (G == 0 || r == 0 || p == 0) throw ShapeError(ctx + ": g, r and p must be positive");
    const auto& weights = detail::field(doc, "weights", ctx);
    if (!weights.is_array() || weights.size() != G) throw ShapeError(ctx + ".weights: expected g values");
    for (std::size_t g = 0; g < G; ++g)
      m.weights.push_back(detail::number(weights[g], ctx + ".weights[" + std::to_string(g) + "]"));
    const auto& comps = detail::field(doc, "components", ctx);
    if (!comps.is_array() || comps.size() != G) throw ShapeError(ctx + ".components: expected g entries");
    for (std::size_t g = 0; g < G; ++g) {
      const std::string cc = ctx + ".components[" + std::to_string(g) + "]";
      const auto& jc = comps[g];
      CmvnParams c{MvnParams{detail::matrix_from_flat(detail::field(jc, "mean", cc), r, p, cc + ".mean"),
                             SpdMatrix(detail::matrix_from_flat(detail::field(jc, "sigma", cc), r, r, cc + ".sigma")),
                             SpdMatrix(detail::matrix_from_flat(detail::field(jc, "psi", cc), p, p, cc + ".psi"))},
                   1.0, 1.0};
      if (contaminated) {
        c.alpha = detail::number(detail::field(jc, "alpha", cc), cc + ".alpha");
        c.eta = detail::number(detail::field(jc, "eta", cc), cc + ".eta");
      }
      m.components.push_back(std::move(c));
    }
    try {
      m.check();
    } catch (const InvalidArgument& e) {
      throw SchemaError(ctx + ": " + e.what());
    }
    return m;
  });
}

inline MixtureModel read_mixture(const std::filesystem::path& path) {
  return mixture_from_json(detail::parse_json(detail::read_text_file(path), path.string()), path.string());
}

inline ordered_json fit_to_json(const FitResult& res) {
  const auto& m = res.model;
  const std::size_t n = res.n();
  const std::size_t n_params = count_free_params(m.kind, m.g(), m.rows(), m.cols());
  for (double v : res.loglik_trace) detail::require_finite(v, "fit log-likelihood");
  ordered_json doc = mixture_to_json(m);
  doc["n"] = n;
  doc["loglik"] = res.loglik();
  doc["n_free_params"] = n_params;
  doc["bic"] = n > 0 ? bic(res.loglik(), n_params, n) : 0.0;
  doc["converged"] = res.converged;
  doc["iterations"] = res.iterations;
  doc["seed"] = res.seed;
  doc["start_index"] = res.start_index;
  doc["failed_starts"] = res.failed_starts;
  doc["config"] = fit_config_to_json(res.config);
  doc["loglik_trace"] = res.loglik_trace;
  doc["z"] = detail::nested_rows(res.resp.z, "z");
  if (res.resp.has_v()) doc["v"] = detail::nested_rows(res.resp.v, "v");
  doc["labels"] = res.hard_labels;
  if (m.kind == ModelKind::cmvn) doc["bad_flags"] = res.bad_flags;
  if (!res.warnings.empty()) doc["warnings"] = res.warnings;
  return doc;
}

inline std::string fit_to_string(const FitResult& res) { return fit_to_json(res).dump(1) + "\n"; }

inline FitResult fit_from_json(const json& doc, std::vector<std::string>* warnings = nullptr) {
  const std::string ctx = "fit";
  return detail::guard_json(ctx, [&] {
    if (!doc.is_object()) throw ParseError(ctx + ": top level must be an object");
    detail::check_schema_version(doc, ctx, true);
    detail::check_layout(doc, ctx);
    static const std::set<std::string> known = {
        "schema_version", "kind",          "g",      "r",     "p",      "n",          "layout",
        "weights",        "components",    "loglik", "n_free_params",   "bic",        "converged",
        "iterations",     "seed",          "start_index",     "failed_starts", "config", "loglik_trace",
        "z",              "v",             "labels", "bad_flags",       "warnings"};
    if (warnings) {
      for (const auto& [key, value] : doc.items())
        if (!known.count(key)) warnings->push_back("fit: ignoring unknown field '" + key + "'");
    }
    FitResult res;
    res.model = mixture_from_json(doc, ctx);
    const bool contaminated = res.model.kind == ModelKind::cmvn;
    const std::size_t G = res.model.g();
    const std::size_t n = detail::count(detail::field(doc, "n", ctx), ctx + ".n");
    if (n == 0) throw ShapeError(ctx + ": n must be positive");
    res.converged = detail::field(doc, "converged", ctx).get<bool>();
    res.iterations = detail::count(detail::field(doc, "iterations", ctx), ctx + ".iterations");
    res.seed = detail::field(doc, "seed", ctx).get<std::uint64_t>();
    res.start_index = detail::count(detail::field(doc, "start_index", ctx), ctx + ".start_index");
    res.failed_starts = detail::count(detail::field(doc, "failed_starts", ctx), ctx + ".failed_starts");
    res.config = fit_config_from_json(detail::field(doc, "config", ctx), ctx + ".config");
    const auto& trace = detail::field(doc, "loglik_trace", ctx);
    if (!trace.is_array() || trace.empty()) throw ShapeError(ctx + ".loglik_trace: expected a non-empty array");
    for (std::size_t k = 0; k < trace.size(); ++k)
      res.loglik_trace.push_back(detail::number(trace[k], ctx + ".loglik_trace[" + std::to_string(k) + "]"));
    res.resp.z = detail::matrix_from_rows(detail::field(doc, "z", ctx), n, G, ctx + ".z");
    if (contaminated) res.resp.v = detail::matrix_from_rows(detail::field(doc, "v", ctx), n, G, ctx + ".v");
    res.hard_labels = detail::field(doc, "labels", ctx).get<std::vector<int>>();
    if (res.hard_labels.size() != n) throw ShapeError(ctx + ".labels: expected n entries");
    for (int l : res.hard_labels)
      if (l < 1 || static_cast<std::size_t>(l) > G) throw ShapeError(ctx + ".labels: label outside 1..g");
    if (contaminated) {
      res.bad_flags = detail::field(doc, "bad_flags", ctx).get<std::vector<bool>>();
      if (res.bad_flags.size() != n) throw ShapeError(ctx + ".bad_flags: expected n entries");
    }
    if (auto it = doc.find("warnings"); it != doc.end()) res.warnings = it->get<std::vector<std::string>>();
    return res;
  });
}

inline FitResult fit_from_string(const std::string& text, std::vector<std::string>* warnings = nullptr) {
  return fit_from_json(detail::parse_json(text, "fit"), warnings);
}

inline void write_fit(const FitResult& res, const std::filesystem::path& path) {
  detail::write_text_file(path, fit_to_string(res));
}

inline FitResult read_fit(const std::filesystem::path& path, std::vector<std::string>* warnings = nullptr) {
  return fit_from_string(detail::read_text_file(path), warnings);
}

// ---------------------------------------------------------------- sweeps and reports

inline ordered_json sweep_to_json(const SweepResult& sweep, std::size_t n) {
  ordered_json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["n"] = n;
  ordered_json entries = ordered_json::array();
  for (const auto& e : sweep.entries) {
    ordered_json je;
    je["kind"] = to_string(e.kind);
    je["g"] = e.g;
    je["status"] = e.ok ? "ok" : "failed";
    je["n_free_params"] = e.n_params;
    if (e.ok) {
      je["loglik"] = e.loglik;
      je["bic"] = e.bic;
      je["converged"] = e.fit->converged;
      je["iterations"] = e.fit->iterations;
    } else {
      je["error"] = e.error;
    }
    entries.push_back(std::move(je));
  }
  doc["entries"] = std::move(entries);
  if (sweep.best) doc["best"] = *sweep.best;
  return doc;
}

inline ordered_json outlier_report_to_json(const OutlierReport& report) {
  ordered_json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["report"] = "outliers";
  ordered_json clusters = ordered_json::array();
  for (const auto& c : report.clusters) {
    ordered_json jc;
    jc["cluster"] = c.cluster;
    jc["weight"] = c.weight;
    jc["alpha"] = c.alpha;
    jc["eta"] = c.eta;
    jc["size"] = c.size;
    ordered_json bad = ordered_json::array();
    for (const auto& b : c.bad) {
      ordered_json jb;
      jb["unit"] = b.unit;
      if (b.name) jb["name"] = *b.name;
      jb["v"] = b.v;
      bad.push_back(std::move(jb));
    }
    jc["bad"] = std::move(bad);
    clusters.push_back(std::move(jc));
  }
  doc["clusters"] = std::move(clusters);
  return doc;
}

}  // namespace cmvn
