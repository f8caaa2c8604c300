// Command-line front end: fit, simulate, detect, evaluate, sweep, replicate.
//
// Exit codes: 0 success, 2 usage, 3 I/O, 4 numeric/convergence, 5 schema.
// Artifacts and tables go to stdout, diagnostics to stderr.

#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cmvn/cmvn.hpp"

namespace {

enum Exit : int { kOk = 0, kUsage = 2, kIo = 3, kNumeric = 4, kSchema = 5 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::map<std::string, std::string> parse_descriptor(const std::string& text, const std::string& flag,
                                                    const std::vector<std::string>& allowed) {
  std::map<std::string, std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == item.size())
      throw UsageError(flag + ": expected key=value pairs, got '" + item + "'");
    const auto key = item.substr(0, eq);
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw UsageError(flag + ": unknown key '" + key + "'");
    if (!out.emplace(key, item.substr(eq + 1)).second) throw UsageError(flag + ": repeated key '" + key + "'");
  }
  if (out.empty()) throw UsageError(flag + ": empty descriptor");
  return out;
}

double to_double(const std::string& s, const std::string& what) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
    throw UsageError(what + ": not a finite number: '" + s + "'");
  return v;
}

std::size_t to_count(const std::string& s, const std::string& what) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw UsageError(what + ": not a non-negative integer: '" + s + "'");
  return v;
}

std::vector<std::size_t> parse_g_range(const std::string& s) {
  std::vector<std::size_t> out;
  const auto colon = s.find(':');
  if (colon == std::string::npos) {
    out.push_back(to_count(s, "--g"));
  } else {
    const auto lo = to_count(s.substr(0, colon), "--g");
    const auto hi = to_count(s.substr(colon + 1), "--g");
    if (lo > hi) throw UsageError("--g: range " + s + " is reversed");
    for (auto g = lo; g <= hi; ++g) out.push_back(g);
  }
  for (auto g : out)
    if (g < 1) throw UsageError("--g: G must be >= 1");
  return out;
}

std::vector<cmvn::ModelKind> parse_models(const std::string& s) {
  std::vector<cmvn::ModelKind> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(cmvn::parse_model_kind(item));
    } catch (const cmvn::InvalidArgument& e) {
      throw UsageError(std::string("--models: ") + e.what());
    }
  }
  if (out.empty()) throw UsageError("--models: no model kinds given");
  return out;
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty() || out_path == "-") {
    std::cout << text;
    std::cout.flush();
  } else {
    cmvn::detail::write_text_file(out_path, text);
  }
}

cmvn::DataFormat data_format(const std::string& flag, const std::string& path) {
  if (flag.empty()) return cmvn::format_from_path(path);
  try {
    return cmvn::parse_data_format(flag);
  } catch (const cmvn::InvalidArgument& e) {
    throw UsageError(e.what());
  }
}

// ---------------------------------------------------------------- options

struct FitOptions {
  std::size_t starts = 20;
  std::uint64_t seed = 0;
  double tol = 1e-8;
  std::size_t max_iter = 1000;
  std::string eta_update = "ml";
  std::size_t threads = 0;

  void add_to(CLI::App* app) {
    app->add_option("--starts", starts, "Random starts per fit")->capture_default_str();
    app->add_option("--seed", seed, "Seed of the random starts")->capture_default_str();
    app->add_option("--tol", tol, "Relative log-likelihood tolerance")->capture_default_str();
    app->add_option("--max-iter", max_iter, "Iteration cap per start")->capture_default_str();
    app->add_option("--eta-update", eta_update, "Inflation update rule: ml or verbatim")->capture_default_str();
    app->add_option("--threads", threads, "Worker threads (0: CMVN_THREADS or hardware)");
  }

  cmvn::FitConfig config(std::size_t g) const {
    cmvn::FitConfig c;
    c.g = g;
    c.n_starts = starts;
    c.seed = seed;
    c.tol = tol;
    c.max_iter = max_iter;
    try {
      c.eta_update = cmvn::parse_eta_update(eta_update);
      c.check();
    } catch (const cmvn::InvalidArgument& e) {
      throw UsageError(e.what());
    }
    return c;
  }

  std::size_t thread_count() const { return threads ? threads : cmvn::default_thread_count(); }
};

// ---------------------------------------------------------------- subcommands

int cmd_fit(const std::string& data_path, const std::string& fmt, const std::string& model, std::size_t g,
            const FitOptions& opt, const std::string& out) {
  if (g < 1) throw UsageError("--g must be >= 1");
  cmvn::ModelKind kind;
  try {
    kind = cmvn::parse_model_kind(model);
  } catch (const cmvn::InvalidArgument& e) {
    throw UsageError(e.what());
  }
  const auto cfg = opt.config(g);
  const auto data = cmvn::read_dataset(data_path, data_format(fmt, data_path));
  const auto res = cmvn::fit(data, cfg, kind, opt.thread_count());
  for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";
  const auto m = cmvn::count_free_params(kind, g, data.r, data.p);
  std::size_t n_bad = 0;
  for (bool b : res.bad_flags) n_bad += b;
  const bool to_stdout = out.empty() || out == "-";
  if (to_stdout)
    std::cout << cmvn::fit_to_string(res);
  else
    cmvn::write_fit(res, out);
  // The summary goes to stderr when stdout carries the document.
  (to_stdout ? std::cerr : std::cout) << "model=" << cmvn::to_string(kind) << " G=" << g << " loglik=" << fixed(res.loglik(), 4)
              << " BIC=" << fixed(cmvn::bic(res.loglik(), m, data.n()), 4) << " bad=" << n_bad
              << " converged=" << (res.converged ? "yes" : "no") << " iterations=" << res.iterations << "\n";
  return kOk;
}

int cmd_simulate(bool builtin, const std::string& spec, std::size_t n, std::uint64_t seed, const std::string& perturb,
                 const std::string& noise, const std::string& fmt, const std::string& out) {
  if (builtin == !spec.empty()) throw UsageError("give exactly one of --paper-table1 or --spec");
  if (n < 1) throw UsageError("--n must be >= 1");
  const auto model = builtin ? cmvn::reference_model() : cmvn::read_mixture(spec);
  cmvn::SeededGenerator rng(seed);
  auto data = cmvn::simulate(model, n, rng);
  if (!perturb.empty()) {
    const auto d = parse_descriptor(perturb, "--perturb", {"obs", "c"});
    if (!d.count("obs") || !d.count("c")) throw UsageError("--perturb: need obs=... and c=...");
    const auto obs = to_count(d.at("obs"), "--perturb obs");
    if (obs < 1 || obs > n) throw UsageError("--perturb: obs must lie in 1.." + std::to_string(n));
    cmvn::perturb(data, obs, to_double(d.at("c"), "--perturb c"));
  }
  if (!noise.empty()) {
    const auto d = parse_descriptor(noise, "--noise", {"frac", "lo", "hi"});
    if (!d.count("frac")) throw UsageError("--noise: need frac=...");
    const double frac = to_double(d.at("frac"), "--noise frac");
    const double lo = d.count("lo") ? to_double(d.at("lo"), "--noise lo") : -8.0;
    const double hi = d.count("hi") ? to_double(d.at("hi"), "--noise hi") : 8.0;
    if (!(frac >= 0.0 && frac <= 1.0) || !(lo < hi)) throw UsageError("--noise: need 0 <= frac <= 1 and lo < hi");
    cmvn::add_uniform_noise(data, frac, lo, hi, rng);
  }
  const auto format = fmt.empty() ? (out.empty() ? cmvn::DataFormat::json : cmvn::format_from_path(out))
                                  : data_format(fmt, out);
  emit(format == cmvn::DataFormat::json ? cmvn::dataset_to_json(data) : cmvn::dataset_to_csv(data), out);
  return kOk;
}

int cmd_detect(const std::string& fit_path, const std::string& data_path, const std::string& format) {
  if (format != "table" && format != "json") throw UsageError("--format must be table or json");
  std::vector<std::string> warnings;
  const auto res = cmvn::read_fit(fit_path, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  std::optional<std::vector<std::string>> names;
  if (!data_path.empty()) {
    const auto data = cmvn::read_dataset(data_path);
    if (data.n() != res.n())
      throw cmvn::LengthMismatch("dataset has " + std::to_string(data.n()) + " units but the fit has " +
                                 std::to_string(res.n()));
    names = data.names;
  }
  const auto report = cmvn::outlier_report(res, names);
  if (format == "json") {
    std::cout << cmvn::outlier_report_to_json(report).dump(1) << "\n";
    return kOk;
  }
  for (const auto& c : report.clusters) {
    std::cout << "cluster " << c.cluster << "  weight=" << fixed(c.weight, 4) << "  alpha=" << fixed(c.alpha, 4)
              << "  eta=" << fixed(c.eta, 4) << "  size=" << c.size << "  bad=" << c.bad.size() << "\n";
    if (c.bad.empty()) continue;
    std::cout << "  unit      v_hat       name\n";
    for (const auto& b : c.bad) {
      char line[64];
      std::snprintf(line, sizeof line, "  %-8zu  %-10s", b.unit, sci(b.v).c_str());
      std::cout << line << "  " << b.name.value_or("-") << "\n";
    }
  }
  std::cout << "total bad: " << report.total_bad() << "\n";
  return kOk;
}

int cmd_evaluate(const std::string& fit_path, const std::string& data_path, bool exclude_bad, const std::string& format) {
  if (format != "table" && format != "json") throw UsageError("--format must be table or json");
  const auto res = cmvn::read_fit(fit_path);
  const auto data = cmvn::read_dataset(data_path);
  if (!data.labels) throw cmvn::MissingLabels("dataset '" + data_path + "' has no true labels; add a \"labels\" field");
  if (data.n() != res.n())
    throw cmvn::LengthMismatch("dataset has " + std::to_string(data.n()) + " units but the fit has " +
                               std::to_string(res.n()));
  std::optional<std::vector<bool>> mask;
  if (exclude_bad) {
    if (!data.good_flags) throw cmvn::MissingLabels("--exclude-bad-truth needs good_flags in the dataset");
    mask = data.good_flags;
  }
  const cmvn::Partition truth{*data.labels, mask};
  const cmvn::Partition pred{res.hard_labels, std::nullopt};
  const double ari = cmvn::adjusted_rand_index(truth, pred);
  const double mcr = cmvn::misclassification_rate(truth, pred);
  std::size_t scored = 0;
  for (std::size_t i = 0; i < data.n(); ++i) scored += !mask || (*mask)[i];
  if (format == "json") {
    cmvn::ordered_json j;
    j["schema_version"] = cmvn::kSchemaVersion;
    j["scored"] = scored;
    j["ari"] = ari;
    j["mcr"] = mcr;
    std::cout << j.dump(1) << "\n";
  } else {
    std::cout << "scored units: " << scored << "\n"
              << "ARI: " << fixed(ari, 4) << "\n"
              << "MCR: " << fixed(100.0 * mcr, 2) << "%\n";
  }
  return kOk;
}

int cmd_sweep(const std::string& data_path, const std::string& fmt, const std::string& models, const std::string& g_range,
              const FitOptions& opt, const std::string& out) {
  const auto kinds = parse_models(models);
  const auto gs = parse_g_range(g_range);
  const auto cfg = opt.config(1);
  const auto data = cmvn::read_dataset(data_path, data_format(fmt, data_path));
  for (auto g : gs)
    if (g > data.n()) throw UsageError("--g: G = " + std::to_string(g) + " exceeds N = " + std::to_string(data.n()));
  const auto sw = cmvn::sweep(data, kinds, gs, cfg, opt.thread_count());
  std::cout << "kind  G   BIC             loglik          params\n";
  for (std::size_t k = 0; k < sw.entries.size(); ++k) {
    const auto& e = sw.entries[k];
    char line[160];
    if (e.ok)
      std::snprintf(line, sizeof line, "%-4s  %-2zu  %-14.4f  %-14.4f  %-6zu%s", cmvn::to_string(e.kind).c_str(), e.g,
                    e.bic, e.loglik, e.n_params, sw.best == k ? "  *" : "");
    else
      std::snprintf(line, sizeof line, "%-4s  %-2zu  %-14s  %-14s  %-6zu", cmvn::to_string(e.kind).c_str(), e.g,
                    "failed", "-", e.n_params);
    std::cout << line << "\n";
    if (!e.ok) std::cerr << "cell " << cmvn::to_string(e.kind) << " G=" << e.g << ": " << e.error << "\n";
  }
  if (!out.empty()) cmvn::detail::write_text_file(out, cmvn::sweep_to_json(sw, data.n()).dump(1) + "\n");
  if (!sw.best) {
    std::cerr << "error: every cell failed\n";
    return kNumeric;
  }
  return kOk;
}

int cmd_replicate(const std::string& study_name, std::uint64_t seed, std::size_t starts, std::size_t threads,
                  bool strict, const std::string& out) {
  cmvn::Study study;
  try {
    study = cmvn::parse_study(study_name);
  } catch (const cmvn::InvalidArgument& e) {
    throw UsageError(e.what());
  }
  if (starts < 1) throw UsageError("--starts must be >= 1");
  const auto rep = cmvn::run_study(study, seed, starts, threads ? threads : cmvn::default_thread_count());
  if (study == cmvn::Study::single_outlier) {
    std::cout << "c    MVN G  CMVN G  CMVN BIC        v6          eta\n";
    for (const auto& r : rep.rows) {
      char line[160];
      std::snprintf(line, sizeof line, "%-4d %-6zu %-7zu %-15.4f %-11s %-10s", static_cast<int>(*r.c),
                    r.mvn_g.value_or(0), r.cmvn_g.value_or(0), r.cmvn_bic.value_or(0.0),
                    r.target_v ? sci(*r.target_v).c_str() : "n/a", r.target_eta ? fixed(*r.target_eta, 3).c_str() : "n/a");
      std::cout << line << "\n";
    }
  } else {
    for (const auto& r : rep.rows) {
      std::cout << "MVN:  G=" << r.mvn_g.value_or(0) << "  BIC=" << fixed(r.mvn_bic.value_or(0.0), 4)
                << "  ARI=" << fixed(r.mvn_ari.value_or(0.0), 4) << "  MCR=" << fixed(100.0 * r.mvn_mcr.value_or(0.0), 2)
                << "%\n";
      std::cout << "CMVN: G=" << r.cmvn_g.value_or(0) << "  BIC=" << fixed(r.cmvn_bic.value_or(0.0), 4)
                << "  ARI=" << fixed(r.ari.value_or(0.0), 4) << "  MCR=" << fixed(100.0 * r.mcr.value_or(0.0), 2)
                << "%\n";
      std::cout << "noise units flagged: " << r.noise_flagged.value_or(0) << "/" << r.noise_count.value_or(0)
                << "  v range [" << sci(r.noise_v_min.value_or(0.0)) << ", " << sci(r.noise_v_max.value_or(0.0))
                << "]\n";
    }
  }
  for (const auto& c : rep.checks)
    std::cout << (c.passed ? "[PASS] " : "[FAIL] ") << (c.asserted ? "" : "(recorded) ") << c.name << ": "
              << c.observed << " [" << c.tolerance << "]\n";
  std::cerr << "elapsed " << fixed(rep.seconds, 1) << " s\n";
  if (!out.empty()) cmvn::detail::write_text_file(out, cmvn::replication_report_to_json(rep).dump(1) + "\n");
  return strict && !rep.asserted_passed() ? 1 : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite mixtures of (contaminated) matrix-variate normal distributions"};
  app.require_subcommand(1);

  std::string data_path, fmt, model = "cmvn", out, fit_path, g_range = "1:3", models = "mvn,cmvn";
  std::size_t g = 1;
  FitOptions fopt;
  auto* fit = app.add_subcommand("fit", "Fit a mixture by multi-start ECM and write the fit document");
  fit->add_option("--data", data_path, "Dataset file (.json or .csv)")->required();
  fit->add_option("--format", fmt, "Dataset format: json or csv-long (default: from extension)");
  fit->add_option("--model", model, "mvn or cmvn")->capture_default_str();
  fit->add_option("--g", g, "Number of components")->required();
  fit->add_option("--out", out, "Fit document path (default: stdout)");
  fopt.add_to(fit);

  bool builtin = false;
  std::string spec, perturb, noise;
  std::size_t n = 150;
  std::uint64_t sim_seed = 0;
  auto* sim = app.add_subcommand("simulate", "Draw a synthetic three-way dataset");
  sim->add_flag("--paper-table1", builtin, "Use the built-in two-group 2x4 parameters");
  sim->add_option("--spec", spec, "Mixture parameter file (JSON)");
  sim->add_option("--n", n, "Number of units")->capture_default_str();
  sim->add_option("--seed", sim_seed, "Generator seed")->capture_default_str();
  sim->add_option("--perturb", perturb, "Shift one unit, e.g. \"obs=6,c=10\"");
  sim->add_option("--noise", noise, "Uniform noise replacement, e.g. \"frac=0.1,lo=-8,hi=8\"");
  sim->add_option("--format", fmt, "json or csv-long (default: from --out extension)");
  sim->add_option("--out", out, "Output path (default: stdout)");

  std::string report_format = "table";
  auto* det = app.add_subcommand("detect", "List bad points per cluster of a CMVN fit");
  det->add_option("--fit", fit_path, "Fit document")->required();
  det->add_option("--data", data_path, "Dataset, used for unit names");
  det->add_option("--format", report_format, "table or json")->capture_default_str();

  bool exclude_bad = false;
  auto* eval = app.add_subcommand("evaluate", "Score a fit against the true labels (ARI, MCR)");
  eval->add_option("--fit", fit_path, "Fit document")->required();
  eval->add_option("--data", data_path, "Dataset with labels")->required();
  eval->add_flag("--exclude-bad-truth", exclude_bad, "Score only units whose good_flags entry is true");
  eval->add_option("--format", report_format, "table or json")->capture_default_str();

  auto* sw = app.add_subcommand("sweep", "Fit every (model, G) cell and rank by BIC");
  sw->add_option("--data", data_path, "Dataset file")->required();
  sw->add_option("--format", fmt, "json or csv-long (default: from extension)");
  sw->add_option("--models", models, "Comma-separated model kinds")->capture_default_str();
  sw->add_option("--g", g_range, "Component range lo:hi or a single G")->capture_default_str();
  sw->add_option("--out", out, "Sweep document path");
  FitOptions sopt;
  sopt.add_to(sw);

  std::string study;
  std::uint64_t rep_seed = 1;
  std::size_t rep_starts = 20, rep_threads = 0;
  bool strict = false;
  auto* rep = app.add_subcommand("replicate", "Run one of the sensitivity studies");
  rep->add_option("--study", study, "single-outlier or uniform-noise")->required();
  rep->add_option("--seed", rep_seed, "Seed for data and starts")->capture_default_str();
  rep->add_option("--starts", rep_starts, "Random starts per fit")->capture_default_str();
  rep->add_option("--threads", rep_threads, "Worker threads (0: CMVN_THREADS or hardware)");
  rep->add_flag("--strict", strict, "Exit 1 if an asserted check fails");
  rep->add_option("--out", out, "Report path (JSON)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*fit) return cmd_fit(data_path, fmt, model, g, fopt, out);
    if (*sim) return cmd_simulate(builtin, spec, n, sim_seed, perturb, noise, fmt, out);
    if (*det) return cmd_detect(fit_path, data_path, report_format);
    if (*eval) return cmd_evaluate(fit_path, data_path, exclude_bad, report_format);
    if (*sw) return cmd_sweep(data_path, fmt, models, g_range, sopt, out);
    if (*rep) return cmd_replicate(study, rep_seed, rep_starts, rep_threads, strict, out);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const cmvn::IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const cmvn::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kNumeric;
  } catch (const cmvn::SchemaError& e) {
    std::cerr << "schema error: " << e.what() << "\n";
    return kSchema;
  } catch (const cmvn::InvalidArgument& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
