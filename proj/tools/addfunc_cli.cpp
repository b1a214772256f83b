// Command-line front end: estimate from data files, simulate risk grids,
// fit best-approximation polynomials, and run a quick self-check.
//
// Exit codes: 0 success, 2 malformed input data or command line, 3 bad
// configuration, 4 estimation/fitting failure at run time.

#include <CLI11.hpp>
#include <addfunc/errors.hpp>
#include <addfunc/estimators.hpp>
#include <addfunc/io.hpp>
#include <addfunc/phi.hpp>
#include <addfunc/poly.hpp>
#include <addfunc/reduce.hpp>
#include <addfunc/risk.hpp>
#include <addfunc/sampling.hpp>
#include <addfunc/smoothing.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace {

using addfunc::ConfigError;
using addfunc::DataError;
using addfunc::EstimatorError;
using nlohmann::json;

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---- config file handling --------------------------------------------------

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config file must hold a flat JSON object");
  return j;
}

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed) {
  for (const auto& item : j.items()) {
    if (!allowed.count(item.key()))
      throw ConfigError("unknown config key '" + item.key() + "'");
  }
}

template <typename T>
T get_as(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type");
  }
}

addfunc::PhiSpec make_phi(const json& cfg) {
  std::string name = get_as<std::string>(cfg, "phi", "");
  if (name.empty()) throw ConfigError("config needs a 'phi' entry ('power' or 'entropy')");
  double alpha = get_as<double>(cfg, "alpha", 0.0);
  const auto colon = name.find(':');
  if (colon != std::string::npos) {
    try {
      alpha = std::stod(name.substr(colon + 1));
    } catch (const std::exception&) {
      throw ConfigError("cannot parse exponent in phi spec '" + name + "'");
    }
    name = name.substr(0, colon);
  }
  if (name == "entropy") return addfunc::entropy_phi();
  if (name == "power") {
    if (!(alpha > 0.0))
      throw ConfigError("phi 'power' needs a positive 'alpha' (or use \"power:<alpha>\")");
    return addfunc::power_phi(alpha);
  }
  throw ConfigError("unknown phi '" + name + "' (expected 'power' or 'entropy')");
}

addfunc::EstimatorConfig make_estimator_config(const json& cfg) {
  addfunc::EstimatorConfig ec;
  ec.mode = addfunc::mode_from_name(get_as<std::string>(cfg, "mode", "hybrid4"));
  ec.C1 = get_as<double>(cfg, "C1", ec.C1);
  ec.C2 = get_as<double>(cfg, "C2", ec.C2);
  ec.n = get_as<std::int64_t>(cfg, "n", 0);
  ec.k = get_as<std::int64_t>(cfg, "k", 0);
  ec.strict_theory = get_as<bool>(cfg, "strict_theory", false);
  ec.force = get_as<bool>(cfg, "force", false);
  ec.literal_split = get_as<bool>(cfg, "literal_split", false);
  ec.seed = get_as<std::uint64_t>(cfg, "seed", 0);
  if (cfg.contains("threshold_count"))
    ec.threshold_count_override = get_as<double>(cfg, "threshold_count", 0.0);
  return ec;
}

json config_echo(const addfunc::PhiSpec& spec, const addfunc::EstimatorConfig& ec) {
  json j;
  j["phi"] = spec.id;
  j["alpha"] = spec.alpha;
  j["mode"] = addfunc::mode_name(ec.mode);
  j["C1"] = ec.C1;
  j["C2"] = ec.C2;
  j["n"] = ec.n;
  j["k"] = ec.k;
  j["seed"] = ec.seed;
  j["strict_theory"] = ec.strict_theory;
  j["force"] = ec.force;
  j["literal_split"] = ec.literal_split;
  if (ec.threshold_count_override) j["threshold_count"] = *ec.threshold_count_override;
  if (ec.n > 0) {
    j["delta_count"] = ec.delta_count();
    j["degree"] = ec.degree();
    j["threshold"] = ec.threshold();
  }
  return j;
}

std::string header_lines(const json& echo) {
  // nlohmann serializes object keys sorted, so the header is byte-stable.
  std::string out = "# config " + echo.dump() + "\n";
  return out;
}

// ---- shared CLI plumbing ----------------------------------------------------

struct Common {
  std::string config_path;
  std::uint64_t seed = 0;
  int jobs = 0;
  std::string out_dir;
  std::string format;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* fmt_opt = nullptr;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config_path, "JSON config file (flat object)");
  c.seed_opt = sub->add_option("--seed", c.seed, "override the seed from the config");
  sub->add_option("--jobs", c.jobs, "worker threads (0 = hardware default)");
  sub->add_option("--out", c.out_dir, "write results into this directory instead of stdout");
  c.fmt_opt = sub->add_option("--format", c.format, "output format")
                  ->check(CLI::IsMember({"csv", "json"}));
}

void apply_common(const Common& c, json& cfg) {
  if (c.jobs > 0) addfunc::set_threads(c.jobs);
  if (c.seed_opt && c.seed_opt->count() > 0) cfg["seed"] = c.seed;
  if (c.fmt_opt && c.fmt_opt->count() > 0) cfg["format"] = c.format;
}

void emit(const Common& c, const std::string& filename, const std::string& content) {
  if (c.out_dir.empty()) {
    std::fwrite(content.data(), 1, content.size(), stdout);
    return;
  }
  const std::filesystem::path path = std::filesystem::path(c.out_dir) / filename;
  addfunc::atomic_write(path, content);
  std::fprintf(stderr, "wrote %s\n", path.string().c_str());
}

// ---- estimate ----------------------------------------------------------------

const std::set<std::string> kEstimateKeys = {
    "phi",   "alpha",        "mode",          "C1",   "C2",     "n",
    "k",     "strict_theory", "force",        "literal_split",  "seed",
    "threshold_count",        "data",         "data_format",    "format",
    "out"};

int cmd_estimate(const Common& c, const std::string& data_arg) {
  json cfg = load_config(c.config_path);
  reject_unknown_keys(cfg, kEstimateKeys);
  json cfg2 = cfg;
  apply_common(c, cfg2);

  const std::string data_path = data_arg.empty() ? get_as<std::string>(cfg2, "data", "") : data_arg;
  if (data_path.empty())
    throw ConfigError("estimate needs a data file (positional argument or 'data' config key)");

  std::string data_format = get_as<std::string>(cfg2, "data_format", "auto");
  if (data_format == "auto") {
    std::ifstream peek(data_path);
    if (!peek) throw DataError("cannot open '" + data_path + "'");
    std::string line;
    data_format = "samples";
    while (std::getline(peek, line)) {
      if (line.empty() || line[0] == '#') continue;
      data_format = line.find(',') != std::string::npos ? "histogram" : "samples";
      break;
    }
  }

  const addfunc::PhiSpec spec = make_phi(cfg2);
  addfunc::EstimatorConfig ec = make_estimator_config(cfg2);

  addfunc::Histogram hist;
  if (data_format == "histogram")
    hist = addfunc::read_histogram_csv(std::filesystem::path(data_path), ec.k);
  else if (data_format == "samples")
    hist = addfunc::read_samples(std::filesystem::path(data_path), ec.k);
  else
    throw ConfigError("data_format must be 'auto', 'histogram', or 'samples'");
  if (ec.n > 0) hist.n = ec.n;  // declared budget overrides the tally

  addfunc::PolyCache cache;  // honors ADDFUNC_CACHE_DIR
  const addfunc::EstimateResult res = addfunc::estimate(spec, hist, ec, &cache);

  addfunc::EstimatorConfig effective = ec.with_n(hist.n);
  effective.k = hist.k();
  json echo = config_echo(spec, effective);
  // Hybrid modes run on a thinned budget; echo the values actually used.
  echo["delta_count"] = res.delta_count;
  echo["degree"] = res.degree;
  echo["threshold"] = ec.threshold_count_override ? *ec.threshold_count_override
                                                  : 2.0 * res.delta_count;

  const std::string format = get_as<std::string>(cfg2, "format", "json");
  std::string doc;
  if (format == "json") {
    json out;
    out["value"] = res.value;
    out["mode"] = addfunc::mode_name(res.mode);
    out["plugin_branch"] = res.plugin_branch;
    out["poly_branch"] = res.poly_branch;
    out["delta_count"] = res.delta_count;
    out["degree"] = res.degree;
    out["warnings"] = res.warnings;
    out["config"] = echo;
    doc = out.dump(2) + "\n";
  } else {
    doc = header_lines(echo);
    doc += "field,value\n";
    doc += "value," + g17(res.value) + "\n";
    doc += std::string("mode,") + addfunc::mode_name(res.mode) + "\n";
    doc += "plugin_branch," + std::to_string(res.plugin_branch) + "\n";
    doc += "poly_branch," + std::to_string(res.poly_branch) + "\n";
    doc += "delta_count," + g17(res.delta_count) + "\n";
    doc += "degree," + std::to_string(res.degree) + "\n";
    for (const auto& w : res.warnings) doc += "# warning: " + w + "\n";
  }
  emit(c, std::string("estimate_") + spec.id + "_" + addfunc::mode_name(res.mode) +
              (format == "json" ? ".json" : ".csv"),
       doc);
  return 0;
}

// ---- simulate -----------------------------------------------------------------

const std::set<std::string> kSimulateKeys = {
    "phi",    "alpha", "mode",  "C1",    "C2",     "strict_theory",
    "force",  "literal_split",  "seed",  "n_grid", "k_grid",
    "dists",  "trials",         "threshold_count", "format", "out"};

int cmd_simulate(const Common& c) {
  json cfg = load_config(c.config_path);
  reject_unknown_keys(cfg, kSimulateKeys);
  apply_common(c, cfg);

  const addfunc::PhiSpec spec = make_phi(cfg);
  const addfunc::EstimatorConfig ec = make_estimator_config(cfg);

  addfunc::GridSpec grid;
  grid.n_grid = get_as<std::vector<std::int64_t>>(cfg, "n_grid", {});
  grid.k_grid = get_as<std::vector<std::int64_t>>(cfg, "k_grid", {});
  grid.dists = get_as<std::vector<std::string>>(cfg, "dists", {});
  grid.trials = get_as<int>(cfg, "trials", 100);
  const std::uint64_t master_seed = get_as<std::uint64_t>(cfg, "seed", 0);

  addfunc::PolyCache cache;
  const addfunc::RiskReport report = addfunc::run_grid(spec, grid, ec, master_seed, &cache);

  bool any_ok = false;
  for (const auto& cell : report.cells) any_ok = any_ok || !cell.failed;
  if (!any_ok) {
    std::fprintf(stderr, "error: every grid cell failed; first error: %s\n",
                 report.cells.empty() ? "(no cells)" : report.cells.front().error.c_str());
    return 4;
  }

  json echo = config_echo(spec, ec);
  echo.erase("n");  // per-cell
  echo.erase("k");
  echo["seed"] = master_seed;
  echo["trials"] = grid.trials;
  echo["n_grid"] = grid.n_grid;
  echo["k_grid"] = grid.k_grid;
  echo["dists"] = grid.dists;

  const std::string csv_doc = header_lines(echo) + report.csv();
  json summary = json::parse(report.summary_json());
  summary["config"] = echo;
  const std::string json_doc = summary.dump(2) + "\n";

  const std::string base = std::string("risk_") + spec.id + "_" + addfunc::mode_name(ec.mode);
  if (!c.out_dir.empty()) {
    emit(c, base + ".csv", csv_doc);
    emit(c, base + ".summary.json", json_doc);
  } else {
    const std::string format = get_as<std::string>(cfg, "format", "csv");
    std::fputs(format == "json" ? json_doc.c_str() : csv_doc.c_str(), stdout);
  }
  std::fprintf(stderr, "# %zu cells, wall %.3fs\n", report.cells.size(), report.wall_seconds);
  return 0;
}

// ---- approx -------------------------------------------------------------------

const std::set<std::string> kApproxKeys = {"phi",      "alpha",   "degree", "lo",
                                           "hi",       "max_iter", "rel_tol",
                                           "grid_size", "format",  "out"};

int cmd_approx(const Common& c) {
  json cfg = load_config(c.config_path);
  reject_unknown_keys(cfg, kApproxKeys);
  apply_common(c, cfg);

  const addfunc::PhiSpec spec = make_phi(cfg);
  const int degree = get_as<int>(cfg, "degree", -1);
  const double lo = get_as<double>(cfg, "lo", 0.0);
  const double hi = get_as<double>(cfg, "hi", 1.0);
  addfunc::RemezOptions opt;
  opt.max_iter = get_as<int>(cfg, "max_iter", opt.max_iter);
  opt.rel_tol = get_as<double>(cfg, "rel_tol", opt.rel_tol);
  opt.grid_size = get_as<int>(cfg, "grid_size", opt.grid_size);

  const addfunc::Polynomial poly = addfunc::remez_best_poly(spec, degree, lo, hi, opt);

  json echo;
  echo["phi"] = spec.id;
  echo["alpha"] = spec.alpha;
  echo["degree"] = degree;
  echo["lo"] = lo;
  echo["hi"] = hi;
  echo["max_iter"] = opt.max_iter;
  echo["rel_tol"] = opt.rel_tol;
  echo["grid_size"] = opt.grid_size;

  const std::string format = get_as<std::string>(cfg, "format", "json");
  std::string doc;
  if (format == "json") {
    json out = json::parse(poly.to_json());
    out["certificate"] = json::array();
    for (const auto& pt : poly.certificate)
      out["certificate"].push_back({{"x", pt.x}, {"deviation", pt.deviation}, {"sign", pt.sign}});
    out["config"] = echo;
    doc = out.dump(2) + "\n";
  } else {
    doc = header_lines(echo);
    doc += "m,coefficient\n";
    for (std::size_t m = 0; m < poly.coeffs.size(); ++m)
      doc += std::to_string(m) + "," + g17(poly.coeffs[m]) + "\n";
    doc += "sup_error," + g17(poly.sup_error) + "\n";
  }
  emit(c, std::string("approx_") + spec.id + "_L" + std::to_string(degree) +
              (format == "json" ? ".json" : ".csv"),
       doc);
  return 0;
}

// ---- selftest -------------------------------------------------------------------

int cmd_selftest() {
  int failures = 0;
  auto check = [&](const char* name, bool ok, const std::string& detail = "") {
    if (ok) {
      std::printf("ok - %s\n", name);
    } else {
      ++failures;
      std::printf("FAIL - %s%s%s\n", name, detail.empty() ? "" : ": ", detail.c_str());
    }
  };

  using namespace addfunc;
  {
    const Polynomial p = remez_best_poly([](double x) { return x * x; }, 1, 0.0, 1.0);
    check("best line for x^2 equioscillates",
          std::fabs(p.coeffs[0] + 0.125) < 1e-6 && std::fabs(p.coeffs[1] - 1.0) < 1e-6 &&
              std::fabs(p.sup_error - 0.125) < 1e-6);
  }
  {
    const Polynomial p =
        remez_best_poly([](double x) { return ((2 * x - 1) * x + 0.5) * x - 0.25; }, 3, 0.0, 1.0);
    check("cubic targets reproduce exactly", p.sup_error < 1e-9,
          "sup_error=" + g17(p.sup_error));
  }
  {
    const PhiSpec spec = power_phi(1.2);
    bool ok = true;
    for (int m = 0; m <= 6; ++m) {
      const double want = spec.eval(m, 0.02);
      const double got = hermite_interp(spec, 6, 0.02, 0.01, m, 0.02);
      ok = ok && std::fabs(got - want) <= 1e-6 * std::max(1.0, std::fabs(want));
    }
    ok = ok && hermite_interp(spec, 6, 0.02, 0.01, 0, 0.01) == spec.eval(0, 0.02);
    check("blend matches the jet and flattens", ok);
  }
  {
    Histogram h;
    h.counts = {2, 1, 1};
    h.n = 4;
    check("plugin example", std::fabs(plugin_estimate(power_phi(2.0), h) - 0.375) < 1e-15);
  }
  {
    bool threw = false;
    try {
      falling_factorial(21, 21);
    } catch (const EstimatorError&) {
      threw = true;
    }
    check("falling factorial", falling_factorial(20, 3) == 6840 && threw);
  }
  {
    const PhiSpec spec = power_phi(1.2);
    Histogram h;
    h.counts = {600, 300, 80, 12, 8};
    h.n = 1000;
    EstimatorConfig cfg;
    cfg.seed = 5;
    PolyCache cache(std::nullopt);
    const double a = estimate(spec, h, cfg, &cache).value;
    const double b = estimate(spec, h, cfg, &cache).value;
    check("thinned split is deterministic", a == b);
  }
  {
    std::vector<double> x, y;
    for (double v : {1e2, 1e3, 1e4, 1e5}) {
      x.push_back(v);
      y.push_back(5.0 / v);
    }
    check("rate fit recovers 1/n", std::fabs(fit_log_log(x, y).slope + 1.0) < 1e-6);
  }
  {
    const double m =
        exact_poisson_expectation([](std::int64_t j) { return static_cast<double>(j); }, 3.7);
    check("poisson oracle mean", std::fabs(m - 3.7) < 1e-10);
  }
  {
    const LeCamResult r = lecam_two_point(power_phi(2.0), 100, 3, 0.3, 0.3);
    check("degenerate two-point bound is zero", r.bound == 0.0 && r.delta_theta == 0.0);
  }
  {
    auto f = [](std::size_t i) {
      return std::sin(0.1 * static_cast<double>(i)) * std::pow(10.0, static_cast<int>(i % 11) - 5);
    };
    check("parallel reduction is bit-stable", par::map_sum(20000, f) == serial::map_sum(20000, f));
  }
  return failures == 0 ? 0 : 4;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"additive-functional estimation toolkit"};
  app.require_subcommand(1);

  Common est_c, sim_c, apx_c, self_c;
  std::string data_arg;

  CLI::App* est = app.add_subcommand("estimate", "estimate theta from a data file");
  add_common(est, est_c);
  est->add_option("data", data_arg, "histogram CSV or newline-delimited samples");

  CLI::App* sim = app.add_subcommand("simulate", "Monte Carlo risk over an (n,k,dist) grid");
  add_common(sim, sim_c);

  CLI::App* apx = app.add_subcommand("approx", "best uniform polynomial approximation of phi");
  add_common(apx, apx_c);

  CLI::App* self = app.add_subcommand("selftest", "run fast invariant checks");
  add_common(self, self_c);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const auto t0 = std::chrono::steady_clock::now();
  int rc = 0;
  try {
    if (est->parsed())
      rc = cmd_estimate(est_c, data_arg);
    else if (sim->parsed())
      rc = cmd_simulate(sim_c);
    else if (apx->parsed())
      rc = cmd_approx(apx_c);
    else {
      if (self_c.jobs > 0) addfunc::set_threads(self_c.jobs);
      rc = cmd_selftest();
    }
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    rc = 2;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    rc = 3;
  } catch (const addfunc::RemezError& e) {
    std::fprintf(stderr, "approximation failed: %s\n", e.what());
    rc = 4;
  } catch (const EstimatorError& e) {
    std::fprintf(stderr, "estimation failed: %s\n", e.what());
    rc = 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    rc = 1;
  }
  const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
  std::fprintf(stderr, "# elapsed %.3fs\n", dt.count());
  return rc;
}
