// reachkit command line: sampling, metric / SDR / curvature / reach estimation, rate benchmarks.
#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "reachkit/bench.hpp"
#include "reachkit/cloud_io.hpp"
#include "reachkit/geodesic_metric.hpp"
#include "reachkit/local_poly.hpp"
#include "reachkit/reach.hpp"
#include "reachkit/sdr.hpp"
#include "reachkit/synth.hpp"

using namespace reachkit;

namespace {

// Every number goes through %.17g so that outputs are byte-stable.
std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& s, const std::string& what) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0') throw InvalidInput(what + ": expected a number, got '" + s + "'");
  return v;
}

// Writes to a file, or to stdout when the path is empty or "-".
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_.open(path);
      if (!file_) throw InvalidInput("cannot write " + path);
    }
  }
  std::ostream& get() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

// "key=value" lines become "--key=value" tokens placed before the user's own arguments, so
// that explicit flags (parsed later, last one wins) override the file.
std::vector<std::string> config_tokens(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot read config " + path);
  std::vector<std::string> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InvalidInput(path + ":" + std::to_string(lineno) + ": expected key=value");
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    out.push_back("--" + trim(line.substr(0, eq)) + "=" + trim(line.substr(eq + 1)));
  }
  return out;
}

int exit_code(const Error& e) { return dynamic_cast<const NumericFailure*>(&e) ? 3 : 2; }

std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string config;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i + 2));
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      config = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      break;
    }
  }
  if (config.empty() || args.empty()) return args;
  const auto tokens = config_tokens(config);
  args.insert(args.begin() + 1, tokens.begin(), tokens.end());
  return args;
}

ModelParams params_from(int d, int k, double rch_min, double fmin, double fmax, int D) {
  ModelParams p;
  p.d = d;
  p.k = k;
  p.rch_min = rch_min;
  p.f_min = fmin;
  p.f_max = fmax;
  p.L.assign(static_cast<std::size_t>(std::max(0, k - 1)), 1.0 / rch_min);
  p.validate(D);
  return p;
}

std::vector<std::size_t> parse_grid(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const double v = parse_double(item, "--n-grid");
    if (v < 1 || v != std::floor(v)) throw InvalidInput("--n-grid entries must be positive integers");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> read_pairs(const std::string& path, std::size_t n) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot read " + path);
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw InvalidInput("pairs file: expected 'i,j' lines");
    const double i = parse_double(line.substr(0, comma), "pairs file");
    const double j = parse_double(line.substr(comma + 1), "pairs file");
    if (i < 0 || j < 0 || i >= static_cast<double>(n) || j >= static_cast<double>(n) || i != std::floor(i) ||
        j != std::floor(j))
      throw InvalidInput("pairs file: index out of range");
    out.emplace_back(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"reachkit: geodesic metric, spherical distortion radius, curvature and reach estimation"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  std::string config_unused;
  app.add_option("--config", config_unused, "flat key=value file; explicit flags override it");

  // sample
  auto* s_sample = app.add_subcommand("sample", "draw a uniform sample from a synthetic shape");
  std::string shape = "circle", shape_params, out;
  std::size_t n = 1000;
  std::uint64_t seed = 1;
  s_sample->add_option("--shape", shape, "circle|sphere|ellipse|torus|wedge|turn|bump|dumbbell");
  s_sample->add_option("--params", shape_params, "k=v,... shape parameters");
  s_sample->add_option("--n", n, "sample size");
  s_sample->add_option("--seed", seed, "master seed");
  s_sample->add_option("--out", out, "output CSV (default stdout)");

  // estimate-metric
  auto* s_metric = app.add_subcommand("estimate-metric", "plug-in geodesic distances between sample points");
  std::string cloud_path, pairs_path, cap_arg = "auto";
  double epsilon = 0.0;
  double rch_min = kNaN, fmin = kNaN, fmax = kNaN;
  int d = 1, k = 3;
  s_metric->add_option("--cloud", cloud_path, "input cloud CSV")->required();
  s_metric->add_option("--epsilon", epsilon, "offset radius")->required();
  s_metric->add_option("--pairs", pairs_path, "index pairs 'i,j' (default: all pairs)");
  s_metric->add_option("--cap", cap_arg, "auto|F; auto uses the geodesic diameter bound when --d, --rch-min and --fmin are set");
  s_metric->add_option("--d", d, "intrinsic dimension");
  s_metric->add_option("--rch-min", rch_min, "reach lower bound");
  s_metric->add_option("--fmin", fmin, "density lower bound");
  s_metric->add_option("--shape", shape, "oracle shape for d_oracle / rel_err columns");
  s_metric->add_option("--params", shape_params, "oracle shape parameters");
  s_metric->add_option("--out", out, "output CSV");

  // sdr
  auto* s_sdr = app.add_subcommand("sdr", "spherical distortion radius of a finite metric space");
  std::string metric_arg, dump_pairs;
  double delta = 0.0;
  s_sdr->add_option("--cloud", cloud_path, "input cloud CSV")->required();
  s_sdr->add_option("--metric", metric_arg, "table FILE or graph:EPS")->required();
  s_sdr->add_option("--delta", delta, "separation scale")->required();
  s_sdr->add_option("--dump-pairs", dump_pairs, "write the per-pair radii to this CSV");
  s_sdr->add_option("--out", out, "output CSV");

  // curvature
  auto* s_curv = app.add_subcommand("curvature", "minimal curvature radius from local polynomial fits");
  s_curv->set_help_flag("--help", "Print this help message and exit");  // -h would clash with --h
  std::string h_arg = "auto", t_arg = "auto";
  int grid = 9;
  s_curv->add_option("--cloud", cloud_path, "input cloud CSV")->required();
  s_curv->add_option("--d", d, "intrinsic dimension");
  s_curv->add_option("--k", k, "smoothness order");
  s_curv->add_option("--h", h_arg, "F|auto; auto needs --fmin and --fmax");
  s_curv->add_option("--t,--tensor-cap", t_arg, "F|auto (1/(4h))");
  s_curv->add_option("--grid", grid, "grid points per axis over ball(0, h/4)");
  s_curv->add_option("--fmin", fmin, "density lower bound");
  s_curv->add_option("--fmax", fmax, "density upper bound");
  s_curv->add_option("--out", out, "output CSV");

  // reach
  auto* s_reach = app.add_subcommand("reach", "combined reach estimate");
  s_reach->set_help_flag("--help", "Print this help message and exit");  // -h would clash with --h
  std::string delta_arg;
  double eps_override = kNaN, h_override = kNaN, t_override = kNaN;
  s_reach->add_option("--cloud", cloud_path, "input cloud CSV")->required();
  s_reach->add_option("--d", d, "intrinsic dimension");
  s_reach->add_option("--k", k, "smoothness order");
  s_reach->add_option("--rch-min", rch_min, "reach lower bound")->required();
  s_reach->add_option("--fmin", fmin, "density lower bound")->required();
  s_reach->add_option("--fmax", fmax, "density upper bound")->required();
  s_reach->add_option("--delta", delta_arg, "F|adaptive (default rch_min/2)");
  s_reach->add_option("--epsilon", eps_override, "plug-in offset (default from bandwidth)");
  s_reach->add_option("--h", h_override, "patch bandwidth");
  s_reach->add_option("--t,--tensor-cap", t_override, "tensor cap");
  s_reach->add_option("--grid", grid, "curvature grid per axis");
  s_reach->add_option("--out", out, "output JSON");

  // bench
  auto* s_bench = app.add_subcommand("bench", "convergence sweep over sample sizes");
  ExperimentConfig ec;
  std::string n_grid = "200,400,800,1600";
  std::vector<std::string> knobs;
  s_bench->add_option("--shape", ec.shape, "shape name");
  s_bench->add_option("--params", ec.params, "shape parameters");
  s_bench->add_option("--estimator", ec.estimator, "metric|sdr|curvature|reach");
  s_bench->add_option("--n-grid", n_grid, "comma-separated increasing sample sizes");
  s_bench->add_option("--replicates", ec.replicates, "replicates per n");
  s_bench->add_option("--seed", ec.seed, "master seed");
  s_bench->add_option("--knob", knobs, "estimator knob key=value (repeatable)")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  s_bench->add_option("--threads", ec.threads, "worker threads (0: all cores)");
  s_bench->add_flag("--timing", ec.timing, "record runtime_ms (output no longer byte-stable)");
  s_bench->add_option("--out", ec.out, "output CSV");

  // fit-rate
  auto* s_fit = app.add_subcommand("fit-rate", "log-log slope of median error against n");
  std::string in_path, svg_path;
  std::size_t bootstrap = 200;
  s_fit->add_option("--in", in_path, "bench CSV")->required();
  s_fit->add_option("--bootstrap", bootstrap, "bootstrap resamples");
  s_fit->add_option("--svg", svg_path, "write a log-log plot");
  s_fit->add_option("--out", out, "output CSV");

  for (auto* sub : {s_sample, s_metric, s_sdr, s_curv, s_reach, s_bench, s_fit})
    sub->add_option("--config", config_unused, "flat key=value file; explicit flags override it");

  try {
    auto args = expand_config(argc, argv);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e);
  }

  try {
    if (*s_sample) {
      const auto spec = parse_shape(shape, shape_params);
      const auto cloud = sample(spec, n, seed);
      Output o(out);
      write_cloud(o.get(), cloud);
    } else if (*s_metric) {
      const auto cloud = read_cloud_file(cloud_path);
      require(epsilon > 0, "--epsilon must be positive");
      double cap = kInf;
      if (cap_arg == "auto") {
        if (!std::isnan(rch_min) && !std::isnan(fmin))
          cap = d_max_bound(params_from(d, 2, rch_min, fmin, fmin, cloud.dim()));
      } else {
        cap = parse_double(cap_arg, "--cap");
      }
      require(cap > 0, "--cap must be positive");
      const PluginMetric metric(cloud, epsilon, cap);
      std::vector<std::pair<std::size_t, std::size_t>> pairs;
      if (pairs_path.empty()) {
        for (std::size_t i = 0; i < cloud.size(); ++i)
          for (std::size_t j = i + 1; j < cloud.size(); ++j) pairs.emplace_back(i, j);
      } else {
        pairs = read_pairs(pairs_path, cloud.size());
      }
      std::optional<OracleSet> orc;
      if (s_metric->count("--shape")) orc = oracle(parse_shape(shape, shape_params));
      const auto table = metric.sample_table();
      Output o(out);
      o.get() << (orc ? "i,j,d_hat,d_oracle,rel_err\n" : "i,j,d_hat\n");
      for (const auto& [i, j] : pairs) {
        const double dh = table(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        o.get() << i << ',' << j << ',' << num(dh);
        if (orc) {
          const double dt = i == j ? 0.0 : orc->geodesic(cloud.point(i), cloud.point(j));
          o.get() << ',' << num(dt) << ',' << num(dt > 0 ? std::abs(1.0 - dh / dt) : 0.0);
        }
        o.get() << '\n';
      }
    } else if (*s_sdr) {
      const auto cloud = read_cloud_file(cloud_path);
      Eigen::MatrixXd table;
      if (metric_arg.rfind("graph:", 0) == 0) {
        const double eps = parse_double(metric_arg.substr(6), "--metric graph:EPS");
        require(eps > 0, "graph offset must be positive");
        table = PluginMetric(cloud, eps, kInf).raw_table();
      } else {
        table = read_table_file(metric_arg);
      }
      require(table.rows() == static_cast<Eigen::Index>(cloud.size()), "metric table size does not match the cloud");
      const FiniteMetricSpace space(cloud, table, true);
      const auto res = sdr_delta(space, delta, !dump_pairs.empty());
      Output o(out);
      o.get() << "delta,sdr,floor,critical_i,critical_j\n" << num(delta) << ',' << num(res.value) << ',' << num(res.floor)
              << ',';
      if (res.critical_pair)
        o.get() << res.critical_pair->first << ',' << res.critical_pair->second << '\n';
      else
        o.get() << ",\n";
      if (!dump_pairs.empty()) {
        Output p(dump_pairs);
        p.get() << "i,j,radius\n";
        for (const auto& pr : res.pair_radii) p.get() << pr.i << ',' << pr.j << ',' << num(pr.radius) << '\n';
      }
    } else if (*s_curv) {
      const auto cloud = read_cloud_file(cloud_path);
      FitConfig fit;
      fit.d = d;
      fit.k = k;
      if (h_arg == "auto") {
        require(!std::isnan(fmin) && !std::isnan(fmax), "--h auto needs --fmin and --fmax");
        fit.h = bandwidth(params_from(d, k, 1.0, fmin, fmax, cloud.dim()), cloud.size(), 3.0);
      } else {
        fit.h = parse_double(h_arg, "--h");
      }
      fit.t = t_arg == "auto" ? 1.0 / (4.0 * fit.h) : parse_double(t_arg, "--t");
      std::size_t skipped = 0;
      const auto patches = fit_all_patches(cloud, fit, &skipped);
      if (patches.empty()) throw InsufficientData("no sample has enough neighbors within h");
      const auto est = min_curvature_radius(patches, grid);
      Output o(out);
      o.get() << "# R_ell_hat=" << num(est.R_ell_hat) << " flat=" << (est.flat ? 1 : 0) << " h=" << num(fit.h)
              << " t=" << num(fit.t) << " skipped=" << skipped << '\n';
      o.get() << "i,min_radius,objective,initial_objective,window\n";
      for (std::size_t p = 0; p < patches.size(); ++p)
        o.get() << patches[p].base_index << ',' << num(est.per_patch_radius[p]) << ',' << num(patches[p].objective) << ','
                << num(patches[p].initial_objective) << ',' << patches[p].window << '\n';
    } else if (*s_reach) {
      const auto cloud = read_cloud_file(cloud_path);
      const auto params = params_from(d, k, rch_min, fmin, fmax, cloud.dim());
      ReachConfig rc;
      rc.adaptive = delta_arg == "adaptive";
      if (!rc.adaptive && !delta_arg.empty()) rc.delta = parse_double(delta_arg, "--delta");
      rc.epsilon_n = eps_override;
      rc.h = h_override;
      rc.t = t_override;
      rc.grid = grid;
      const auto rep = reach_estimate(cloud, params, rc);
      auto jnum = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(num(v)); };
      nlohmann::json j;
      j["rch_hat"] = jnum(rep.rch_hat);
      j["r_ell_hat"] = jnum(rep.r_ell_hat);
      j["sdr_hat"] = jnum(rep.sdr_hat);
      j["regime"] = rep.regime;
      j["flat"] = rep.flat;
      j["skipped_patches"] = rep.skipped_patches;
      j["tuning"] = {{"epsilon_n", jnum(rep.tuning.epsilon_n)},
                     {"delta", jnum(rep.tuning.delta)},
                     {"h", jnum(rep.tuning.h)},
                     {"t", jnum(rep.tuning.t)}};
      Output o(out);
      o.get() << j.dump(2) << '\n';
    } else if (*s_bench) {
      ec.n_grid = parse_grid(n_grid);
      for (const auto& kv : knobs) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw InvalidInput("--knob expects key=value");
        ec.knobs[kv.substr(0, eq)] = parse_double(kv.substr(eq + 1), "--knob " + kv.substr(0, eq));
      }
      const auto rows = run_experiment(ec);
      Output o(ec.out);
      write_rows(o.get(), rows);
    } else if (*s_fit) {
      const auto rows = read_rows_file(in_path);
      const auto fit = fit_rate(rows, bootstrap);
      Output o(out);
      o.get() << "# slope=" << num(fit.slope) << " intercept=" << num(fit.intercept) << " ci95=[" << num(fit.ci_low) << ','
              << num(fit.ci_high) << "] flat=" << (fit.flat ? 1 : 0) << '\n';
      o.get() << "n,median,iqr\n";
      for (std::size_t i = 0; i < fit.n.size(); ++i)
        o.get() << num(fit.n[i]) << ',' << num(fit.median[i]) << ',' << num(fit.iqr[i]) << '\n';
      if (!svg_path.empty()) {
        Output svg(svg_path);
        write_rate_svg(svg.get(), fit);
      }
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
