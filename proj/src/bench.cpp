#include "reachkit/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>
#include <tuple>

#include "reachkit/geodesic_metric.hpp"
#include "reachkit/reach.hpp"
#include "reachkit/rng.hpp"

namespace reachkit {
namespace {

constexpr const char* kCsvHeader = "# reachkit-csv v1";
constexpr const char* kColumns = "n,seed,estimator,value,truth,abs_err,rel_err,runtime_ms,status";

double knob(const ExperimentConfig& cfg, const char* key, double dflt) {
  const auto it = cfg.knobs.find(key);
  return it == cfg.knobs.end() ? dflt : it->second;
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::pair<double, double> ols(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

ResultRow run_one(const ExperimentConfig& cfg, const ShapeSpec& shape, const OracleSet& orc, std::size_t n,
                  std::uint64_t seed) {
  ResultRow row;
  row.n = n;
  row.seed = seed;
  row.estimator = cfg.estimator;
  const auto start = std::chrono::steady_clock::now();
  try {
    const int k = static_cast<int>(knob(cfg, "k", 3));
    const ModelParams params = model_params(shape, k);
    const PointCloud cloud = sample(shape, n, seed);
    if (cfg.estimator == "metric") {
      const double eps = knob(cfg, "epsilon", metric_offset(orc.volume, params.d, n, knob(cfg, "eps_C", 1.0)));
      const PluginMetric metric(cloud, eps, d_max_bound(params));
      const auto loss = sup_loss_table(metric.sample_table(), oracle_distance_table(shape, cloud));
      row.value = loss.l_n;
      row.truth = 0.0;
    } else if (cfg.estimator == "sdr") {
      const double eps = knob(cfg, "epsilon", bandwidth(params, n, knob(cfg, "eps_C", 2.0)));
      row.value = sdr_plugin(cloud, params, eps, knob(cfg, "delta", params.rch_min / 2.0));
      row.truth = orc.reach;
    } else if (cfg.estimator == "curvature") {
      FitConfig fit;
      fit.d = params.d;
      fit.k = k;
      fit.h = knob(cfg, "h", bandwidth(params, n, knob(cfg, "h_C", 3.0)));
      fit.t = knob(cfg, "t", 1.0 / (4.0 * fit.h));
      const auto patches = fit_all_patches(cloud, fit);
      if (patches.empty()) throw InsufficientData("no patch could be fitted");
      row.value = min_curvature_radius(patches, static_cast<int>(knob(cfg, "grid", 9))).R_ell_hat;
      row.truth = orc.r_ell;
    } else if (cfg.estimator == "reach") {
      ReachConfig rc;
      rc.delta = knob(cfg, "delta", kNaN);
      rc.epsilon_n = knob(cfg, "epsilon", kNaN);
      rc.h = knob(cfg, "h", kNaN);
      rc.t = knob(cfg, "t", kNaN);
      rc.eps_C = knob(cfg, "eps_C", rc.eps_C);
      rc.h_C = knob(cfg, "h_C", rc.h_C);
      rc.grid = static_cast<int>(knob(cfg, "grid", 9));
      rc.adaptive = knob(cfg, "adaptive", 0.0) != 0.0;
      row.value = reach_estimate(cloud, params, rc).rch_hat;
      row.truth = orc.reach;
    }
    row.abs_err = std::abs(row.value - row.truth);
    row.rel_err = row.truth != 0.0 ? row.abs_err / std::abs(row.truth) : row.abs_err;
  } catch (const InvalidInput& e) {
    row.status = "invalid_input";
  } catch (const NumericFailure& e) {
    row.status = "numeric_failure";
  } catch (const std::exception& e) {
    row.status = "error";
  }
  if (cfg.timing)
    row.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return row;
}

}  // namespace

void ExperimentConfig::validate() const {
  require(!n_grid.empty(), "n_grid must not be empty");
  for (std::size_t i = 1; i < n_grid.size(); ++i) require(n_grid[i] > n_grid[i - 1], "n_grid must be strictly increasing");
  require(n_grid.front() >= 2, "sample sizes must be at least 2");
  require(replicates >= 1, "replicates must be >= 1");
  require(estimator == "metric" || estimator == "sdr" || estimator == "curvature" || estimator == "reach",
          "unknown estimator '" + estimator + "'");
}

std::uint64_t replicate_seed(std::uint64_t master, std::size_t grid_index, std::size_t replicate) {
  return stream_key(master, (static_cast<std::uint64_t>(grid_index) << 32) | static_cast<std::uint64_t>(replicate));
}

double metric_offset(double volume, int d, std::size_t n, double eps_C) {
  require(volume > 0 && d >= 1 && n >= 2 && eps_C > 0, "invalid offset inputs");
  const double nn = static_cast<double>(n);
  return eps_C * std::pow(volume * std::log(nn) / nn, 1.0 / d);
}

std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const ShapeSpec shape = parse_shape(cfg.shape, cfg.params);
  const OracleSet orc = oracle(shape);

  struct Task {
    std::size_t n;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (std::size_t g = 0; g < cfg.n_grid.size(); ++g)
    for (std::size_t r = 0; r < cfg.replicates; ++r) tasks.push_back({cfg.n_grid[g], replicate_seed(cfg.seed, g, r)});

  std::vector<ResultRow> rows(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) rows[i] = run_one(cfg, shape, orc, tasks[i].n, tasks[i].seed);
  };
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned nthreads = std::min<std::size_t>(cfg.threads ? cfg.threads : hw, tasks.size());
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  std::sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
    return a.n != b.n ? a.n < b.n : a.seed < b.seed;
  });
  return rows;
}

void write_rows(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << kCsvHeader << '\n' << kColumns << '\n';
  for (const auto& r : rows)
    out << r.n << ',' << r.seed << ',' << r.estimator << ',' << fmt(r.value) << ',' << fmt(r.truth) << ','
        << fmt(r.abs_err) << ',' << fmt(r.rel_err) << ',' << fmt(r.runtime_ms) << ',' << r.status << '\n';
}

std::vector<ResultRow> read_rows(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw InvalidInput("missing '# reachkit-csv v1' header");
  if (!std::getline(in, line) || line != kColumns) throw InvalidInput("unexpected column line");
  std::vector<ResultRow> rows;
  std::size_t lineno = 2;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 9) throw InvalidInput("line " + std::to_string(lineno) + ": expected 9 fields");
    auto num = [&](const std::string& s) {
      char* end = nullptr;
      const double v = std::strtod(s.c_str(), &end);
      if (s.empty() || *end != '\0') throw InvalidInput("line " + std::to_string(lineno) + ": bad number '" + s + "'");
      return v;
    };
    ResultRow r;
    try {
      r.n = std::stoull(f[0]);
      r.seed = std::stoull(f[1]);
    } catch (const std::exception&) {
      throw InvalidInput("line " + std::to_string(lineno) + ": bad integer field");
    }
    r.estimator = f[2];
    r.value = num(f[3]);
    r.truth = num(f[4]);
    r.abs_err = num(f[5]);
    r.rel_err = num(f[6]);
    r.runtime_ms = num(f[7]);
    r.status = f[8];
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_rows_file(const std::string& path, const std::vector<ResultRow>& rows) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write " + path);
  write_rows(out, rows);
}

std::vector<ResultRow> read_rows_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot read " + path);
  return read_rows(in);
}

RateFit fit_rate(const std::vector<ResultRow>& rows, std::size_t bootstrap, std::uint64_t seed) {
  std::map<std::size_t, std::vector<double>> errs;
  for (const auto& r : rows)
    if (r.status == "ok" && std::isfinite(r.abs_err)) errs[r.n].push_back(r.abs_err);
  require(errs.size() >= 3, "rate fit needs at least 3 distinct n with successful rows");

  RateFit fit;
  std::vector<double> lx, ly;
  for (const auto& [n, e] : errs) {
    fit.n.push_back(static_cast<double>(n));
    fit.median.push_back(quantile(e, 0.5));
    fit.iqr.push_back(quantile(e, 0.75) - quantile(e, 0.25));
    if (fit.median.back() > 0) {
      lx.push_back(std::log(static_cast<double>(n)));
      ly.push_back(std::log(fit.median.back()));
    }
  }
  if (lx.empty()) {
    fit.flat = true;
    return fit;
  }
  if (lx.size() < 3) throw InsufficientData("rate fit needs at least 3 n with positive median error");
  std::tie(fit.slope, fit.intercept) = ols(lx, ly);

  CounterRng rng(seed);
  std::vector<double> slopes;
  for (std::size_t b = 0; b < bootstrap; ++b) {
    std::vector<double> bx, by;
    for (const auto& [n, e] : errs) {
      std::vector<double> re(e.size());
      for (auto& v : re) v = e[rng.below(e.size())];
      const double m = quantile(re, 0.5);
      if (m > 0) {
        bx.push_back(std::log(static_cast<double>(n)));
        by.push_back(std::log(m));
      }
    }
    if (bx.size() >= 3) slopes.push_back(ols(bx, by).first);
  }
  if (!slopes.empty()) {
    fit.ci_low = quantile(slopes, 0.025);
    fit.ci_high = quantile(slopes, 0.975);
  }
  return fit;
}

void write_rate_svg(std::ostream& out, const RateFit& fit) {
  const double W = 480, H = 320, pad = 40;
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < fit.n.size(); ++i)
    if (fit.median[i] > 0) {
      lx.push_back(std::log10(fit.n[i]));
      ly.push_back(std::log10(fit.median[i]));
    }
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  if (lx.size() >= 2) {
    const auto [x0, x1] = std::minmax_element(lx.begin(), lx.end());
    const auto [y0, y1] = std::minmax_element(ly.begin(), ly.end());
    const double xs = (W - 2 * pad) / std::max(*x1 - *x0, 1e-12), ys = (H - 2 * pad) / std::max(*y1 - *y0, 1e-12);
    auto px = [&](double x) { return pad + (x - *x0) * xs; };
    auto py = [&](double y) { return H - pad - (y - *y0) * ys; };
    out << "<polyline fill=\"none\" stroke=\"black\" points=\"";
    for (std::size_t i = 0; i < lx.size(); ++i) out << px(lx[i]) << ',' << py(ly[i]) << ' ';
    out << "\"/>\n";
    // Fitted line, converted from natural logs.
    const double a = *x0, b = *x1;
    auto fy = [&](double x) { return (fit.intercept + fit.slope * x * std::log(10.0)) / std::log(10.0); };
    out << "<line stroke=\"red\" x1=\"" << px(a) << "\" y1=\"" << py(fy(a)) << "\" x2=\"" << px(b) << "\" y2=\"" << py(fy(b))
        << "\"/>\n";
  }
  out << "<text x=\"" << pad << "\" y=\"20\">slope " << fmt(fit.slope) << "</text>\n</svg>\n";
}

}  // namespace reachkit
