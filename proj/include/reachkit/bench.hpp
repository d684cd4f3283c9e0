#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "reachkit/synth.hpp"

namespace reachkit {

// Estimators: "metric" (empirical sup-loss of the plug-in metric against the oracle table),
// "sdr" (plug-in SDR vs oracle reach), "curvature" (R_ell_hat vs r_ell), "reach".
struct ExperimentConfig {
  std::string shape = "circle";
  std::string params;
  std::string estimator = "metric";
  std::vector<std::size_t> n_grid{200, 400, 800, 1600};
  std::size_t replicates = 5;
  std::uint64_t seed = 1;
  std::map<std::string, double> knobs;  // eps_C, epsilon, delta, h_C, h, t, k, grid
  std::string out;
  bool timing = false;  // record wall time; off keeps output byte-identical across runs
  unsigned threads = 0;  // 0: hardware concurrency

  void validate() const;
};

struct ResultRow {
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::string estimator;
  double value = kNaN;
  double truth = kNaN;
  double abs_err = kNaN;
  double rel_err = kNaN;
  double runtime_ms = 0.0;
  std::string status = "ok";
};

/// Seed of replicate r at grid position g; distinct (g, r) give distinct streams.
std::uint64_t replicate_seed(std::uint64_t master, std::size_t grid_index, std::size_t replicate);

/// One row per (n, replicate), sorted by (n, seed). Failures become rows with status != ok.
std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg);

/// Offset used by the metric estimator: eps_C * (volume * log n / n)^(1/d).
double metric_offset(double volume, int d, std::size_t n, double eps_C);

void write_rows(std::ostream& out, const std::vector<ResultRow>& rows);
std::vector<ResultRow> read_rows(std::istream& in);
void write_rows_file(const std::string& path, const std::vector<ResultRow>& rows);
std::vector<ResultRow> read_rows_file(const std::string& path);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::vector<double> n;
  std::vector<double> median;
  std::vector<double> iqr;
  double ci_low = kNaN;  // 95% bootstrap interval of the slope
  double ci_high = kNaN;
  bool flat = false;  // every median was zero
};

/// OLS of log(median abs_err) on log n over rows with status ok.
RateFit fit_rate(const std::vector<ResultRow>& rows, std::size_t bootstrap = 200, std::uint64_t seed = 7);

/// Minimal log-log line plot of the per-n medians and the fitted line.
void write_rate_svg(std::ostream& out, const RateFit& fit);

}  // namespace reachkit
