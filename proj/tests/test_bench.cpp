#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "reachkit/bench.hpp"

using namespace reachkit;

namespace {

std::vector<ResultRow> planted(double (*law)(double), std::size_t reps = 5) {
  std::vector<ResultRow> rows;
  for (std::size_t n : {100u, 200u, 400u, 800u, 1600u})
    for (std::size_t r = 0; r < reps; ++r) {
      ResultRow row;
      row.n = n;
      row.seed = r;
      row.estimator = "metric";
      row.abs_err = law(static_cast<double>(n));
      rows.push_back(row);
    }
  return rows;
}

std::string csv(const std::vector<ResultRow>& rows) {
  std::ostringstream out;
  write_rows(out, rows);
  return out.str();
}

}  // namespace

TEST_CASE("experiment rows") {
  ExperimentConfig cfg;
  cfg.shape = "circle";
  cfg.n_grid = {100};
  cfg.replicates = 1;
  const auto one = run_experiment(cfg);
  REQUIRE(one.size() == 1);
  CHECK(one[0].status == "ok");
  CHECK(one[0].runtime_ms == 0.0);
  CHECK(one[0].truth == 0.0);

  cfg.n_grid = {60, 120};
  cfg.replicates = 3;
  cfg.estimator = "sdr";
  cfg.threads = 2;
  const auto a = run_experiment(cfg);
  cfg.threads = 1;
  const auto b = run_experiment(cfg);
  CHECK(a.size() == 6);
  CHECK(csv(a) == csv(b));
  for (std::size_t i = 1; i < a.size(); ++i) CHECK((a[i - 1].n < a[i].n || (a[i - 1].n == a[i].n && a[i - 1].seed < a[i].seed)));
  for (const auto& r : a) {
    CHECK(r.truth == 1.0);
    if (r.status == "ok") CHECK(r.abs_err == doctest::Approx(std::abs(r.value - r.truth)));
  }

  std::istringstream in(csv(a));
  const auto back = read_rows(in);
  CHECK(csv(back) == csv(a));
}

TEST_CASE("failures become rows") {
  ExperimentConfig cfg;
  cfg.shape = "circle";
  cfg.estimator = "sdr";
  cfg.n_grid = {50};
  cfg.replicates = 2;
  cfg.knobs["delta"] = 5.0;  // beyond the reach bound
  const auto rows = run_experiment(cfg);
  REQUIRE(rows.size() == 2);
  for (const auto& r : rows) CHECK(r.status == "invalid_input");
  CHECK_THROWS_AS(fit_rate(rows), InvalidInput);
}

TEST_CASE("csv parsing errors") {
  std::istringstream none("n,seed\n");
  CHECK_THROWS_AS(read_rows(none), InvalidInput);
  std::istringstream shortrow("# reachkit-csv v1\nn,seed,estimator,value,truth,abs_err,rel_err,runtime_ms,status\n1,2,metric\n");
  CHECK_THROWS_AS(read_rows(shortrow), InvalidInput);
  std::istringstream badnum("# reachkit-csv v1\nn,seed,estimator,value,truth,abs_err,rel_err,runtime_ms,status\n1,2,metric,x,0,0,0,0,ok\n");
  CHECK_THROWS_AS(read_rows(badnum), InvalidInput);
}

TEST_CASE("rate fits") {
  const auto quad = fit_rate(planted([](double n) { return 3.0 / (n * n); }));
  CHECK(quad.slope == doctest::Approx(-2.0).epsilon(1e-9));
  CHECK(quad.intercept == doctest::Approx(std::log(3.0)).epsilon(1e-9));
  CHECK(quad.ci_low <= quad.slope + 1e-9);
  CHECK(quad.ci_high >= quad.slope - 1e-9);
  CHECK(quad.median.size() == 5);
  CHECK(quad.iqr[0] == doctest::Approx(0.0));

  const auto flatish = fit_rate(planted([](double) { return 0.25; }));
  CHECK(std::abs(flatish.slope) < 1e-12);
  CHECK_FALSE(flatish.flat);
  const auto zero = fit_rate(planted([](double) { return 0.0; }));
  CHECK(zero.flat);

  std::vector<ResultRow> two;
  for (std::size_t n : {100u, 200u}) two.push_back(ResultRow{n, 0, "metric", 0, 0, 1.0 / n, 0, 0, "ok"});
  CHECK_THROWS_AS(fit_rate(two), InvalidInput);

  std::ostringstream svg;
  write_rate_svg(svg, quad);
  CHECK(svg.str().find("<svg") != std::string::npos);
}

TEST_CASE("bootstrap interval brackets noisy slopes") {
  std::vector<ResultRow> rows;
  std::uint64_t k = 0;
  for (std::size_t n : {100u, 200u, 400u, 800u, 1600u})
    for (std::size_t r = 0; r < 11; ++r) {
      ResultRow row;
      row.n = n;
      row.seed = r;
      const double noise = 1.0 + 0.3 * std::sin(static_cast<double>(++k) * 1.7);
      row.abs_err = noise / std::sqrt(static_cast<double>(n));
      rows.push_back(row);
    }
  const auto fit = fit_rate(rows, 400, 3);
  CHECK(fit.ci_low < fit.ci_high);
  CHECK(fit.ci_low <= fit.slope);
  CHECK(fit.slope <= fit.ci_high);
  CHECK(fit.slope == doctest::Approx(-0.5).epsilon(0.2));
  const auto again = fit_rate(rows, 400, 3);
  CHECK(again.ci_low == fit.ci_low);
}

TEST_CASE("seed streams") {
  std::set<std::uint64_t> seen;
  for (std::size_t g = 0; g < 20; ++g)
    for (std::size_t r = 0; r < 50; ++r) seen.insert(replicate_seed(1, g, r));
  CHECK(seen.size() == 1000);
  CHECK(replicate_seed(1, 0, 0) != replicate_seed(2, 0, 0));
}

TEST_CASE("config validation") {
  ExperimentConfig cfg;
  cfg.estimator = "magic";
  CHECK_THROWS_AS(cfg.validate(), InvalidInput);
  cfg.estimator = "metric";
  cfg.n_grid = {};
  CHECK_THROWS_AS(cfg.validate(), InvalidInput);
  cfg.n_grid = {200, 100};
  CHECK_THROWS_AS(cfg.validate(), InvalidInput);
  cfg.n_grid = {100};
  cfg.replicates = 0;
  CHECK_THROWS_AS(cfg.validate(), InvalidInput);
  cfg.replicates = 1;
  cfg.shape = "blob";
  CHECK_THROWS_AS(run_experiment(cfg), InvalidInput);
  CHECK(metric_offset(2 * kPi, 1, 100, 1.0) == doctest::Approx(2 * kPi * std::log(100.0) / 100.0));
}

TEST_CASE("metric error shrinks on the circle") {
  ExperimentConfig cfg;
  cfg.shape = "circle";
  cfg.estimator = "metric";
  cfg.n_grid = {100, 200, 400, 800};
  cfg.replicates = 5;
  const auto fit = fit_rate(run_experiment(cfg));
  for (std::size_t i = 1; i < fit.median.size(); ++i) CHECK(fit.median[i] < fit.median[i - 1]);
  CHECK(fit.slope < -0.5);
}
