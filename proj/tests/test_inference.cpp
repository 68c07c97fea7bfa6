#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ltrisk/errors.hpp"
#include "ltrisk/inference.hpp"
#include "ltrisk/kernels.hpp"
#include "ltrisk/rng.hpp"
#include "support.hpp"

using namespace ltrisk;
using testing::make_layout;

namespace {

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sd_of(std::span<const double> v) {
  const double m = mean_of(v);
  double ss = 0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::vector<double> normal_sample(std::size_t n, std::uint64_t seed) {
  CounterStream rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) {
    // Box-Muller from two uniforms.
    const double u1 = rng.uniform(), u2 = rng.uniform();
    x = 3.0 + 2.0 * std::sqrt(-2 * std::log(1 - u1)) * std::cos(2 * M_PI * u2);
  }
  return v;
}

ObservedDataset moderate_data(std::size_t n, std::uint64_t seed, testing::ToyRates r = {}) {
  auto lay = make_layout({"W"}, {"L"}, {"A"}, 3);
  return testing::toy_dataset(lay, n, seed, r);
}

}  // namespace

TEST_CASE("normal critical values") {
  CHECK(normal_critical_value(0.95) == doctest::Approx(1.959963985).epsilon(1e-9));
  CHECK(normal_critical_value(0.90) == doctest::Approx(1.644853627).epsilon(1e-9));
  CHECK(normal_critical_value(0.99) == doctest::Approx(2.575829304).epsilon(1e-9));
  CHECK_THROWS_AS(normal_critical_value(1.0), ConfigError);
  CHECK_THROWS_AS(normal_critical_value(0.0), ConfigError);
}

TEST_CASE("ic_ci: SE 0.01 around 0.1 at 95%") {
  // var(IC) / n = a^2 / 3 with the n - 1 variance, so a^2 = 3e-4 gives SE 0.01.
  const double a = std::sqrt(3e-4);
  const std::vector<double> ic{a, -a, a, -a};
  const auto ci = ic_ci(0.1, ic);
  CHECK(ci.standard_error == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(ci.ci_low == doctest::Approx(0.0804).epsilon(1e-4));
  CHECK(ci.ci_high == doctest::Approx(0.1196).epsilon(1e-4));
  CHECK(ci.method == IntervalMethod::ic);
  CHECK(ci.covers(0.1));
}

TEST_CASE("ic_ci: zero influence curve gives a degenerate interval") {
  const std::vector<double> ic(50, 0.0);
  const auto ci = ic_ci(0.3, ic);
  CHECK(ci.standard_error == 0.0);
  CHECK(ci.ci_low == 0.3);
  CHECK(ci.ci_high == 0.3);
  CHECK_FALSE(ci.warning.empty());
}

TEST_CASE("ic_ci: a sample mean gets the textbook standard error") {
  const auto y = normal_sample(500, 3);
  const double m = mean_of(y);
  std::vector<double> ic(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) ic[i] = y[i] - m;
  const auto ci = ic_ci(m, ic);
  CHECK(ci.standard_error == doctest::Approx(sd_of(y) / std::sqrt(500.0)).epsilon(1e-12));
}

TEST_CASE("ic_ci: log scale intervals are symmetric on the log scale") {
  const std::vector<double> ic{0.3, -0.1, -0.4, 0.2, 0.0, 0.1, -0.1};
  const auto ci = ic_ci(1.5, ic, 0.95, true);
  CHECK(ci.ci_low * ci.ci_high == doctest::Approx(1.5 * 1.5));
  CHECK(ci.ci_low < 1.5);
  CHECK(ci.ci_high > 1.5);
}

TEST_CASE("ic_ci: stacking the data k times shrinks the SE by sqrt((kn - 1)/(n - 1))") {
  const auto y = normal_sample(100, 8);
  std::vector<double> ic(y.size());
  const double m = mean_of(y);
  for (std::size_t i = 0; i < y.size(); ++i) ic[i] = y[i] - m;
  std::vector<double> stacked;
  for (int k = 0; k < 4; ++k) stacked.insert(stacked.end(), ic.begin(), ic.end());
  const double ratio = ic_ci(m, ic).standard_error / ic_ci(m, stacked).standard_error;
  CHECK(ratio == doctest::Approx(std::sqrt(399.0 / 99.0)).epsilon(1e-12));
}

TEST_CASE("ic_ci: pipeline width shrinks under stacked data") {
  const auto d = moderate_data(1500, 12);
  std::vector<std::size_t> rows;
  for (int k = 0; k < 4; ++k)
    for (std::size_t i = 0; i < d.n(); ++i) rows.push_back(i);
  const auto stacked = d.subset(rows);
  EstimandSpec e;
  e.treatment = Regime::sustained(d.layout(), "a1", {1});
  e.control = Regime::sustained(d.layout(), "a0", {0});
  e.horizon = 3;
  EstimatorConfig cfg;
  const auto w1 = ic_ci(run_pipeline(d, e, cfg).contrast);
  const auto w4 = ic_ci(run_pipeline(stacked, e, cfg).contrast);
  CHECK(w4.point == doctest::Approx(w1.point).epsilon(1e-6));
  CHECK(w1.standard_error / w4.standard_error ==
        doctest::Approx(std::sqrt((4.0 * 1500 - 1) / 1499.0)).epsilon(1e-4));
}

TEST_CASE("bootstrap rows are deterministic draws with replacement") {
  const auto a = bootstrap_rows(9, 3, 1000);
  CHECK(a == bootstrap_rows(9, 3, 1000));
  CHECK(a != bootstrap_rows(9, 4, 1000));
  CHECK(a.size() == 1000);
  CHECK(std::is_sorted(a.begin(), a.end()));
  CHECK(a.back() < 1000);
  // About 1 - 1/e of subjects appear at least once.
  std::vector<std::size_t> u(a);
  u.erase(std::unique(u.begin(), u.end()), u.end());
  CHECK(static_cast<double>(u.size()) / 1000 == doctest::Approx(1 - std::exp(-1.0)).epsilon(0.05));
}

TEST_CASE("bootstrap of a sample mean matches the closed-form Wald interval") {
  const auto y = normal_sample(200, 21);
  const double m = mean_of(y);
  auto mean_rows = [&](std::span<const std::size_t> rows, int) {
    double s = 0;
    for (auto r : rows) s += y[r];
    return s / static_cast<double>(rows.size());
  };
  const auto res = bootstrap_statistic(y.size(), m, 1000, 0.95, 5, mean_rows);
  const double wald_width = 2 * 1.959963985 * sd_of(y) / std::sqrt(200.0);
  const double width = res.percentile.ci_high - res.percentile.ci_low;
  CHECK(std::abs(width / wald_width - 1) < 0.10);
  CHECK(res.percentile.replicates == 1000);
  CHECK(res.wald.method == IntervalMethod::bootstrap_wald);
  CHECK(res.wald.ci_low <= m);
  CHECK(res.wald.ci_high >= m);

  SUBCASE("percentile endpoints are order statistics") {
    auto v = res.values;
    std::sort(v.begin(), v.end());
    CHECK(res.percentile.ci_low == v[24]);    // ceil(0.025 * 1000) = 25th
    CHECK(res.percentile.ci_high == v[974]);  // ceil(0.975 * 1000) = 975th
    CHECK(res.wald.standard_error == doctest::Approx(sd_of(v)).epsilon(1e-12));
  }
  SUBCASE("monotone in level") {
    const auto r90 = bootstrap_statistic(y.size(), m, 1000, 0.90, 5, mean_rows);
    CHECK(r90.percentile.ci_low >= res.percentile.ci_low);
    CHECK(r90.percentile.ci_high <= res.percentile.ci_high);
  }
  SUBCASE("independent of thread count") {
    const int before = kernels::threads();
    kernels::set_threads(4);
    const auto r4 = bootstrap_statistic(y.size(), m, 1000, 0.95, 5, mean_rows);
    kernels::set_threads(1);
    const auto r1 = bootstrap_statistic(y.size(), m, 1000, 0.95, 5, mean_rows);
    kernels::set_threads(before);
    CHECK(r4.values == r1.values);
    CHECK(r4.percentile.ci_low == r1.percentile.ci_low);
    CHECK(r4.percentile.ci_high == r1.percentile.ci_high);
  }
}

TEST_CASE("bootstrap failures are recorded up to 10%") {
  auto failing = [](int every) {
    return [every](std::span<const std::size_t> rows, int b) -> double {
      if (b % every == 0) throw NumericalError("empty stratum");
      return static_cast<double>(rows[0]);
    };
  };
  const auto ok = bootstrap_statistic(100, 0.0, 100, 0.95, 1, failing(10));  // exactly 10 fail
  CHECK(ok.failures.size() == 10);
  CHECK(ok.percentile.failed == 10);
  CHECK(ok.percentile.replicates == 90);
  CHECK_THROWS_AS(bootstrap_statistic(100, 0.0, 100, 0.95, 1, failing(9)), NumericalError);
  CHECK_THROWS_AS(bootstrap_statistic(100, 0.0, 1, 0.95, 1, failing(1000)), ConfigError);
}

TEST_CASE("bootstrap_ci refits the pipeline") {
  EstimandSpec e;
  auto d = moderate_data(800, 31);
  e.treatment = Regime::sustained(d.layout(), "a1", {1});
  e.control = Regime::sustained(d.layout(), "a0", {0});
  e.horizon = 3;
  EstimatorConfig cfg;

  SUBCASE("same seed twice gives identical intervals") {
    const auto a = bootstrap_ci(d, e, cfg, 40, 0.95, 17);
    const auto b = bootstrap_ci(d, e, cfg, 40, 0.95, 17);
    CHECK(a.values == b.values);
    CHECK(a.percentile.ci_low == b.percentile.ci_low);
    CHECK(a.wald.ci_high == b.wald.ci_high);
    CHECK(a.percentile.point == run_pipeline(d, e, cfg).contrast.estimate);
  }
  SUBCASE("constant outcome gives zero width") {
    const auto z = moderate_data(400, 32, {.outcome = 0.0, .competing = 0.05});
    cfg.kind = EstimatorKind::ice;
    const auto r = bootstrap_ci(z, e, cfg, 30, 0.95, 3);
    // Learner predictions are floored at kProbFloor, so risks are 0 only up
    // to that floor.
    CHECK(r.percentile.ci_high - r.percentile.ci_low < kProbFloor);
    CHECK(std::abs(r.percentile.point) < kProbFloor);
    CHECK(r.wald.standard_error < kProbFloor);
  }
}
