#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numeric>

#include "ltrisk/dataset_io.hpp"
#include "ltrisk/errors.hpp"
#include "ltrisk/kernels.hpp"
#include "ltrisk/learners.hpp"
#include "ltrisk/simulation.hpp"
#include "support.hpp"

using namespace ltrisk;
using testing::make_layout;

namespace {

double column_mean(const ObservedDataset& d, const std::string& col) {
  const auto c = d.column(*d.layout().find(col));
  return std::accumulate(c.begin(), c.end(), 0.0) / static_cast<double>(d.n());
}

// Confounded two-interval DGP with every row kind present.
CoefficientMatrix small_dgp() {
  auto lay = make_layout({"W1", "W2"}, {"L"}, {"A"}, 2);
  CoefficientMatrix m(lay);
  m.set("W1", "intercept", -0.2);
  m.set("W2", "intercept", 0.3).set("W2", "W1", 0.8);
  m.set("L_t1", "intercept", -0.5).set("L_t1", "W1", 0.6).set("L_t1", "W2", -0.4);
  m.set("Y_t1", "intercept", -2.5).set("Y_t1", "L_t1", 0.7);
  m.set("D_t1", "intercept", -3.0).set("D_t1", "W2", 0.5);
  m.set("A_t1", "intercept", -0.3).set("A_t1", "L_t1", 0.9).set("A_t1", "W1", -0.5);
  m.set("C_t1", "intercept", -2.8).set("C_t1", "A_t1", 0.4);
  m.set("L_t2", "intercept", -0.8).set("L_t2", "L_t1", 1.2).set("L_t2", "A_t1", -0.6);
  m.set("Y_t2", "intercept", -2.2).set("Y_t2", "L_t2", 0.8).set("Y_t2", "A_t1", -0.7);
  m.set("D_t2", "intercept", -2.9).set("D_t2", "W1", 0.4);
  return m;
}

}  // namespace

TEST_CASE("coefficient matrix: rows and columns follow generation order") {
  auto lay = make_layout({"W", "E"}, {"L"}, {"A"}, 2, {{"E", 3}});
  CoefficientMatrix m(lay);
  std::vector<std::string> rows, cols;
  for (const auto& r : m.rows()) rows.push_back(r.name);
  for (const auto& f : m.features()) cols.push_back(f.name);
  const std::vector<std::string> er{"W", "E>=1", "E>=2", "L_t1", "Y_t1", "D_t1", "A_t1",
                                    "C_t1", "L_t2", "Y_t2", "D_t2"};
  const std::vector<std::string> ec{"W", "E=1", "E=2", "L_t1", "Y_t1", "D_t1", "A_t1",
                                    "C_t1", "L_t2", "Y_t2", "D_t2"};
  CHECK(rows == er);
  CHECK(cols == ec);
  CHECK_THROWS_AS(m.set("L_t1", "A_t1", 1.0), ConfigError);
  CHECK_THROWS_AS(m.set("E>=2", "E=1", 1.0), ConfigError);
  CHECK_THROWS_AS(m.set("W", "nope", 1.0), ConfigError);
  CHECK_NOTHROW(m.set("A_t1", "E=2", 1.0));
}

TEST_CASE("coefficient csv: bit-exact round trip with sentinels") {
  auto m = small_dgp();
  m.set("Y_t2", "W1", 0.1 + 0.2);  // not representable in short decimal
  m.set("Y_t2", "W2", -1e-300);
  m.set_deterministic("D_t2", 1);
  m.set_deterministic("L_t2", 0);
  const auto text = format_coefficients_csv(m);
  const auto back = parse_coefficients_csv(text, m.layout_ptr());
  CHECK(back == m);
  CHECK(format_coefficients_csv(back) == text);
  CHECK(text.find("D_t2,DET1,,") != std::string::npos);
  CHECK(back.row("Y_t2").beta[back.feature_index("W1")] == 0.1 + 0.2);

  const auto dir = std::filesystem::temp_directory_path() / "ltrisk_coef_test";
  std::filesystem::create_directories(dir);
  write_coefficients(dir / "m.csv", m);
  CHECK(std::filesystem::exists(dir / "m.schema.json"));
  CHECK(read_coefficients(dir / "m.csv") == m);
  std::filesystem::remove_all(dir);
}

TEST_CASE("coefficient csv: malformed files") {
  const auto m = small_dgp();
  auto text = format_coefficients_csv(m);
  auto lay = m.layout_ptr();
  CHECK_THROWS_AS(parse_coefficients_csv("name,intercept\n", lay), DataError);
  auto missing_row = text.substr(0, text.rfind("D_t2"));
  CHECK_THROWS_WITH_AS(parse_coefficients_csv(missing_row, lay),
                       doctest::Contains("'D_t2' missing"), DataError);
  auto bad_col = text;
  bad_col.replace(bad_col.find(",W1,"), 4, ",Q9,");
  CHECK_THROWS_AS(parse_coefficients_csv(bad_col, lay), DataError);
  // Y_t1 referencing a later node.
  auto fwd = m;
  fwd.rows()[3].present[fwd.feature_index("A_t1")] = 1;
  CHECK_THROWS_AS(format_coefficients_csv(fwd), ConfigError);
}

TEST_CASE("simulate: all-zero coefficients give one-half marginals") {
  auto lay = make_layout({"W", "E"}, {"L"}, {"A"}, 2, {{"E", 3}});
  CoefficientMatrix m(lay);
  const auto d = simulate_dataset(m, 100000, 3);
  CHECK(validate_dataset(d).ok());
  for (auto col : {"W", "L_t1", "Y_t1"}) CHECK(std::abs(column_mean(d, col) - 0.5) <= 0.01);
  // D(1) is drawn only after Y(1) = 0.
  std::size_t at_risk = 0, deaths = 0;
  const auto& L = d.layout();
  std::array<double, 3> levels{};
  for (std::size_t i = 0; i < d.n(); ++i) {
    levels[static_cast<std::size_t>(d.at(i, *L.find("E")))] += 1.0 / 100000;
    if (d.at(i, L.outcome(1)) == 1) continue;
    ++at_risk;
    deaths += static_cast<std::size_t>(d.at(i, L.competing(1)));
  }
  CHECK(std::abs(static_cast<double>(deaths) / static_cast<double>(at_risk) - 0.5) <= 0.01);
  // Continuation ratio: P(E=0)=1/2, P(E=1)=P(E=2)=1/4.
  CHECK(std::abs(levels[0] - 0.5) <= 0.01);
  CHECK(std::abs(levels[1] - 0.25) <= 0.01);
  CHECK(std::abs(levels[2] - 0.25) <= 0.01);
}

TEST_CASE("simulate: output is valid, deterministic and thread-independent") {
  const auto m = small_dgp();
  const auto a = simulate_dataset(m, 20000, 11);
  CHECK(validate_dataset(a).ok());
  const int before = kernels::threads();
  kernels::set_threads(1);
  const auto b = simulate_dataset(m, 20000, 11);
  kernels::set_threads(before);
  CHECK(format_wide_csv(a) == format_wide_csv(b));
  CHECK_FALSE(simulate_dataset(m, 20000, 12) == a);
  // Subject i depends only on (seed, i).
  const auto c = simulate_dataset(m, 500, 11);
  for (std::size_t i = 0; i < 500; ++i)
    for (std::size_t col = 0; col < c.columns(); ++col) REQUIRE(c.at(i, col) == a.at(i, col));
}

TEST_CASE("simulate: deterministic outcome rows") {
  auto m = small_dgp();
  m.set_deterministic("Y_t1", 0).set_deterministic("Y_t2", 0);
  const auto d = simulate_dataset(m, 20000, 5);
  CHECK(column_mean(d, "Y_t1") == 0.0);
  CHECK(column_mean(d, "Y_t2") == 0.0);
  m.set_deterministic("D_t1", 1);
  const auto e = simulate_dataset(m, 1000, 5);
  CHECK(validate_dataset(e).ok());
  CHECK(column_mean(e, "D_t1") == 1.0);
  // Everyone is dead after D(1): the A-block is padding.
  CHECK(column_mean(e, "C_t1") == 0.0);
}

TEST_CASE("fit_dgp: independent node recovers its marginal") {
  auto lay = make_layout({"W1", "W2"}, {}, {"A"}, 1);
  CoefficientMatrix m(lay);
  m.set("W1", "intercept", -0.4);
  m.set("W2", "intercept", logit(0.3));
  m.set_deterministic("Y_t1", 0).set_deterministic("D_t1", 0);
  const auto fit = fit_dgp_coefficients(simulate_dataset(m, 200000, 9));
  const auto& w2 = fit.row("W2");
  CHECK(std::abs(w2.intercept - logit(0.3)) <= 0.02);
  CHECK(std::abs(w2.beta[fit.feature_index("W1")]) <= 0.03);
  CHECK(fit.row("Y_t1").kind == RowKind::det0);
  CHECK(fit.row("D_t1").kind == RowKind::det0);
}

TEST_CASE("fit_dgp: deterministic and empty strata") {
  auto lay = make_layout({"W"}, {}, {"A"}, 2);
  testing::Rows r(lay, 6);
  for (std::size_t i = 0; i < 6; ++i) r.set(i, "W", static_cast<int>(i % 2));
  for (std::size_t i = 0; i < 6; ++i)
    for (auto c : {"D_t1", "D_t2"}) r.set(i, c, 1);  // everyone dies at t=1
  const auto fit = fit_dgp_coefficients(r.data);
  CHECK(fit.row("W").kind == RowKind::logistic);
  CHECK(fit.row("Y_t1").kind == RowKind::det0);
  CHECK(fit.row("D_t1").kind == RowKind::det1);
  CHECK(fit.row("A_t1").kind == RowKind::det0);
  CHECK(fit.row("A_t1").flagged);  // nobody at risk
  CHECK(fit.row("Y_t2").flagged);
  const auto text = format_coefficients_csv(fit);
  CHECK(text.find("A_t1,DET0,,,,,,") != std::string::npos);
}

TEST_CASE("fit_dgp: round trip from 200000 simulated subjects") {
  const auto m = small_dgp();
  const auto fit = fit_dgp_coefficients(simulate_dataset(m, 200000, 21));
  double worst = 0;
  std::string where;
  for (std::size_t k = 0; k < m.rows().size(); ++k) {
    const auto& a = m.rows()[k];
    const auto& b = fit.rows()[k];
    REQUIRE(b.kind == RowKind::logistic);
    auto track = [&](double d, const std::string& what) {
      if (std::abs(d) > worst) {
        worst = std::abs(d);
        where = a.name + ":" + what;
      }
    };
    track(a.intercept - b.intercept, "intercept");
    for (std::size_t f = 0; f < a.beta.size(); ++f)
      if (b.present[f]) track(a.beta[f] - b.beta[f], m.features()[f].name);
  }
  MESSAGE("largest coefficient error " << worst << " at " << where);
  CHECK(worst <= 0.05);
}

TEST_CASE("truth: closed-form survival product") {
  // No death or censoring; Y hazard p0 at t=1, then p1 under A=1 and p0 under A=0.
  auto lay = make_layout({"W"}, {}, {"A"}, 3);
  CoefficientMatrix m(lay);
  const double p0 = 0.05, p1 = 0.02;
  m.set("W", "intercept", 0.0);
  for (int t = 1; t <= 3; ++t) {
    const auto s = std::to_string(t);
    m.set("Y_t" + s, "intercept", logit(p0));
    if (t > 1) m.set("Y_t" + s, "A_t" + std::to_string(t - 1), logit(p1) - logit(p0));
    m.set_deterministic("D_t" + s, 0);
    if (t < 3) m.set("C_t" + s, "intercept", 0.0).set("A_t" + s, "W", 1.0);
  }
  const auto treat = Regime::sustained(*lay, "a1", {1});
  const auto ctrl = Regime::sustained(*lay, "a0", {0});
  for (int h = 1; h <= 3; ++h) {
    const auto tr = compute_truth(m, treat, ctrl, h, 400000, 77);
    const double e1 = 1 - (1 - p0) * std::pow(1 - p1, h - 1);
    const double e0 = 1 - std::pow(1 - p0, h);
    CHECK(std::abs(tr.risk_treatment - e1) <= 4 * tr.se_treatment + 1e-12);
    CHECK(std::abs(tr.risk_control - e0) <= 4 * tr.se_control + 1e-12);
    CHECK(std::abs(tr.rd - (e1 - e0)) <= 4 * tr.se_rd + 1e-12);
  }
}

TEST_CASE("truth: no causal path gives zero, regimes negate exactly") {
  auto m = small_dgp();
  const auto& lay = m.layout();
  const auto a = lay.find("A_t1").value();
  const auto treat = Regime::sustained(lay, "a1", {1});
  const auto ctrl = Regime::sustained(lay, "a0", {0});
  const auto with_path = compute_truth(m, treat, ctrl, 2, 200000, 3);
  CHECK(with_path.rd < 0);  // A lowers Y(2)
  const auto swapped = compute_truth(m, ctrl, treat, 2, 200000, 3);
  CHECK(swapped.rd == -with_path.rd);
  CHECK(swapped.se_rd == with_path.se_rd);

  for (auto& r : m.rows())
    if (r.column > a) {
      r.beta[m.feature_index("A_t1")] = 0.0;
      r.present[m.feature_index("A_t1")] = 0;
    }
  const auto none = compute_truth(m, treat, ctrl, 2, 200000, 3);
  CHECK(none.rd == 0.0);
  CHECK(none.risk_treatment > 0.0);
}

TEST_CASE("truth: argument checks") {
  const auto m = small_dgp();
  const auto r = Regime::sustained(m.layout(), "a", {1});
  CHECK_THROWS_AS(compute_truth(m, r, r, 0, 1000, 1), ConfigError);
  CHECK_THROWS_AS(compute_truth(m, r, r, 3, 1000, 1), ConfigError);
  CHECK_THROWS_AS(compute_truth(m, r, r, 1, 1, 1), ConfigError);
}

TEST_CASE("permute_null: block moves together, marginals preserved") {
  const auto m = small_dgp();
  const auto d = simulate_dataset(m, 5000, 8);
  const auto p = permute_null(d, 4);
  CHECK(validate_dataset(p).ok());
  const auto perm = null_permutation(d.n(), 4);
  const auto& lay = d.layout();
  for (std::size_t c = 0; c < lay.size(); ++c) {
    const auto& ref = lay.nodes()[c];
    if (ref.is_event()) {
      CHECK(column_mean(p, ref.column_name()) == column_mean(d, ref.column_name()));
      for (std::size_t i = 0; i < d.n(); ++i) REQUIRE(p.at(i, c) == d.at(perm[i], c));
    } else if (ref.role == NodeRole::baseline) {
      for (std::size_t i = 0; i < d.n(); ++i) REQUIRE(p.at(i, c) == d.at(i, c));
    }
  }
  // Non-block cells before the new first event keep their subject.
  const auto status = summarize_subjects(p);
  for (std::size_t i = 0; i < d.n(); ++i)
    if (status[i].kind == Terminal::none)
      for (std::size_t c = 0; c < lay.size(); ++c) REQUIRE(p.at(i, c) == (lay.nodes()[c].is_event() ? d.at(perm[i], c) : d.at(i, c)));
  CHECK(permute_null(d, 4) == p);
}

TEST_CASE("permute_block: identity and inverse") {
  const auto d = simulate_dataset(small_dgp(), 3000, 13);
  std::vector<std::size_t> id(d.n());
  std::iota(id.begin(), id.end(), std::size_t{0});
  CHECK(permute_block(d, id) == d);

  const auto perm = null_permutation(d.n(), 6);
  std::vector<std::size_t> inv(d.n());
  for (std::size_t i = 0; i < d.n(); ++i) inv[perm[i]] = i;
  const auto back = permute_block(permute_block(d, perm), inv);
  const auto& lay = d.layout();
  for (std::size_t c = 0; c < lay.size(); ++c)
    if (lay.nodes()[c].is_event() || lay.nodes()[c].role == NodeRole::baseline)
      for (std::size_t i = 0; i < d.n(); ++i) REQUIRE(back.at(i, c) == d.at(i, c));

  // Without events nothing is re-padded and the round trip is exact.
  auto quiet = small_dgp();
  for (auto r : {"Y_t1", "D_t1", "C_t1", "Y_t2", "D_t2"}) quiet.set_deterministic(r, 0);
  const auto q = simulate_dataset(quiet, 2000, 2);
  const auto qp = null_permutation(q.n(), 1);
  std::vector<std::size_t> qinv(q.n());
  for (std::size_t i = 0; i < q.n(); ++i) qinv[qp[i]] = i;
  CHECK(permute_block(permute_block(q, qp), qinv) == q);

  std::vector<std::size_t> bad(d.n(), 0);
  CHECK_THROWS_AS(permute_block(d, bad), ConfigError);
}

TEST_CASE("null truth: constant hazards give the competing-risk incidence") {
  auto lay = make_layout({"W"}, {"L"}, {"A"}, 3);
  CoefficientMatrix m(lay);
  const double p = 0.04, q = 0.03;
  m.set("W", "intercept", 0.2);
  for (int t = 1; t <= 3; ++t) {
    const auto s = std::to_string(t);
    m.set("L_t" + s, "intercept", -0.3).set("L_t" + s, "W", 0.9);
    m.set("Y_t" + s, "intercept", logit(p));
    m.set("D_t" + s, "intercept", logit(q));
    if (t < 3) {
      m.set("A_t" + s, "intercept", 0.1).set("A_t" + s, "L_t" + s, 1.0);
      m.set("C_t" + s, "intercept", -2.0).set("C_t" + s, "A_t" + s, 1.0);
    }
  }
  const auto treat = Regime::sustained(*lay, "a1", {1});
  const auto ctrl = Regime::sustained(*lay, "a0", {0});
  const auto tr = compute_null_truth(m, treat, ctrl, 3, 400000, 5);
  double ci = 0, surv = 1;
  for (int t = 1; t <= 3; ++t) {
    ci += surv * p;
    surv *= (1 - p) * (1 - q);
  }
  CHECK(std::abs(tr.risk_treatment - ci) <= 4 * tr.se_treatment);
  CHECK(std::abs(tr.risk_control - ci) <= 4 * tr.se_control);
  CHECK(std::abs(tr.rd) <= 3 * tr.se_rd);
  CHECK(tr.se_rd > 0.0);
}

TEST_CASE("null truth of a confounded DGP is zero within MC error") {
  const auto m = small_dgp();
  const auto treat = Regime::sustained(m.layout(), "a1", {1});
  const auto ctrl = Regime::sustained(m.layout(), "a0", {0});
  const auto dep = scenario_truth(m, ScenarioKind::dependent, treat, ctrl, 2, 200000, 1);
  const auto nul = scenario_truth(m, ScenarioKind::permuted_null, treat, ctrl, 2, 200000, 1);
  CHECK(std::abs(dep.rd) > 5 * dep.se_rd);
  CHECK(std::abs(nul.rd) <= 3 * nul.se_rd);
}

TEST_CASE("scenarios") {
  const auto m = small_dgp();
  ScenarioSpec s;
  s.n = 1000;
  s.seed = 4;
  CHECK(generate_scenario(m, s) == simulate_dataset(m, 1000, 4));
  s.kind = ScenarioKind::permuted_null;
  s.permutation_seed = 9;
  CHECK(generate_scenario(m, s) == permute_null(simulate_dataset(m, 1000, 4), 9));
  CHECK(scenario_from_string("permuted_null") == ScenarioKind::permuted_null);
  CHECK(to_string(ScenarioKind::dependent) == "dependent");
  CHECK_THROWS_AS(scenario_from_string("x"), ConfigError);
  s.n = 0;
  CHECK_THROWS_AS(generate_scenario(m, s), ConfigError);
}
