#include <doctest.h>

#include "ltrisk/errors.hpp"
#include "support.hpp"

using namespace ltrisk;
using testing::make_layout;
using testing::Rows;

namespace {

// W, L(1), A(1), L(2), A(2), L(3): intervals = 3, K = 2.
auto small_layout() { return make_layout({"W"}, {"L"}, {"A"}, 3); }

bool has_message(const ValidationReport& rep, const std::string& text) {
  for (const auto& v : rep.violations)
    if (v.message.find(text) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_CASE("layout follows W, then L and A blocks per interval") {
  auto lay = small_layout();
  const auto names = lay->column_names();
  const std::vector<std::string> expected{"W",     "L_t1", "Y_t1", "D_t1", "A_t1", "C_t1",
                                          "L_t2",  "Y_t2", "D_t2", "A_t2", "C_t2", "L_t3",
                                          "Y_t3",  "D_t3"};
  CHECK(names == expected);
  CHECK(lay->within_interval_order() == std::vector<std::string>{"L", "Y", "D", "A", "C"});
  CHECK(lay->treatment_intervals() == 2);
  CHECK(lay->outcome(2) == *lay->find("Y_t2"));
  CHECK(lay->lblock_begin(2) == *lay->find("L_t2"));
  CHECK(lay->ablock_begin(1) == *lay->find("A_t1"));
}

TEST_CASE("schema rejects duplicate and overlapping names") {
  CHECK_THROWS_AS(make_layout({"W", "W"}, {}, {"A"}, 2), ConfigError);
  CHECK_THROWS_AS(make_layout({"W"}, {"Y"}, {"A"}, 2), ConfigError);
  CHECK_THROWS_AS(make_layout({"W"}, {"L"}, {"A"}, 0), ConfigError);
}

TEST_CASE("validation: all zeros is clean") {
  Rows r(small_layout(), 3);
  CHECK(validate_dataset(r.data).ok());
}

TEST_CASE("validation: outcome that reverts is not absorbing") {
  Rows r(small_layout(), 1);
  r.set(0, "Y_t2", 1);
  auto rep = validate_dataset(r.data);
  REQUIRE_FALSE(rep.ok());
  CHECK(has_message(rep, "outcome not absorbing at t=3"));
  CHECK(rep.violations.front().subject == 0);
  CHECK(rep.violations.front().interval == 3);
}

TEST_CASE("validation: covariate change after death breaks LVCF") {
  Rows r(small_layout(), 1);
  r.set(0, "D_t2", 1).set(0, "D_t3", 1).set(0, "L_t3", 1);
  auto rep = validate_dataset(r.data);
  CHECK(has_message(rep, "LVCF broken"));
}

TEST_CASE("validation: outcome and death in one interval flags the death") {
  Rows r(small_layout(), 1);
  r.set(0, "Y_t2", 1).set(0, "Y_t3", 1).set(0, "D_t2", 1).set(0, "D_t3", 1);
  auto rep = validate_dataset(r.data);
  CHECK(has_message(rep, "outcome takes precedence"));
}

TEST_CASE("validation: out-of-range values are violations, missing cells are structural") {
  Rows r(small_layout(), 1);
  r.set(0, "W", 2);
  CHECK(has_message(validate_dataset(r.data), "out of range"));
  r.set(0, "W", kMissing);
  CHECK_THROWS_AS(validate_dataset(r.data), DataError);
}

TEST_CASE("lvcf: death at t=2 carries the covariate forward") {
  Rows r(small_layout(), 1);
  r.set(0, "L_t2", 1).set(0, "D_t2", 1);
  r.set(0, "A_t2", kMissing).set(0, "C_t2", kMissing);
  r.set(0, "L_t3", kMissing).set(0, "Y_t3", kMissing).set(0, "D_t3", kMissing);
  auto out = apply_lvcf(r.data);
  const auto& lay = out.layout();
  CHECK(out.at(0, *lay.find("L_t3")) == 1);
  CHECK(out.at(0, *lay.find("D_t3")) == 1);
  CHECK(out.at(0, *lay.find("Y_t3")) == 0);
  CHECK(out.at(0, *lay.find("C_t2")) == 0);
  CHECK(validate_dataset(out).ok());
}

TEST_CASE("lvcf: fully observed subject is unchanged") {
  Rows r(small_layout(), 1);
  r.set(0, "W", 1).set(0, "L_t1", 1).set(0, "A_t2", 1);
  CHECK(apply_lvcf(r.data) == r.data);
}

TEST_CASE("lvcf: censoring at t=1 freezes everything at t=1 values") {
  Rows r(small_layout(), 1);
  r.set(0, "L_t1", 1).set(0, "A_t1", 1).set(0, "C_t1", 1);
  for (auto c : {"L_t2", "Y_t2", "D_t2", "A_t2", "C_t2", "L_t3", "Y_t3", "D_t3"})
    r.set(0, c, kMissing);
  auto out = apply_lvcf(r.data);
  const auto& lay = out.layout();
  CHECK(out.at(0, *lay.find("L_t2")) == 1);
  CHECK(out.at(0, *lay.find("L_t3")) == 1);
  CHECK(out.at(0, *lay.find("A_t2")) == 1);
  CHECK(out.at(0, *lay.find("C_t2")) == 1);
  CHECK(out.at(0, *lay.find("Y_t3")) == 0);
}

TEST_CASE("lvcf: missing before any event is rejected") {
  Rows r(small_layout(), 1);
  r.set(0, "L_t2", kMissing);
  CHECK_THROWS_WITH_AS(apply_lvcf(r.data), doctest::Contains("non-terminal missingness unsupported"),
                       DataError);
}

TEST_CASE("lvcf is idempotent and its output validates") {
  auto lay = make_layout({"W", "V"}, {"L1", "L2"}, {"A1", "A2"}, 4);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto d = testing::toy_dataset(lay, 300, seed, {.outcome = 0.15, .competing = 0.1, .censor = 0.1});
    CHECK(apply_lvcf(d) == d);
    CHECK(validate_dataset(d).ok());
  }
}

TEST_CASE("adherence examples") {
  auto lay = small_layout();
  const auto always = Regime::sustained(*lay, "always", {1});
  Rows r(lay, 3);
  r.set(0, "A_t1", 1).set(0, "A_t2", 1);  // follows the regime
  r.set(1, "A_t1", 1);                    // stops at t=2
  // Outcome at t=2 after adherent t=1; A(2) = 0 is padding and must not count.
  r.set(2, "A_t1", 1).set(2, "Y_t2", 1).set(2, "Y_t3", 1);
  CHECK(adherence_indicator(r.data, always, 2) == std::vector<std::uint8_t>{1, 0, 1});
  CHECK(adherence_indicator(r.data, always, 1) == std::vector<std::uint8_t>{1, 1, 1});
  CHECK_THROWS_AS(adherence_indicator(r.data, always, 3), ConfigError);
}

TEST_CASE("adherence is broken by censoring in the same interval") {
  auto lay = small_layout();
  const auto never = Regime::sustained(*lay, "never", {0});
  Rows r(lay, 1);
  r.set(0, "C_t1", 1).set(0, "C_t2", 1);
  CHECK(adherence_indicator(r.data, never, 1) == std::vector<std::uint8_t>{0});
}

TEST_CASE("at-risk examples") {
  auto lay = small_layout();
  Rows r(lay, 3);
  r.set(1, "D_t2", 1).set(1, "D_t3", 1);
  r.set(2, "C_t1", 1).set(2, "C_t2", 1);
  CHECK(at_risk_indicator(r.data, 1) == std::vector<std::uint8_t>{1, 1, 1});
  CHECK(at_risk_indicator(r.data, 2) == std::vector<std::uint8_t>{1, 0, 0});
  CHECK(at_risk_indicator(r.data, 3) == std::vector<std::uint8_t>{1, 0, 0});
}

TEST_CASE("at-risk is non-increasing and adherence only drops or freezes") {
  auto lay = make_layout({"W"}, {"L"}, {"A"}, 5);
  auto d = testing::toy_dataset(lay, 500, 9, {.outcome = 0.1, .competing = 0.1, .censor = 0.1});
  const auto status = summarize_subjects(d);
  const auto reg = Regime::sustained(*lay, "always", {1});
  const AdherenceTable adh(d, status, reg);
  for (std::size_t i = 0; i < d.n(); ++i) {
    for (int t = 2; t <= lay->intervals(); ++t)
      CHECK(static_cast<int>(status[i].at_risk(t)) <= static_cast<int>(status[i].at_risk(t - 1)));
    for (int t = 1; t <= lay->treatment_intervals(); ++t)
      CHECK(static_cast<int>(adh(i, t)) <= static_cast<int>(adh(i, t - 1)));
  }
}

TEST_CASE("regimes and estimands are checked against the schema") {
  auto lay = make_layout({"W"}, {"L"}, {"A1", "A2"}, 3);
  CHECK_THROWS_AS(Regime::sustained(*lay, "x", {1}), ConfigError);
  auto r = Regime::sustained(*lay, "x", {1, 0});
  CHECK(r.value(0, 2) == 1);
  CHECK(r.value(1, 1) == 0);
  EstimandSpec e{r, r, 4, ContrastType::risk_difference};
  CHECK_THROWS_AS(e.check(*lay), ConfigError);
  e.horizon = 3;
  CHECK_NOTHROW(e.check(*lay));
  CHECK(contrast_from_string("relative_risk") == ContrastType::relative_risk);
  CHECK_THROWS_AS(contrast_from_string("odds"), ConfigError);
}

TEST_CASE("subset keeps rows in the requested order") {
  Rows r(small_layout(), 3);
  r.set(0, "W", 1).set(2, "L_t1", 1);
  std::vector<std::size_t> rows{2, 0, 0};
  auto s = r.data.subset(rows);
  REQUIRE(s.n() == 3);
  CHECK(s.at(0, *s.layout().find("L_t1")) == 1);
  CHECK(s.at(1, 0) == 1);
  CHECK(s.at(2, 0) == 1);
}
