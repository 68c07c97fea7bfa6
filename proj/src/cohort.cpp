#include "ltrisk/cohort.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <map>
#include <set>

#include "ltrisk/csv.hpp"
#include "ltrisk/errors.hpp"
#include "ltrisk/kernels.hpp"

namespace ltrisk {

std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::fill: return "fill";
    case EventKind::diagnosis: return "diagnosis";
    case EventKind::death: return "death";
    case EventKind::emigration: return "emigration";
    case EventKind::study_end: return "study_end";
    case EventKind::birth: return "birth";
    case EventKind::attribute: return "attribute";
  }
  return "?";
}

EventKind event_kind_from_string(std::string_view s) {
  for (auto k : {EventKind::fill, EventKind::diagnosis, EventKind::death, EventKind::emigration,
                 EventKind::study_end, EventKind::birth, EventKind::attribute})
    if (to_string(k) == s) return k;
  throw DataError("unknown event kind '" + std::string(s) + "'");
}

std::vector<EventRecord> parse_events_csv(std::string_view text) {
  if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) return {};
  const auto t = csv::parse(text);
  const auto ci = t.column("subject_id"), ck = t.column("event_kind"), cc = t.column("code"),
             cd = t.column("day");
  std::vector<EventRecord> out;
  out.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& f = t.rows[r];
    EventRecord e;
    e.subject_id = f[ci];
    if (e.subject_id.empty()) throw DataError("events row " + std::to_string(r + 2) + ": empty subject_id");
    e.kind = event_kind_from_string(f[ck]);
    e.code = f[cc];
    e.day = csv::parse_int(f[cd]);
    if (e.day < 0) throw DataError("events row " + std::to_string(r + 2) + ": negative day");
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<EventRecord> read_events_csv(const std::filesystem::path& path) {
  return parse_events_csv(csv::read_text(path));
}

bool code_matches(const CodeSet& set, std::string_view code) {
  for (const auto& p : set)
    if (!p.empty() && code.starts_with(p)) return true;
  return false;
}

void CohortConfig::check() const {
  if (index_codes.empty()) throw ConfigError("cohort: index_codes is empty");
  if (window_start > window_end) throw ConfigError("cohort: enrollment window start after end");
  if (interval_length_days < 1) throw ConfigError("cohort: interval_length_days must be >= 1");
  if (intervals < 2) throw ConfigError("cohort: intervals must be >= 2 (one treatment interval)");
  if (exposures.empty()) throw ConfigError("cohort: at least one exposure is required");
  if (outcome_codes.empty()) throw ConfigError("cohort: outcome codes are empty");
  for (const auto& b : baseline) {
    if (b.kind == BaselineNodeRule::Kind::attribute && (b.levels < 2 || b.attribute.empty()))
      throw ConfigError("cohort: attribute node '" + b.name + "' needs an attribute and levels >= 2");
    if ((b.kind == BaselineNodeRule::Kind::history ||
         b.kind == BaselineNodeRule::Kind::duration_at_least) && b.codes.empty())
      throw ConfigError("cohort: baseline node '" + b.name + "' has no codes");
  }
  // Node code sets must not share codes.
  std::vector<std::pair<std::string, const CodeSet*>> sets;
  for (const auto& [name, codes] : exposures) sets.emplace_back(name, &codes);
  sets.emplace_back(outcome_name, &outcome_codes);
  for (const auto& c : covariates) sets.emplace_back(c.name, &c.codes);
  for (std::size_t a = 0; a < sets.size(); ++a)
    for (std::size_t b = a + 1; b < sets.size(); ++b)
      for (const auto& x : *sets[a].second)
        for (const auto& y : *sets[b].second)
          if (x.starts_with(y) || y.starts_with(x))
            throw ConfigError("cohort: code maps overlap: '" + x + "' (" + sets[a].first +
                              ") and '" + y + "' (" + sets[b].first + ")");
  SchemaLayout check_names(schema());
}

NodeSchema CohortConfig::schema() const {
  NodeSchema s;
  for (const auto& b : baseline) {
    s.baseline_nodes.push_back(b.name);
    if (b.kind == BaselineNodeRule::Kind::attribute && b.levels > 2) s.levels[b.name] = b.levels;
  }
  for (const auto& c : covariates) s.covariate_nodes.push_back(c.name);
  for (const auto& e : exposures) s.exposure_nodes.push_back(e.first);
  s.outcome_node = outcome_name;
  s.competing_node = competing_name;
  s.censor_node = censor_name;
  s.intervals = intervals;
  s.interval_length_days = interval_length_days;
  return s;
}

namespace {

const nlohmann::json& need(const nlohmann::json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key))
    throw ConfigError("cohort config: missing key '" + std::string(key) + "'" +
                      (where.empty() ? "" : " in " + where));
  return j.at(key);
}

void only_keys(const nlohmann::json& j, std::initializer_list<const char*> keys,
               const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : keys) known = known || it.key() == k;
    if (!known) throw ConfigError("cohort config: unknown key '" + it.key() + "' in " + where);
  }
}

}  // namespace

CohortConfig cohort_config_from_json(const nlohmann::json& j) {
  CohortConfig c;
  if (!j.is_object()) throw ConfigError("cohort config: expected a JSON object");
  try {
    only_keys(j,
              {"index_codes", "enrollment_window", "min_age", "prior_codes", "exclusions",
               "interval_length_days", "intervals", "exposures", "outcome", "competing_name",
               "censor_name", "baseline", "covariates"},
              "the top level");
    c.index_codes = need(j, "index_codes", "").get<CodeSet>();
    const auto w = need(j, "enrollment_window", "").get<std::vector<long long>>();
    if (w.size() != 2) throw ConfigError("cohort config: enrollment_window needs [start, end]");
    c.window_start = w[0];
    c.window_end = w[1];
    c.min_age = j.value("min_age", 50.0);
    c.prior_codes = need(j, "prior_codes", "").get<CodeSet>();
    for (const auto& e : j.value("exclusions", nlohmann::json::array())) {
      only_keys(e, {"name", "codes"}, "an exclusion");
      c.exclusions.push_back({need(e, "name", "exclusion").get<std::string>(),
                              need(e, "codes", "exclusion").get<CodeSet>()});
    }
    c.interval_length_days = j.value("interval_length_days", 182);
    c.intervals = need(j, "intervals", "").get<int>();
    for (const auto& e : need(j, "exposures", "")) {
      only_keys(e, {"name", "codes"}, "an exposure");
      c.exposures.emplace_back(need(e, "name", "exposure").get<std::string>(),
                               need(e, "codes", "exposure").get<CodeSet>());
    }
    const auto& o = need(j, "outcome", "");
    only_keys(o, {"name", "codes"}, "outcome");
    c.outcome_name = o.value("name", c.outcome_name);
    c.outcome_codes = need(o, "codes", "outcome").get<CodeSet>();
    c.competing_name = j.value("competing_name", c.competing_name);
    c.censor_name = j.value("censor_name", c.censor_name);
    for (const auto& b : j.value("baseline", nlohmann::json::array())) {
      only_keys(b, {"name", "kind", "years", "attribute", "levels", "codes", "days"},
                "a baseline node");
      BaselineNodeRule r;
      r.name = need(b, "name", "baseline node").get<std::string>();
      const auto kind = need(b, "kind", "baseline node " + r.name).get<std::string>();
      if (kind == "age_at_least") {
        r.kind = BaselineNodeRule::Kind::age_at_least;
        r.years = need(b, "years", r.name).get<double>();
      } else if (kind == "attribute") {
        r.kind = BaselineNodeRule::Kind::attribute;
        r.attribute = b.value("attribute", r.name);
        r.levels = b.value("levels", 2);
      } else if (kind == "history") {
        r.kind = BaselineNodeRule::Kind::history;
        r.codes = need(b, "codes", r.name).get<CodeSet>();
      } else if (kind == "duration_at_least") {
        r.kind = BaselineNodeRule::Kind::duration_at_least;
        r.codes = need(b, "codes", r.name).get<CodeSet>();
        r.days = need(b, "days", r.name).get<long long>();
      } else {
        throw ConfigError("cohort config: unknown baseline kind '" + kind + "'");
      }
      c.baseline.push_back(std::move(r));
    }
    for (const auto& v : j.value("covariates", nlohmann::json::array())) {
      only_keys(v, {"name", "kind", "codes"}, "a covariate");
      CovariateRule r;
      r.name = need(v, "name", "covariate").get<std::string>();
      const auto kind = need(v, "kind", "covariate " + r.name).get<std::string>();
      if (kind != "diagnosis" && kind != "medication")
        throw ConfigError("cohort config: covariate kind must be diagnosis or medication");
      r.absorbing = kind == "diagnosis";
      r.codes = need(v, "codes", r.name).get<CodeSet>();
      c.covariates.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("cohort config: ") + e.what());
  }
  c.check();
  return c;
}

nlohmann::ordered_json cohort_config_to_json(const CohortConfig& c) {
  nlohmann::ordered_json j;
  j["index_codes"] = c.index_codes;
  j["enrollment_window"] = {c.window_start, c.window_end};
  j["min_age"] = c.min_age;
  j["prior_codes"] = c.prior_codes;
  j["exclusions"] = nlohmann::ordered_json::array();
  for (const auto& e : c.exclusions) j["exclusions"].push_back({{"name", e.name}, {"codes", e.codes}});
  j["interval_length_days"] = c.interval_length_days;
  j["intervals"] = c.intervals;
  j["exposures"] = nlohmann::ordered_json::array();
  for (const auto& [n, codes] : c.exposures) j["exposures"].push_back({{"name", n}, {"codes", codes}});
  j["outcome"] = {{"name", c.outcome_name}, {"codes", c.outcome_codes}};
  j["competing_name"] = c.competing_name;
  j["censor_name"] = c.censor_name;
  j["baseline"] = nlohmann::ordered_json::array();
  for (const auto& b : c.baseline) {
    nlohmann::ordered_json x;
    x["name"] = b.name;
    switch (b.kind) {
      case BaselineNodeRule::Kind::age_at_least:
        x["kind"] = "age_at_least";
        x["years"] = b.years;
        break;
      case BaselineNodeRule::Kind::attribute:
        x["kind"] = "attribute";
        x["attribute"] = b.attribute;
        x["levels"] = b.levels;
        break;
      case BaselineNodeRule::Kind::history:
        x["kind"] = "history";
        x["codes"] = b.codes;
        break;
      case BaselineNodeRule::Kind::duration_at_least:
        x["kind"] = "duration_at_least";
        x["codes"] = b.codes;
        x["days"] = b.days;
        break;
    }
    j["baseline"].push_back(x);
  }
  j["covariates"] = nlohmann::ordered_json::array();
  for (const auto& v : c.covariates)
    j["covariates"].push_back(
        {{"name", v.name}, {"kind", v.absorbing ? "diagnosis" : "medication"}, {"codes", v.codes}});
  return j;
}

std::vector<SubjectEvents> group_events(std::vector<EventRecord> events) {
  std::map<std::string, std::vector<EventRecord>> by;
  for (auto& e : events) by[e.subject_id].push_back(std::move(e));
  std::vector<SubjectEvents> out;
  for (auto& [id, ev] : by) {
    std::sort(ev.begin(), ev.end(), [](const EventRecord& a, const EventRecord& b) {
      return std::tie(a.day, a.kind, a.code) < std::tie(b.day, b.kind, b.code);
    });
    out.push_back({id, std::move(ev)});
  }
  const bool numeric = std::all_of(out.begin(), out.end(), [](const SubjectEvents& s) {
    return !s.id.empty() && s.id.size() < 19 &&
           std::all_of(s.id.begin(), s.id.end(), [](char ch) { return ch >= '0' && ch <= '9'; });
  });
  if (numeric)
    std::stable_sort(out.begin(), out.end(), [](const SubjectEvents& a, const SubjectEvents& b) {
      return std::stoll(a.id) < std::stoll(b.id);
    });
  for (const auto& s : out) {
    int deaths = 0, emigrations = 0;
    for (const auto& e : s.events) {
      deaths += e.kind == EventKind::death;
      emigrations += e.kind == EventKind::emigration;
    }
    if (deaths > 1 || emigrations > 1)
      throw DataError("subject " + s.id + ": more than one death or emigration record");
  }
  return out;
}

namespace {

bool is_record(const EventRecord& e) {
  return e.kind == EventKind::fill || e.kind == EventKind::diagnosis;
}

std::optional<long long> birth_day(const SubjectEvents& s) {
  for (const auto& e : s.events)
    if (e.kind == EventKind::birth) return e.day;
  return std::nullopt;
}

constexpr double kDaysPerYear = 365.25;

}  // namespace

// Rules in order: initiation in window, alive at index, age, prior
// medication, then the configured exclusions.
Eligibility check_eligibility(const SubjectEvents& s, const CohortConfig& c) {
  Eligibility out;
  std::optional<long long> index;
  for (const auto& e : s.events)
    if (e.kind == EventKind::fill && code_matches(c.index_codes, e.code)) {
      index = e.day;
      break;
    }
  if (!index || *index < c.window_start || *index > c.window_end) {
    out.reason = "no initiation in enrollment window";
    return out;
  }
  out.index_day = *index;
  for (const auto& e : s.events)
    if ((e.kind == EventKind::death || e.kind == EventKind::emigration ||
         e.kind == EventKind::study_end) && e.day <= *index) {
      out.reason = "died or left before index";
      return out;
    }
  const auto birth = birth_day(s);
  if (!birth || static_cast<double>(*index - *birth) / kDaysPerYear < c.min_age) {
    out.reason = "age below minimum";
    return out;
  }
  bool prior = c.prior_codes.empty();
  for (const auto& e : s.events)
    if (e.kind == EventKind::fill && e.day < *index && code_matches(c.prior_codes, e.code))
      prior = true;
  if (!prior) {
    out.reason = "no prior medication";
    return out;
  }
  for (const auto& rule : c.exclusions)
    for (const auto& e : s.events)
      if (is_record(e) && e.day <= *index && code_matches(rule.codes, e.code)) {
        out.reason = rule.name + " violated";
        return out;
      }
  out.included = true;
  return out;
}

std::vector<int> discretize_exposure(const SubjectEvents& s, const CodeSet& codes,
                                     long long index_day, int interval_length_days,
                                     int intervals) {
  std::vector<int> v(static_cast<std::size_t>(intervals), 0);
  for (const auto& e : s.events) {
    if (e.kind != EventKind::fill || e.day < index_day || !code_matches(codes, e.code)) continue;
    const auto t = (e.day - index_day) / interval_length_days;  // 0-based, half-open
    if (t < intervals) v[static_cast<std::size_t>(t)] = 1;
  }
  return v;
}

namespace {

// One subject's raw row (kMissing after the terminal node), then LVCF.
std::vector<int> subject_row(const SubjectEvents& s, long long idx, const CohortConfig& c,
                             const SchemaLayout& lay) {
  const int T = c.intervals;
  const int K = T - 1;
  const long long D = c.interval_length_days;
  auto interval_of = [&](long long day) {  // pre-index days map to interval 1
    return day < idx ? 1 : static_cast<int>((day - idx) / D) + 1;
  };
  constexpr int kNever = 1 << 30;
  int y = kNever, d = kNever, cens = kNever;
  for (const auto& e : s.events) {
    if (is_record(e) && code_matches(c.outcome_codes, e.code)) y = std::min(y, interval_of(e.day));
    if (e.kind == EventKind::death) d = std::min(d, interval_of(e.day));
    if (e.kind == EventKind::emigration || e.kind == EventKind::study_end)
      cens = std::min(cens, interval_of(e.day));
  }
  if (d >= y) d = kNever;                   // dementia precedes death within an interval
  if (cens >= std::min(y, d) || cens > K) cens = kNever;  // L-block events precede C(t)

  std::vector<int> row(lay.size(), 0);
  for (std::size_t j = 0; j < c.baseline.size(); ++j) {
    const auto& b = c.baseline[j];
    int v = 0;
    switch (b.kind) {
      case BaselineNodeRule::Kind::age_at_least:
        v = static_cast<double>(idx - *birth_day(s)) / kDaysPerYear >= b.years;
        break;
      case BaselineNodeRule::Kind::attribute: {
        std::optional<long long> value;
        const auto prefix = b.attribute + "=";
        for (const auto& e : s.events)
          if (e.kind == EventKind::attribute && e.day <= idx && e.code.starts_with(prefix))
            value = csv::parse_int(std::string_view(e.code).substr(prefix.size()));
        if (!value)
          throw DataError("subject " + s.id + ": attribute '" + b.attribute + "' missing at index");
        if (*value < 0 || *value >= b.levels)
          throw DataError("subject " + s.id + ": attribute '" + b.attribute + "' out of range");
        v = static_cast<int>(*value);
        break;
      }
      case BaselineNodeRule::Kind::history:
        for (const auto& e : s.events)
          if (is_record(e) && e.day < idx && code_matches(b.codes, e.code)) v = 1;
        break;
      case BaselineNodeRule::Kind::duration_at_least:
        for (const auto& e : s.events)
          if (e.kind == EventKind::fill && e.day < idx && code_matches(b.codes, e.code)) {
            v = idx - e.day >= b.days;
            break;
          }
        break;
    }
    row[lay.baseline(j)] = v;
  }
  std::vector<std::vector<int>> exposure;
  for (const auto& [name, codes] : c.exposures)
    exposure.push_back(discretize_exposure(s, codes, idx, c.interval_length_days, T));
  for (int t = 1; t <= T; ++t) {
    const long long end = idx + t * D;
    for (std::size_t j = 0; j < c.covariates.size(); ++j) {
      const auto& cv = c.covariates[j];
      int v = 0;
      for (const auto& e : s.events) {
        if (!code_matches(cv.codes, e.code)) continue;
        if (cv.absorbing ? (e.kind == EventKind::diagnosis && e.day < end)
                         : (e.kind == EventKind::fill && e.day >= end - D && e.day < end))
          v = 1;
      }
      row[lay.covariate(j, t)] = v;
    }
    row[lay.outcome(t)] = y == t;
    row[lay.competing(t)] = d == t;
    if (t <= K) {
      for (std::size_t j = 0; j < exposure.size(); ++j)
        row[lay.exposure(j, t)] = exposure[j][static_cast<std::size_t>(t - 1)];
      row[lay.censor(t)] = cens == t;
    }
  }
  std::size_t terminal = lay.size();
  for (std::size_t col = 0; col < lay.size() && terminal == lay.size(); ++col)
    if (lay.nodes()[col].is_event() && row[col] == 1) terminal = col;
  for (std::size_t col = terminal + 1; col < lay.size(); ++col) row[col] = kMissing;
  return row;
}

}  // namespace

CohortResult build_cohort(const std::vector<EventRecord>& events, const CohortConfig& config) {
  config.check();
  auto layout = std::make_shared<const SchemaLayout>(config.schema());
  const auto subjects = group_events(events);

  std::vector<Eligibility> elig(subjects.size());
  kernels::parallel_for(subjects.size(),
                        [&](std::size_t i) { elig[i] = check_eligibility(subjects[i], config); });

  std::vector<std::string> rules{"no initiation in enrollment window", "died or left before index",
                                 "age below minimum", "no prior medication"};
  for (const auto& r : config.exclusions) rules.push_back(r.name + " violated");
  std::vector<FlowRow> flow{{"screened", 0, subjects.size()}};
  std::size_t remaining = subjects.size();
  for (const auto& rule : rules) {
    std::size_t n = 0;
    for (const auto& e : elig) n += !e.included && e.reason == rule;
    remaining -= n;
    flow.push_back({rule, n, remaining});
  }

  std::vector<std::size_t> included;
  for (std::size_t i = 0; i < subjects.size(); ++i)
    if (elig[i].included) included.push_back(i);
  const std::size_t n = included.size();
  std::vector<std::vector<int>> rows(n);
  std::vector<std::string> errors(n);
  kernels::parallel_for(n, [&](std::size_t k) {
    try {
      rows[k] = subject_row(subjects[included[k]], elig[included[k]].index_day, config, *layout);
    } catch (const std::exception& e) {
      errors[k] = e.what();
    }
  });
  for (const auto& e : errors)
    if (!e.empty()) throw DataError(e);

  ObservedDataset raw(layout, n);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t c = 0; c < layout->size(); ++c) raw.at(k, c) = rows[k][c];
  CohortResult out{apply_lvcf(raw), {}, std::move(flow), {}};
  for (auto i : included) out.subject_ids.push_back(subjects[i].id);
  if (subjects.empty()) out.warnings.push_back("no events: the cohort has 0 subjects");
  else if (n == 0) out.warnings.push_back("no subject met the eligibility criteria");
  return out;
}

std::string flowchart_csv(const CohortResult& r) {
  std::string out = "step,rule,excluded,remaining\n";
  for (std::size_t k = 0; k < r.flowchart.size(); ++k)
    out += csv::join({std::to_string(k), r.flowchart[k].rule,
                      std::to_string(r.flowchart[k].excluded),
                      std::to_string(r.flowchart[k].remaining)}) +
           "\n";
  out += csv::join({std::to_string(r.flowchart.size()), "included", "0",
                    std::to_string(r.data.n())}) +
         "\n";
  return out;
}

std::string descriptives_csv(const CohortResult& r) {
  const auto& d = r.data;
  const auto& lay = d.layout();
  const auto a = lay.exposure(0, 1);
  std::size_t n1 = 0;
  for (std::size_t i = 0; i < d.n(); ++i) n1 += d.at(i, a) == 1;
  const std::size_t n0 = d.n() - n1;
  auto pct = [](std::size_t k, std::size_t n) {
    if (n == 0) return std::string();
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", 100.0 * static_cast<double>(k) / static_cast<double>(n));
    return std::string(buf);
  };
  const auto exposed = "exposed_" + lay.schema().exposure_nodes[0];
  std::string out = "node,level," + exposed + "_n," + exposed + "_pct,other_n,other_pct,total_n,total_pct\n";
  out += csv::join({"subjects", "", std::to_string(n1), pct(n1, n1), std::to_string(n0),
                    pct(n0, n0), std::to_string(d.n()), pct(d.n(), d.n())}) +
         "\n";
  auto emit = [&](std::size_t col, int level) {
    std::size_t k1 = 0, k0 = 0;
    for (std::size_t i = 0; i < d.n(); ++i) {
      if (d.at(i, col) != level) continue;
      (d.at(i, a) == 1 ? k1 : k0)++;
    }
    out += csv::join({lay.nodes()[col].column_name(), std::to_string(level), std::to_string(k1),
                      pct(k1, n1), std::to_string(k0), pct(k0, n0), std::to_string(k1 + k0),
                      pct(k1 + k0, d.n())}) +
           "\n";
  };
  for (std::size_t j = 0; j < lay.schema().baseline_nodes.size(); ++j) {
    const auto col = lay.baseline(j);
    const int levels = lay.levels(col);
    if (levels == 2) emit(col, 1);
    else
      for (int l = 0; l < levels; ++l) emit(col, l);
  }
  for (std::size_t j = 0; j < lay.covariate_count(); ++j) emit(lay.covariate(j, 1), 1);
  return out;
}

}  // namespace ltrisk
