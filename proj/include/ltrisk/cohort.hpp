#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ltrisk/data_model.hpp"

namespace ltrisk {

/// birth and attribute are extensions: age needs a birth day, and sex,
/// education and income arrive as attribute records "<name>=<value>".
enum class EventKind { fill, diagnosis, death, emigration, study_end, birth, attribute };

std::string_view to_string(EventKind k);
EventKind event_kind_from_string(std::string_view s);

struct EventRecord {
  std::string subject_id;
  EventKind kind = EventKind::fill;
  std::string code;
  long long day = 0;
};

/// Long CSV with header subject_id,event_kind,code,day.
std::vector<EventRecord> parse_events_csv(std::string_view text);
std::vector<EventRecord> read_events_csv(const std::filesystem::path& path);

/// Code sets match by prefix ("A10A" matches "A10AB05").
using CodeSet = std::vector<std::string>;
bool code_matches(const CodeSet& set, std::string_view code);

struct ExclusionRule {
  std::string name;  // reported as "<name> violated"
  CodeSet codes;     // any fill or diagnosis on or before the index day excludes
};

struct BaselineNodeRule {
  enum class Kind { age_at_least, attribute, history, duration_at_least };
  std::string name;
  Kind kind = Kind::history;
  double years = 0.0;     // age_at_least
  std::string attribute;  // attribute: value of the last record on or before index
  int levels = 2;         // attribute values must lie in 0..levels-1
  CodeSet codes;          // history / duration_at_least
  long long days = 0;     // duration_at_least: first matching fill at least this long before index
};

struct CovariateRule {
  std::string name;
  CodeSet codes;
  /// Diagnosis covariates switch on at the first qualifying diagnosis
  /// (history before index included) and stay on; medication covariates are
  /// 1 in intervals with a matching fill.
  bool absorbing = true;
};

struct CohortConfig {
  CodeSet index_codes;  // first fill of any of these defines day 0
  long long window_start = 0;
  long long window_end = 0;  // index day must lie in [start, end]
  double min_age = 50.0;
  CodeSet prior_codes;  // at least one fill strictly before index
  std::vector<ExclusionRule> exclusions;
  int interval_length_days = 182;
  int intervals = 3;  // K + 1
  std::vector<std::pair<std::string, CodeSet>> exposures;
  std::string outcome_name = "dementia";
  CodeSet outcome_codes;  // diagnoses or fills
  std::string competing_name = "death";
  std::string censor_name = "censored";
  std::vector<BaselineNodeRule> baseline;
  std::vector<CovariateRule> covariates;

  /// Window order, positive sizes, unique node names and disjoint node code
  /// sets (exposures, outcome, covariates).
  void check() const;
  NodeSchema schema() const;
};

CohortConfig cohort_config_from_json(const nlohmann::json& j);
nlohmann::ordered_json cohort_config_to_json(const CohortConfig& c);

struct FlowRow {
  std::string rule;
  std::size_t excluded = 0;
  std::size_t remaining = 0;
};

struct SubjectEvents {
  std::string id;
  std::vector<EventRecord> events;  // sorted by (day, kind, code)
};

/// Groups by subject in subject-id order (numeric when every id is an
/// integer) and sorts each subject's events.
std::vector<SubjectEvents> group_events(std::vector<EventRecord> events);

struct Eligibility {
  bool included = false;
  long long index_day = 0;
  std::string reason;  // first failing rule
};

Eligibility check_eligibility(const SubjectEvents& subject, const CohortConfig& config);

/// Exposure value per interval t = 1..intervals for fills of `codes`: 1 iff a
/// fill lies in [(t-1)D, tD) days after index. Earlier fills are ignored.
std::vector<int> discretize_exposure(const SubjectEvents& subject, const CodeSet& codes,
                                     long long index_day, int interval_length_days,
                                     int intervals);

struct CohortResult {
  ObservedDataset data;
  std::vector<std::string> subject_ids;  // row order of data
  std::vector<FlowRow> flowchart;        // "screened" first, then each rule
  std::vector<std::string> warnings;
};

CohortResult build_cohort(const std::vector<EventRecord>& events, const CohortConfig& config);

std::string flowchart_csv(const CohortResult& r);
/// Counts and percentages of baseline and interval-1 nodes by first-exposure
/// status at interval 1.
std::string descriptives_csv(const CohortResult& r);

}  // namespace ltrisk
