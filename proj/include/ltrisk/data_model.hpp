#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ltrisk {

/// Sentinel for a missing cell in raw (pre-LVCF) tables.
inline constexpr int kMissing = -1;

enum class NodeRole : std::uint8_t { baseline, covariate, outcome, competing, exposure, censor };

std::string_view to_string(NodeRole role);

/// One column of the wide layout. Baseline nodes carry interval 0.
struct NodeRef {
  std::string base;
  int interval = 0;
  NodeRole role = NodeRole::baseline;

  /// "<node>" for baseline nodes and "<node>_t<t>" for time-varying ones.
  std::string column_name() const;
  bool time_varying() const { return role != NodeRole::baseline; }
  bool is_event() const {
    return role == NodeRole::outcome || role == NodeRole::competing || role == NodeRole::censor;
  }
};

/// Declared node structure of a longitudinal dataset:
/// W, L(1), A(1), ..., L(K), A(K), L(K+1), with L(t) = (covariates, Y, D)
/// and A(t) = (exposures, C).
struct NodeSchema {
  std::vector<std::string> baseline_nodes;
  int intervals = 1;  // K + 1
  int interval_length_days = 182;
  std::vector<std::string> covariate_nodes;
  std::string outcome_node = "Y";
  std::string competing_node = "D";
  std::string censor_node = "C";
  std::vector<std::string> exposure_nodes;
  /// Categorical nodes with more than two levels, coded 0..levels-1.
  std::map<std::string, int> levels;

  bool operator==(const NodeSchema&) const = default;
};

/// Validated, indexed view of a NodeSchema. Column indices follow the
/// generation order used everywhere in the library.
class SchemaLayout {
 public:
  explicit SchemaLayout(NodeSchema schema);

  const NodeSchema& schema() const { return schema_; }
  std::span<const NodeRef> nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }

  /// Number of treatment intervals K.
  int treatment_intervals() const { return schema_.intervals - 1; }
  int intervals() const { return schema_.intervals; }
  std::size_t exposure_count() const { return schema_.exposure_nodes.size(); }
  std::size_t covariate_count() const { return schema_.covariate_nodes.size(); }

  std::size_t baseline(std::size_t j) const;
  std::size_t covariate(std::size_t j, int t) const;
  std::size_t outcome(int t) const;
  std::size_t competing(int t) const;
  std::size_t exposure(std::size_t j, int t) const;
  std::size_t censor(int t) const;

  /// First column of the L-block / A-block of interval t.
  std::size_t lblock_begin(int t) const;
  std::size_t ablock_begin(int t) const;

  std::optional<std::size_t> find(std::string_view column_name) const;
  /// Level count of a column (2 for binary nodes).
  int levels(std::size_t column) const;

  std::vector<std::string> column_names() const;
  std::vector<std::string> within_interval_order() const;

 private:
  NodeSchema schema_;
  std::vector<NodeRef> nodes_;
  std::vector<int> levels_;
  std::size_t per_interval_ = 0;
  std::size_t l_width_ = 0;
};

/// Wide person-by-node table. Values are stored column-major so that the
/// per-node gathers done by the learners are contiguous.
class ObservedDataset {
 public:
  ObservedDataset(std::shared_ptr<const SchemaLayout> layout, std::size_t n);
  ObservedDataset(std::shared_ptr<const SchemaLayout> layout, std::size_t n,
                  std::vector<int> column_major_values);

  std::size_t n() const { return n_; }
  std::size_t columns() const { return layout_->size(); }
  const SchemaLayout& layout() const { return *layout_; }
  const std::shared_ptr<const SchemaLayout>& layout_ptr() const { return layout_; }

  int at(std::size_t subject, std::size_t column) const { return values_[column * n_ + subject]; }
  int& at(std::size_t subject, std::size_t column) { return values_[column * n_ + subject]; }
  std::span<const int> column(std::size_t c) const {
    return {values_.data() + c * n_, n_};
  }
  const std::vector<int>& raw() const { return values_; }

  /// Rows in the given order; indices may repeat (bootstrap resamples).
  ObservedDataset subset(std::span<const std::size_t> rows) const;

  bool operator==(const ObservedDataset& other) const;

 private:
  std::shared_ptr<const SchemaLayout> layout_;
  std::size_t n_ = 0;
  std::vector<int> values_;
};

struct Violation {
  std::size_t subject = 0;
  std::string node;
  int interval = 0;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  std::string summary(std::size_t max_items = 10) const;
};

/// Checks absorbing event indicators, LVCF after the first terminal event,
/// outcome-before-death precedence and value ranges. Structural problems
/// (missing cells, wrong dimensions) throw DataError instead.
ValidationReport validate_dataset(const ObservedDataset& data);

/// Fills post-event cells with their last observed value. Cells holding
/// kMissing are allowed only after the first terminal event.
ObservedDataset apply_lvcf(const ObservedDataset& raw);

/// Static regime: fixed exposure values per interval; censoring is always
/// prevented.
struct Regime {
  std::string name;
  /// assignments[j][t - 1] for exposure j and interval t = 1..K.
  std::vector<std::vector<int>> assignments;

  int value(std::size_t exposure, int t) const { return assignments[exposure][t - 1]; }

  /// Same value at every interval for each exposure.
  static Regime sustained(const SchemaLayout& layout, std::string name,
                          const std::vector<int>& per_exposure);
  void check(const SchemaLayout& layout) const;
};

enum class ContrastType { risk_difference, relative_risk, per_arm_risk };

std::string_view to_string(ContrastType c);
ContrastType contrast_from_string(std::string_view s);

struct EstimandSpec {
  Regime treatment;
  Regime control;
  int horizon = 1;
  ContrastType contrast = ContrastType::risk_difference;

  void check(const SchemaLayout& layout) const;
};

enum class Terminal : std::uint8_t { none, outcome, competing, censored };

/// First terminal event of a subject, read without touching LVCF padding.
struct SubjectStatus {
  Terminal kind = Terminal::none;
  int time = 0;  // interval of the terminal event; unused when kind == none

  /// At risk at the L-block of interval t: no Y/D/C before t and no Y/D at t.
  bool at_risk(int t) const {
    switch (kind) {
      case Terminal::none: return true;
      case Terminal::censored: return t <= time;
      default: return t < time;
    }
  }
  /// Outcome observed at or before interval t.
  bool outcome_by(int t) const { return kind == Terminal::outcome && time <= t; }
  bool competing_by(int t) const { return kind == Terminal::competing && time <= t; }
  /// Y or D at or before t (the events that freeze adherence and Q).
  bool event_by(int t) const {
    return (kind == Terminal::outcome || kind == Terminal::competing) && time <= t;
  }
};

std::vector<SubjectStatus> summarize_subjects(const ObservedDataset& data);

/// Per-subject regime adherence for t = 0..K (column 0 is all ones).
/// Stored row-major: adherent(i, t).
class AdherenceTable {
 public:
  AdherenceTable(const ObservedDataset& data, std::span<const SubjectStatus> status,
                 const Regime& regime);
  bool operator()(std::size_t i, int t) const { return flags_[i * stride_ + t] != 0; }
  std::size_t n() const { return n_; }

 private:
  std::size_t n_ = 0;
  std::size_t stride_ = 0;
  std::vector<std::uint8_t> flags_;
};

std::vector<std::uint8_t> adherence_indicator(const ObservedDataset& data, const Regime& regime,
                                              int t);
std::vector<std::uint8_t> at_risk_indicator(const ObservedDataset& data, int t);

}  // namespace ltrisk
