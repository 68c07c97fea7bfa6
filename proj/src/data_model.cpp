#include "ltrisk/data_model.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "ltrisk/errors.hpp"

namespace ltrisk {

std::string_view to_string(NodeRole role) {
  switch (role) {
    case NodeRole::baseline: return "baseline";
    case NodeRole::covariate: return "covariate";
    case NodeRole::outcome: return "outcome";
    case NodeRole::competing: return "competing";
    case NodeRole::exposure: return "exposure";
    case NodeRole::censor: return "censor";
  }
  return "?";
}

std::string NodeRef::column_name() const {
  if (role == NodeRole::baseline) return base;
  return base + "_t" + std::to_string(interval);
}

SchemaLayout::SchemaLayout(NodeSchema schema) : schema_(std::move(schema)) {
  const auto& s = schema_;
  if (s.intervals < 1) throw ConfigError("schema: intervals must be >= 1");
  if (s.interval_length_days < 1) throw ConfigError("schema: interval_length_days must be >= 1");
  if (s.outcome_node.empty() || s.competing_node.empty() || s.censor_node.empty())
    throw ConfigError("schema: outcome, competing and censor node names are required");

  std::set<std::string> seen;
  auto claim = [&](const std::string& name) {
    if (name.empty()) throw ConfigError("schema: empty node name");
    if (!seen.insert(name).second) throw ConfigError("schema: duplicate node name '" + name + "'");
  };
  for (const auto& b : s.baseline_nodes) claim(b);
  for (const auto& c : s.covariate_nodes) claim(c);
  claim(s.outcome_node);
  claim(s.competing_node);
  for (const auto& e : s.exposure_nodes) claim(e);
  claim(s.censor_node);
  for (const auto& [name, lv] : s.levels) {
    if (!seen.count(name)) throw ConfigError("schema: levels given for unknown node '" + name + "'");
    if (lv < 2) throw ConfigError("schema: node '" + name + "' needs at least 2 levels");
    if (name == s.outcome_node || name == s.competing_node || name == s.censor_node ||
        std::find(s.exposure_nodes.begin(), s.exposure_nodes.end(), name) != s.exposure_nodes.end())
      throw ConfigError("schema: event and exposure nodes must be binary ('" + name + "')");
  }

  l_width_ = s.covariate_nodes.size() + 2;
  per_interval_ = l_width_ + s.exposure_nodes.size() + 1;

  auto level_of = [&](const std::string& name) {
    auto it = s.levels.find(name);
    return it == s.levels.end() ? 2 : it->second;
  };
  for (const auto& b : s.baseline_nodes) {
    nodes_.push_back({b, 0, NodeRole::baseline});
    levels_.push_back(level_of(b));
  }
  const int K = s.intervals - 1;
  for (int t = 1; t <= s.intervals; ++t) {
    for (const auto& c : s.covariate_nodes) {
      nodes_.push_back({c, t, NodeRole::covariate});
      levels_.push_back(level_of(c));
    }
    nodes_.push_back({s.outcome_node, t, NodeRole::outcome});
    nodes_.push_back({s.competing_node, t, NodeRole::competing});
    levels_.insert(levels_.end(), 2, 2);
    if (t <= K) {
      for (const auto& e : s.exposure_nodes) nodes_.push_back({e, t, NodeRole::exposure});
      nodes_.push_back({s.censor_node, t, NodeRole::censor});
      levels_.insert(levels_.end(), s.exposure_nodes.size() + 1, 2);
    }
  }
}

std::size_t SchemaLayout::lblock_begin(int t) const {
  return schema_.baseline_nodes.size() + static_cast<std::size_t>(t - 1) * per_interval_;
}
std::size_t SchemaLayout::ablock_begin(int t) const { return lblock_begin(t) + l_width_; }

std::size_t SchemaLayout::baseline(std::size_t j) const { return j; }
std::size_t SchemaLayout::covariate(std::size_t j, int t) const { return lblock_begin(t) + j; }
std::size_t SchemaLayout::outcome(int t) const { return lblock_begin(t) + l_width_ - 2; }
std::size_t SchemaLayout::competing(int t) const { return lblock_begin(t) + l_width_ - 1; }
std::size_t SchemaLayout::exposure(std::size_t j, int t) const { return ablock_begin(t) + j; }
std::size_t SchemaLayout::censor(int t) const {
  return ablock_begin(t) + schema_.exposure_nodes.size();
}

std::optional<std::size_t> SchemaLayout::find(std::string_view column_name) const {
  for (std::size_t c = 0; c < nodes_.size(); ++c)
    if (nodes_[c].column_name() == column_name) return c;
  return std::nullopt;
}

int SchemaLayout::levels(std::size_t column) const { return levels_.at(column); }

std::vector<std::string> SchemaLayout::column_names() const {
  std::vector<std::string> out;
  out.reserve(nodes_.size());
  for (const auto& n : nodes_) out.push_back(n.column_name());
  return out;
}

std::vector<std::string> SchemaLayout::within_interval_order() const {
  std::vector<std::string> out(schema_.covariate_nodes);
  out.push_back(schema_.outcome_node);
  out.push_back(schema_.competing_node);
  out.insert(out.end(), schema_.exposure_nodes.begin(), schema_.exposure_nodes.end());
  out.push_back(schema_.censor_node);
  return out;
}

ObservedDataset::ObservedDataset(std::shared_ptr<const SchemaLayout> layout, std::size_t n)
    : layout_(std::move(layout)), n_(n), values_(layout_->size() * n, 0) {}

ObservedDataset::ObservedDataset(std::shared_ptr<const SchemaLayout> layout, std::size_t n,
                                 std::vector<int> column_major_values)
    : layout_(std::move(layout)), n_(n), values_(std::move(column_major_values)) {
  if (values_.size() != layout_->size() * n_)
    throw DataError("dataset: expected " + std::to_string(layout_->size() * n_) + " cells, got " +
                    std::to_string(values_.size()));
}

ObservedDataset ObservedDataset::subset(std::span<const std::size_t> rows) const {
  std::vector<int> out(columns() * rows.size());
  for (std::size_t c = 0; c < columns(); ++c) {
    const int* src = values_.data() + c * n_;
    int* dst = out.data() + c * rows.size();
    for (std::size_t r = 0; r < rows.size(); ++r) dst[r] = src[rows[r]];
  }
  return ObservedDataset(layout_, rows.size(), std::move(out));
}

bool ObservedDataset::operator==(const ObservedDataset& other) const {
  return n_ == other.n_ && layout_->schema() == other.layout_->schema() && values_ == other.values_;
}

std::string ValidationReport::summary(std::size_t max_items) const {
  std::ostringstream os;
  os << violations.size() << " violation(s)";
  for (std::size_t k = 0; k < std::min(max_items, violations.size()); ++k) {
    const auto& v = violations[k];
    os << "\n  subject " << v.subject << ", " << v.node << ": " << v.message;
  }
  return os.str();
}

namespace {

// Column of the first Y/D/C value equal to 1 in generation order.
std::optional<std::size_t> terminal_column(const ObservedDataset& d, std::size_t i,
                                           bool missing_as_zero) {
  const auto& lay = d.layout();
  for (int t = 1; t <= lay.intervals(); ++t) {
    for (std::size_t c : {lay.outcome(t), lay.competing(t)}) {
      int v = d.at(i, c);
      if (v == 1 || (!missing_as_zero && v != 0)) return c;
    }
    if (t <= lay.treatment_intervals()) {
      int v = d.at(i, lay.censor(t));
      if (v == 1 || (!missing_as_zero && v != 0)) return lay.censor(t);
    }
  }
  return std::nullopt;
}

// Columns of the same node series, in interval order.
std::vector<std::size_t> series_of(const SchemaLayout& lay, std::size_t column) {
  const auto& ref = lay.nodes()[column];
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < lay.size(); ++c) {
    const auto& r = lay.nodes()[c];
    if (r.base == ref.base && r.role == ref.role) out.push_back(c);
  }
  return out;
}

}  // namespace

ValidationReport validate_dataset(const ObservedDataset& data) {
  ValidationReport rep;
  const auto& lay = data.layout();
  if (data.raw().size() != data.n() * lay.size()) throw DataError("dataset: malformed dimensions");

  // Group columns by series once.
  std::vector<std::vector<std::size_t>> series;
  {
    std::vector<bool> done(lay.size(), false);
    for (std::size_t c = 0; c < lay.size(); ++c) {
      if (done[c] || !lay.nodes()[c].time_varying()) continue;
      auto s = series_of(lay, c);
      for (auto x : s) done[x] = true;
      series.push_back(std::move(s));
    }
  }

  auto add = [&](std::size_t i, std::size_t c, std::string msg) {
    const auto& ref = lay.nodes()[c];
    rep.violations.push_back({i, ref.column_name(), ref.interval, std::move(msg)});
  };

  for (std::size_t i = 0; i < data.n(); ++i) {
    std::vector<bool> flagged(lay.size(), false);
    for (std::size_t c = 0; c < lay.size(); ++c) {
      int v = data.at(i, c);
      if (v == kMissing) throw DataError("dataset: missing cell for subject " + std::to_string(i) +
                                         " at " + lay.nodes()[c].column_name());
      if (v < 0 || v >= lay.levels(c)) {
        add(i, c, "value " + std::to_string(v) + " out of range");
        flagged[c] = true;
      }
    }
    // Absorbing event indicators.
    for (const auto& s : series) {
      const auto& ref = lay.nodes()[s.front()];
      if (!ref.is_event()) continue;
      for (std::size_t k = 1; k < s.size(); ++k) {
        if (data.at(i, s[k - 1]) == 1 && data.at(i, s[k]) == 0) {
          add(i, s[k], std::string(to_string(ref.role)) + " not absorbing at t=" +
                           std::to_string(lay.nodes()[s[k]].interval));
          flagged[s[k]] = true;
        }
      }
    }
    auto term = terminal_column(data, i, true);
    if (!term) continue;
    const std::size_t p = *term;
    const auto& pref = lay.nodes()[p];
    if (pref.role == NodeRole::outcome && data.at(i, lay.competing(pref.interval)) == 1 &&
        !flagged[lay.competing(pref.interval)]) {
      add(i, lay.competing(pref.interval), "death recorded in the same interval as the outcome "
                                           "(outcome takes precedence)");
      flagged[lay.competing(pref.interval)] = true;
    }
    for (const auto& s : series) {
      const bool event_series = lay.nodes()[s.front()].is_event();
      std::optional<int> anchor;
      for (std::size_t c : s)
        if (c <= p) anchor = data.at(i, c);
      if (!anchor && event_series) anchor = 0;
      for (std::size_t c : s) {
        if (c <= p) continue;
        if (!anchor) {
          anchor = data.at(i, c);
          continue;
        }
        if (data.at(i, c) != *anchor && !flagged[c]) {
          add(i, c, "LVCF broken after terminal event at " + pref.column_name());
          flagged[c] = true;
        }
      }
    }
  }
  return rep;
}

ObservedDataset apply_lvcf(const ObservedDataset& raw) {
  const auto& lay = raw.layout();
  ObservedDataset out = raw;
  std::vector<std::vector<std::size_t>> series;
  {
    std::vector<bool> done(lay.size(), false);
    for (std::size_t c = 0; c < lay.size(); ++c) {
      if (done[c] || !lay.nodes()[c].time_varying()) continue;
      auto s = series_of(lay, c);
      for (auto x : s) done[x] = true;
      series.push_back(std::move(s));
    }
  }
  for (std::size_t i = 0; i < raw.n(); ++i) {
    auto term = terminal_column(raw, i, true);
    const std::size_t p = term ? *term : lay.size();
    for (std::size_t c = 0; c < lay.size() && c <= p; ++c) {
      if (raw.at(i, c) == kMissing)
        throw DataError("non-terminal missingness unsupported (subject " + std::to_string(i) +
                        ", " + lay.nodes()[c].column_name() + ")");
    }
    if (!term) continue;
    for (const auto& s : series) {
      const bool event_series = lay.nodes()[s.front()].is_event();
      std::optional<int> anchor;
      for (std::size_t c : s)
        if (c <= p) anchor = raw.at(i, c);
      if (!anchor && event_series) anchor = 0;
      for (std::size_t c : s) {
        if (c <= p) continue;
        if (!anchor) anchor = raw.at(i, c) == kMissing ? 0 : raw.at(i, c);
        out.at(i, c) = *anchor;
      }
    }
  }
  return out;
}

Regime Regime::sustained(const SchemaLayout& layout, std::string name,
                         const std::vector<int>& per_exposure) {
  if (per_exposure.size() != layout.exposure_count())
    throw ConfigError("regime '" + name + "': expected " + std::to_string(layout.exposure_count()) +
                      " exposure values");
  Regime r;
  r.name = std::move(name);
  for (int v : per_exposure)
    r.assignments.emplace_back(static_cast<std::size_t>(layout.treatment_intervals()), v);
  return r;
}

void Regime::check(const SchemaLayout& layout) const {
  if (assignments.size() != layout.exposure_count())
    throw ConfigError("regime '" + name + "': one assignment row per exposure node required");
  for (const auto& row : assignments) {
    if (row.size() != static_cast<std::size_t>(layout.treatment_intervals()))
      throw ConfigError("regime '" + name + "': one assignment per interval t=1..K required");
    for (int v : row)
      if (v != 0 && v != 1) throw ConfigError("regime '" + name + "': assignments must be 0/1");
  }
}

std::string_view to_string(ContrastType c) {
  switch (c) {
    case ContrastType::risk_difference: return "risk_difference";
    case ContrastType::relative_risk: return "relative_risk";
    case ContrastType::per_arm_risk: return "per_arm_risk";
  }
  return "?";
}

ContrastType contrast_from_string(std::string_view s) {
  if (s == "risk_difference") return ContrastType::risk_difference;
  if (s == "relative_risk") return ContrastType::relative_risk;
  if (s == "per_arm_risk") return ContrastType::per_arm_risk;
  throw ConfigError("unknown contrast '" + std::string(s) + "'");
}

void EstimandSpec::check(const SchemaLayout& layout) const {
  treatment.check(layout);
  control.check(layout);
  if (horizon < 1 || horizon > layout.intervals())
    throw ConfigError("horizon must lie in 1.." + std::to_string(layout.intervals()));
}

std::vector<SubjectStatus> summarize_subjects(const ObservedDataset& data) {
  const auto& lay = data.layout();
  std::vector<SubjectStatus> out(data.n());
  const int K = lay.treatment_intervals();
  for (int t = lay.intervals(); t >= 1; --t) {
    // Walk backwards so the earliest event wins; within an interval the
    // order is C (latest), then D, then Y.
    if (t <= K) {
      auto col = data.column(lay.censor(t));
      for (std::size_t i = 0; i < data.n(); ++i)
        if (col[i] == 1) out[i] = {Terminal::censored, t};
    }
    auto dcol = data.column(lay.competing(t));
    for (std::size_t i = 0; i < data.n(); ++i)
      if (dcol[i] == 1) out[i] = {Terminal::competing, t};
    auto ycol = data.column(lay.outcome(t));
    for (std::size_t i = 0; i < data.n(); ++i)
      if (ycol[i] == 1) out[i] = {Terminal::outcome, t};
  }
  return out;
}

AdherenceTable::AdherenceTable(const ObservedDataset& data, std::span<const SubjectStatus> status,
                               const Regime& regime)
    : n_(data.n()), stride_(static_cast<std::size_t>(data.layout().treatment_intervals()) + 1) {
  const auto& lay = data.layout();
  const int K = lay.treatment_intervals();
  regime.check(lay);
  flags_.assign(n_ * stride_, 0);
  for (std::size_t i = 0; i < n_; ++i) {
    const auto& st = status[i];
    bool ok = true;
    flags_[i * stride_] = 1;
    for (int t = 1; t <= K; ++t) {
      if (ok && !st.event_by(t)) {
        if (st.kind == Terminal::censored && st.time == t) ok = false;
        for (std::size_t j = 0; ok && j < lay.exposure_count(); ++j)
          if (data.at(i, lay.exposure(j, t)) != regime.value(j, t)) ok = false;
      }
      flags_[i * stride_ + t] = ok ? 1 : 0;
    }
  }
}

std::vector<std::uint8_t> adherence_indicator(const ObservedDataset& data, const Regime& regime,
                                              int t) {
  if (t < 1 || t > data.layout().treatment_intervals())
    throw ConfigError("adherence_indicator: t must lie in 1..K");
  auto status = summarize_subjects(data);
  AdherenceTable table(data, status, regime);
  std::vector<std::uint8_t> out(data.n());
  for (std::size_t i = 0; i < data.n(); ++i) out[i] = table(i, t) ? 1 : 0;
  return out;
}

std::vector<std::uint8_t> at_risk_indicator(const ObservedDataset& data, int t) {
  if (t < 1 || t > data.layout().intervals())
    throw ConfigError("at_risk_indicator: t must lie in 1..K+1");
  auto status = summarize_subjects(data);
  std::vector<std::uint8_t> out(data.n());
  for (std::size_t i = 0; i < data.n(); ++i) out[i] = status[i].at_risk(t) ? 1 : 0;
  return out;
}

}  // namespace ltrisk
