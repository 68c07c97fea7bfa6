#include "ltrisk/simulation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "ltrisk/csv.hpp"
#include "ltrisk/dataset_io.hpp"
#include "ltrisk/errors.hpp"
#include "ltrisk/kernels.hpp"
#include "ltrisk/learners.hpp"
#include "ltrisk/rng.hpp"

namespace ltrisk {

namespace {

constexpr std::size_t kNone = static_cast<std::size_t>(-1);

std::string row_name(const std::string& column, int levels, int k) {
  return levels == 2 ? column : column + ">=" + std::to_string(k);
}

}  // namespace

CoefficientMatrix::CoefficientMatrix(std::shared_ptr<const SchemaLayout> layout)
    : layout_(std::move(layout)) {
  if (!layout_) throw ConfigError("coefficient matrix needs a layout");
  const auto nodes = layout_->nodes();
  for (std::size_t c = 0; c < nodes.size(); ++c) {
    const int levels = layout_->levels(c);
    const auto name = nodes[c].column_name();
    if (levels == 2) {
      features_.push_back({name, c, 1});
    } else {
      for (int k = 1; k < levels; ++k) features_.push_back({name + "=" + std::to_string(k), c, k});
    }
  }
  for (std::size_t c = 0; c < nodes.size(); ++c) {
    const int levels = layout_->levels(c);
    for (int k = 1; k < levels; ++k) {
      CoefficientRow r;
      r.name = row_name(nodes[c].column_name(), levels, k);
      r.column = c;
      r.level = k;
      r.beta.assign(features_.size(), 0.0);
      r.present.assign(features_.size(), 0);
      rows_.push_back(std::move(r));
    }
  }
}

std::size_t CoefficientMatrix::feature_index(std::string_view name) const {
  for (std::size_t f = 0; f < features_.size(); ++f)
    if (features_[f].name == name) return f;
  throw ConfigError("unknown coefficient column '" + std::string(name) + "'");
}

CoefficientRow& CoefficientMatrix::row(std::string_view name) {
  for (auto& r : rows_)
    if (r.name == name) return r;
  throw ConfigError("unknown coefficient row '" + std::string(name) + "'");
}

const CoefficientRow& CoefficientMatrix::row(std::string_view name) const {
  return const_cast<CoefficientMatrix*>(this)->row(name);
}

CoefficientMatrix& CoefficientMatrix::set(std::string_view row_id, std::string_view feature,
                                          double value) {
  auto& r = row(row_id);
  if (!std::isfinite(value)) throw ConfigError("non-finite coefficient in row " + r.name);
  r.kind = RowKind::logistic;
  if (feature == "intercept") {
    r.intercept = value;
    return *this;
  }
  const auto f = feature_index(feature);
  if (features_[f].column >= r.column)
    throw ConfigError("row " + r.name + " cannot depend on " + features_[f].name +
                      " (not a preceding node)");
  r.beta[f] = value;
  r.present[f] = 1;
  return *this;
}

CoefficientMatrix& CoefficientMatrix::set_deterministic(std::string_view row_id, int value) {
  auto& r = row(row_id);
  if (value != 0 && value != 1) throw ConfigError("deterministic rows take 0 or 1");
  r.kind = value ? RowKind::det1 : RowKind::det0;
  r.intercept = 0.0;
  std::fill(r.beta.begin(), r.beta.end(), 0.0);
  std::fill(r.present.begin(), r.present.end(), 0);
  return *this;
}

void CoefficientMatrix::check() const {
  for (const auto& r : rows_) {
    if (r.beta.size() != features_.size() || r.present.size() != features_.size())
      throw ConfigError("row " + r.name + " has the wrong width");
    if (!std::isfinite(r.intercept)) throw ConfigError("non-finite intercept in row " + r.name);
    for (std::size_t f = 0; f < features_.size(); ++f) {
      if (!r.present[f]) continue;
      if (features_[f].column >= r.column)
        throw ConfigError("row " + r.name + " references " + features_[f].name +
                          ", which is not a preceding node");
      if (!std::isfinite(r.beta[f])) throw ConfigError("non-finite coefficient in row " + r.name);
    }
  }
}

bool CoefficientMatrix::operator==(const CoefficientMatrix& o) const {
  if (!(layout_->schema() == o.layout_->schema()) || rows_.size() != o.rows_.size()) return false;
  for (std::size_t k = 0; k < rows_.size(); ++k) {
    const auto& a = rows_[k];
    const auto& b = o.rows_[k];
    if (a.kind != b.kind || a.present != b.present) return false;
    if (a.kind != RowKind::logistic) continue;
    if (a.intercept != b.intercept) return false;
    for (std::size_t f = 0; f < a.beta.size(); ++f)
      if (a.present[f] && a.beta[f] != b.beta[f]) return false;
  }
  return true;
}

std::string format_coefficients_csv(const CoefficientMatrix& m) {
  m.check();
  std::vector<std::string> header{"node", "intercept"};
  for (const auto& f : m.features()) header.push_back(f.name);
  std::string out = csv::join(header) + "\n";
  for (const auto& r : m.rows()) {
    std::vector<std::string> fields{r.name};
    switch (r.kind) {
      case RowKind::det0: fields.push_back("DET0"); break;
      case RowKind::det1: fields.push_back("DET1"); break;
      case RowKind::logistic: fields.push_back(csv::format_double(r.intercept)); break;
    }
    for (std::size_t f = 0; f < r.beta.size(); ++f)
      fields.push_back(r.present[f] ? csv::format_double(r.beta[f]) : "");
    out += csv::join(fields) + "\n";
  }
  return out;
}

CoefficientMatrix parse_coefficients_csv(std::string_view text,
                                         std::shared_ptr<const SchemaLayout> layout) {
  CoefficientMatrix m(std::move(layout));
  const auto t = csv::parse(text);
  if (t.header.size() < 2 || t.header[0] != "node" || t.header[1] != "intercept")
    throw DataError("coefficient file must start with columns node,intercept");
  std::vector<std::size_t> feat;
  for (std::size_t j = 2; j < t.header.size(); ++j) {
    try {
      feat.push_back(m.feature_index(t.header[j]));
    } catch (const ConfigError&) {
      throw DataError("coefficient column '" + t.header[j] + "' is not a node of the schema");
    }
  }
  std::vector<std::uint8_t> seen(m.rows().size(), 0);
  for (const auto& fields : t.rows) {
    CoefficientRow* row = nullptr;
    try {
      row = &m.row(fields[0]);
    } catch (const ConfigError&) {
      throw DataError("unknown coefficient row '" + fields[0] + "'");
    }
    const auto k = static_cast<std::size_t>(row - m.rows().data());
    if (seen[k]) throw DataError("duplicate coefficient row '" + fields[0] + "'");
    seen[k] = 1;
    if (fields[1] == "DET0" || fields[1] == "DET1") {
      m.set_deterministic(row->name, fields[1] == "DET1" ? 1 : 0);
      for (std::size_t j = 2; j < fields.size(); ++j)
        if (!fields[j].empty())
          throw DataError("deterministic row '" + row->name + "' has coefficients");
      continue;
    }
    try {
      m.set(row->name, "intercept", csv::parse_double(fields[1]));
      for (std::size_t j = 2; j < fields.size(); ++j)
        if (!fields[j].empty()) m.set(row->name, m.features()[feat[j - 2]].name,
                                      csv::parse_double(fields[j]));
    } catch (const ConfigError& e) {
      throw DataError(e.what());
    }
  }
  for (std::size_t k = 0; k < seen.size(); ++k)
    if (!seen[k]) throw DataError("coefficient row '" + m.rows()[k].name + "' missing");
  return m;
}

void write_coefficients(const std::filesystem::path& path, const CoefficientMatrix& m) {
  csv::write_text(path, format_coefficients_csv(m));
  write_schema(sidecar_schema_path(path), m.layout().schema());
}

CoefficientMatrix read_coefficients(const std::filesystem::path& path) {
  auto layout = std::make_shared<const SchemaLayout>(read_schema(sidecar_schema_path(path)));
  return parse_coefficients_csv(csv::read_text(path), std::move(layout));
}

CoefficientMatrix fit_dgp_coefficients(const ObservedDataset& data) {
  const auto& lay = data.layout();
  CoefficientMatrix m(data.layout_ptr());
  const std::size_t n = data.n();
  const auto nodes = lay.nodes();

  // Column of each subject's first Y/D/C event.
  std::vector<std::size_t> terminal(n, kNone);
  for (std::size_t c = 0; c < nodes.size(); ++c) {
    if (!nodes[c].is_event()) continue;
    const auto col = data.column(c);
    for (std::size_t i = 0; i < n; ++i)
      if (terminal[i] == kNone && col[i] == 1) terminal[i] = c;
  }

  const auto& feats = m.features();
  for (auto& row : m.rows()) {
    const std::size_t c = row.column;
    std::vector<std::size_t> subjects;
    for (std::size_t i = 0; i < n; ++i)
      if ((terminal[i] == kNone || terminal[i] >= c) && data.at(i, c) >= row.level - 1)
        subjects.push_back(i);
    if (subjects.empty()) {
      m.set_deterministic(row.name, 0);
      row.flagged = true;
      continue;
    }
    std::vector<double> y(subjects.size());
    for (std::size_t r = 0; r < subjects.size(); ++r)
      y[r] = data.at(subjects[r], c) >= row.level ? 1.0 : 0.0;
    const bool all1 = std::all_of(y.begin(), y.end(), [](double v) { return v == 1.0; });
    const bool all0 = std::all_of(y.begin(), y.end(), [](double v) { return v == 0.0; });
    if (all0 || all1) {
      m.set_deterministic(row.name, all1 ? 1 : 0);
      continue;
    }

    std::vector<std::size_t> cand;
    for (std::size_t f = 0; f < feats.size(); ++f)
      if (feats[f].column < c) cand.push_back(f);
    DesignMatrix x;
    x.x.resize(static_cast<Eigen::Index>(subjects.size()),
               static_cast<Eigen::Index>(cand.size() + 1));
    x.names.push_back("intercept");
    for (std::size_t r = 0; r < subjects.size(); ++r) x.x(static_cast<Eigen::Index>(r), 0) = 1.0;
    for (std::size_t k = 0; k < cand.size(); ++k) {
      const auto& f = feats[cand[k]];
      x.names.push_back(f.name);
      const auto col = data.column(f.column);
      for (std::size_t r = 0; r < subjects.size(); ++r)
        x.x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k + 1)) =
            col[subjects[r]] == f.level ? 1.0 : 0.0;
    }
    const std::vector<double> w(subjects.size(), 1.0);
    const auto fit = fit_logistic_glm(x, y, w);
    row.kind = RowKind::logistic;
    row.flagged = fit.diagnostics().degenerate || !fit.diagnostics().converged;
    if (const auto* g = std::get_if<GlmModel>(&fit.model())) {
      for (std::size_t k = 0; k < g->used.size(); ++k) {
        const double b = g->beta(static_cast<Eigen::Index>(k));
        if (g->used[k] == 0) {
          row.intercept = b;
        } else {
          const auto f = cand[g->used[k] - 1];
          row.beta[f] = b;
          row.present[f] = 1;
        }
      }
    } else if (const auto* cm = std::get_if<ConstantModel>(&fit.model())) {
      row.intercept = logit(std::clamp(cm->p, 1e-10, 1 - 1e-10));
      row.flagged = true;
    }
  }
  return m;
}

namespace {

// Compiled form of a coefficient matrix for per-subject draws.
class Simulator {
 public:
  explicit Simulator(const CoefficientMatrix& m) : m_(m) {
    m.check();
    const auto& lay = m.layout();
    const auto nodes = lay.nodes();
    prev_.assign(nodes.size(), kNone);
    for (std::size_t c = 0; c < nodes.size(); ++c) {
      if (!nodes[c].time_varying() || nodes[c].interval <= 1) continue;
      for (std::size_t p = 0; p < c; ++p)
        if (nodes[p].base == nodes[c].base && nodes[p].role == nodes[c].role &&
            nodes[p].interval == nodes[c].interval - 1)
          prev_[c] = p;
    }
    first_row_.assign(nodes.size() + 1, 0);
    first_feature_.assign(nodes.size() + 1, 0);
    for (const auto& r : m.rows()) ++first_row_[r.column + 1];
    for (const auto& f : m.features()) ++first_feature_[f.column + 1];
    std::partial_sum(first_row_.begin(), first_row_.end(), first_row_.begin());
    std::partial_sum(first_feature_.begin(), first_feature_.end(), first_feature_.begin());
    for (const auto& r : m.rows()) {
      Compiled cr;
      cr.kind = r.kind;
      cr.intercept = r.intercept;
      for (std::size_t f = 0; f < r.beta.size(); ++f)
        if (r.present[f] && r.beta[f] != 0.0) cr.terms.emplace_back(f, r.beta[f]);
      rows_.push_back(std::move(cr));
    }
  }

  std::size_t columns() const { return prev_.size(); }
  std::size_t features() const { return m_.features().size(); }

  struct Forcing {
    const Regime* regime = nullptr;  // exposures forced to the regime, C = 0
  };

  /// Fills values[0 .. stop]; returns the first terminal column or kNone.
  std::size_t run(std::uint64_t key, const Forcing& forcing, int* values, double* feats,
                  std::size_t stop) const {
    CounterStream rng(key);
    const auto nodes = m_.layout().nodes();
    std::size_t terminal = kNone;
    for (std::size_t c = 0; c <= stop; ++c) {
      int v = 0;
      if (terminal != kNone) {
        for (std::size_t r = first_row_[c]; r < first_row_[c + 1]; ++r) rng.uniform();
        v = prev_[c] == kNone ? 0 : values[prev_[c]];
      } else if (forcing.regime && nodes[c].role == NodeRole::exposure) {
        for (std::size_t r = first_row_[c]; r < first_row_[c + 1]; ++r) rng.uniform();
        v = forcing.regime->value(exposure_index(c), nodes[c].interval);
      } else if (forcing.regime && nodes[c].role == NodeRole::censor) {
        for (std::size_t r = first_row_[c]; r < first_row_[c + 1]; ++r) rng.uniform();
      } else {
        // Continuation-ratio draws; binary nodes have a single row.
        bool climbing = true;
        for (std::size_t r = first_row_[c]; r < first_row_[c + 1]; ++r) {
          const double u = rng.uniform();
          if (!climbing) continue;
          const auto& cr = rows_[r];
          bool up;
          if (cr.kind == RowKind::logistic) {
            double eta = cr.intercept;
            for (const auto& [f, b] : cr.terms) eta += b * feats[f];
            up = u < expit(eta);
          } else {
            up = cr.kind == RowKind::det1;
          }
          if (up) ++v;
          else climbing = false;
        }
      }
      values[c] = v;
      const auto& fs = m_.features();
      for (std::size_t f = first_feature_[c]; f < first_feature_[c + 1]; ++f)
        feats[f] = v == fs[f].level ? 1.0 : 0.0;
      if (terminal == kNone && nodes[c].is_event() && v == 1) terminal = c;
    }
    return terminal;
  }

 private:
  struct Compiled {
    RowKind kind = RowKind::logistic;
    double intercept = 0.0;
    std::vector<std::pair<std::size_t, double>> terms;
  };

  std::size_t exposure_index(std::size_t c) const {
    const auto& ex = m_.layout().schema().exposure_nodes;
    const auto& base = m_.layout().nodes()[c].base;
    return static_cast<std::size_t>(std::find(ex.begin(), ex.end(), base) - ex.begin());
  }

  const CoefficientMatrix& m_;
  std::vector<std::size_t> prev_;
  std::vector<std::size_t> first_row_;
  std::vector<std::size_t> first_feature_;
  std::vector<Compiled> rows_;
};

constexpr std::size_t kSimChunk = 4096;

}  // namespace

ObservedDataset simulate_dataset(const CoefficientMatrix& m, std::size_t n, std::uint64_t seed) {
  const Simulator sim(m);
  const std::size_t cols = sim.columns();
  std::vector<int> values(cols * n);
  const std::size_t chunks = (n + kSimChunk - 1) / kSimChunk;
  kernels::parallel_for(chunks, [&](std::size_t k) {
    std::vector<int> v(cols);
    std::vector<double> f(sim.features());
    const std::size_t end = std::min(n, (k + 1) * kSimChunk);
    for (std::size_t i = k * kSimChunk; i < end; ++i) {
      sim.run(derive_seed(seed, i), {}, v.data(), f.data(), cols - 1);
      for (std::size_t c = 0; c < cols; ++c) values[c * n + i] = v[c];
    }
  });
  return ObservedDataset(m.layout_ptr(), n, std::move(values));
}

std::vector<std::size_t> null_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  StreamUrbg urbg(derive_seed(seed, 0x9E11ULL));
  std::shuffle(perm.begin(), perm.end(), urbg);
  return perm;
}

ObservedDataset permute_block(const ObservedDataset& data, std::span<const std::size_t> perm) {
  const std::size_t n = data.n();
  if (perm.size() != n) throw ConfigError("permutation length differs from the sample size");
  std::vector<std::uint8_t> hit(n, 0);
  for (auto p : perm) {
    if (p >= n || hit[p]) throw ConfigError("not a permutation");
    hit[p] = 1;
  }
  const auto nodes = data.layout().nodes();
  ObservedDataset out = data;
  for (std::size_t c = 0; c < nodes.size(); ++c) {
    if (!nodes[c].is_event()) continue;
    for (std::size_t i = 0; i < n; ++i) out.at(i, c) = data.at(perm[i], c);
  }
  // Re-pad non-block series after each subject's new terminal event.
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t term = kNone;
    for (std::size_t c = 0; c < nodes.size() && term == kNone; ++c)
      if (nodes[c].is_event() && out.at(i, c) == 1) term = c;
    if (term == kNone) continue;
    for (std::size_t c = term + 1; c < nodes.size(); ++c)
      if (!nodes[c].is_event()) out.at(i, c) = kMissing;
  }
  return apply_lvcf(out);
}

ObservedDataset permute_null(const ObservedDataset& data, std::uint64_t seed) {
  const auto perm = null_permutation(data.n(), seed);
  return permute_block(data, perm);
}

namespace {

void check_truth_args(const CoefficientMatrix& m, const Regime& a, const Regime& b, int horizon,
                      std::size_t n_mc) {
  const auto& lay = m.layout();
  a.check(lay);
  b.check(lay);
  if (horizon < 1 || horizon > lay.intervals())
    throw ConfigError("truth horizon must be in 1.." + std::to_string(lay.intervals()));
  if (n_mc < 2) throw ConfigError("truth needs at least 2 Monte Carlo draws");
}

}  // namespace

TruthResult compute_truth(const CoefficientMatrix& m, const Regime& treatment,
                          const Regime& control, int horizon, std::size_t n_mc,
                          std::uint64_t seed) {
  check_truth_args(m, treatment, control, horizon, n_mc);
  const Simulator sim(m);
  const auto& lay = m.layout();
  const std::size_t stop = lay.outcome(horizon);
  const std::size_t chunks = (n_mc + kSimChunk - 1) / kSimChunk;
  // Per chunk: cases under treatment, under control, and the discordant pairs.
  std::vector<std::array<std::uint64_t, 4>> counts(chunks);
  kernels::parallel_for(chunks, [&](std::size_t k) {
    std::vector<int> v(sim.columns());
    std::vector<double> f(sim.features());
    std::array<std::uint64_t, 4> cnt{};
    const std::size_t end = std::min(n_mc, (k + 1) * kSimChunk);
    for (std::size_t i = k * kSimChunk; i < end; ++i) {
      const auto key = derive_seed(seed, i);
      int y[2];
      const Regime* arms[2] = {&treatment, &control};
      for (int a = 0; a < 2; ++a) {
        const auto term = sim.run(key, {arms[a]}, v.data(), f.data(), stop);
        y[a] = term != kNone && lay.nodes()[term].role == NodeRole::outcome;
      }
      cnt[0] += y[0];
      cnt[1] += y[1];
      cnt[2] += y[0] && !y[1];
      cnt[3] += y[1] && !y[0];
    }
    counts[k] = cnt;
  });
  std::array<std::uint64_t, 4> tot{};
  for (const auto& c : counts)
    for (int j = 0; j < 4; ++j) tot[j] += c[j];

  const double n = static_cast<double>(n_mc);
  TruthResult r;
  r.n_mc = n_mc;
  r.method = "paired counterfactual simulation";
  r.risk_treatment = static_cast<double>(tot[0]) / n;
  r.risk_control = static_cast<double>(tot[1]) / n;
  r.rd = (static_cast<double>(tot[2]) - static_cast<double>(tot[3])) / n;
  auto binom_se = [&](double p) { return std::sqrt(p * (1 - p) / (n - 1)); };
  r.se_treatment = binom_se(r.risk_treatment);
  r.se_control = binom_se(r.risk_control);
  const double ed2 = static_cast<double>(tot[2] + tot[3]) / n;
  r.se_rd = std::sqrt(std::max(0.0, ed2 - r.rd * r.rd) / (n - 1));
  return r;
}

namespace {

// Discrete-time cumulative incidence of Y by `horizon` among simulated
// donors, with censoring treated as independent removal. Returned per batch.
std::vector<double> null_risk_batches(const Simulator& sim, const SchemaLayout& lay, int horizon,
                                      std::size_t n_mc, std::uint64_t key, int batches) {
  const std::size_t stop = lay.outcome(horizon);
  const int H = horizon;
  const std::size_t chunks = (n_mc + kSimChunk - 1) / kSimChunk;
  // Per chunk and interval: at risk, outcome, competing event.
  std::vector<std::vector<std::array<std::uint64_t, 3>>> counts(
      chunks, std::vector<std::array<std::uint64_t, 3>>(static_cast<std::size_t>(H) + 1));
  kernels::parallel_for(chunks, [&](std::size_t k) {
    std::vector<int> v(sim.columns());
    std::vector<double> f(sim.features());
    auto& cnt = counts[k];
    const std::size_t end = std::min(n_mc, (k + 1) * kSimChunk);
    for (std::size_t i = k * kSimChunk; i < end; ++i) {
      const auto term = sim.run(derive_seed(key, i), {}, v.data(), f.data(), stop);
      for (int t = 1; t <= H; ++t) {
        SubjectStatus s;
        if (term != kNone) {
          const auto& ref = lay.nodes()[term];
          s.time = ref.interval;
          s.kind = ref.role == NodeRole::outcome     ? Terminal::outcome
                   : ref.role == NodeRole::competing ? Terminal::competing
                                                     : Terminal::censored;
        }
        // In the risk set of the L-block at t: nothing before t.
        const bool in_set = s.kind == Terminal::none || s.time >= t;
        if (!in_set) break;
        ++cnt[static_cast<std::size_t>(t)][0];
        if (s.kind == Terminal::outcome && s.time == t) ++cnt[static_cast<std::size_t>(t)][1];
        if (s.kind == Terminal::competing && s.time == t) ++cnt[static_cast<std::size_t>(t)][2];
      }
    }
  });
  std::vector<double> out;
  const std::size_t per = (chunks + static_cast<std::size_t>(batches) - 1) /
                          static_cast<std::size_t>(batches);
  for (std::size_t b0 = 0; b0 < chunks; b0 += per) {
    double surv = 1.0, risk = 0.0;
    for (int t = 1; t <= H; ++t) {
      std::array<std::uint64_t, 3> c{};
      for (std::size_t k = b0; k < std::min(chunks, b0 + per); ++k)
        for (int j = 0; j < 3; ++j) c[j] += counts[k][static_cast<std::size_t>(t)][j];
      if (c[0] == 0) break;
      const double hy = static_cast<double>(c[1]) / static_cast<double>(c[0]);
      const double hd = static_cast<double>(c[2]) / static_cast<double>(c[0]);
      risk += surv * hy;
      surv *= 1 - hy - hd;
    }
    out.push_back(risk);
  }
  return out;
}

std::pair<double, double> batch_mean_se(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, v.size() > 1 ? std::sqrt(ss / (n - 1) / n) : 0.0};
}

}  // namespace

TruthResult compute_null_truth(const CoefficientMatrix& m, const Regime& treatment,
                               const Regime& control, int horizon, std::size_t n_mc,
                               std::uint64_t seed) {
  check_truth_args(m, treatment, control, horizon, n_mc);
  const Simulator sim(m);
  constexpr int kBatches = 20;
  const auto a = batch_mean_se(
      null_risk_batches(sim, m.layout(), horizon, n_mc, derive_seed(seed, 0xA1ULL), kBatches));
  const auto c = batch_mean_se(
      null_risk_batches(sim, m.layout(), horizon, n_mc, derive_seed(seed, 0xA0ULL), kBatches));
  TruthResult r;
  r.n_mc = n_mc;
  r.method = "cumulative incidence of the permuted outcome block";
  r.risk_treatment = a.first;
  r.risk_control = c.first;
  r.rd = a.first - c.first;
  r.se_treatment = a.second;
  r.se_control = c.second;
  r.se_rd = std::hypot(a.second, c.second);
  return r;
}

std::string_view to_string(ScenarioKind k) {
  return k == ScenarioKind::dependent ? "dependent" : "permuted_null";
}

ScenarioKind scenario_from_string(std::string_view s) {
  if (s == "dependent") return ScenarioKind::dependent;
  if (s == "permuted_null" || s == "null") return ScenarioKind::permuted_null;
  throw ConfigError("unknown scenario '" + std::string(s) + "' (dependent, permuted_null)");
}

ObservedDataset generate_scenario(const CoefficientMatrix& m, const ScenarioSpec& spec) {
  if (spec.n == 0) throw ConfigError("scenario sample size must be positive");
  auto data = simulate_dataset(m, spec.n, spec.seed);
  if (spec.kind == ScenarioKind::permuted_null) return permute_null(data, spec.permutation_seed);
  return data;
}

TruthResult scenario_truth(const CoefficientMatrix& m, ScenarioKind kind, const Regime& treatment,
                           const Regime& control, int horizon, std::size_t n_mc,
                           std::uint64_t seed) {
  return kind == ScenarioKind::dependent
             ? compute_truth(m, treatment, control, horizon, n_mc, seed)
             : compute_null_truth(m, treatment, control, horizon, n_mc, seed);
}

}  // namespace ltrisk
