// Command-line front end: cohort, fit, simulate, truth, permute, benchmark,
// diagnose and coefficients. Exit codes: 0 ok, 2 config, 3 data, 4 numerical.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ltrisk/benchmark.hpp"
#include "ltrisk/cohort.hpp"
#include "ltrisk/config.hpp"
#include "ltrisk/csv.hpp"
#include "ltrisk/dataset_io.hpp"
#include "ltrisk/errors.hpp"
#include "ltrisk/gmechanism.hpp"
#include "ltrisk/kernels.hpp"
#include "ltrisk/presets.hpp"
#include "ltrisk/rng.hpp"

namespace fs = std::filesystem;
using namespace ltrisk;
using ojson = nlohmann::ordered_json;

namespace {

struct Common {
  std::string out;
  int threads = 0;
  bool no_timestamp = false;
  std::optional<std::uint64_t> seed;
};

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw ConfigError(std::string("missing ") + what + " path");
  if (!fs::is_regular_file(path)) throw ConfigError(std::string(what) + " not found: " + path);
}

nlohmann::json read_json(const std::string& path) {
  require_file(path, "config");
  try {
    return nlohmann::json::parse(csv::read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

// LTRISK_OUT_DIR takes precedence over --out.
fs::path out_dir(const Common& c) {
  std::string dir = c.out;
  if (const char* env = std::getenv("LTRISK_OUT_DIR"); env && *env) dir = env;
  if (dir.empty()) throw ConfigError("no output directory: pass --out or set LTRISK_OUT_DIR");
  fs::create_directories(dir);
  return dir;
}

std::uint64_t need_seed(const Common& c, const char* command) {
  if (!c.seed) throw ConfigError(std::string(command) + " is stochastic and needs --seed");
  return *c.seed;
}

ojson meta(const Common& c, const char* command) {
  ojson m;
  m["command"] = command;
  m["version"] = kVersion;
  m["config_schema_version"] = kConfigSchemaVersion;
  if (c.seed) m["seed"] = *c.seed;
  if (!c.no_timestamp) m["timestamp"] = utc_now();
  return m;
}

void write_json(const fs::path& path, const ojson& j) { csv::write_text(path, j.dump(2) + "\n"); }

// Wide CSV plus schema (given or sidecar), padded and validated.
ObservedDataset load_data(const std::string& data_path, const std::string& schema_path) {
  require_file(data_path, "data");
  const fs::path schema = schema_path.empty() ? sidecar_schema_path(data_path) : fs::path(schema_path);
  require_file(schema.string(), "schema");
  auto layout = std::make_shared<const SchemaLayout>(read_schema(schema));
  auto data = apply_lvcf(read_wide_csv(data_path, layout));
  const auto report = validate_dataset(data);
  if (!report.ok()) throw DataError("invalid dataset " + data_path + ": " + report.summary());
  return data;
}

void write_data(const fs::path& path, const ObservedDataset& d) {
  write_wide_csv(path, d);
  write_schema(sidecar_schema_path(path), d.layout().schema());
}

CoefficientMatrix load_coefficients(const std::string& path, const std::string& preset) {
  if (!path.empty() && !preset.empty()) throw ConfigError("give --coefficients or --preset, not both");
  if (!preset.empty()) return dgp_preset(preset);
  require_file(path, "coefficients");
  return read_coefficients(path);
}

ojson interval_json(const IntervalEstimate& e) {
  ojson j;
  j["method"] = to_string(e.method);
  j["level"] = e.level;
  j["standard_error"] = e.standard_error;
  j["ci_low"] = e.ci_low;
  j["ci_high"] = e.ci_high;
  if (e.method != IntervalMethod::ic) {
    j["replicates"] = e.replicates;
    j["failed"] = e.failed;
  }
  if (!e.warning.empty()) j["warning"] = e.warning;
  return j;
}

ojson arm_json(const ArmEstimate& a, double level) {
  ojson j;
  j["regime"] = a.regime;
  j["estimator"] = to_string(a.kind);
  j["horizon"] = a.horizon;
  j["psi"] = a.psi;
  if (!a.ic.empty()) {
    j["interval"] = interval_json(ic_ci(a, level));
  }
  if (a.kind == EstimatorKind::tmle) {
    j["epsilons"] = a.epsilons;
    j["score_residuals"] = a.score_residuals;
    j["fluctuation_flag"] = a.fluctuation_flag;
  }
  if (needs_g(a.kind)) j["truncated"] = a.truncated;
  j["warnings"] = a.warnings;
  return j;
}

// ---------------------------------------------------------------- commands

struct CohortArgs {
  std::string events, config;
};

int run_cohort(const Common& c, const CohortArgs& a) {
  require_file(a.events, "events");
  const auto config = cohort_config_from_json(read_json(a.config));
  const auto r = build_cohort(read_events_csv(a.events), config);
  const auto dir = out_dir(c);
  write_data(dir / "cohort.csv", r.data);
  csv::write_text(dir / "flowchart.csv", flowchart_csv(r));
  csv::write_text(dir / "descriptives.csv", descriptives_csv(r));
  std::string ids = "row,subject_id\n";
  for (std::size_t i = 0; i < r.subject_ids.size(); ++i)
    ids += std::to_string(i) + "," + r.subject_ids[i] + "\n";
  csv::write_text(dir / "subjects.csv", ids);
  ojson j;
  j["meta"] = meta(c, "cohort");
  j["subjects"] = r.data.n();
  j["warnings"] = r.warnings;
  j["config"] = cohort_config_to_json(config);
  write_json(dir / "cohort.json", j);
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << "cohort: " << r.data.n() << " subjects -> " << (dir / "cohort.csv").string() << "\n";
  return 0;
}

struct FitArgs {
  std::string data, schema, config;
};

int run_fit(const Common& c, const FitArgs& a) {
  const auto data = load_data(a.data, a.schema);
  auto cfg = fit_config_from_json(read_json(a.config), data.layout());
  if (cfg.stochastic()) cfg.estimator.seed = derive_seed(need_seed(c, "fit with these settings"), 0xF17ULL);
  else if (c.seed) cfg.estimator.seed = derive_seed(*c.seed, 0xF17ULL);
  const auto dir = out_dir(c);
  const double level = cfg.inference.level;

  const auto fit = run_pipeline(data, cfg.estimand, cfg.estimator);
  // One entry per requested method; an empty interval carries its error.
  std::vector<std::optional<IntervalEstimate>> intervals;
  std::vector<std::string> interval_errors;
  std::optional<BootstrapResult> boot;
  for (auto m : cfg.inference.methods) {
    try {
      if (m == IntervalMethod::ic) {
        if (fit.contrast.ic.empty())
          throw ConfigError(std::string(to_string(cfg.estimator.kind)) +
                            " has no influence curve; use a bootstrap interval");
        intervals.push_back(ic_ci(fit.contrast, level));
      } else {
        if (!boot)
          boot = bootstrap_ci(data, cfg.estimand, cfg.estimator, cfg.inference.bootstrap_replicates,
                              level, derive_seed(cfg.estimator.seed, 0xB5ULL));
        intervals.push_back(m == IntervalMethod::bootstrap_percentile ? boot->percentile : boot->wald);
      }
      interval_errors.emplace_back();
    } catch (const ConfigError& e) {
      intervals.emplace_back();
      interval_errors.emplace_back(e.what());
    }
  }

  const bool rd = cfg.estimand.contrast == ContrastType::risk_difference;
  ojson j;
  j["meta"] = meta(c, "fit");
  j["n"] = data.n();
  j["estimand"] = estimand_to_json(cfg.estimand);
  j["estimator"] = estimator_config_to_json(cfg.estimator);
  j["arms"] = ojson::array({arm_json(fit.treatment, level), arm_json(fit.control, level)});
  ojson con;
  con["type"] = to_string(fit.contrast.type);
  con["estimate"] = fit.contrast.estimate;
  if (rd) con["rd_percent"] = format_rd_percent(fit.contrast.estimate);
  con["intervals"] = ojson::array();
  for (std::size_t k = 0; k < cfg.inference.methods.size(); ++k) {
    if (!intervals[k]) {
      con["intervals"].push_back({{"method", to_string(cfg.inference.methods[k])},
                                  {"error", interval_errors[k]}});
      continue;
    }
    auto iv = interval_json(*intervals[k]);
    if (rd) {
      iv["ci_low_percent"] = format_rd_percent(iv["ci_low"].get<double>());
      iv["ci_high_percent"] = format_rd_percent(iv["ci_high"].get<double>());
    }
    con["intervals"].push_back(iv);
  }
  j["contrast"] = con;

  if (!fit.positivity.empty()) csv::write_text(dir / "positivity.csv", positivity_csv(fit.positivity));
  if (cfg.risk_curve) {
    std::string curve = "regime,horizon,psi,error\n";
    for (const auto* r : {&cfg.estimand.treatment, &cfg.estimand.control}) {
      const auto rc = risk_curve(data, *r, cfg.estimator);
      for (const auto& h : rc)
        curve += csv::join({r->name, std::to_string(h.horizon),
                            h.estimate ? csv::format_double(h.estimate->psi) : "", h.error}) +
                 "\n";
    }
    csv::write_text(dir / "risk_curve.csv", curve);
  }
  write_json(dir / "result.json", j);

  std::string row =
      "treatment,control,horizon,estimator,risk_treatment,risk_control,contrast,estimate,"
      "rd_percent,ci_method,standard_error,ci_low,ci_high\n";
  auto base = std::vector<std::string>{cfg.estimand.treatment.name,
                                       cfg.estimand.control.name,
                                       std::to_string(cfg.estimand.horizon),
                                       std::string(to_string(cfg.estimator.kind)),
                                       csv::format_double(fit.treatment.psi),
                                       csv::format_double(fit.control.psi),
                                       std::string(to_string(fit.contrast.type)),
                                       csv::format_double(fit.contrast.estimate),
                                       rd ? format_rd_percent(fit.contrast.estimate) : ""};
  bool any = false;
  for (const auto& iv : intervals) {
    if (!iv) continue;
    any = true;
    auto f = base;
    f.insert(f.end(), {std::string(to_string(iv->method)), csv::format_double(iv->standard_error),
                       csv::format_double(iv->ci_low), csv::format_double(iv->ci_high)});
    row += csv::join(f) + "\n";
  }
  if (!any) {
    auto f = base;
    f.insert(f.end(), {"", "", "", ""});
    row += csv::join(f) + "\n";
  }
  csv::write_text(dir / "result.csv", row);

  std::printf("%s risk %.4f, %s risk %.4f\n", fit.treatment.regime.c_str(), fit.treatment.psi,
              fit.control.regime.c_str(), fit.control.psi);
  if (rd) {
    std::printf("RD%% %s", format_rd_percent(fit.contrast.estimate).c_str());
    for (const auto& iv : intervals)
      if (iv)
        std::printf("  [%s %s, %s]", std::string(to_string(iv->method)).c_str(),
                    format_rd_percent(iv->ci_low).c_str(), format_rd_percent(iv->ci_high).c_str());
    std::printf("\n");
  } else {
    std::printf("%s %.4f\n", std::string(to_string(fit.contrast.type)).c_str(), fit.contrast.estimate);
  }
  for (const auto& e : interval_errors)
    if (!e.empty()) std::cerr << "warning: " << e << "\n";
  return 0;
}

struct SimArgs {
  std::string coefficients, preset, scenario = "dependent";
  std::size_t n = 1000;
};

int run_simulate(const Common& c, const SimArgs& a) {
  const auto seed = need_seed(c, "simulate");
  const auto m = load_coefficients(a.coefficients, a.preset);
  ScenarioSpec s;
  s.kind = scenario_from_string(a.scenario);
  s.n = a.n;
  s.seed = derive_seed(seed, 0xDA7AULL);
  s.permutation_seed = derive_seed(seed, 0x9E55ULL);
  const auto data = generate_scenario(m, s);
  const auto dir = out_dir(c);
  write_data(dir / "data.csv", data);
  ojson j;
  j["meta"] = meta(c, "simulate");
  j["scenario"] = to_string(s.kind);
  j["n"] = a.n;
  write_json(dir / "simulate.json", j);
  std::cout << "simulate: " << a.n << " subjects -> " << (dir / "data.csv").string() << "\n";
  return 0;
}

struct TruthArgs {
  std::string coefficients, preset, scenario = "dependent", estimand;
  std::size_t n_mc = 1000000;
};

int run_truth(const Common& c, const TruthArgs& a) {
  const auto seed = need_seed(c, "truth");
  const auto m = load_coefficients(a.coefficients, a.preset);
  const auto e = a.estimand.empty() ? preset_estimand(m.layout())
                                    : estimand_from_json(read_json(a.estimand), m.layout());
  const auto kind = scenario_from_string(a.scenario);
  const auto t = scenario_truth(m, kind, e.treatment, e.control, e.horizon, a.n_mc, seed);
  ojson j;
  j["meta"] = meta(c, "truth");
  j["scenario"] = to_string(kind);
  j["estimand"] = estimand_to_json(e);
  j["method"] = t.method;
  j["n_mc"] = t.n_mc;
  j["risk_treatment"] = t.risk_treatment;
  j["risk_control"] = t.risk_control;
  j["rd"] = t.rd;
  j["rd_percent"] = format_rd_percent(t.rd);
  j["se_treatment"] = t.se_treatment;
  j["se_control"] = t.se_control;
  j["se_rd"] = t.se_rd;
  const auto dir = out_dir(c);
  write_json(dir / "truth.json", j);
  std::printf("truth (%s): %.6f vs %.6f, RD %.6f (MC-SE %.6f)\n", t.method.c_str(), t.risk_treatment,
              t.risk_control, t.rd, t.se_rd);
  return 0;
}

struct PermuteArgs {
  std::string data, schema;
};

int run_permute(const Common& c, const PermuteArgs& a) {
  const auto seed = need_seed(c, "permute");
  const auto data = load_data(a.data, a.schema);
  const auto out = permute_null(data, derive_seed(seed, 0x9E55ULL));
  const auto dir = out_dir(c);
  write_data(dir / "data.csv", out);
  ojson j;
  j["meta"] = meta(c, "permute");
  j["n"] = out.n();
  write_json(dir / "permute.json", j);
  std::cout << "permute: " << out.n() << " subjects -> " << (dir / "data.csv").string() << "\n";
  return 0;
}

struct BenchArgs {
  std::string preset = "desk";
  int replicates = 0, bootstrap = 0;
  std::size_t n = 0, truth_mc = 0;
};

int run_benchmark_cmd(const Common& c, const BenchArgs& a) {
  auto spec = benchmark_preset(a.preset);
  spec.seed = need_seed(c, "benchmark");
  if (a.replicates) spec.replicates = a.replicates;
  if (a.n) spec.n = a.n;
  if (a.truth_mc) spec.truth_mc = a.truth_mc;
  if (a.bootstrap)
    for (auto& s : spec.settings) s.bootstrap_replicates = a.bootstrap;
  const auto dir = out_dir(c);
  const auto r = run_benchmark(spec);
  csv::write_text(dir / "summary.csv", summary_csv(r));
  csv::write_text(dir / "replicates.csv", replicates_csv(spec, r));
  ojson j;
  j["meta"] = meta(c, "benchmark");
  j["preset"] = spec.name;
  j["scenario"] = to_string(spec.scenario);
  j["n"] = spec.n;
  j["replicates"] = spec.replicates;
  j["estimand"] = estimand_to_json(spec.estimand);
  j["truth"] = r.truth;
  j["truth_mc"] = {{"method", r.truth_mc.method}, {"n_mc", r.truth_mc.n_mc},
                   {"risk_treatment", r.truth_mc.risk_treatment},
                   {"risk_control", r.truth_mc.risk_control}, {"rd", r.truth_mc.rd},
                   {"se_rd", r.truth_mc.se_rd}};
  j["settings"] = ojson::array();
  for (const auto& s : spec.settings) {
    ojson x;
    x["label"] = s.label;
    x["estimator"] = estimator_config_to_json(s.config);
    x["intervals"] = ojson::array();
    for (auto m : s.intervals) x["intervals"].push_back(to_string(m));
    if (!s.intervals.empty()) x["bootstrap_replicates"] = s.bootstrap_replicates;
    j["settings"].push_back(x);
  }
  write_json(dir / "benchmark.json", j);
  std::cout << summary_csv(r);
  return 0;
}

struct DiagnoseArgs {
  std::string data, schema, config;
};

int run_diagnose(const Common& c, const DiagnoseArgs& a) {
  const auto data = load_data(a.data, a.schema);
  auto cfg = fit_config_from_json(read_json(a.config), data.layout());
  const auto& g = cfg.estimator.g_learner;
  const bool random = g.family == Family::random_forest ||
                      (g.penalized() && g.lambda_selection == LambdaSelection::cv_min);
  const std::uint64_t seed = random ? need_seed(c, "diagnose with this g learner") : c.seed.value_or(0);
  const auto status = summarize_subjects(data);
  // Same g seed as the fit command's pipeline.
  const auto gfit = fit_g(data, status, g, derive_seed(derive_seed(seed, 0xF17ULL), 0x6ULL),
                          data.layout().treatment_intervals());
  std::vector<PositivityRow> rows;
  for (const auto* r : {&cfg.estimand.treatment, &cfg.estimand.control}) {
    const auto cumg = cumulative_g(gfit, data, status, *r, cfg.estimator.truncation_bound);
    const AdherenceTable adh(data, status, *r);
    auto p = positivity_diagnostics(cumg, adh, r->name);
    rows.insert(rows.end(), p.begin(), p.end());
  }
  const auto dir = out_dir(c);
  csv::write_text(dir / "positivity.csv", positivity_csv(rows));
  ojson j;
  j["meta"] = meta(c, "diagnose");
  j["g_learner"] = learner_to_json(g);
  j["truncation_bound"] = cfg.estimator.truncation_bound;
  j["g_nodes"] = ojson::array();
  for (const auto& node : gfit.nodes) {
    ojson x;
    x["node"] = data.layout().nodes()[node.column].column_name();
    x["stratum_size"] = node.stratum_size;
    if (!node.warning.empty()) x["warning"] = node.warning;
    j["g_nodes"].push_back(x);
  }
  write_json(dir / "diagnose.json", j);
  std::cout << positivity_csv(rows);
  return 0;
}

struct CoefArgs {
  std::string preset, data, schema;
};

int run_coefficients(const Common& c, const CoefArgs& a) {
  if (a.preset.empty() == a.data.empty()) throw ConfigError("give exactly one of --preset or --data");
  const auto m = a.preset.empty() ? fit_dgp_coefficients(load_data(a.data, a.schema)) : dgp_preset(a.preset);
  const auto dir = out_dir(c);
  write_coefficients(dir / "coefficients.csv", m);
  std::cout << "coefficients -> " << (dir / "coefficients.csv").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Longitudinal treatment-effect estimation on discretized registry data"};
  app.set_version_flag("--version", [] {
    ojson v;
    v["ltrisk"] = kVersion;
    v["config_schema_version"] = kConfigSchemaVersion;
    return v.dump();
  });
  app.require_subcommand(1);

  Common common;
  std::uint64_t seed = 0;
  auto add_common = [&](CLI::App* sub, bool stochastic) {
    sub->add_option("--out", common.out, "Output directory (LTRISK_OUT_DIR overrides)");
    sub->add_option("--threads", common.threads, "Worker threads (0: all)")->check(CLI::NonNegativeNumber);
    sub->add_flag("--no-timestamp", common.no_timestamp, "Omit the timestamp from JSON metadata");
    auto* s = sub->add_option("--seed", seed, "Master seed");
    if (stochastic) s->required();
  };

  CohortArgs cohort;
  auto* sc = app.add_subcommand("cohort", "Build the discretized cohort from an event log");
  sc->add_option("--events", cohort.events, "Event log CSV")->required();
  sc->add_option("--config", cohort.config, "Cohort config JSON")->required();
  add_common(sc, false);

  FitArgs fit;
  auto* sf = app.add_subcommand("fit", "Estimate counterfactual risks and their contrast");
  sf->add_option("--data", fit.data, "Wide CSV")->required();
  sf->add_option("--schema", fit.schema, "Schema JSON (default: sidecar)");
  sf->add_option("--config", fit.config, "Fit config JSON")->required();
  add_common(sf, false);

  SimArgs sim;
  auto* ss = app.add_subcommand("simulate", "Simulate a dataset from DGP coefficients");
  ss->add_option("--coefficients", sim.coefficients, "Coefficient CSV with sidecar schema");
  ss->add_option("--preset", sim.preset, "Shipped DGP (desk, dr)");
  ss->add_option("-n,--n", sim.n, "Subjects")->check(CLI::PositiveNumber);
  ss->add_option("--scenario", sim.scenario, "dependent or permuted_null");
  add_common(ss, true);

  TruthArgs truth;
  auto* st = app.add_subcommand("truth", "Monte-Carlo counterfactual truth");
  st->add_option("--coefficients", truth.coefficients, "Coefficient CSV with sidecar schema");
  st->add_option("--preset", truth.preset, "Shipped DGP (desk, dr)");
  st->add_option("--scenario", truth.scenario, "dependent or permuted_null");
  st->add_option("--estimand", truth.estimand, "Estimand JSON (default: sustained 1 vs 0)");
  st->add_option("--n-mc", truth.n_mc, "Monte-Carlo subjects")->check(CLI::PositiveNumber);
  add_common(st, true);

  PermuteArgs perm;
  auto* sp = app.add_subcommand("permute", "Permuted-null version of a dataset");
  sp->add_option("--data", perm.data, "Wide CSV")->required();
  sp->add_option("--schema", perm.schema, "Schema JSON (default: sidecar)");
  add_common(sp, true);

  BenchArgs bench;
  auto* sb = app.add_subcommand("benchmark", "Run a benchmark preset");
  sb->add_option("--preset", bench.preset, "desk, rare, null or dr");
  sb->add_option("--replicates", bench.replicates, "Override R")->check(CLI::PositiveNumber);
  sb->add_option("-n,--n", bench.n, "Override the sample size")->check(CLI::PositiveNumber);
  sb->add_option("--bootstrap", bench.bootstrap, "Override B")->check(CLI::PositiveNumber);
  sb->add_option("--truth-mc", bench.truth_mc, "Override the truth sample size")->check(CLI::PositiveNumber);
  add_common(sb, true);

  DiagnoseArgs diag;
  auto* sd = app.add_subcommand("diagnose", "Positivity report for the g mechanism");
  sd->add_option("--data", diag.data, "Wide CSV")->required();
  sd->add_option("--schema", diag.schema, "Schema JSON (default: sidecar)");
  sd->add_option("--config", diag.config, "Fit config JSON")->required();
  add_common(sd, false);

  CoefArgs coef;
  auto* so = app.add_subcommand("coefficients", "Export preset or fitted DGP coefficients");
  so->add_option("--preset", coef.preset, "Shipped DGP (desk, dr)");
  so->add_option("--data", coef.data, "Fit coefficients to this wide CSV");
  so->add_option("--schema", coef.schema, "Schema JSON (default: sidecar)");
  add_common(so, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  for (auto* sub : app.get_subcommands())
    if (sub->count("--seed")) common.seed = seed;
  if (common.threads > 0) kernels::set_threads(common.threads);

  try {
    if (*sc) return run_cohort(common, cohort);
    if (*sf) return run_fit(common, fit);
    if (*ss) return run_simulate(common, sim);
    if (*st) return run_truth(common, truth);
    if (*sp) return run_permute(common, perm);
    if (*sb) return run_benchmark_cmd(common, bench);
    if (*sd) return run_diagnose(common, diag);
    if (*so) return run_coefficients(common, coef);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
