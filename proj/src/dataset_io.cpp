#include "ltrisk/dataset_io.hpp"

#include "ltrisk/csv.hpp"
#include "ltrisk/errors.hpp"

namespace ltrisk {

namespace {

const nlohmann::json& require(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("schema: missing key '") + key + "'");
  return j.at(key);
}

}  // namespace

NodeSchema schema_from_json(const nlohmann::json& j) {
  NodeSchema s;
  try {
    s.baseline_nodes = require(j, "baseline_nodes").get<std::vector<std::string>>();
    s.intervals = require(j, "intervals").get<int>();
    s.interval_length_days = j.value("interval_length_days", 182);
    s.covariate_nodes = require(j, "covariate_nodes").get<std::vector<std::string>>();
    s.outcome_node = require(j, "outcome_node").get<std::string>();
    s.competing_node = require(j, "competing_node").get<std::string>();
    s.censor_node = require(j, "censor_node").get<std::string>();
    s.exposure_nodes = require(j, "exposure_nodes").get<std::vector<std::string>>();
    if (j.contains("levels")) s.levels = j.at("levels").get<std::map<std::string, int>>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("schema: ") + e.what());
  }
  if (j.contains("within_interval_order")) {
    SchemaLayout lay(s);
    if (j.at("within_interval_order").get<std::vector<std::string>>() != lay.within_interval_order())
      throw ConfigError("schema: within_interval_order must be [covariates..., outcome, competing, "
                        "exposures..., censor]");
  }
  return s;
}

nlohmann::ordered_json schema_to_json(const NodeSchema& schema) {
  SchemaLayout lay(schema);
  nlohmann::ordered_json j;
  j["baseline_nodes"] = schema.baseline_nodes;
  j["intervals"] = schema.intervals;
  j["interval_length_days"] = schema.interval_length_days;
  j["covariate_nodes"] = schema.covariate_nodes;
  j["outcome_node"] = schema.outcome_node;
  j["competing_node"] = schema.competing_node;
  j["censor_node"] = schema.censor_node;
  j["exposure_nodes"] = schema.exposure_nodes;
  j["within_interval_order"] = lay.within_interval_order();
  if (!schema.levels.empty()) j["levels"] = schema.levels;
  return j;
}

NodeSchema read_schema(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(csv::read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("schema '" + path.string() + "': " + e.what());
  }
  return schema_from_json(j);
}

void write_schema(const std::filesystem::path& path, const NodeSchema& schema) {
  csv::write_text(path, schema_to_json(schema).dump(2) + "\n");
}

std::filesystem::path sidecar_schema_path(const std::filesystem::path& data_path) {
  auto p = data_path;
  p.replace_extension();
  p += ".schema.json";
  return p;
}

ObservedDataset parse_wide_csv(std::string_view text, std::shared_ptr<const SchemaLayout> layout) {
  auto table = csv::parse(text);
  const auto& lay = *layout;
  std::vector<std::size_t> src(lay.size());
  for (std::size_t c = 0; c < lay.size(); ++c) src[c] = table.column(lay.nodes()[c].column_name());
  if (table.header.size() != lay.size() && !table.header.empty())
    throw DataError("wide csv: " + std::to_string(table.header.size()) + " columns, schema has " +
                    std::to_string(lay.size()));
  const std::size_t n = table.rows.size();
  std::vector<int> values(lay.size() * n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& row = table.rows[i];
    for (std::size_t c = 0; c < lay.size(); ++c) {
      const auto& f = row[src[c]];
      values[c * n + i] = (f.empty() || f == "NA") ? kMissing : static_cast<int>(csv::parse_int(f));
    }
  }
  return ObservedDataset(std::move(layout), n, std::move(values));
}

ObservedDataset read_wide_csv(const std::filesystem::path& path,
                              std::shared_ptr<const SchemaLayout> layout) {
  return parse_wide_csv(csv::read_text(path), std::move(layout));
}

std::string format_wide_csv(const ObservedDataset& data) {
  std::string out = csv::join(data.layout().column_names());
  out += '\n';
  out.reserve(out.size() + data.n() * data.columns() * 2);
  for (std::size_t i = 0; i < data.n(); ++i) {
    for (std::size_t c = 0; c < data.columns(); ++c) {
      if (c) out += ',';
      int v = data.at(i, c);
      if (v == kMissing)
        out += "NA";
      else
        out += std::to_string(v);
    }
    out += '\n';
  }
  return out;
}

void write_wide_csv(const std::filesystem::path& path, const ObservedDataset& data) {
  csv::write_text(path, format_wide_csv(data));
}

}  // namespace ltrisk
