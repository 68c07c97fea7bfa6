#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include <json.hpp>

#include "ltrisk/data_model.hpp"

namespace ltrisk {

NodeSchema schema_from_json(const nlohmann::json& j);
nlohmann::ordered_json schema_to_json(const NodeSchema& schema);

NodeSchema read_schema(const std::filesystem::path& path);
void write_schema(const std::filesystem::path& path, const NodeSchema& schema);

/// "<stem>.schema.json" next to a data or coefficient file.
std::filesystem::path sidecar_schema_path(const std::filesystem::path& data_path);

/// Wide CSV, one row per subject. Empty or "NA" cells load as kMissing; no
/// LVCF or validation is applied here.
ObservedDataset read_wide_csv(const std::filesystem::path& path,
                              std::shared_ptr<const SchemaLayout> layout);
ObservedDataset parse_wide_csv(std::string_view text, std::shared_ptr<const SchemaLayout> layout);
std::string format_wide_csv(const ObservedDataset& data);
void write_wide_csv(const std::filesystem::path& path, const ObservedDataset& data);

}  // namespace ltrisk
