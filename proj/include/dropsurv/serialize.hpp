#pragma once

#include <dropsurv/baselines.hpp>
#include <dropsurv/cox.hpp>

#include <json.hpp>

#include <filesystem>
#include <string>
#include <string_view>
#include <variant>

namespace dropsurv {

using AnyModel = std::variant<CoxModel, LinearModel, SvrModel>;

/// "cox", "ols" or "svr".
std::string_view model_kind(const AnyModel& model);

/// Human-readable document with a "kind" discriminator. Doubles are written
/// with round-trip precision, so a reloaded model predicts bit-identically.
nlohmann::json model_to_json(const AnyModel& model);

/// Throws SchemaError when the document does not describe a model.
AnyModel model_from_json(const nlohmann::json& document);

void save_model(const AnyModel& model, const std::filesystem::path& path);
AnyModel load_model(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it over `path`; on failure
/// nothing is left at `path`. Throws ValidationError on I/O failure.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace dropsurv
