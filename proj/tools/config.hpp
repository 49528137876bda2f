#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "dcra/experiment.hpp"

namespace dcra::cli {

/// Reads an experiment description. Keys mirror the command-line flags; unknown keys are
/// rejected so typos do not silently fall back to defaults.
ExperimentSpec spec_from_json(const nlohmann::json& j, ExperimentSpec base = {});
ExperimentSpec load_spec(const std::filesystem::path& path, ExperimentSpec base = {});

nlohmann::json spec_to_json(const ExperimentSpec& spec);

}  // namespace dcra::cli
