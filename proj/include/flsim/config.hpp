#pragma once

#include <string>

#include <json.hpp>

#include "flsim/simulator.hpp"

namespace flsim {

// Parses and validates a JSON experiment config, filling documented
// defaults. Throws config_error naming the offending key, io_error when the
// file cannot be read.
ExperimentConfig parse_config(const std::string& path);
ExperimentConfig parse_config_json(const nlohmann::json& j);

// Fully resolved config (all defaults materialized); parsing it back yields
// the same config.
nlohmann::json config_to_json(const ExperimentConfig& cfg);

} // namespace flsim
