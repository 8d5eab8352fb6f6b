#pragma once

#include <string>
#include <vector>

#include "flsim/simulator.hpp"

namespace flsim {

// Exit codes shared by the CLI: 0 success, 1 usage/config, 2 runtime.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

inline constexpr const char* kArtifactVersion = "0.1.0";

// Runs one experiment and writes metrics.csv, scores.jsonl and manifest.json
// into out_dir. Nothing is written when the config fails validation.
int cmd_run(const std::string& config_path, const std::string& out_dir);

// Runs one experiment per axis value into per-value subdirectories and
// writes summary.csv (value, final_accuracy, final_backdoor_success).
int cmd_sweep(const std::string& config_path, const std::string& axis,
              const std::vector<double>& values, const std::string& out_dir);

// Library-level cores, usable without touching the filesystem-facing
// wrappers above.
void write_run_outputs(const ExperimentConfig& cfg, const std::vector<RoundMetrics>& metrics,
                       const std::string& out_dir, const std::string& started,
                       const std::string& finished);

// %.17g, enough digits to reproduce the double bit-for-bit.
std::string format_double(double v);

} // namespace flsim
