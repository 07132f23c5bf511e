#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "greenpot/io.hpp"

namespace greenpot {

// Bad flags or config values; mapped to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kExitPass = 0;
inline constexpr int kExitFail = 1;
inline constexpr int kExitUsage = 2;

struct ExperimentConfig {
  std::string experiment;
  // Experiment options keyed by flag name without dashes ("seed", "levels",
  // "betas", ...). Lists are JSON arrays.
  Json options = Json::object();
  // Directory for <experiment>.json and <experiment>.csv; empty writes nothing.
  std::string output_dir;
};

struct RunResult {
  int exit_code = kExitPass;
  Json report;      // canonical report; metadata kept under "metadata"
  std::string csv;  // RFC 4180
  std::string message;
};

std::vector<std::string> experiment_names();

// Option keys accepted by an experiment (throws UsageError for unknown names).
std::vector<std::string> experiment_options(const std::string& experiment);

// Merges option objects: command-line values win unless `force`, in which
// case values from the config file win.
Json merge_options(const Json& cli, const Json& file, bool force);

// Validates the whole config, then runs the experiment. Exit codes: 0 pass,
// 1 failed check or resource limit, 2 usage error. Never throws.
RunResult run(const ExperimentConfig& config);

}  // namespace greenpot
