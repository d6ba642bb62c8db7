#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace genrec::cli {

// Stable exit codes, one per failure family; stderr names the failing module.
enum ExitCode {
  exit_ok = 0,
  exit_failure = 1,
  exit_config = 2,
  exit_backend = 3,
  exit_strategy = 4,
  exit_parse = 5,
  exit_invalid = 6,
};

int run_cli(int argc, const char* const* argv);

/// Applies "dotted.key=value" overrides onto a config JSON; values parse as
/// JSON scalars when possible, else as strings.
void apply_override(nlohmann::json& config, const std::string& assignment);

struct RunLogSeries {
  std::string path;
  std::string topic;
  std::string strategy;
  std::vector<int> iterations;
  std::vector<double> overall_ctr;
  std::vector<double> mean_score;
  double avg_ctr = 0.0;
  double last_ctr = 0.0;
};

RunLogSeries parse_run_log(const std::string& path);

}  // namespace genrec::cli
