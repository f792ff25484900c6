#pragma once

#include <string>

#include <json.hpp>

#include "subtk/config.hpp"

namespace subtk {

struct RunReport {
  std::string task;
  std::string input_hash;
  std::string started_at;
  std::string finished_at;
  std::string status = "ok";  // ok | partial
  nlohmann::json payload;
  int exit_code = 0;

  nlohmann::json to_json() const;
};

/// Dispatches one task, writes its artifacts under the config's output
/// directory, and returns the report (also written there as
/// <task>_report.json). Numerical failures surface as std::runtime_error;
/// the caller maps them to exit code 3.
RunReport run_task(const ProblemConfig& config, bool verbose = false);

}  // namespace subtk
