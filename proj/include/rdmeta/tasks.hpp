#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "rdmeta/config.hpp"

namespace rdmeta {

inline constexpr const char* kVersion = "0.1.0";

struct TaskOptions {
  std::string output_dir_override;  // wins over config and env
  int workers_override = 0;         // 0 = use config/env
};

std::vector<std::string> task_names();

/// Config schema and target quantity for one task; throws UnknownTask.
std::string describe_task(const std::string& name);

/// Parses, validates, dispatches, and writes outputs + manifest.
/// Returns 0 ok, 1 config error, 2 task error (messages go to err).
int run_task(const std::string& config_path, const TaskOptions& opts, std::ostream& out,
             std::ostream& err);

}  // namespace rdmeta
