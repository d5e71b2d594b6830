#pragma once

#include <string>
#include <utility>
#include <vector>

#include "lexrag/pipeline.hpp"

namespace lexrag {

/// Applies "key = value" lines from a file onto the config. '#' starts a
/// comment, blank lines are skipped, unknown keys and bad values are
/// ConfigErrors naming the line. Precedence: callers apply the file after
/// defaults and before CLI flags.
void apply_config_file(PipelineConfig& config, const std::string& path);

/// Documented config keys with one-line descriptions, for --help.
const std::vector<std::pair<std::string, std::string>>& config_keys();

} // namespace lexrag
