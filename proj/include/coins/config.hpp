#pragma once
// Flat typed INI-style run configuration.
//
// Format: [section] headers, key = value lines, # or ; full-line comments.
// Every key is registered with a type; unknown sections or keys, or values
// that fail to parse, raise ConfigError naming the offending line. The
// [learner] section feeds both skill training and task training so the two
// stay consistent unless overridden programmatically.

#include "coins/chain.hpp"
#include "coins/common.hpp"

#include <string>

namespace coins {

struct RunConfig {
  BuildConfig build;
  TaskConfig task;
};

// Parse `text` (or the file at `path`) on top of the given config.
void apply_config_text(RunConfig& rc, const std::string& text,
                       const std::string& origin);
void apply_config_file(RunConfig& rc, const std::string& path);

// Canonical snapshot of every registered key with its current value;
// parseable by apply_config_text.
std::string serialize_config(const RunConfig& rc);

}  // namespace coins
