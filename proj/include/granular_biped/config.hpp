#pragma once

#include <string>
#include <vector>

#include "granular_biped/metrics.hpp"
#include "granular_biped/sim.hpp"

namespace granular_biped {

struct RunConfig {
  SimConfig sim;
  MetricsConfig metrics;

  /// Throws ConfigError naming the offending parameter.
  void validate() const;
};

/// Every accepted dotted key, in canonical order.
std::vector<std::string> config_keys();

/// Flat text format: one `section.key = value` per line, `#` starts a comment.
/// Unknown or repeated keys and malformed values raise ConfigError with the
/// line number and key.
RunConfig parse_key_value(const std::string& text, const RunConfig& defaults = {});
/// Nested objects are flattened to dotted keys, e.g. {"gait": {"duty": 0.5}}.
RunConfig parse_json(const std::string& text, const RunConfig& defaults = {});
/// JSON when the file ends in .json or starts with '{', key-value otherwise.
RunConfig load_config(const std::string& path);

/// Sets one key from its text form; throws ConfigError.
void apply_override(RunConfig& config, const std::string& key, const std::string& value);

/// Canonical key-value dump; parse_key_value(to_key_value(c)) == c.
std::string to_key_value(const RunConfig& config);

}  // namespace granular_biped
