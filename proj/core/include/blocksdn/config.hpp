#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "blocksdn/experiments.hpp"
#include "blocksdn/records.hpp"

namespace blocksdn {

/// Environment variable naming the default output directory.
inline constexpr const char* kOutputDirEnv = "BLOCKSDN_OUTPUT_DIR";

using ConfigEntries = std::vector<std::pair<std::string, std::string>>;

/// Flat `key = value` lines; `#` starts a comment. Throws ConfigError naming
/// the line on malformed input or a repeated key.
ConfigEntries parse_config_text(std::string_view text);
ConfigEntries read_config_file(const std::string& path);

struct OutputSettings {
  std::string dir = "results";
  RecordFormat format = RecordFormat::csv;
  bool trace = false;
};

struct RunConfig {
  ExperimentSpec experiment;
  OutputSettings output;
  std::string topology_file;  // empty: generate
  /// Every known key with its resolved value.
  std::map<std::string, std::string> values;

  /// `key = value` lines for every key, sorted; resolving it again yields
  /// the same configuration.
  std::string canonical_text() const;
};

/// Layers defaults < environment < file < overrides. Unknown keys are all
/// reported in one ConfigError, as are unparsable values.
RunConfig resolve_config(const ConfigEntries& file, const ConfigEntries& overrides,
                         const char* env_output_dir = nullptr);

struct ConfigKey {
  std::string name;
  std::string default_value;
  std::string help;
};
const std::vector<ConfigKey>& config_keys();

}  // namespace blocksdn
