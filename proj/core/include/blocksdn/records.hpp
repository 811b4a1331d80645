#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace blocksdn {

/// One exported measurement.
struct MetricRecord {
  std::string family;
  std::string protocol;
  std::size_t scale = 0;
  std::string parameter;
  double value = 0.0;  // NaN when no block qualified
  std::string unit;
  std::uint64_t seed = 0;
  std::uint32_t repetition = 0;

  bool operator==(const MetricRecord& other) const;
};

/// Units a record may carry: ms, TPS, ratio, count.
bool is_known_unit(std::string_view unit);

enum class RecordFormat : std::uint8_t { csv, jsonl };

const char* to_string(RecordFormat f);
std::optional<RecordFormat> parse_record_format(std::string_view text);
/// Format implied by a file extension (.csv, .jsonl); nullopt otherwise.
std::optional<RecordFormat> format_from_path(std::string_view path);

/// Values print with six decimals, so reading and re-writing a file
/// reproduces it byte for byte.
std::string format_value(double value);

void write_records(std::ostream& out, std::span<const MetricRecord> records, RecordFormat format);
/// Throws ConfigError naming the offending line.
std::vector<MetricRecord> read_records(std::istream& in, RecordFormat format);

void write_records_file(const std::string& path, std::span<const MetricRecord> records, RecordFormat format);
/// Format from the extension, falling back to sniffing the first byte.
std::vector<MetricRecord> read_records_file(const std::string& path);

/// Provenance of one CLI run, written next to its records.
struct RunManifest {
  std::string version;
  std::string command;
  std::string family;
  std::vector<std::string> protocols;
  std::vector<std::size_t> scales;
  std::vector<std::uint64_t> seeds;
  std::uint32_t repetitions = 0;
  std::map<std::string, std::string> config;
  std::size_t runs = 0;
  std::size_t records = 0;
  std::size_t incomplete_blocks = 0;
  bool aborted = false;
  std::string abort_reason;
  std::vector<std::string> outputs;
};

std::string to_json(const RunManifest& manifest);

}  // namespace blocksdn
