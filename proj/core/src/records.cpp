#include "blocksdn/records.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "blocksdn/types.hpp"
#include "json.hpp"

namespace blocksdn {
namespace {

constexpr const char* kCsvHeader = "family,protocol,scale,parameter,value,unit,seed,repetition";

}  // namespace

bool is_known_unit(std::string_view unit) {
  return unit == "ms" || unit == "TPS" || unit == "ratio" || unit == "count";
}

namespace {

bool same_value(double a, double b) {
  if (std::isnan(a) || std::isnan(b)) return std::isnan(a) && std::isnan(b);
  return format_value(a) == format_value(b);
}

void check_field(const std::string& field, const char* name) {
  if (field.find_first_of(",\n\r\"") != std::string::npos) {
    throw ConfigError(fmt::format("record field {} contains a separator: '{}'", name, field));
  }
}

void check_unit(const std::string& unit, std::size_t line) {
  if (is_known_unit(unit)) return;
  if (line == 0) throw ConfigError(fmt::format("record unit '{}' is not one of ms, TPS, ratio, count", unit));
  throw ConfigError(fmt::format("line {}: unit '{}' is not one of ms, TPS, ratio, count", line, unit));
}

template <typename T>
T parse_int(std::string_view text, std::size_t line, const char* name) {
  T out{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ConfigError(fmt::format("line {}: bad {} '{}'", line, name, text));
  }
  return out;
}

double parse_double(const std::string& text, std::size_t line) {
  if (text == "nan") return std::nan("");
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size()) {
    throw ConfigError(fmt::format("line {}: bad value '{}'", line, text));
  }
  return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

}  // namespace

bool MetricRecord::operator==(const MetricRecord& o) const {
  return family == o.family && protocol == o.protocol && scale == o.scale && parameter == o.parameter &&
         same_value(value, o.value) && unit == o.unit && seed == o.seed && repetition == o.repetition;
}

const char* to_string(RecordFormat f) { return f == RecordFormat::csv ? "csv" : "jsonl"; }

std::optional<RecordFormat> parse_record_format(std::string_view text) {
  if (text == "csv") return RecordFormat::csv;
  if (text == "jsonl") return RecordFormat::jsonl;
  return std::nullopt;
}

std::optional<RecordFormat> format_from_path(std::string_view path) {
  if (path.ends_with(".csv")) return RecordFormat::csv;
  if (path.ends_with(".jsonl")) return RecordFormat::jsonl;
  return std::nullopt;
}

std::string format_value(double value) {
  if (std::isnan(value)) return "nan";
  std::string s = fmt::format("{:.6f}", value);
  if (s == "-0.000000") s = "0.000000";
  return s;
}

void write_records(std::ostream& out, std::span<const MetricRecord> records, RecordFormat format) {
  if (format == RecordFormat::csv) {
    out << kCsvHeader << '\n';
    for (const MetricRecord& r : records) {
      check_field(r.family, "family");
      check_field(r.protocol, "protocol");
      check_field(r.parameter, "parameter");
      check_unit(r.unit, 0);
      out << fmt::format("{},{},{},{},{},{},{},{}\n", r.family, r.protocol, r.scale, r.parameter,
                         format_value(r.value), r.unit, r.seed, r.repetition);
    }
    return;
  }
  for (const MetricRecord& r : records) {
    check_unit(r.unit, 0);
    const std::string value = std::isnan(r.value) ? "null" : format_value(r.value);
    out << fmt::format(R"({{"family":{},"protocol":{},"scale":{},"parameter":{},"value":{},"unit":{},"seed":{},"repetition":{}}})",
                       nlohmann::json(r.family).dump(), nlohmann::json(r.protocol).dump(), r.scale,
                       nlohmann::json(r.parameter).dump(), value, nlohmann::json(r.unit).dump(), r.seed,
                       r.repetition)
        << '\n';
  }
}

std::vector<MetricRecord> read_records(std::istream& in, RecordFormat format) {
  std::vector<MetricRecord> out;
  std::string line;
  std::size_t line_no = 0;
  if (format == RecordFormat::csv) {
    bool header = false;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      if (!header) {
        if (line != kCsvHeader) throw ConfigError(fmt::format("line {}: expected header '{}'", line_no, kCsvHeader));
        header = true;
        continue;
      }
      const auto f = split(line, ',');
      if (f.size() != 8) throw ConfigError(fmt::format("line {}: expected 8 fields, got {}", line_no, f.size()));
      MetricRecord r;
      r.family = f[0];
      r.protocol = f[1];
      r.scale = parse_int<std::size_t>(f[2], line_no, "scale");
      r.parameter = f[3];
      r.value = parse_double(f[4], line_no);
      r.unit = f[5];
      check_unit(r.unit, line_no);
      r.seed = parse_int<std::uint64_t>(f[6], line_no, "seed");
      r.repetition = parse_int<std::uint32_t>(f[7], line_no, "repetition");
      out.push_back(std::move(r));
    }
    return out;
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      MetricRecord r;
      r.family = j.at("family").get<std::string>();
      r.protocol = j.at("protocol").get<std::string>();
      r.scale = j.at("scale").get<std::size_t>();
      r.parameter = j.at("parameter").get<std::string>();
      r.value = j.at("value").is_null() ? std::nan("") : j.at("value").get<double>();
      r.unit = j.at("unit").get<std::string>();
      check_unit(r.unit, line_no);
      r.seed = j.at("seed").get<std::uint64_t>();
      r.repetition = j.at("repetition").get<std::uint32_t>();
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(fmt::format("line {}: {}", line_no, e.what()));
    }
  }
  return out;
}

void write_records_file(const std::string& path, std::span<const MetricRecord> records, RecordFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", path));
  write_records(out, records, format);
  if (!out) throw std::runtime_error(fmt::format("write failed: {}", path));
}

std::vector<MetricRecord> read_records_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(fmt::format("cannot read {}", path));
  auto format = format_from_path(path);
  if (!format) format = in.peek() == '{' ? RecordFormat::jsonl : RecordFormat::csv;
  return read_records(in, *format);
}

std::string to_json(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["version"] = m.version;
  j["command"] = m.command;
  j["family"] = m.family;
  j["protocols"] = m.protocols;
  j["scales"] = m.scales;
  j["seeds"] = m.seeds;
  j["repetitions"] = m.repetitions;
  j["config"] = m.config;
  j["runs"] = m.runs;
  j["records"] = m.records;
  j["incomplete_blocks"] = m.incomplete_blocks;
  j["aborted"] = m.aborted;
  if (m.aborted) j["abort_reason"] = m.abort_reason;
  j["outputs"] = m.outputs;
  return j.dump(2) + "\n";
}

}  // namespace blocksdn
