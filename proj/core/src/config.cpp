#include "blocksdn/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

namespace blocksdn {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text + ",") {
    if (c == ',') {
      std::string t = trim(cur);
      if (!t.empty()) out.push_back(std::move(t));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  return out;
}

double to_double(const std::string& v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) throw ConfigError(fmt::format("'{}' is not a number", v));
  return out;
}

template <typename T>
T to_uint(const std::string& v) {
  T out{};
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) {
    throw ConfigError(fmt::format("'{}' is not a non-negative integer", v));
  }
  return out;
}

bool to_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(fmt::format("'{}' is not a boolean", v));
}

std::string from_bool(bool b) { return b ? "true" : "false"; }
std::string from_double(double d) { return fmt::format("{}", d); }

template <typename T, typename F>
std::string join(const std::vector<T>& items, F&& fn) {
  std::vector<std::string> parts;
  for (const T& i : items) parts.push_back(fn(i));
  return fmt::format("{}", fmt::join(parts, ","));
}

struct KeyDef {
  ConfigKey meta;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

#define BSDN_DOUBLE(name, field, help)                                            \
  KeyDef {                                                                         \
    {name, {}, help}, [](const RunConfig& c) { return from_double(c.field); },    \
        [](RunConfig& c, const std::string& v) { c.field = to_double(v); }        \
  }
#define BSDN_SIZE(name, field, help)                                                  \
  KeyDef {                                                                             \
    {name, {}, help}, [](const RunConfig& c) { return fmt::format("{}", c.field); },  \
        [](RunConfig& c, const std::string& v) { c.field = to_uint<std::size_t>(v); } \
  }
#define BSDN_BOOL(name, field, help)                                           \
  KeyDef {                                                                      \
    {name, {}, help}, [](const RunConfig& c) { return from_bool(c.field); },   \
        [](RunConfig& c, const std::string& v) { c.field = to_bool(v); }       \
  }

std::vector<KeyDef> make_keys() {
  std::vector<KeyDef> k;
  k.push_back({{"family", {}, "experiment family"},
               [](const RunConfig& c) { return std::string(to_string(c.experiment.family)); },
               [](RunConfig& c, const std::string& v) {
                 const auto f = parse_family(v);
                 if (!f) throw ConfigError(fmt::format("unknown family '{}'", v));
                 c.experiment.family = *f;
               }});
  k.push_back({{"protocols", {}, "comma list of gossip, mercury, blocksdn"},
               [](const RunConfig& c) {
                 return join(c.experiment.protocols, [](Protocol p) { return std::string(to_string(p)); });
               },
               [](RunConfig& c, const std::string& v) {
                 c.experiment.protocols.clear();
                 for (const auto& s : split_list(v)) {
                   const auto p = parse_protocol(s);
                   if (!p) throw ConfigError(fmt::format("unknown protocol '{}'", s));
                   c.experiment.protocols.push_back(*p);
                 }
               }});
  k.push_back({{"scales", {}, "comma list of node counts (empty: family default)"},
               [](const RunConfig& c) { return join(c.experiment.scales, [](std::size_t s) { return fmt::format("{}", s); }); },
               [](RunConfig& c, const std::string& v) {
                 c.experiment.scales.clear();
                 for (const auto& s : split_list(v)) c.experiment.scales.push_back(to_uint<std::size_t>(s));
               }});
  k.push_back({{"block_sizes", {}, "comma list of block sizes in MB (empty: family default)"},
               [](const RunConfig& c) { return join(c.experiment.block_sizes, from_double); },
               [](RunConfig& c, const std::string& v) {
                 c.experiment.block_sizes.clear();
                 for (const auto& s : split_list(v)) c.experiment.block_sizes.push_back(to_double(s));
               }});
  k.push_back({{"topologies", {}, "topology-adapt kinds (empty: ring,star,tree)"},
               [](const RunConfig& c) {
                 return join(c.experiment.topologies, [](TopologyKind t) { return std::string(to_string(t)); });
               },
               [](RunConfig& c, const std::string& v) {
                 c.experiment.topologies.clear();
                 for (const auto& s : split_list(v)) {
                   const auto t = parse_topology_kind(s);
                   if (!t) throw ConfigError(fmt::format("unknown topology '{}'", s));
                   c.experiment.topologies.push_back(*t);
                 }
               }});
  k.push_back({{"seeds", {}, "comma list of master seeds"},
               [](const RunConfig& c) { return join(c.experiment.seeds, [](std::uint64_t s) { return fmt::format("{}", s); }); },
               [](RunConfig& c, const std::string& v) {
                 c.experiment.seeds.clear();
                 for (const auto& s : split_list(v)) c.experiment.seeds.push_back(to_uint<std::uint64_t>(s));
               }});
  k.push_back({{"repetitions", {}, "repetitions per seed"},
               [](const RunConfig& c) { return fmt::format("{}", c.experiment.repetitions); },
               [](RunConfig& c, const std::string& v) { c.experiment.repetitions = to_uint<std::uint32_t>(v); }});
  k.push_back(BSDN_BOOL("large", experiment.large, "use the 5000-8000 node scales"));
  k.push_back(BSDN_SIZE("workers", experiment.workers, "parallel simulation runs"));
  k.push_back({{"output_dir", {}, "directory for records, manifest and traces"},
               [](const RunConfig& c) { return c.output.dir; },
               [](RunConfig& c, const std::string& v) {
                 if (v.empty()) throw ConfigError("output_dir must not be empty");
                 c.output.dir = v;
               }});
  k.push_back({{"format", {}, "record format: csv or jsonl"},
               [](const RunConfig& c) { return std::string(to_string(c.output.format)); },
               [](RunConfig& c, const std::string& v) {
                 const auto f = parse_record_format(v);
                 if (!f) throw ConfigError(fmt::format("unknown format '{}'", v));
                 c.output.format = *f;
               }});
  k.push_back(BSDN_BOOL("trace", output.trace, "write a delivery trace per run"));
  k.push_back({{"topology", {}, "zoned-random, ring, star or tree"},
               [](const RunConfig& c) { return std::string(to_string(c.experiment.base.topology.kind)); },
               [](RunConfig& c, const std::string& v) {
                 const auto t = parse_topology_kind(v);
                 if (!t) throw ConfigError(fmt::format("unknown topology '{}'", v));
                 c.experiment.base.topology.kind = *t;
               }});
  k.push_back({{"topology_file", {}, "edge-list file used instead of a generated topology"},
               [](const RunConfig& c) { return c.topology_file; },
               [](RunConfig& c, const std::string& v) { c.topology_file = v; }});
  k.push_back(BSDN_SIZE("nodes", experiment.base.topology.nodes, "node count when scales is empty"));
  k.push_back(BSDN_SIZE("zones", experiment.base.topology.zones, "zones of the zoned-random topology"));
  k.push_back(BSDN_DOUBLE("mean_degree", experiment.base.topology.mean_degree, "mean intra-zone degree"));
  k.push_back(BSDN_SIZE("local_rings", experiment.base.topology.local_rings, "local rings of the ring topology"));
  k.push_back(BSDN_SIZE("tree_depth", experiment.base.topology.tree_depth, "depth of the tree topology"));
  k.push_back(BSDN_SIZE("gossip_degree", experiment.base.gossip.degree, "gossip overlay degree"));
  k.push_back(BSDN_SIZE("fanout", experiment.base.gossip.fanout, "gossip relay fanout"));
  k.push_back(BSDN_BOOL("push", experiment.base.gossip.push, "gossip pushes full blocks instead of announcing"));
  k.push_back(BSDN_DOUBLE("lazy_delay_ms", experiment.base.gossip.lazy_delay_ms,
                          "delay of the second announce round (<= 0 disables)"));
  k.push_back(BSDN_SIZE("k", experiment.base.control.recommend.k, "recommended neighbors per node"));
  k.push_back(BSDN_DOUBLE("inbound_cap_factor", experiment.base.control.recommend.inbound_cap_factor,
                          "inbound cap as a multiple of k"));
  k.push_back(BSDN_SIZE("backbone_k", experiment.base.control.recommend.backbone_k, "head backbone degree"));
  k.push_back(BSDN_SIZE("cluster_target", experiment.base.control.partition.target_cluster_size,
                        "target cluster size"));
  k.push_back(BSDN_SIZE("controllers", experiment.base.control.controllers, "control-plane controllers"));
  k.push_back(BSDN_DOUBLE("control_period_ms", experiment.base.control.period_ms, "control cycle period"));
  k.push_back(BSDN_DOUBLE("feedback_window_ms", experiment.base.control.feedback_window_ms, "fork-rate window"));
  k.push_back(BSDN_BOOL("feedback", experiment.base.control.feedback, "fork-rate triggered reconfiguration"));
  k.push_back(BSDN_DOUBLE("fork_threshold", experiment.base.control.thresholds.high, "absolute fork-rate trigger"));
  k.push_back(BSDN_DOUBLE("fork_relative_increase", experiment.base.control.thresholds.relative_increase,
                          "relative fork-rate trigger"));
  k.push_back(BSDN_DOUBLE("report_noise", experiment.base.control.noise, "link report noise (fraction)"));
  k.push_back(BSDN_BOOL("refine", experiment.base.blocksdn.refine, "local neighbor refinement"));
  k.push_back(BSDN_DOUBLE("refine_period_ms", experiment.base.blocksdn.refine_period_ms, "refinement period"));
  k.push_back(BSDN_DOUBLE("refine_factor", experiment.base.blocksdn.refine_factor,
                          "replace a neighbor slower than this multiple of expected"));
  k.push_back(BSDN_SIZE("fallback_fanout", experiment.base.blocksdn.fallback_fanout,
                        "in-cluster gossip fanout when head and deputy are down"));
  k.push_back(BSDN_SIZE("mercury_degree", experiment.base.mercury.degree, "children per mercury tree node"));
  k.push_back(BSDN_DOUBLE("mercury_hop_cost_ms", experiment.base.mercury.hop_cost_ms,
                          "per-hop cost the mercury tree builder assumes"));
  k.push_back(BSDN_DOUBLE("validation_ms_per_mb", experiment.base.data_plane.validation_ms_per_mb,
                          "validation cost at compute 1.0"));
  k.push_back(BSDN_DOUBLE("block_size_mb", experiment.base.workload.block_size_mb, "block size"));
  k.push_back(BSDN_DOUBLE("tx_per_mb", experiment.base.workload.tx_per_mb, "transactions per MB of block"));
  k.push_back(BSDN_SIZE("probe_blocks", experiment.base.workload.probe_blocks, "blocks per delay run"));
  k.push_back(BSDN_DOUBLE("probe_spacing_ms", experiment.base.workload.probe_spacing_ms, "gap between probe blocks"));
  k.push_back(BSDN_DOUBLE("blocks_per_node_per_s", experiment.base.workload.blocks_per_node_per_s,
                          "production rate per node in throughput runs"));
  k.push_back(BSDN_DOUBLE("load_window_ms", experiment.base.workload.load_window_ms, "throughput window"));
  k.push_back(BSDN_DOUBLE("warmup_ms", experiment.base.workload.warmup_ms, "delay before production"));
  k.push_back(BSDN_DOUBLE("drain_ms", experiment.base.workload.drain_ms, "time allowed after production"));
  k.push_back({{"sync_ratios", {}, "comma list of sync ratios in (0, 1]"},
               [](const RunConfig& c) { return join(c.experiment.base.sync_ratios, from_double); },
               [](RunConfig& c, const std::string& v) {
                 c.experiment.base.sync_ratios.clear();
                 for (const auto& s : split_list(v)) c.experiment.base.sync_ratios.push_back(to_double(s));
               }});
  k.push_back({{"event_budget", {}, "events before a run aborts"},
               [](const RunConfig& c) { return fmt::format("{}", c.experiment.base.event_budget); },
               [](RunConfig& c, const std::string& v) { c.experiment.base.event_budget = to_uint<std::uint64_t>(v); }});
  const RunConfig defaults;
  for (KeyDef& d : k) d.meta.default_value = d.get(defaults);
  std::sort(k.begin(), k.end(), [](const KeyDef& a, const KeyDef& b) { return a.meta.name < b.meta.name; });
  return k;
}

#undef BSDN_DOUBLE
#undef BSDN_SIZE
#undef BSDN_BOOL

const std::vector<KeyDef>& keys() {
  static const std::vector<KeyDef> k = make_keys();
  return k;
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> out = [] {
    std::vector<ConfigKey> v;
    for (const KeyDef& d : keys()) v.push_back(d.meta);
    return v;
  }();
  return out;
}

ConfigEntries parse_config_text(std::string_view text) {
  ConfigEntries out;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError(fmt::format("line {}: expected 'key = value'", line_no));
    std::string key = trim(std::string_view(body).substr(0, eq));
    std::string value = trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) throw ConfigError(fmt::format("line {}: empty key", line_no));
    if (!seen.insert(key).second) throw ConfigError(fmt::format("line {}: key '{}' repeated", line_no, key));
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

ConfigEntries read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot read config file {}", path));
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config_text(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(fmt::format("{}: {}", path, e.what()));
  }
}

std::string RunConfig::canonical_text() const {
  std::string out;
  for (const auto& [k, v] : values) out += fmt::format("{} = {}\n", k, v);
  return out;
}

RunConfig resolve_config(const ConfigEntries& file, const ConfigEntries& overrides, const char* env_output_dir) {
  std::map<std::string, std::string> merged;
  if (env_output_dir != nullptr && *env_output_dir != '\0') merged["output_dir"] = env_output_dir;
  std::vector<std::string> unknown;
  auto layer = [&](const ConfigEntries& entries) {
    for (const auto& [k, v] : entries) {
      const bool known = std::any_of(keys().begin(), keys().end(), [&](const KeyDef& d) { return d.meta.name == k; });
      if (!known) {
        if (std::find(unknown.begin(), unknown.end(), k) == unknown.end()) unknown.push_back(k);
        continue;
      }
      merged[k] = v;
    }
  };
  layer(file);
  layer(overrides);
  if (!unknown.empty()) throw ConfigError(fmt::format("unknown config keys: {}", fmt::join(unknown, ", ")));

  RunConfig cfg;
  std::vector<std::string> errors;
  for (const KeyDef& d : keys()) {
    const auto it = merged.find(d.meta.name);
    if (it == merged.end()) continue;
    try {
      d.set(cfg, it->second);
    } catch (const ConfigError& e) {
      errors.push_back(fmt::format("{}: {}", d.meta.name, e.what()));
    }
  }
  if (!errors.empty()) throw ConfigError(fmt::format("invalid config values: {}", fmt::join(errors, "; ")));
  validate(cfg.experiment);
  for (const KeyDef& d : keys()) cfg.values[d.meta.name] = d.get(cfg);
  return cfg;
}

}  // namespace blocksdn
