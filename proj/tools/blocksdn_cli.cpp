#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "blocksdn/config.hpp"
#include "blocksdn/experiments.hpp"
#include "blocksdn/records.hpp"
#include "blocksdn/topology.hpp"
#include "blocksdn/trace.hpp"

namespace fs = std::filesystem;
using namespace blocksdn;

namespace {

enum Exit : int {
  kOk = 0,
  kConfigError = 2,
  kRuntimeAbort = 3,
  kTopologyInvalid = 4,
  kIoError = 5,
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Turns trailing `--key value` / `--key=value` tokens into config overrides.
// A key followed by another option (or nothing) is a boolean switch.
ConfigEntries parse_overrides(const std::vector<std::string>& extras) {
  ConfigEntries out;
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& tok = extras[i];
    if (tok.rfind("--", 0) != 0 || tok.size() == 2) {
      throw ConfigError(fmt::format("unexpected argument '{}' (overrides are --key value)", tok));
    }
    std::string key = tok.substr(2);
    std::string value;
    if (const auto eq = key.find('='); eq != std::string::npos) {
      value = key.substr(eq + 1);
      key.erase(eq);
    } else if (i + 1 < extras.size() && extras[i + 1].rfind("--", 0) != 0) {
      value = extras[++i];
    } else {
      value = "true";
    }
    for (char& c : key) {
      if (c == '-') c = '_';
    }
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot read {}", path));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Summary {
  double sum = 0.0;
  std::size_t n = 0;
  std::size_t missing = 0;
};

// Mean per (family, protocol, scale, parameter) across seeds and repetitions.
using SummaryKey = std::tuple<std::string, std::string, std::size_t, std::string>;
std::map<SummaryKey, Summary> summarize_records(const std::vector<MetricRecord>& records) {
  std::map<SummaryKey, Summary> out;
  for (const MetricRecord& r : records) {
    Summary& s = out[{r.family, r.protocol, r.scale, r.parameter}];
    if (std::isnan(r.value)) {
      ++s.missing;
    } else {
      s.sum += r.value;
      ++s.n;
    }
  }
  return out;
}

std::string cell(const Summary& s) {
  if (s.n == 0) return "n/a";
  return fmt::format("{:.1f}", s.sum / static_cast<double>(s.n));
}

void print_table(const std::vector<MetricRecord>& records, std::ostream& out) {
  const auto table = summarize_records(records);
  out << fmt::format("{:<17} {:<9} {:>6} {:>14} {:>12} {:>6}\n", "family", "protocol", "scale", "parameter", "mean",
                     "runs");
  for (const auto& [key, s] : table) {
    const auto& [family, protocol, scale, parameter] = key;
    out << fmt::format("{:<17} {:<9} {:>6} {:>14} {:>12} {:>6}{}\n", family, protocol, scale, parameter, cell(s), s.n,
                       s.missing ? fmt::format("  ({} without data)", s.missing) : std::string());
  }
}

// The resolved config a previous run recorded in its manifest.
ConfigEntries read_manifest_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot read {}", path));
  ConfigEntries out;
  try {
    const auto j = nlohmann::json::parse(in);
    for (const auto& [key, value] : j.at("config").items()) out.emplace_back(key, value.get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("{}: not a run manifest: {}", path, e.what()));
  }
  return out;
}

int cmd_run(const std::string& config_path, const std::string& manifest_path, const std::vector<std::string>& extras,
            bool print_config) {
  if (!config_path.empty() && !manifest_path.empty()) throw ConfigError("--config and --manifest are exclusive");
  ConfigEntries file;
  if (!config_path.empty()) {
    if (!fs::is_regular_file(config_path)) throw IoError(fmt::format("cannot read {}", config_path));
    file = read_config_file(config_path);
  }
  if (!manifest_path.empty()) file = read_manifest_config(manifest_path);
  const RunConfig cfg = resolve_config(file, parse_overrides(extras), std::getenv(kOutputDirEnv));
  if (print_config) {
    std::cout << cfg.canonical_text();
    return kOk;
  }

  ExperimentSpec spec = cfg.experiment;
  if (!cfg.topology_file.empty()) {
    std::ifstream in(cfg.topology_file);
    if (!in) throw IoError(fmt::format("cannot read {}", cfg.topology_file));
    auto topo = std::make_shared<PhysTopology>(read_edge_list(in));
    spec.base.fixed_topology = topo;
    spec.scales = {topo->size()};
  }
  spec.base.keep_trace = cfg.output.trace;

  std::error_code ec;
  fs::create_directories(cfg.output.dir, ec);
  if (ec) throw IoError(fmt::format("cannot create {}: {}", cfg.output.dir, ec.message()));

  const std::vector<PlannedRun> planned = plan_family(spec);
  std::cerr << fmt::format("running {} x{} runs\n", to_string(spec.family), planned.size());
  const FamilyResult result = run_family(spec, cfg.output.trace);

  const std::string stem = to_string(spec.family);
  const fs::path records_path =
      fs::path(cfg.output.dir) / fmt::format("{}.{}", stem, to_string(cfg.output.format));
  try {
    write_records_file(records_path.string(), result.records, cfg.output.format);
  } catch (const std::runtime_error& e) {
    throw IoError(e.what());
  }

  RunManifest manifest;
  manifest.version = BLOCKSDN_VERSION_STRING;
  manifest.command = "run";
  manifest.family = stem;
  for (Protocol p : spec.protocols) manifest.protocols.emplace_back(to_string(p));
  std::set<std::size_t> scales;
  for (const PlannedRun& p : planned) scales.insert(p.spec.topology.nodes);
  manifest.scales.assign(scales.begin(), scales.end());
  manifest.seeds = spec.seeds;
  manifest.repetitions = spec.repetitions;
  manifest.config = cfg.values;
  manifest.runs = planned.size();
  manifest.records = result.records.size();
  manifest.incomplete_blocks = result.incomplete_blocks;
  manifest.aborted = result.aborted;
  manifest.abort_reason = result.abort_reason;
  manifest.outputs.push_back(records_path.filename().string());

  if (cfg.output.trace) {
    for (const RunResult& r : result.runs) {
      TraceFile t;
      t.protocol = r.protocol;
      t.nodes = r.nodes;
      t.seed = r.seed;
      for (const BlockOutcome& b : r.blocks) t.blocks.push_back({b.block, b.population});
      t.deliveries = r.trace;
      t.forks = r.forks;
      const std::string name =
          fmt::format("trace-{}-n{}-s{}-r{}.txt", to_string(r.protocol), r.nodes, r.seed, r.repetition);
      std::ofstream out(fs::path(cfg.output.dir) / name);
      if (!out) throw IoError(fmt::format("cannot write {}", name));
      write_trace(out, t);
      manifest.outputs.push_back(name);
      if (!r.northbound.empty()) {
        const std::string nb =
            fmt::format("northbound-{}-n{}-s{}-r{}.log", to_string(r.protocol), r.nodes, r.seed, r.repetition);
        std::ofstream log(fs::path(cfg.output.dir) / nb);
        for (const std::string& line : r.northbound) log << line << '\n';
        manifest.outputs.push_back(nb);
      }
    }
  }

  {
    std::ofstream out(fs::path(cfg.output.dir) / "manifest.json");
    if (!out) throw IoError("cannot write manifest.json");
    out << to_json(manifest);
  }

  print_table(result.records, std::cout);
  std::cout << fmt::format("records: {}\n", records_path.string());
  if (result.incomplete_blocks > 0) {
    std::cerr << fmt::format("warning: {} blocks never reached every node and were left out of full-delay means\n",
                             result.incomplete_blocks);
  }
  if (result.aborted) {
    std::cerr << "aborted: " << result.abort_reason << "\n";
    return kRuntimeAbort;
  }
  return kOk;
}

int cmd_topo(const std::string& kind_text, std::size_t nodes, std::uint64_t seed, const std::string& out_path,
             const std::string& check_path) {
  if (!check_path.empty()) {
    std::ifstream in(check_path);
    if (!in) throw IoError(fmt::format("cannot read {}", check_path));
    const PhysTopology topo = read_edge_list(in);
    const auto problems = check_topology(topo);
    for (const std::string& p : problems) std::cout << p << '\n';
    if (!problems.empty()) return kTopologyInvalid;
    std::cout << fmt::format("ok: {} nodes, {} links, {}\n", topo.size(), topo.links().size(), to_string(topo.kind()));
    return kOk;
  }
  const auto kind = parse_topology_kind(kind_text);
  if (!kind) throw ConfigError(fmt::format("unknown topology '{}'", kind_text));
  TopologySpec spec;
  spec.kind = *kind;
  spec.nodes = nodes;
  RngStream rng(run_seed(seed, 0), "topology");
  const PhysTopology topo = generate_topology(spec, rng);
  if (out_path.empty() || out_path == "-") {
    write_edge_list(std::cout, topo);
  } else {
    std::ofstream out(out_path);
    if (!out) throw IoError(fmt::format("cannot write {}", out_path));
    write_edge_list(out, topo);
  }
  return kOk;
}

struct InspectQuery {
  std::string what = "sync";  // sync, arrivals, duplicates, forks
  std::optional<BlockId> block;
  std::optional<NodeId> node;
  bool json = false;
};

std::string ms_cell(const std::optional<double>& v) { return v ? fmt::format("{:.3f}", *v) : std::string("-"); }

nlohmann::json ms_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

int inspect_trace(const TraceFile& t, const InspectQuery& q) {
  const std::vector<double> ratios{0.2, 0.5, 0.95, 1.0};
  std::vector<BlockId> blocks;
  for (const TraceBlock& b : t.blocks) {
    if (!q.block || b.block.id == *q.block) blocks.push_back(b.block.id);
  }
  if (q.block && blocks.empty()) throw ConfigError(fmt::format("trace has no block {}", *q.block));
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();

  if (q.what == "sync" || q.what == "duplicates") {
    const bool sync = q.what == "sync";
    if (!q.json) {
      std::cout << fmt::format("trace: protocol={} nodes={} seed={} blocks={} deliveries={} forks={}\n",
                               to_string(t.protocol), t.nodes, t.seed, t.blocks.size(), t.deliveries.size(),
                               t.forks.size());
      if (sync) {
        std::cout << fmt::format("{:>6} {:>6} {:>7} {:>10} {:>10} {:>10} {:>10} {:>5}\n", "block", "reach", "pop",
                                 "t20_ms", "t50_ms", "t95_ms", "t100_ms", "hops");
      } else {
        std::cout << fmt::format("{:>6} {:>10} {:>10}\n", "block", "block_dup", "announce_dup");
      }
    }
    for (const TraceBlockSummary& s : summarize(t, ratios)) {
      if (q.block && s.block != *q.block) continue;
      if (q.json) {
        nlohmann::ordered_json row{{"block", s.block}};
        if (sync) {
          row["reached"] = s.reached;
          row["population"] = s.population;
          for (std::size_t i = 0; i < ratios.size(); ++i) {
            row[fmt::format("t{:g}_ms", ratios[i] * 100)] = ms_json(s.ratio_ms[i]);
          }
          row["max_hops"] = s.max_hops;
        } else {
          row["block_duplicates"] = s.block_duplicates;
          row["announce_duplicates"] = s.announce_duplicates;
        }
        rows.push_back(std::move(row));
      } else if (sync) {
        std::cout << fmt::format("{:>6} {:>6} {:>7} {:>10} {:>10} {:>10} {:>10} {:>5}\n", s.block, s.reached,
                                 s.population, ms_cell(s.ratio_ms[0]), ms_cell(s.ratio_ms[1]),
                                 ms_cell(s.ratio_ms[2]), ms_cell(s.ratio_ms[3]), s.max_hops);
      } else {
        std::cout << fmt::format("{:>6} {:>10} {:>10}\n", s.block, s.block_duplicates, s.announce_duplicates);
      }
    }
  } else if (q.what == "arrivals") {
    if (!q.json) std::cout << fmt::format("{:>6} {:>7} {:>7} {:>12} {:>5}\n", "block", "node", "from", "arrival_ms", "hops");
    for (BlockId b : blocks) {
      for (const TraceArrival& a : first_arrivals(t, b)) {
        if (q.node && a.node != *q.node) continue;
        const long long from = a.from == kNoNode ? -1 : static_cast<long long>(a.from);
        if (q.json) {
          rows.push_back({{"block", b}, {"node", a.node}, {"from", from}, {"arrival_ms", a.arrival_ms}, {"hops", a.hops}});
        } else {
          std::cout << fmt::format("{:>6} {:>7} {:>7} {:>12.3f} {:>5}\n", b, a.node, from, a.arrival_ms, a.hops);
        }
      }
    }
  } else if (q.what == "forks") {
    if (!q.json) std::cout << fmt::format("{:>7} {:>7} {:>7} {:>7} {:>12}\n", "node", "height", "first", "second", "at_ms");
    for (const ForkEvent& f : t.forks) {
      if (q.node && f.node != *q.node) continue;
      if (q.json) {
        rows.push_back({{"node", f.node}, {"height", f.height}, {"first", f.first}, {"second", f.second},
                        {"at_ms", to_ms(f.at)}});
      } else {
        std::cout << fmt::format("{:>7} {:>7} {:>7} {:>7} {:>12.3f}\n", f.node, f.height, f.first, f.second,
                                 to_ms(f.at));
      }
    }
  } else {
    throw ConfigError(fmt::format("unknown inspect query '{}' (sync, arrivals, duplicates, forks)", q.what));
  }
  if (q.json) std::cout << rows.dump(2) << '\n';
  return kOk;
}

int cmd_inspect(const std::string& path, const InspectQuery& query) {
  const std::string text = slurp(path);
  if (text.rfind("# blocksdn-trace", 0) == 0) {
    std::istringstream in(text);
    return inspect_trace(read_trace(in), query);
  }
  if (path.ends_with(".json")) {
    std::cout << nlohmann::json::parse(text).dump(2) << '\n';
    return kOk;
  }
  std::vector<MetricRecord> records;
  try {
    records = read_records_file(path);
  } catch (const std::runtime_error& e) {
    if (dynamic_cast<const ConfigError*>(&e) != nullptr) throw;
    throw IoError(e.what());
  }
  print_table(records, std::cout);
  return kOk;
}

int cmd_compare(const std::vector<std::string>& paths, const std::string& baseline) {
  if (paths.size() == 1) {
    // Protocols side by side, with the reduction of `baseline` against each.
    const auto records = read_records_file(paths[0]);
    const auto table = summarize_records(records);
    std::map<std::tuple<std::string, std::size_t, std::string>, std::map<std::string, Summary>> rows;
    std::set<std::string> protocols;
    for (const auto& [key, s] : table) {
      const auto& [family, protocol, scale, parameter] = key;
      rows[{family, scale, parameter}][protocol] = s;
      protocols.insert(protocol);
    }
    std::cout << fmt::format("{:<17} {:>6} {:>14}", "family", "scale", "parameter");
    for (const auto& p : protocols) std::cout << fmt::format(" {:>10}", p);
    for (const auto& p : protocols) {
      if (p != baseline) std::cout << fmt::format(" {:>14}", fmt::format("{}/{}", baseline, p));
    }
    std::cout << '\n';
    for (const auto& [key, by_protocol] : rows) {
      const auto& [family, scale, parameter] = key;
      std::cout << fmt::format("{:<17} {:>6} {:>14}", family, scale, parameter);
      for (const auto& p : protocols) {
        const auto it = by_protocol.find(p);
        std::cout << fmt::format(" {:>10}", it == by_protocol.end() ? "-" : cell(it->second));
      }
      const auto base = by_protocol.find(baseline);
      for (const auto& p : protocols) {
        if (p == baseline) continue;
        const auto it = by_protocol.find(p);
        std::string ratio = "-";
        if (base != by_protocol.end() && it != by_protocol.end() && base->second.n > 0 && it->second.n > 0 &&
            it->second.sum != 0.0) {
          const double b = base->second.sum / static_cast<double>(base->second.n);
          const double o = it->second.sum / static_cast<double>(it->second.n);
          ratio = fmt::format("{:.3f}", b / o);
        }
        std::cout << fmt::format(" {:>14}", ratio);
      }
      std::cout << '\n';
    }
    return kOk;
  }
  const auto a = summarize_records(read_records_file(paths[0]));
  const auto b = summarize_records(read_records_file(paths[1]));
  std::cout << fmt::format("{:<17} {:<9} {:>6} {:>14} {:>12} {:>12} {:>10}\n", "family", "protocol", "scale",
                           "parameter", "a", "b", "b/a");
  std::set<SummaryKey> keys;
  for (const auto& [k, v] : a) keys.insert(k);
  for (const auto& [k, v] : b) keys.insert(k);
  for (const SummaryKey& k : keys) {
    const auto ia = a.find(k);
    const auto ib = b.find(k);
    const std::string va = ia == a.end() ? "-" : cell(ia->second);
    const std::string vb = ib == b.end() ? "-" : cell(ib->second);
    std::string ratio = "-";
    if (ia != a.end() && ib != b.end() && ia->second.n > 0 && ib->second.n > 0 && ia->second.sum != 0.0) {
      ratio = fmt::format("{:.3f}", (ib->second.sum / static_cast<double>(ib->second.n)) /
                                        (ia->second.sum / static_cast<double>(ia->second.n)));
    }
    const auto& [family, protocol, scale, parameter] = k;
    std::cout << fmt::format("{:<17} {:<9} {:>6} {:>14} {:>12} {:>12} {:>10}\n", family, protocol, scale, parameter,
                             va, vb, ratio);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"BlockSDN block propagation simulator"};
  app.set_version_flag("--version", BLOCKSDN_VERSION_STRING);
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run an experiment family; extra --key value pairs override the config");
  std::string config_path, manifest_path;
  bool print_config = false;
  run->add_option("-c,--config", config_path, "flat key = value config file");
  run->add_option("--manifest", manifest_path, "re-run the configuration recorded in a manifest.json");
  run->add_flag("--print-config", print_config, "print the resolved config and exit");
  run->allow_extras();

  auto* topo = app.add_subcommand("topo", "generate or check an underlay edge list");
  std::string kind = "zoned-random", out_path, check_path;
  std::size_t nodes = 1000;
  std::uint64_t seed = 1;
  topo->add_option("--kind", kind, "zoned-random, ring, star or tree");
  topo->add_option("--nodes", nodes, "node count");
  topo->add_option("--seed", seed, "master seed");
  topo->add_option("-o,--out", out_path, "output file (default stdout)");
  topo->add_option("--check", check_path, "validate an edge-list file; exit 4 when invalid");

  auto* inspect = app.add_subcommand("inspect", "summarize a trace, records file or manifest");
  std::string inspect_path;
  inspect->add_option("file", inspect_path)->required();
  InspectQuery query;
  inspect->add_option("-q,--query", query.what, "trace query: sync, arrivals, duplicates or forks");
  inspect->add_option("--block", query.block, "restrict to one block id");
  inspect->add_option("--node", query.node, "restrict arrivals or forks to one node");
  inspect->add_flag("--json", query.json, "print JSON instead of a table");

  auto* compare = app.add_subcommand("compare", "compare protocols in one records file, or two records files");
  std::vector<std::string> compare_paths;
  std::string baseline = "blocksdn";
  compare->add_option("files", compare_paths)->required()->expected(1, 2);
  compare->add_option("--baseline", baseline, "protocol whose ratio to the others is shown");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*run) return cmd_run(config_path, manifest_path, run->remaining(), print_config);
    if (*topo) return cmd_topo(kind, nodes, seed, out_path, check_path);
    if (*inspect) return cmd_inspect(inspect_path, query);
    if (*compare) return cmd_compare(compare_paths, baseline);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return kIoError;
  } catch (const SimulationError& e) {
    std::cerr << "simulation aborted: " << e.what() << '\n';
    return kRuntimeAbort;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeAbort;
  }
  return kOk;
}
