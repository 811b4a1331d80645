#include "blocksdn/trace.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>

#include <fmt/format.h>

#include "blocksdn/experiments.hpp"

namespace blocksdn {
namespace {

std::optional<MessageKind> parse_kind(const std::string& s) {
  for (auto k : {MessageKind::block, MessageKind::inv_announce, MessageKind::block_request, MessageKind::control}) {
    if (s == to_string(k)) return k;
  }
  return std::nullopt;
}

std::string field_value(const std::string& token, std::string_view key, std::size_t line) {
  if (token.rfind(key, 0) != 0 || token.size() <= key.size() || token[key.size()] != '=') {
    throw ConfigError(fmt::format("line {}: expected {}=<value>", line, key));
  }
  return token.substr(key.size() + 1);
}

}  // namespace

void write_trace(std::ostream& out, const TraceFile& t) {
  out << fmt::format("# blocksdn-trace v1 protocol={} nodes={} seed={}\n", to_string(t.protocol), t.nodes, t.seed);
  for (const TraceBlock& tb : t.blocks) {
    const Block& b = tb.block;
    out << fmt::format("block {} {} {} {} {:.3f} {:.6f} {} {}\n", b.id, b.height, b.parent, b.producer,
                       to_ms(b.born_at), b.size_mb, b.tx_count, tb.population);
  }
  for (const Delivery& d : t.deliveries) {
    const long long from = d.from == kNoNode ? -1 : static_cast<long long>(d.from);
    out << fmt::format("deliver {} {} {} {:.3f} {} {} {}\n", d.block, d.node, from, to_ms(d.at), d.hops,
                       d.duplicate ? 1 : 0, to_string(d.kind));
  }
  for (const ForkEvent& f : t.forks) {
    out << fmt::format("fork {} {} {} {} {:.3f}\n", f.node, f.height, f.first, f.second, to_ms(f.at));
  }
}

TraceFile read_trace(std::istream& in) {
  TraceFile t;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    auto fail = [&](const char* what) {
      return ConfigError(fmt::format("line {}: {}", line_no, what));
    };
    if (tag == "#") {
      std::string magic, version, p, n, s;
      ss >> magic >> version;
      if (magic != "blocksdn-trace") continue;
      if (version != "v1") throw fail("unsupported trace version");
      if (!(ss >> p >> n >> s)) throw fail("incomplete header");
      const auto proto = parse_protocol(field_value(p, "protocol", line_no));
      if (!proto) throw fail("unknown protocol");
      t.protocol = *proto;
      try {
        t.nodes = std::stoull(field_value(n, "nodes", line_no));
        t.seed = std::stoull(field_value(s, "seed", line_no));
      } catch (const std::logic_error&) {
        throw fail("bad header number");
      }
      header = true;
      continue;
    }
    if (!header) throw fail("missing trace header");
    if (tag == "block") {
      TraceBlock tb;
      double born = 0.0;
      if (!(ss >> tb.block.id >> tb.block.height >> tb.block.parent >> tb.block.producer >> born >>
            tb.block.size_mb >> tb.block.tx_count >> tb.population)) {
        throw fail("malformed block line");
      }
      tb.block.born_at = from_ms(born);
      t.blocks.push_back(tb);
    } else if (tag == "deliver") {
      Delivery d;
      long long from = 0;
      double at = 0.0;
      int dup = 0;
      std::string kind;
      if (!(ss >> d.block >> d.node >> from >> at >> d.hops >> dup >> kind)) throw fail("malformed deliver line");
      const auto k = parse_kind(kind);
      if (!k) throw fail("unknown message kind");
      d.from = from < 0 ? kNoNode : static_cast<NodeId>(from);
      d.at = from_ms(at);
      d.duplicate = dup != 0;
      d.kind = *k;
      t.deliveries.push_back(d);
    } else if (tag == "fork") {
      ForkEvent f;
      double at = 0.0;
      if (!(ss >> f.node >> f.height >> f.first >> f.second >> at)) throw fail("malformed fork line");
      f.at = from_ms(at);
      t.forks.push_back(f);
    } else {
      throw fail("unknown record tag");
    }
    std::string extra;
    if (ss >> extra) throw fail("trailing fields");
  }
  if (!header) throw ConfigError("empty trace: missing header");
  return t;
}

std::vector<TraceBlockSummary> summarize(const TraceFile& t, std::span<const double> ratios) {
  std::unordered_map<BlockId, std::size_t> index;
  std::vector<TraceBlockSummary> out;
  std::vector<std::vector<SimTime>> arrivals;
  for (const TraceBlock& tb : t.blocks) {
    index[tb.block.id] = out.size();
    TraceBlockSummary s;
    s.block = tb.block.id;
    s.population = tb.population;
    out.push_back(s);
    arrivals.emplace_back();
  }
  for (const Delivery& d : t.deliveries) {
    const auto it = index.find(d.block);
    if (it == index.end()) continue;
    TraceBlockSummary& s = out[it->second];
    if (d.duplicate) {
      ++(d.kind == MessageKind::block ? s.block_duplicates : s.announce_duplicates);
      continue;
    }
    if (d.kind != MessageKind::block) continue;
    arrivals[it->second].push_back(d.at);
    s.max_hops = std::max(s.max_hops, d.hops);
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto& a = arrivals[i];
    std::sort(a.begin(), a.end());
    TraceBlockSummary& s = out[i];
    const SimTime born = t.blocks[i].block.born_at;
    s.reached = a.size();
    s.ratio_ms = sync_curve(a, born, s.population, ratios);
    if (s.population > 0 && a.size() >= s.population) s.full_ms = to_ms(a[s.population - 1] - born);
  }
  return out;
}

std::vector<TraceArrival> first_arrivals(const TraceFile& t, BlockId block) {
  const auto tb = std::find_if(t.blocks.begin(), t.blocks.end(), [&](const TraceBlock& b) { return b.block.id == block; });
  if (tb == t.blocks.end()) throw ConfigError("trace has no block " + std::to_string(block));
  std::map<NodeId, TraceArrival> first;
  for (const Delivery& d : t.deliveries) {
    if (d.block != block || d.duplicate || d.kind != MessageKind::block) continue;
    const double at = to_ms(d.at - tb->block.born_at);
    auto [it, inserted] = first.try_emplace(d.node, TraceArrival{d.node, d.from, at, d.hops});
    if (!inserted && at < it->second.arrival_ms) it->second = TraceArrival{d.node, d.from, at, d.hops};
  }
  std::vector<TraceArrival> out;
  out.reserve(first.size());
  for (const auto& [node, a] : first) out.push_back(a);
  return out;
}

}  // namespace blocksdn
