#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "blocksdn/trace.hpp"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct Scratch {
  fs::path dir;
  Scratch() : dir(fs::temp_directory_path() / ("blocksdn-cli-" + std::to_string(::getpid()))) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  std::string operator/(const std::string& name) const { return (dir / name).string(); }
};

const Scratch& scratch() {
  static Scratch s;
  return s;
}

// Runs the CLI with stdout and stderr captured to files; returns the exit code.
int cli(const std::string& args, std::string* out = nullptr, std::string* err = nullptr) {
  const std::string o = scratch() / "stdout.txt", e = scratch() / "stderr.txt";
  const std::string cmd = std::string("\"") + BLOCKSDN_CLI + "\" " + args + " >" + o + " 2>" + e;
  const int status = std::system(cmd.c_str());
  auto slurp = [](const std::string& p) {
    std::ifstream in(p);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  };
  if (out) *out = slurp(o);
  if (err) *err = slurp(e);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

const std::string kSmall = " --nodes 120 --probe_blocks 2 --probe_spacing_ms 5000 --drain_ms 12000";

}  // namespace

TEST_CASE("version and help exit 0") {
  CHECK(cli("--version") == 0);
  CHECK(cli("--help") == 0);
  CHECK(cli("") == 2);
}

TEST_CASE("invalid protocol exits 2 naming the field") {
  std::string err;
  CHECK(cli("run --family full-delay --protocols carrier-pigeon --output_dir " + (scratch() / "x"), nullptr, &err) == 2);
  CHECK(err.find("protocols") != std::string::npos);
}

TEST_CASE("unknown keys are all reported") {
  std::string err;
  CHECK(cli("run --family full-delay --bogus 1 --other 2", nullptr, &err) == 2);
  CHECK(err.find("bogus") != std::string::npos);
  CHECK(err.find("other") != std::string::npos);
}

TEST_CASE("event budget exhaustion exits 3") {
  CHECK(cli("run --family full-delay --protocols gossip --event_budget 500" + kSmall + " --output_dir " +
            (scratch() / "abort")) == 3);
}

TEST_CASE("missing input exits 5") {
  CHECK(cli("inspect " + (scratch() / "does-not-exist.txt")) == 5);
  CHECK(cli("run -c " + (scratch() / "no-such.conf")) == 5);
}

TEST_CASE("star of 1000 writes 999 link lines") {
  const std::string path = scratch() / "star.txt";
  CHECK(cli("topo --kind star --nodes 1000 -o " + path) == 0);
  std::ifstream in(path);
  std::string line;
  int links = 0;
  while (std::getline(in, line)) links += line.rfind("link ", 0) == 0;
  CHECK(links == 999);
}

TEST_CASE("ring round-trips through check") {
  const std::string path = scratch() / "ring.txt";
  CHECK(cli("topo --kind ring --nodes 300 --seed 4 -o " + path) == 0);
  CHECK(cli("topo --check " + path) == 0);
}

TEST_CASE("check on a disconnected file exits 4") {
  const std::string path = scratch() / "split.txt";
  std::ofstream(path) << "nodes 4\nnode 0 0 100 1\nnode 1 0 100 1\nnode 2 0 100 1\nnode 3 0 100 1\n"
                         "link 0 1 5 100\nlink 2 3 5 100\n";
  std::string out, err;
  CHECK(cli("topo --check " + path, &out, &err) == 4);
  CHECK((out + err).find("disconnected") != std::string::npos);
}

TEST_CASE("same config and seed give identical record files, also from the manifest") {
  const std::string a = scratch() / "det-a", b = scratch() / "det-b", c = scratch() / "det-c";
  const std::string args = "run --family sync-curve --protocols gossip,blocksdn --seeds 7" + kSmall;
  REQUIRE(cli(args + " --output_dir " + a) == 0);
  REQUIRE(cli(args + " --output_dir " + b) == 0);
  CHECK(slurp(a + "/sync-curve.csv") == slurp(b + "/sync-curve.csv"));
  REQUIRE(cli("run --manifest " + a + "/manifest.json --output_dir " + c) == 0);
  CHECK(slurp(a + "/sync-curve.csv") == slurp(c + "/sync-curve.csv"));
  CHECK(cli("run --manifest " + a + "/manifest.json -c x.conf") == 2);
}

TEST_CASE("print-config output resolves to itself") {
  std::string first, second;
  REQUIRE(cli("run --family size-sweep --k 6 --print-config", &first) == 0);
  const std::string path = scratch() / "resolved.conf";
  std::ofstream(path) << first;
  REQUIRE(cli("run -c " + path + " --print-config", &second) == 0);
  CHECK(first == second);
}

TEST_CASE("inspect queries on a mercury trace") {
  const std::string dir = scratch() / "trace";
  REQUIRE(cli("run --family full-delay --protocols mercury --trace true" + kSmall + " --output_dir " + dir) == 0);
  const std::string trace = dir + "/trace-mercury-n120-s1-r0.txt";
  REQUIRE(fs::exists(trace));

  std::string out;
  REQUIRE(cli("inspect " + trace + " -q duplicates --json", &out) == 0);
  auto dups = nlohmann::json::parse(out);
  REQUIRE(dups.size() == 2);
  for (const auto& d : dups) CHECK(d.at("block_duplicates").get<int>() == 0);

  REQUIRE(cli("inspect " + trace + " -q sync --json", &out) == 0);
  for (const auto& b : nlohmann::json::parse(out)) {
    const double t20 = b.at("t20_ms"), t50 = b.at("t50_ms"), t95 = b.at("t95_ms"), t100 = b.at("t100_ms");
    CHECK(t20 <= t50);
    CHECK(t50 <= t95);
    CHECK(t95 <= t100);
  }
  REQUIRE(cli("inspect " + trace + " -q sync", &out) == 0);
  CHECK(out.find("t95_ms") != std::string::npos);

  // Recompute first arrivals from the raw deliver lines.
  std::map<long, double> born;
  std::map<long, double> first;
  std::ifstream in(trace);
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream s(line);
    std::string tag;
    s >> tag;
    if (tag == "block") {
      long id, height, parent, producer;
      double at;
      s >> id >> height >> parent >> producer >> at;
      born[id] = at;
    } else if (tag == "deliver") {
      long block, node, from;
      double at;
      s >> block >> node >> from >> at;
      if (block == 2 && !first.count(node)) first[node] = at;
    }
  }
  REQUIRE(cli("inspect " + trace + " -q arrivals --block 2 --json", &out) == 0);
  auto arrivals = nlohmann::json::parse(out);
  REQUIRE(arrivals.size() == first.size());
  for (const auto& a : arrivals) {
    const long node = a.at("node");
    CHECK(a.at("arrival_ms").get<double>() == doctest::Approx(first.at(node) - born.at(2)).epsilon(1e-6));
  }
  REQUIRE(cli("inspect " + trace + " -q forks", &out) == 0);
  CHECK(cli("inspect " + trace + " -q nonsense") == 2);
}

TEST_CASE("malformed trace exits 2 with the line number") {
  const std::string path = scratch() / "bad-trace.txt";
  std::ofstream(path) << "# blocksdn-trace v1 protocol=gossip nodes=2 seed=1\ndeliver x\n";
  std::string err;
  CHECK(cli("inspect " + path + " -q sync", nullptr, &err) == 2);
  CHECK(err.find("line 2") != std::string::npos);
}

TEST_CASE("compare tabulates protocol ratios") {
  const std::string dir = scratch() / "cmp";
  REQUIRE(cli("run --family full-delay --protocols gossip,blocksdn" + kSmall + " --output_dir " + dir) == 0);
  std::string out;
  CHECK(cli("compare " + dir + "/full-delay.csv", &out) == 0);
  CHECK(out.find("gossip") != std::string::npos);
}
