#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <regex>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "dynsteiner/orchestrator.hpp"
#include "support.hpp"

using namespace testsupport;
using json = nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = steinerctl::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string workload_file(const std::string& name, const std::string& body) {
  const auto dir = std::filesystem::temp_directory_path() / "steinerctl_tests";
  std::filesystem::create_directories(dir);
  const auto path = dir / name;
  std::ofstream(path) << body;
  return path.string();
}

std::vector<json> records(const std::string& out) {
  std::vector<json> v;
  std::istringstream is(out);
  for (std::string line; std::getline(is, line);) {
    if (!line.empty()) v.push_back(json::parse(line));
  }
  return v;
}

}  // namespace

TEST_CASE("run: examples") {
  auto r = cli({"run", workload_file("w1", "I 1 1\nQW\n")});
  CHECK(r.code == steinerctl::kOk);
  auto rec = records(r.out);
  REQUIRE(rec.size() == 2);
  CHECK(rec[0] == json{{"op", "I"}, {"ok", true}});
  CHECK(rec[1]["op"] == "QW");
  CHECK(rec[1]["weight"].get<double>() == 0.0);

  r = cli({"run", workload_file("w2", "I 1 1\nQM 1 1\nQM 2 2\nQR\n")});
  rec = records(r.out);
  REQUIRE(rec.size() == 4);
  CHECK(rec[1]["member"] == true);
  CHECK(rec[2]["member"] == false);
  CHECK(rec[3]["root"] == json::array({1, 1}));

  r = cli({"run", workload_file("w3", "D 2 2\n")});
  CHECK(r.code == steinerctl::kInvalidOp);
  rec = records(r.out);
  REQUIRE(rec.size() == 1);
  CHECK(rec[0]["ok"] == false);
  CHECK(rec[0]["line"] == 1);
  CHECK(!r.err.empty());

  r = cli({"run", workload_file("w4", "QR\n")});
  CHECK(records(r.out).at(0)["root"].is_null());
}

TEST_CASE("run: parse errors carry the line") {
  auto r = cli({"run", workload_file("p1", "I 1 1\n# fine\nX 2 2\n")});
  CHECK(r.code == steinerctl::kParse);
  CHECK(r.err.find("line 3") != std::string::npos);
  r = cli({"run", workload_file("p2", "I 1 1\nQW\nQM 1\n")});
  CHECK(r.code == steinerctl::kParse);
  CHECK(r.err.find("line 3") != std::string::npos);
  std::istringstream in("I 1 1 # trailing comment\n\nQW\n");
  const auto lines = steinerctl::parse_workload(in, 2);
  REQUIRE(lines.size() == 2);
  CHECK(lines[1].line_number == 3);
  CHECK(cli({"run", "/nonexistent/workload"}).code != steinerctl::kOk);
  CHECK(cli({"run", workload_file("p3", "QW\n"), "--grid", "6"}).code != steinerctl::kOk);
  CHECK(cli({"frobnicate"}).code == steinerctl::kUsage);
}

TEST_CASE("run: oracle check and determinism") {
  const std::string body =
      "I 1 1\nI 4 3\nI 7 8\nQW\nQN 4 3\nI 4 3\nD 4 3\nQW\nI 2 6\nQR\nD 1 1\nQR\nQW\n";
  const auto path = workload_file("d1", body);
  for (const std::string mode : {"single", "orchestrated"}) {
    const auto a = cli({"run", path, "--mode", mode, "--oracle-check", "--seed", "7"});
    const auto b = cli({"run", path, "--mode", mode, "--oracle-check", "--seed", "7"});
    CHECK(a.code == steinerctl::kOk);
    CHECK(a.out == b.out);
  }
  const auto text = cli({"run", path, "--format", "text"});
  CHECK(text.code == steinerctl::kOk);
  CHECK(text.out.rfind("I ", 0) == 0);
}

TEST_CASE("export: empty and single terminal") {
  CHECK(cli({"export", workload_file("e0", "QW\n")}).out == "digraph steiner {\n}\n");
  CHECK(cli({"export", workload_file("e00", "QW\n"), "--export", "jsonl"}).out.empty());
  const auto one = cli({"export", workload_file("e1", "I 3 5\n")}).out;
  CHECK(std::count(one.begin(), one.end(), '\n') == 3);
  CHECK(one.find("label=\"(3,5)\", kind=terminal") != std::string::npos);
  CHECK(one.find("->") == std::string::npos);
}

TEST_CASE("export agrees with QW and QN") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 6; ++trial) {
    std::ostringstream body;
    std::set<std::pair<Coord, Coord>> pts;
    for (int i = 0; i < 5; ++i) {
      const auto p = random_point(rng, 8, 2);
      pts.insert({p.coords[0], p.coords[1]});
      body << "I " << p.coords[0] << ' ' << p.coords[1] << '\n';
    }
    body << "QW\n";
    const auto base = body.str();
    const auto seed = std::to_string(trial + 1);
    const auto w = records(cli({"run", workload_file("x", base), "--seed", seed}).out).back()["weight"].get<double>();

    // DOT: sum of len attributes.
    const auto dot = cli({"export", workload_file("x", base), "--seed", seed}).out;
    const std::regex len_re("len=([0-9.eE+-]+)");
    double sum = 0.0;
    for (auto it = std::sregex_iterator(dot.begin(), dot.end(), len_re); it != std::sregex_iterator(); ++it) {
      sum += std::stod((*it)[1]);
    }
    CHECK(sum == doctest::Approx(w).epsilon(1e-9));

    // JSONL graph: every node's QN must match its in/out edges.
    const auto lines = records(cli({"export", workload_file("x", base), "--seed", seed, "--export", "jsonl"}).out);
    std::map<int, json> pos;
    std::map<json, json> parent;
    std::map<json, std::multiset<json>> kids;
    for (const auto& l : lines) {
      if (l["type"] == "node") pos[l["id"].get<int>()] = l["position"];
    }
    for (const auto& l : lines) {
      if (l["type"] != "edge") continue;
      const auto& t = pos.at(l["tail"].get<int>());
      const auto& h = pos.at(l["head"].get<int>());
      parent[h] = t;
      kids[t].insert(h);
    }
    // Query only positions that appear once; shared positions merge occurrences.
    std::map<json, int> seen;
    for (const auto& [id, p] : pos) ++seen[p];
    std::ostringstream queries;
    std::vector<json> asked;
    for (const auto& [p, count] : seen) {
      if (count != 1 || !p[0].is_number_integer() || !p[1].is_number_integer()) continue;
      queries << "QN " << p[0] << ' ' << p[1] << '\n';
      asked.push_back(p);
    }
    const auto answers = records(cli({"run", workload_file("x", base + queries.str()), "--seed", seed}).out);
    const std::size_t first = answers.size() - asked.size();
    for (std::size_t i = 0; i < asked.size(); ++i) {
      const auto& a = answers[first + i];
      CHECK(a["member"] == true);
      const auto pit = parent.find(asked[i]);
      CHECK(a["parent"] == (pit == parent.end() ? json(nullptr) : pit->second));
      std::multiset<json> got(a["children"].begin(), a["children"].end());
      CHECK(got == kids[asked[i]]);
    }
  }
}

TEST_CASE("bench and gen") {
  const auto r = cli({"bench", "--length", "200", "--mode", "orchestrated", "--fail-prob", "0.5"});
  REQUIRE(r.code == steinerctl::kOk);
  std::istringstream is(r.out);
  std::string header;
  std::getline(is, header);
  CHECK(header == "t,amortized_ns,touched_entries,copies");
  const std::uint64_t n = 64;
  const int levels = 5;  // L + 1 at delta 8, L = log2(delta) + 1
  int rows = 0;
  for (std::string line; std::getline(is, line);) {
    ++rows;
    std::uint64_t t;
    double ns, touched;
    int copies;
    REQUIRE(std::sscanf(line.c_str(), "%lu,%lf,%lf,%d", &t, &ns, &touched, &copies) == 4);
    CHECK(copies == dynsteiner::copies_for_phase(dynsteiner::phase_of_step(t, n), n, 0.5));
    CHECK(touched <= 2.0 * levels);
    CHECK(ns > 0.0);
  }
  CHECK(rows == 9);  // 1, 2, 4, ..., 128 and 200

  const auto g = cli({"gen", "--gen", "churn", "--length", "40", "--seed", "3"});
  CHECK(g.code == steinerctl::kOk);
  CHECK(g.out == cli({"gen", "--gen", "churn", "--length", "40", "--seed", "3"}).out);
  std::istringstream gin(g.out);
  const auto ops = steinerctl::parse_workload(gin, 2);
  CHECK(ops.size() == 40);
  const auto replay = cli({"run", workload_file("g", g.out), "--oracle-check"});
  CHECK(replay.code == steinerctl::kOk);
}
