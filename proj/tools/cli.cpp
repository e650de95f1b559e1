#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <bit>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "dynsteiner/oracle.hpp"
#include "dynsteiner/orchestrator.hpp"
#include "dynsteiner/workload.hpp"

namespace steinerctl {

using namespace dynsteiner;
using json = nlohmann::ordered_json;

std::vector<WorkloadLine> parse_workload(std::istream& in, int dim) {
  static const std::map<std::string, LineKind> kOps{
      {"I", LineKind::kInsert}, {"D", LineKind::kDelete},  {"QW", LineKind::kWeight},
      {"QR", LineKind::kRoot},  {"QM", LineKind::kMember}, {"QN", LineKind::kNeighbors},
  };
  std::vector<WorkloadLine> out;
  std::string raw;
  int number = 0;
  while (std::getline(in, raw)) {
    ++number;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    std::istringstream ls(raw);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;

    auto it = kOps.find(tok[0]);
    if (it == kOps.end()) throw ParseError(number, "unknown operation '" + tok[0] + "'");
    WorkloadLine line{it->second, {}, number};
    const bool takes_point = line.kind != LineKind::kWeight && line.kind != LineKind::kRoot;
    const std::size_t want = takes_point ? static_cast<std::size_t>(dim) : 0;
    if (tok.size() - 1 != want) {
      throw ParseError(number, tok[0] + " expects " + std::to_string(want) + " coordinate(s), got " +
                                   std::to_string(tok.size() - 1));
    }
    for (std::size_t i = 1; i < tok.size(); ++i) {
      std::size_t used = 0;
      Coord v = 0;
      try {
        v = std::stoll(tok[i], &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok[i].size()) throw ParseError(number, "bad coordinate '" + tok[i] + "'");
      line.point.coords.push_back(v);
    }
    out.push_back(std::move(line));
  }
  return out;
}

namespace {

json position_json(const DyadicPoint& p) {
  if (auto g = p.as_grid_point()) return g->coords;
  return p.to_doubles();
}

const char* kind_name(NodeKind k) { return k == NodeKind::kTerminal ? "terminal" : "portal"; }

std::string full_precision(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Nodes of the exported graph, numbered in TreeNode order.
struct Graph {
  std::map<TreeNode, std::size_t> ids;
  std::vector<TreeEdge> edges;
};

Graph build_graph(const Copy& c) {
  Graph g;
  g.edges = traverse(c);
  std::set<TreeNode> nodes;
  std::set<GridPoint> terminals_seen;
  for (const auto& e : g.edges) {
    for (const TreeNode* n : {&e.tail, &e.head}) {
      nodes.insert(*n);
      if (n->kind == NodeKind::kTerminal) {
        if (auto gp = n->position.as_grid_point()) terminals_seen.insert(*gp);
      }
    }
  }
  // A lone terminal has no edges.
  for (const auto& p : c.active().points()) {
    if (terminals_seen.count(p)) continue;
    nodes.insert(TreeNode{DyadicPoint(p), NodeKind::kTerminal, c.tree().cell_at(p, 0), -1});
  }
  for (const auto& n : nodes) g.ids.emplace(n, g.ids.size());
  return g;
}

struct Options {
  Coord grid = 8;
  int dim = 2;
  double epsilon = 0.5;
  int portals = 1;
  int crossings = 1;
  double fail_prob = 0.5;
  std::uint64_t seed = 1;
  std::string mode = "single";
  bool oracle_check = false;
  std::string export_format;
  std::string export_file;
  std::string export_doc = "dot";
  std::string format = "json";
  std::string workload;
  std::string gen = "uniform";
  std::size_t length = 1000;
  std::string out_file;

  Config config() const {
    Config c;
    c.delta = grid;
    c.dim = dim;
    c.epsilon = epsilon;
    c.density = portals;
    c.crossings = crossings;
    c.seed = seed;
    return c;
  }
};

void add_common(CLI::App& sub, Options& o) {
  sub.add_option("--grid", o.grid, "grid side (power of two)")->capture_default_str();
  sub.add_option("--dim", o.dim, "dimension")->capture_default_str();
  sub.add_option("--epsilon", o.epsilon, "approximation parameter (reported only)")->capture_default_str();
  sub.add_option("--portals", o.portals, "portal density per cell side (power of two)")->capture_default_str();
  sub.add_option("--crossings", o.crossings, "active portals allowed per facet")->capture_default_str();
  sub.add_option("--fail-prob", o.fail_prob, "failure probability for orchestrated mode")->capture_default_str();
  sub.add_option("--seed", o.seed, "master seed")->capture_default_str();
  sub.add_option("--mode", o.mode, "single | orchestrated")
      ->check(CLI::IsMember({"single", "orchestrated"}))
      ->capture_default_str();
}

/// Either one copy or the orchestrated engine, behind one interface.
class Session {
 public:
  explicit Session(const Options& o) {
    if (o.mode == "orchestrated") {
      engine_.emplace(o.config(), o.fail_prob);
    } else {
      single_.emplace(Copy::initialize(o.config()));
    }
  }

  void apply(const UpdateOp& op) {
    if (engine_) {
      engine_->apply(op);
      return;
    }
    if (op.kind == UpdateKind::kInsert) {
      single_->insert(op.point);
    } else {
      single_->remove(op.point);
    }
  }

  const Copy& view() const { return engine_ ? engine_->best() : *single_; }

  std::vector<const Copy*> copies() const {
    if (!engine_) return {&*single_};
    std::vector<const Copy*> out;
    for (const auto& c : engine_->copies()) out.push_back(&c);
    return out;
  }

  std::size_t copy_count() const { return engine_ ? engine_->copies().size() : 1; }
  std::size_t last_touched() const { return engine_ ? engine_->last_touched() : single_->last_touched(); }

 private:
  std::optional<Copy> single_;
  std::optional<Engine> engine_;
};

class Emitter {
 public:
  Emitter(std::ostream& out, bool text) : out_(out), text_(text) {}

  void emit(const json& rec) {
    if (!text_) {
      out_ << rec.dump() << '\n';
      return;
    }
    out_ << rec.at("op").get<std::string>();
    for (const auto& [k, v] : rec.items()) {
      if (k != "op") out_ << ' ' << k << '=' << v.dump();
    }
    out_ << '\n';
  }

 private:
  std::ostream& out_;
  bool text_;
};

const char* op_name(LineKind k) {
  switch (k) {
    case LineKind::kInsert: return "I";
    case LineKind::kDelete: return "D";
    case LineKind::kWeight: return "QW";
    case LineKind::kRoot: return "QR";
    case LineKind::kMember: return "QM";
    case LineKind::kNeighbors: return "QN";
  }
  return "?";
}

json node_json(const TreeNode& n) { return position_json(n.position); }

json answer(const Session& s, const WorkloadLine& line) {
  const Copy& c = s.view();
  json rec{{"op", op_name(line.kind)}};
  switch (line.kind) {
    case LineKind::kWeight:
      rec["weight"] = c.weight();
      break;
    case LineKind::kRoot: {
      const auto r = c.global_root();
      rec["root"] = r ? json(r->coords) : json(nullptr);
      break;
    }
    case LineKind::kMember:
      rec["member"] = is_member(c, DyadicPoint(line.point));
      break;
    case LineKind::kNeighbors: {
      const auto nb = neighbors(c, DyadicPoint(line.point));
      rec["member"] = nb.has_value();
      rec["parent"] = nb && nb->parent ? node_json(*nb->parent) : json(nullptr);
      rec["children"] = json::array();
      if (nb) {
        for (const auto& ch : nb->children) rec["children"].push_back(node_json(ch));
      }
      break;
    }
    default:
      break;
  }
  return rec;
}

std::optional<std::string> oracle_failure(const Session& s) {
  const auto copies = s.copies();
  for (std::size_t i = 0; i < copies.size(); ++i) {
    const Copy& c = *copies[i];
    if (!assert_static_equivalence(c)) return "copy " + std::to_string(i) + ": dynamic state differs from static recomputation";
    const auto chk = bounds_check(c.weight(), c.active().points(), c.tree(), c.config());
    if (!chk.pass) return "copy " + std::to_string(i) + ": weight " + full_precision(c.weight()) + " outside bounds";
  }
  return std::nullopt;
}

std::vector<WorkloadLine> load(const Options& o) {
  std::ifstream in(o.workload);
  if (!in) throw UsageError("cannot open workload file " + o.workload);
  return parse_workload(in, o.dim);
}

int cmd_run(const Options& o, std::ostream& out, std::ostream& err) {
  const auto lines = load(o);
  Session s(o);
  Emitter em(out, o.format == "text");
  for (const auto& line : lines) {
    const bool update = line.kind == LineKind::kInsert || line.kind == LineKind::kDelete;
    if (!update) {
      em.emit(answer(s, line));
      continue;
    }
    const UpdateOp op{line.point, line.kind == LineKind::kInsert ? UpdateKind::kInsert : UpdateKind::kDelete};
    try {
      s.apply(op);
    } catch (const InvalidOperation& e) {
      em.emit({{"op", op_name(line.kind)}, {"ok", false}, {"error", "invalid operation"}, {"line", line.line_number}});
      err << "line " << line.line_number << ": " << e.what() << '\n';
      return kInvalidOp;
    } catch (const DomainError& e) {
      em.emit({{"op", op_name(line.kind)}, {"ok", false}, {"error", "domain error"}, {"line", line.line_number}});
      err << "line " << line.line_number << ": " << e.what() << '\n';
      return kInvalidOp;
    }
    em.emit({{"op", op_name(line.kind)}, {"ok", true}});
    if (o.oracle_check) {
      if (auto why = oracle_failure(s)) {
        em.emit({{"op", "oracle"}, {"ok", false}, {"error", *why}, {"line", line.line_number}});
        err << "line " << line.line_number << ": oracle check failed: " << *why << '\n';
        return kOracle;
      }
    }
  }
  if (!o.export_format.empty()) {
    const std::string doc = o.export_format == "dot" ? export_dot(s.view()) : export_jsonl(s.view());
    if (o.export_file.empty()) {
      out << doc;
    } else {
      std::ofstream f(o.export_file);
      f << doc;
    }
  }
  return kOk;
}

int cmd_export(const Options& o, std::ostream& out, std::ostream& err) {
  const auto lines = load(o);
  Session s(o);
  for (const auto& line : lines) {
    if (line.kind != LineKind::kInsert && line.kind != LineKind::kDelete) continue;
    try {
      s.apply({line.point, line.kind == LineKind::kInsert ? UpdateKind::kInsert : UpdateKind::kDelete});
    } catch (const std::invalid_argument& e) {
      err << "line " << line.line_number << ": " << e.what() << '\n';
      return kInvalidOp;
    } catch (const InvalidOperation& e) {
      err << "line " << line.line_number << ": " << e.what() << '\n';
      return kInvalidOp;
    }
  }
  out << (o.export_doc == "jsonl" ? export_jsonl(s.view()) : export_dot(s.view()));
  return kOk;
}

GenSpec gen_spec(const Options& o) {
  return GenSpec{parse_gen_kind(o.gen), o.length, o.seed, o.grid, o.dim};
}

int cmd_gen(const Options& o, std::ostream& out) {
  for (const auto& op : generate(gen_spec(o))) {
    out << (op.kind == UpdateKind::kInsert ? 'I' : 'D');
    for (Coord v : op.point.coords) out << ' ' << v;
    out << '\n';
  }
  return kOk;
}

int cmd_bench(const Options& o, std::ostream& out) {
  const auto ops = generate(gen_spec(o));
  Session s(o);
  std::ofstream file;
  std::ostream& csv = o.out_file.empty() ? out : (file.open(o.out_file), file);
  csv << "t,amortized_ns,touched_entries,copies\n";
  using clock = std::chrono::steady_clock;
  std::chrono::nanoseconds elapsed{0};
  double touched_per_copy = 0.0;
  for (std::size_t t = 1; t <= ops.size(); ++t) {
    const auto start = clock::now();
    s.apply(ops[t - 1]);
    elapsed += clock::now() - start;
    touched_per_copy += static_cast<double>(s.last_touched()) / static_cast<double>(s.copy_count());
    if (std::has_single_bit(t) || t == ops.size()) {
      char row[160];
      std::snprintf(row, sizeof row, "%zu,%.0f,%.3f,%zu\n", t,
                    static_cast<double>(elapsed.count()) / static_cast<double>(t),
                    touched_per_copy / static_cast<double>(t), s.copy_count());
      csv << row;
    }
  }
  return kOk;
}

}  // namespace

std::string export_dot(const Copy& c) {
  const Graph g = build_graph(c);
  std::ostringstream os;
  os << "digraph steiner {\n";
  for (const auto& [n, id] : g.ids) {
    os << "  n" << id << " [label=\"" << n.position.to_string() << "\", kind=" << kind_name(n.kind)
       << ", shape=" << (n.kind == NodeKind::kTerminal ? "box" : "point") << "];\n";
  }
  for (const auto& e : g.edges) {
    os << "  n" << g.ids.at(e.tail) << " -> n" << g.ids.at(e.head) << " [len=" << full_precision(e.length)
       << "];\n";
  }
  os << "}\n";
  return os.str();
}

std::string export_jsonl(const Copy& c) {
  const Graph g = build_graph(c);
  std::ostringstream os;
  for (const auto& [n, id] : g.ids) {
    os << json{{"type", "node"}, {"id", id}, {"position", position_json(n.position)}, {"kind", kind_name(n.kind)}}.dump()
       << '\n';
  }
  for (const auto& e : g.edges) {
    os << json{{"type", "edge"}, {"tail", g.ids.at(e.tail)}, {"head", g.ids.at(e.head)}, {"length", e.length}}.dump()
       << '\n';
  }
  return os.str();
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"steinerctl: dynamic Euclidean Steiner tree engine driver"};
  app.require_subcommand(1);
  Options o;

  auto* run = app.add_subcommand("run", "replay a workload and answer its queries");
  add_common(*run, o);
  run->add_option("workload", o.workload, "workload file")->required();
  run->add_flag("--oracle-check", o.oracle_check, "verify against static recomputation and bounds after every update");
  run->add_option("--export", o.export_format, "dump the final tree")->check(CLI::IsMember({"dot", "jsonl"}));
  run->add_option("--export-file", o.export_file, "write the export here instead of stdout");
  run->add_option("--format", o.format, "json | text")->check(CLI::IsMember({"json", "text"}))->capture_default_str();

  auto* exp = app.add_subcommand("export", "replay the updates of a workload and print the tree");
  add_common(*exp, o);
  exp->add_option("workload", o.workload, "workload file")->required();
  exp->add_option("--export", o.export_doc, "dot | jsonl")->check(CLI::IsMember({"dot", "jsonl"}))->capture_default_str();

  auto* bench = app.add_subcommand("bench", "time a generated workload");
  add_common(*bench, o);
  bench->add_option("--gen", o.gen, "uniform | clustered | churn | adversarial-root")->capture_default_str();
  bench->add_option("--length", o.length, "number of updates")->capture_default_str();
  bench->add_option("--out", o.out_file, "CSV destination (default stdout)");

  auto* gen = app.add_subcommand("gen", "print a generated workload");
  add_common(*gen, o);
  gen->add_option("--gen", o.gen, "uniform | clustered | churn | adversarial-root")->capture_default_str();
  gen->add_option("--length", o.length, "number of updates")->capture_default_str();

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsage;
  }
  try {
    if (run->parsed()) return cmd_run(o, out, err);
    if (exp->parsed()) return cmd_export(o, out, err);
    if (bench->parsed()) return cmd_bench(o, out);
    return cmd_gen(o, out);
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return kParse;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
}

}  // namespace steinerctl
