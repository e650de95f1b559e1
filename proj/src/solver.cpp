#include "dynsteiner/solver.hpp"

#include <bit>
#include <cmath>
#include <mutex>
#include <set>
#include <tuple>

namespace dynsteiner {

bool EntryValue::operator==(const EntryValue& o) const {
  return std::bit_cast<std::uint64_t>(weight) == std::bit_cast<std::uint64_t>(o.weight) &&
         combination == o.combination;
}

DpModel::DpModel(const Config& cfg)
    : config(cfg),
      space((cfg.validate(), cfg.dim), cfg.density, cfg.crossings),
      leaf_template(space, true),
      general_template(space, false) {
  const int top = cfg.root_level();
  prototypes.reserve(static_cast<std::size_t>(top) + 1);
  prototypes.push_back(evaluate_leaf(*this, std::nullopt, false, false));
  const int nc = 1 << cfg.dim;
  for (int level = 1; level <= top; ++level) {
    std::vector<const Table*> kids(static_cast<std::size_t>(nc), &prototypes.back());
    bool no_terms[64] = {};
    prototypes.push_back(evaluate_cell(*this, level, kids, std::span<const bool>(no_terms, static_cast<std::size_t>(nc)), -1));
  }
}

double DpModel::fine_unit(int level) const {
  return std::ldexp(1.0, level - 1) / config.density;
}

std::shared_ptr<const DpModel> shared_model(const Config& cfg) {
  static std::mutex mu;
  static std::map<std::tuple<Coord, int, int, int>, std::shared_ptr<const DpModel>> cache;
  const auto key = std::make_tuple(cfg.delta, cfg.dim, cfg.density, cfg.crossings);
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  Config base = cfg;
  base.seed = 0;
  auto model = std::make_shared<const DpModel>(base);
  cache.emplace(key, model);
  return model;
}

Table evaluate_leaf(const DpModel& model, std::optional<GridPoint> terminal, bool whole_set_inside,
                    bool terminal_is_root) {
  const auto& space = model.space;
  const auto& lat = space.lattice();
  Table out(space.size());
  for (std::size_t id = 0; id < space.size(); ++id) {
    const auto& ix = space.at(id);
    const int na = popcount(ix.active);
    if (na > 1) continue;
    if (na == 0) {
      if (!terminal || whole_set_inside) out[id].weight = 0.0;
      continue;
    }
    if (!terminal) {
      if (ix.yes_part < 0) out[id].weight = 0.0;
      continue;
    }
    if ((ix.yes_part >= 0) != terminal_is_root) continue;
    // The terminal sits at the leaf's lower corner (local lattice origin).
    const auto& q = lat.point(std::countr_zero(ix.active));
    double s = 0.0;
    for (int v : q) s += static_cast<double>(v) * v;
    out[id].weight = std::sqrt(s) / lat.density();
  }
  return out;
}

Table evaluate_cell(const DpModel& model, int level, std::span<const Table* const> child_tables,
                    std::span<const bool> child_has_terminals, int yes_child) {
  const auto& tpl = model.template_for(level);
  const std::size_t n = model.space.size();
  const int nc = tpl.child_count();
  std::vector<double> w(static_cast<std::size_t>(nc) * n);
  double empty_sum = 0.0;
  int terminal_children = 0;
  for (int j = 0; j < nc; ++j) {
    const Table& t = *child_tables[static_cast<std::size_t>(j)];
    double* row = w.data() + static_cast<std::size_t>(j) * n;
    for (std::size_t id = 0; id < n; ++id) row[id] = t[id].weight;
    empty_sum += row[0];
    // A closed child (A = {} with terminals) only combines with empty siblings.
    if (child_has_terminals[static_cast<std::size_t>(j)]) {
      ++terminal_children;
      row[0] = kInfinity;
    }
  }
  const double unit = model.fine_unit(level);
  Table out(n);
  const EvalPlan& plan = tpl.plan(yes_child);
  const auto ncs = static_cast<std::size_t>(nc);
  std::size_t g = 0;
  while (g < plan.groups.size()) {
    const auto& group = plan.groups[g];
    double s = 0.0;
    if (group.all_empty) {
      if (terminal_children > 1) {
        ++g;
        continue;
      }
      s = empty_sum;
    } else {
      const auto ids = tpl.children(group.first_combo);
      std::size_t dead = ncs;
      for (std::size_t j = 0; j < ncs; ++j) {
        const double x = w[j * n + ids[j]];
        if (x == kInfinity) {
          dead = j;
          break;
        }
        s += x;
      }
      if (dead < ncs) {
        g = plan.skip[g * ncs + dead];
        continue;
      }
    }
    for (std::uint32_t e = group.begin; e < group.end; ++e) {
      const auto& entry = plan.entries[e];
      const double v = s + entry.edge_units * unit;
      EntryValue& best = out[entry.parent];
      if (v < best.weight) {
        best.weight = v;
        best.combination = static_cast<std::int32_t>(entry.combo);
      }
    }
    ++g;
  }
  return out;
}

const Table& DPStore::table(const DpModel& model, const CellId& c) const {
  auto it = tables.find(c);
  if (it != tables.end()) return it->second.entries;
  return model.prototypes.at(static_cast<std::size_t>(c.level));
}

namespace {

void evaluate_into(DPStore& store, const DpModel& model, const Quadtree& qt, const CellId& cell,
                   const std::optional<GridPoint>& root) {
  CellTable& ct = store.tables.at(cell);
  if (cell.level == 0) {
    const GridPoint terminal{qt.lower_corner(cell)};
    ct.entries = evaluate_leaf(model, terminal, true, root && *root == terminal);
    return;
  }
  const auto kids = qt.children(cell);
  const int nc = static_cast<int>(kids.size());
  std::vector<const Table*> tables(static_cast<std::size_t>(nc));
  bool has_terms[64] = {};
  for (int j = 0; j < nc; ++j) {
    auto it = store.tables.find(kids[static_cast<std::size_t>(j)]);
    has_terms[j] = it != store.tables.end();
    tables[static_cast<std::size_t>(j)] = has_terms[j] ? &it->second.entries : &model.prototypes.at(static_cast<std::size_t>(cell.level - 1));
  }
  int yes_child = -1;
  if (root && qt.contains(cell, *root)) yes_child = qt.child_ordinal(qt.cell_at(*root, cell.level - 1));
  ct.entries = evaluate_cell(model, cell.level, tables, std::span<const bool>(has_terms, static_cast<std::size_t>(nc)), yes_child);
}

}  // namespace

DPStore solve_static(const DpModel& model, const Quadtree& qt, const ActiveSet& active) {
  DPStore store;
  for (const auto& p : active.points()) add_occupancy(store, qt, p, +1);
  const auto root = active.lex_min();
  for (auto& [cell, ct] : store.tables) evaluate_into(store, model, qt, cell, root);
  return store;
}

void add_occupancy(DPStore& store, const Quadtree& qt, const GridPoint& p, int delta) {
  for (const auto& cell : qt.path_to_root(p)) {
    auto& ct = store.tables[cell];
    ct.occupancy = static_cast<std::size_t>(static_cast<long long>(ct.occupancy) + delta);
    if (ct.occupancy == 0) store.tables.erase(cell);
  }
}

std::size_t update_path(DPStore& store, const DpModel& model, const Quadtree& qt, const ActiveSet& active,
                        std::span<const GridPoint> touched) {
  std::set<CellId> cells;
  for (const auto& p : touched) {
    for (auto& c : qt.path_to_root(p)) cells.insert(std::move(c));
  }
  const auto root = active.lex_min();
  for (const auto& cell : cells) {
    if (store.tables.count(cell)) evaluate_into(store, model, qt, cell, root);
  }
  return cells.size();
}

}  // namespace dynsteiner
