#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

namespace testsupport {

GridPoint pt(std::initializer_list<Coord> c) { return GridPoint{std::vector<Coord>(c)}; }

bool same_weight(double a, double b) {
  if (a == b) return true;
  return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a));
}

Config small_config(Coord delta, std::uint64_t seed) {
  Config cfg;
  cfg.delta = delta;
  cfg.dim = 2;
  cfg.density = 1;
  cfg.crossings = 1;
  cfg.seed = seed;
  return cfg;
}

GridPoint random_point(std::mt19937_64& rng, Coord delta, int dim) {
  std::uniform_int_distribution<Coord> u(1, delta);
  GridPoint p;
  for (int i = 0; i < dim; ++i) p.coords.push_back(u(rng));
  return p;
}

UpdateOp random_op(std::mt19937_64& rng, const ActiveSet& active, double insert_prob) {
  std::bernoulli_distribution ins(insert_prob);
  if (active.empty() || ins(rng)) return {random_point(rng, active.delta(), active.dim()), UpdateKind::kInsert};
  const auto pts = active.points();
  std::uniform_int_distribution<std::size_t> pick(0, pts.size() - 1);
  return {pts[pick(rng)], UpdateKind::kDelete};
}

namespace {

struct Dsu {
  std::map<TreeNode, TreeNode> parent;
  TreeNode find(const TreeNode& x) {
    auto it = parent.find(x);
    if (it == parent.end() || it->second == x) return x;
    TreeNode r = find(it->second);
    parent[x] = r;
    return r;
  }
  bool unite(const TreeNode& a, const TreeNode& b) {
    const TreeNode ra = find(a), rb = find(b);
    if (ra == rb) return false;
    parent[ra] = rb;
    return true;
  }
};

}  // namespace

std::string integrity_violation(const Copy& c, bool probe_non_members) {
  std::ostringstream why;
  const auto edges = traverse(c);
  const auto terminals = c.active().points();

  Dsu dsu;
  double sum = 0.0;
  std::map<TreeNode, int> indegree;
  std::map<TreeNode, std::optional<TreeNode>> parent_of;
  std::map<TreeNode, std::vector<TreeNode>> children_of;
  std::set<TreeNode> nodes;
  for (const auto& e : edges) {
    sum += e.length;
    if (!dsu.unite(e.tail, e.head)) return "cycle through " + e.head.position.to_string();
    if (++indegree[e.head] > 1) return "two parents for " + e.head.position.to_string();
    parent_of[e.head] = e.tail;
    children_of[e.tail].push_back(e.head);
    nodes.insert(e.tail);
    nodes.insert(e.head);
  }
  const double w = c.weight();
  if (std::abs(sum - w) > 1e-9 * std::max(1.0, std::abs(w))) {
    why << "edge sum " << sum << " != weight " << w;
    return why.str();
  }

  // Spanning and connectivity.
  std::set<DyadicPoint> terminal_positions;
  for (const auto& n : nodes) {
    if (n.kind == NodeKind::kTerminal) terminal_positions.insert(n.position);
  }
  if (terminals.size() > 1) {
    for (const auto& p : terminals) {
      if (!terminal_positions.count(DyadicPoint(p))) return "terminal " + DyadicPoint(p).to_string() + " not spanned";
    }
  }
  if (terminals.size() <= 1 && !edges.empty()) return "edges without two distinct terminals";
  std::set<TreeNode> comps;
  for (const auto& n : nodes) comps.insert(dsu.find(n));
  if (comps.size() > 1) return "traversal is disconnected";
  for (const auto& n : nodes) {
    if (n.kind == NodeKind::kTerminal) {
      const auto gp = n.position.as_grid_point();
      if (!gp || !c.active().contains(*gp)) return "terminal node at inactive position " + n.position.to_string();
    }
  }

  // Queries against the traversal.
  std::map<DyadicPoint, std::set<TreeNode>> occurrences;
  for (const auto& n : nodes) occurrences[n.position].insert(n);
  for (const auto& p : terminals) {
    const DyadicPoint u(p);
    if (!is_member(c, u)) return "active terminal " + u.to_string() + " not a member";
    const auto nb = neighbors(c, u);
    if (!nb) return "active terminal " + u.to_string() + " has no neighborhood";
    if (nb->node.kind != NodeKind::kTerminal) return "terminal resolved to a portal occurrence";
  }
  for (const auto& [u, occ] : occurrences) {
    if (!is_member(c, u)) return "traversal endpoint " + u.to_string() + " not a member";
    const auto nb = neighbors(c, u);
    if (!nb) return "traversal endpoint " + u.to_string() + " has no neighborhood";
    if (!occ.count(nb->node)) return "neighborhood of " + u.to_string() + " names an unknown occurrence";
    const auto pit = parent_of.find(nb->node);
    const std::optional<TreeNode> expect_parent = pit == parent_of.end() ? std::nullopt : pit->second;
    if (nb->parent != expect_parent) return "parent mismatch at " + u.to_string();
    auto kids = children_of[nb->node];
    std::sort(kids.begin(), kids.end());
    if (kids != nb->children) return "children mismatch at " + u.to_string();
    // Parent-child mutual consistency.
    if (nb->parent) {
      const auto& sib = children_of[*nb->parent];
      if (std::find(sib.begin(), sib.end(), nb->node) == sib.end()) return "parent does not list child";
    }
  }
  if (const auto root = c.global_root()) {
    const auto nb = neighbors(c, DyadicPoint(*root));
    if (!nb) return "global root not a member";
    if (nb->parent) return "global root has a parent";
  } else if (!edges.empty()) {
    return "edges in an empty copy";
  }

  if (probe_non_members) {
    // Every integer point of the closed root box that the traversal does
    // not name must be a non-member.
    const auto lo = c.tree().lower_corner(c.tree().root());
    const Coord side = c.tree().side(c.tree().root_level());
    const int d = c.config().dim;
    std::vector<Coord> q(lo);
    while (true) {
      const DyadicPoint u(q, 0);
      const bool named = occurrences.count(u) || (terminals.size() == 1 && u == DyadicPoint(terminals[0]));
      if (is_member(c, u) != named) return "membership disagrees with traversal at " + u.to_string();
      if (!named && neighbors(c, u)) return "non-member " + u.to_string() + " has a neighborhood";
      int axis = d - 1;
      while (axis >= 0 && q[static_cast<std::size_t>(axis)] == lo[static_cast<std::size_t>(axis)] + side) {
        q[static_cast<std::size_t>(axis)] = lo[static_cast<std::size_t>(axis)];
        --axis;
      }
      if (axis < 0) break;
      ++q[static_cast<std::size_t>(axis)];
    }
  }
  return {};
}

namespace {

double euclid(const std::vector<int>& a, const std::vector<int>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace

std::vector<double> brute_force_leaf(const DpModel& model, const Quadtree& qt, const CellId& cell,
                                     const ActiveSet& active) {
  const auto& space = model.space;
  const int k = model.config.density;
  std::vector<double> out(space.size(), kInfinity);
  const GridPoint corner{qt.lower_corner(cell)};
  const bool terminal = active.contains(corner);
  const bool is_root = terminal && active.lex_min() == corner;
  for (std::size_t id = 0; id < space.size(); ++id) {
    const auto& ix = space.at(id);
    const int na = popcount(ix.active);
    if (na > 1) continue;
    if (na == 0) {
      if (!terminal || active.size() == 1) out[id] = 0.0;
      continue;
    }
    const bool yes = ix.yes_part >= 0;
    if (!terminal) {
      if (!yes) out[id] = 0.0;
      continue;
    }
    if (yes != is_root) continue;
    const auto& local = space.lattice().point(std::countr_zero(ix.active));
    out[id] = distance(DyadicPoint(corner), qt.lattice_point(cell, k, local));
  }
  return out;
}

std::vector<double> brute_force_cell(const IndexSpace& space, const CombinationTemplate& tpl, int level,
                                     const std::vector<const Table*>& kids, const std::vector<bool>& has_terminals,
                                     int yes_child, std::optional<std::size_t> only) {
  const int nc = tpl.child_count();
  const std::size_t n = space.size();
  // Fine lattice spacing: half a child portal spacing.
  const double unit = std::ldexp(1.0, level) / (2.0 * space.lattice().density());
  std::vector<double> out(n, kInfinity);
  const std::optional<int> root_child = yes_child >= 0 ? std::optional<int>(yes_child) : std::nullopt;

  int terminal_children = 0;
  for (bool b : has_terminals) terminal_children += b ? 1 : 0;
  // Everything closed below: all children A = {}.
  if (terminal_children <= 1) {
    double s = 0.0;
    for (int j = 0; j < nc; ++j) s += (*kids[static_cast<std::size_t>(j)])[0].weight;
    CombinationCandidate cand{space.at(0), std::vector<LocalIndex>(static_cast<std::size_t>(nc), space.at(0)), {}};
    if (check_consistency(tpl, space, cand, root_child)) out[0] = std::min(out[0], s);
  }

  std::vector<std::vector<std::size_t>> options(static_cast<std::size_t>(nc));
  for (int j = 0; j < nc; ++j) {
    for (std::size_t id = 0; id < n; ++id) {
      if (id == 0 && has_terminals[static_cast<std::size_t>(j)]) continue;
      if ((*kids[static_cast<std::size_t>(j)])[id].weight != kInfinity) options[static_cast<std::size_t>(j)].push_back(id);
    }
    if (options[static_cast<std::size_t>(j)].empty()) return out;
  }
  std::vector<std::size_t> pick(static_cast<std::size_t>(nc), 0);
  CombinationCandidate cand;
  cand.children.resize(static_cast<std::size_t>(nc));
  while (true) {
    bool all_empty = true;
    double base = 0.0;
    std::vector<std::vector<std::uint16_t>> lists(static_cast<std::size_t>(nc));
    PortalMask reachable = 0;
    for (int j = 0; j < nc; ++j) {
      const std::size_t id = options[static_cast<std::size_t>(j)][pick[static_cast<std::size_t>(j)]];
      const auto& ix = space.at(id);
      cand.children[static_cast<std::size_t>(j)] = ix;
      base += (*kids[static_cast<std::size_t>(j)])[id].weight;
      all_empty = all_empty && ix.active == 0;
      for (PortalMask m = ix.active; m; m &= m - 1) {
        const int fp = tpl.position_of(j, std::countr_zero(m));
        lists[static_cast<std::size_t>(j)].push_back(static_cast<std::uint16_t>(fp));
        const int pp = tpl.positions()[static_cast<std::size_t>(fp)].parent_portal;
        if (pp >= 0) reachable |= PortalMask{1} << pp;
      }
    }
    if (!all_empty) {
      const auto edge_sets = enumerate_edge_sets(lists);
      for (std::size_t pid = only.value_or(0); pid < (only ? *only + 1 : n); ++pid) {
        const auto& parent = space.at(pid);
        if (parent.active & ~reachable) continue;
        cand.parent = parent;
        for (const auto& es : edge_sets) {
          cand.edges = es;
          if (!check_consistency(tpl, space, cand, root_child)) continue;
          double s = base;
          for (const auto& e : es) {
            s += euclid(tpl.positions()[e.tail].coords, tpl.positions()[e.head].coords) * unit;
          }
          out[pid] = std::min(out[pid], s);
        }
      }
    }
    int j = nc - 1;
    while (j >= 0 && pick[static_cast<std::size_t>(j)] + 1 == options[static_cast<std::size_t>(j)].size()) {
      pick[static_cast<std::size_t>(j)] = 0;
      --j;
    }
    if (j < 0) break;
    ++pick[static_cast<std::size_t>(j)];
  }
  return out;
}

std::string completeness_violation(const DpModel& model, int level, const std::vector<std::uint16_t>& tuple) {
  const auto& space = model.space;
  const auto& tpl = model.template_for(level);
  const int nc = tpl.child_count();
  std::optional<int> root_child;
  CombinationCandidate cand;
  std::vector<std::vector<std::uint16_t>> lists(static_cast<std::size_t>(nc));
  PortalMask reachable = 0;
  for (int j = 0; j < nc; ++j) {
    const auto& ix = space.at(tuple[static_cast<std::size_t>(j)]);
    cand.children.push_back(ix);
    if (ix.yes_part >= 0) root_child = j;
    for (PortalMask m = ix.active; m; m &= m - 1) {
      const int fp = tpl.position_of(j, std::countr_zero(m));
      lists[static_cast<std::size_t>(j)].push_back(static_cast<std::uint16_t>(fp));
      const int pp = tpl.positions()[static_cast<std::size_t>(fp)].parent_portal;
      if (pp >= 0) reachable |= PortalMask{1} << pp;
    }
  }
  using Key = std::pair<std::size_t, std::vector<DirectedEdge>>;
  std::set<Key> brute;
  const auto edge_sets = enumerate_edge_sets(lists);
  for (std::size_t pid = 0; pid < space.size(); ++pid) {
    cand.parent = space.at(pid);
    if (cand.parent.active & ~reachable) continue;
    for (const auto& es : edge_sets) {
      cand.edges = es;
      if (check_consistency(tpl, space, cand, root_child)) brute.emplace(pid, es);
    }
  }
  std::set<Key> listed;
  const int want_yes = root_child.value_or(-1);
  for (std::size_t i = 0; i < tpl.size(); ++i) {
    const auto ids = tpl.children(i);
    if (!std::equal(ids.begin(), ids.end(), tuple.begin(), tuple.end())) continue;
    if (tpl.at(i).yes_child != want_yes) continue;
    listed.emplace(tpl.at(i).parent, std::vector<DirectedEdge>(tpl.edges(i).begin(), tpl.edges(i).end()));
  }
  if (brute == listed) return {};
  std::ostringstream why;
  why << "tuple";
  for (auto id : tuple) why << ' ' << id;
  why << ": " << brute.size() << " consistent transitions, template lists " << listed.size();
  return why.str();
}

double mst_by_enumeration(const std::vector<GridPoint>& pts) {
  const std::size_t n = pts.size();
  if (n < 2) return 0.0;
  if (n == 2) return distance(pts[0], pts[1]);
  std::vector<std::size_t> seq(n - 2, 0);
  double best = kInfinity;
  while (true) {
    std::vector<int> degree(n, 1);
    for (auto v : seq) ++degree[v];
    double w = 0.0;
    for (auto v : seq) {
      std::size_t leaf = 0;
      while (degree[leaf] != 1) ++leaf;
      w += distance(pts[leaf], pts[v]);
      --degree[leaf];
      --degree[v];
    }
    std::size_t u = n, x = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (degree[i] == 1) (u == n ? u : x) = i;
    }
    w += distance(pts[u], pts[x]);
    best = std::min(best, w);
    std::size_t i = 0;
    while (i < seq.size() && ++seq[i] == n) seq[i++] = 0;
    if (i == seq.size()) break;
  }
  return best;
}

}  // namespace testsupport
