#include "dynsteiner/query.hpp"

#include <algorithm>
#include <bit>
#include <deque>
#include <map>
#include <set>
#include <tuple>

namespace dynsteiner {

namespace {

struct NodeKey {
  CellId anchor;
  int slot = -1;
  auto operator<=>(const NodeKey&) const = default;
};

// One chosen entry, with the keys of its active portals in id order.
struct Visit {
  CellId cell;
  std::size_t entry;
  std::vector<NodeKey> keys;
};

class Walker {
 public:
  explicit Walker(const Copy& c) : c_(c), model_(c.model()), qt_(c.tree()) {}

  TreeNode node(const DyadicPoint& p, const NodeKey& k) const {
    const bool terminal = terminal_keys_.count(k) > 0;
    return TreeNode{p, terminal ? NodeKind::kTerminal : NodeKind::kPortal, k.anchor, k.slot};
  }

  DyadicPoint portal_point(const Visit& v, int portal) const {
    return qt_.lattice_point(v.cell, model_.config.density, model_.space.lattice().point(portal));
  }

  // Emits the edges the entry contributes itself and the child visits.
  template <class EdgeFn, class ChildFn>
  void expand(const Visit& v, EdgeFn&& edge, ChildFn&& child) {
    const auto& store = c_.store();
    const auto& ix = model_.space.at(v.entry);
    if (v.cell.level == 0) {
      if (!store.tables.count(v.cell)) return;
      const DyadicPoint t(GridPoint{qt_.lower_corner(v.cell)});
      if (ix.active == 0) {
        terminal_keys_.insert(NodeKey{v.cell, -1});
        return;
      }
      const DyadicPoint a = portal_point(v, std::countr_zero(ix.active));
      if (a == t) {
        // Zero-length segment: the terminal is the portal node.
        terminal_keys_.insert(v.keys[0]);
        return;
      }
      const NodeKey tk{v.cell, -1};
      terminal_keys_.insert(tk);
      if (ix.yes_part >= 0) {
        edge(t, tk, a, v.keys[0]);
      } else {
        edge(a, v.keys[0], t, tk);
      }
      return;
    }
    const auto& value = store.table(model_, v.cell)[v.entry];
    if (value.combination < 0) return;
    const auto& tpl = model_.template_for(v.cell.level);
    const auto cid = static_cast<std::size_t>(value.combination);
    const auto& pos = tpl.positions();
    auto key_of = [&](int p) {
      const int pp = pos[static_cast<std::size_t>(p)].parent_portal;
      if (pp >= 0 && (ix.active >> pp & 1)) {
        return v.keys[static_cast<std::size_t>(std::popcount(ix.active & ((PortalMask{1} << pp) - 1)))];
      }
      return NodeKey{v.cell, p};
    };
    auto point_of = [&](int p) {
      return qt_.lattice_point(v.cell, 2 * model_.config.density, pos[static_cast<std::size_t>(p)].coords);
    };
    for (const auto& e : tpl.edges(cid)) edge(point_of(e.tail), key_of(e.tail), point_of(e.head), key_of(e.head));
    const auto kids = qt_.children(v.cell);
    const auto ids = tpl.children(cid);
    for (std::size_t j = 0; j < kids.size(); ++j) {
      if (ids[j] == 0 && !store.tables.count(kids[j])) continue;
      Visit w{kids[j], ids[j], {}};
      for (PortalMask m = model_.space.at(ids[j]).active; m; m &= m - 1) {
        w.keys.push_back(key_of(tpl.position_of(static_cast<int>(j), std::countr_zero(m))));
      }
      child(std::move(w));
    }
  }

  Visit root() const { return Visit{qt_.root(), 0, {}}; }
  const std::set<NodeKey>& terminal_keys() const { return terminal_keys_; }

 private:
  const Copy& c_;
  const DpModel& model_;
  const Quadtree& qt_;
  std::set<NodeKey> terminal_keys_;
};

struct RawEdge {
  DyadicPoint a;
  NodeKey ka;
  DyadicPoint b;
  NodeKey kb;
};

// Top-down walk restricted to cells whose closed box contains u; collects
// u's occurrences and the edges incident to it.
struct PointWalk {
  bool member = false;
  std::set<NodeKey> occurrences;
  std::vector<RawEdge> edges;
  std::optional<NodeKey> terminal;
};

PointWalk walk_point(const Copy& c, const DyadicPoint& u, QueryStats* stats) {
  PointWalk out;
  std::size_t touched = 0;
  if (!c.active().empty() && static_cast<int>(u.dim()) == c.config().dim) {
    Walker w(c);
    const auto g = u.as_grid_point();
    const bool terminal = g && c.active().contains(*g);
    std::deque<Visit> queue{w.root()};
    while (!queue.empty()) {
      Visit v = std::move(queue.front());
      queue.pop_front();
      ++touched;
      const auto& ix = c.model().space.at(v.entry);
      std::size_t i = 0;
      for (PortalMask m = ix.active; m; m &= m - 1, ++i) {
        if (w.portal_point(v, std::countr_zero(m)) == u) out.occurrences.insert(v.keys[i]);
      }
      const bool leaf_of_u = terminal && v.cell.level == 0 && c.tree().contains(v.cell, *g);
      w.expand(
          v,
          [&](const DyadicPoint& a, const NodeKey& ka, const DyadicPoint& b, const NodeKey& kb) {
            if (a == u || b == u) out.edges.push_back(RawEdge{a, ka, b, kb});
          },
          [&](Visit&& child) {
            if (c.tree().closure_contains(child.cell, u)) queue.push_back(std::move(child));
          });
      if (leaf_of_u) {
        // The terminal's own node: its leaf key, or the portal it sits on.
        const auto& keys = w.terminal_keys();
        for (const auto& k : keys) {
          if (k.slot < 0 && k.anchor == v.cell) out.terminal = k;
        }
        if (!out.terminal && ix.active != 0) out.terminal = v.keys[0];
      }
    }
    out.member = terminal || !out.occurrences.empty();
    if (out.terminal) out.occurrences.insert(*out.terminal);
  }
  if (stats) stats->cells_touched = touched;
  return out;
}

}  // namespace

std::vector<TreeEdge> traverse(const Copy& c) {
  std::vector<RawEdge> raw;
  Walker w(c);
  if (!c.active().empty()) {
    std::vector<Visit> stack{w.root()};
    while (!stack.empty()) {
      Visit v = std::move(stack.back());
      stack.pop_back();
      w.expand(
          v,
          [&](const DyadicPoint& a, const NodeKey& ka, const DyadicPoint& b, const NodeKey& kb) {
            raw.push_back(RawEdge{a, ka, b, kb});
          },
          [&](Visit&& child) { stack.push_back(std::move(child)); });
    }
  }
  std::vector<TreeEdge> out;
  out.reserve(raw.size());
  for (const auto& e : raw) out.push_back(TreeEdge{w.node(e.a, e.ka), w.node(e.b, e.kb), distance(e.a, e.b)});
  std::sort(out.begin(), out.end(), [](const TreeEdge& x, const TreeEdge& y) {
    return std::tie(x.tail, x.head) < std::tie(y.tail, y.head);
  });
  return out;
}

bool is_member(const Copy& c, const DyadicPoint& u, QueryStats* stats) {
  return walk_point(c, u, stats).member;
}

std::optional<Neighborhood> neighbors(const Copy& c, const DyadicPoint& u, QueryStats* stats) {
  const auto walk = walk_point(c, u, stats);
  if (!walk.member) return std::nullopt;
  NodeKey chosen;
  if (walk.terminal) {
    chosen = *walk.terminal;
  } else {
    chosen = *std::min_element(walk.occurrences.begin(), walk.occurrences.end(), [](const NodeKey& x, const NodeKey& y) {
      return std::make_tuple(-x.anchor.level, x.anchor, x.slot) < std::make_tuple(-y.anchor.level, y.anchor, y.slot);
    });
  }
  auto kind_of = [&](const DyadicPoint& p, const NodeKey& k) {
    bool term = false;
    const auto g = p.as_grid_point();
    if (g && c.active().contains(*g)) {
      const auto t = p == u ? walk.terminal : walk_point(c, p, nullptr).terminal;
      term = t && *t == k;
    }
    return TreeNode{p, term ? NodeKind::kTerminal : NodeKind::kPortal, k.anchor, k.slot};
  };
  Neighborhood nb;
  nb.node = kind_of(u, chosen);
  for (const auto& e : walk.edges) {
    if (e.kb == chosen && e.b == u) nb.parent = kind_of(e.a, e.ka);
    if (e.ka == chosen && e.a == u) nb.children.push_back(kind_of(e.b, e.kb));
  }
  std::sort(nb.children.begin(), nb.children.end());
  return nb;
}

}  // namespace dynsteiner
