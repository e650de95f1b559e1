#include "dynsteiner/oracle.hpp"

#include <algorithm>
#include <bit>
#include <functional>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

namespace dynsteiner {

std::vector<std::pair<std::size_t, std::size_t>> emst_edges(const std::vector<GridPoint>& points) {
  const std::size_t n = points.size();
  std::vector<std::pair<std::size_t, std::size_t>> out;
  if (n < 2) return out;
  std::vector<double> best(n, kInfinity);
  std::vector<std::size_t> from(n, 0);
  std::vector<char> in(n, 0);
  best[0] = 0.0;
  for (std::size_t it = 0; it < n; ++it) {
    std::size_t u = n;
    for (std::size_t v = 0; v < n; ++v) {
      if (!in[v] && (u == n || best[v] < best[u])) u = v;
    }
    in[u] = 1;
    if (it > 0) out.emplace_back(from[u], u);
    for (std::size_t v = 0; v < n; ++v) {
      const double w = distance(points[u], points[v]);
      if (!in[v] && w < best[v]) {
        best[v] = w;
        from[v] = u;
      }
    }
  }
  return out;
}

double emst_weight(const std::vector<GridPoint>& points) {
  double s = 0.0;
  for (auto [a, b] : emst_edges(points)) s += distance(points[a], points[b]);
  return s;
}

double diameter(const std::vector<GridPoint>& points) {
  double d = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) d = std::max(d, distance(points[i], points[j]));
  }
  return d;
}

namespace {

class Snapper {
 public:
  Snapper(const Quadtree& qt, const Config& cfg) : qt_(qt), cfg_(cfg) {}

  void route(const GridPoint& p, const GridPoint& q) {
    terminals_.insert(DyadicPoint(p));
    terminals_.insert(DyadicPoint(q));
    connect(DyadicPoint(p), DyadicPoint(q), qt_.root());
  }

  std::optional<double> result() const {
    if (!ok_) return std::nullopt;
    for (const auto& [cell, used] : used_) {
      if (cell.level == 0) {
        if (used.size() > 1) return std::nullopt;
        continue;
      }
      const auto lo = qt_.lower_corner(cell);
      const double side = static_cast<double>(qt_.side(cell.level));
      for (int axis = 0; axis < cfg_.dim; ++axis) {
        for (int hi = 0; hi < 2; ++hi) {
          const double plane = static_cast<double>(lo[static_cast<std::size_t>(axis)]) + hi * side;
          int count = 0;
          for (const auto& u : used) count += u.coord(static_cast<std::size_t>(axis)) == plane ? 1 : 0;
          if (count > cfg_.crossings) return std::nullopt;
        }
      }
    }
    // The routed pieces must form a forest over positions.
    std::map<DyadicPoint, std::size_t> ids;
    std::vector<std::size_t> parent;
    auto id = [&](const DyadicPoint& x) {
      auto [it, fresh] = ids.emplace(x, ids.size());
      if (fresh) parent.push_back(it->second);
      return it->second;
    };
    std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
      return parent[x] == x ? x : parent[x] = find(parent[x]);
    };
    std::set<std::pair<DyadicPoint, DyadicPoint>> distinct;
    double total = 0.0;
    for (const auto& [x, y] : segments_) {
      if (!distinct.insert(std::minmax(x, y)).second) continue;  // shared by two routes
      const std::size_t rx = find(id(x));
      const std::size_t ry = find(id(y));
      if (rx == ry) return std::nullopt;
      parent[rx] = ry;
      total += distance(x, y);
    }
    return total;
  }

 private:
  bool terminal_of(const CellId& cell, const DyadicPoint& x) const {
    return terminals_.count(x) && qt_.contains(cell, *x.as_grid_point());
  }

  // The child of `cell` holding x that the segment x -> y starts into; a
  // terminal always leaves through its own cells.
  CellId child_toward(const CellId& cell, const DyadicPoint& x, const DyadicPoint& y) const {
    if (terminal_of(cell, x)) return qt_.cell_at(*x.as_grid_point(), cell.level - 1);
    const auto f = x.to_doubles();
    const auto t = y.to_doubles();
    std::vector<Coord> num(f.size());
    const int g = 20;
    for (std::size_t i = 0; i < f.size(); ++i) {
      num[i] = static_cast<Coord>(std::llround(std::ldexp(f[i] + (t[i] - f[i]) * 1e-4, g)));
    }
    const DyadicPoint probe(num, g);
    for (const auto& child : qt_.children(cell)) {
      if (qt_.closure_contains(child, x) && qt_.closure_contains(child, probe)) return child;
    }
    for (const auto& child : qt_.children(cell)) {
      if (qt_.closure_contains(child, x)) return child;
    }
    ok_ = false;
    return cell;
  }

  bool on_boundary(const CellId& cell, const DyadicPoint& x) const {
    const auto lo = qt_.lower_corner(cell);
    for (int i = 0; i < cfg_.dim; ++i) {
      const double v = x.coord(static_cast<std::size_t>(i));
      const double l = static_cast<double>(lo[static_cast<std::size_t>(i)]);
      if (v == l || v == l + static_cast<double>(qt_.side(cell.level))) return true;
    }
    return false;
  }

  // A junction on a terminal that sits on the child's boundary is reached
  // through the portal at that spot, exposed all the way down to its leaf.
  void expose(const CellId& cell, const DyadicPoint& x) {
    if (!terminal_of(cell, x) || !on_boundary(cell, x)) return;
    const GridPoint g = *x.as_grid_point();
    for (CellId c = cell;; c = qt_.cell_at(g, c.level - 1)) {
      used_[c].insert(x);
      if (c.level == 0) break;
    }
  }

  std::vector<DyadicPoint> portals_of(const CellId& cell) const {
    return qt_.portals(cell, cfg_.density).portals;
  }

  bool common_child(const CellId& cell, const DyadicPoint& a, const DyadicPoint& b) const {
    for (const auto& child : qt_.children(cell)) {
      if (qt_.closure_contains(child, a) && qt_.closure_contains(child, b)) return true;
    }
    return false;
  }

  void use(const CellId& cell, const DyadicPoint& x) {
    if (!terminal_of(cell, x)) used_[cell].insert(x);
  }

  // Joins x and y (terminals inside or portals of `cell`) as the DP would:
  // inside a common child, or through one portal of each side's child.
  void connect(const DyadicPoint& x, const DyadicPoint& y, const CellId& cell) {
    if (!ok_) return;
    if (x == y) return;
    use(cell, x);
    use(cell, y);
    if (cell.level == 0) {
      if (terminal_of(cell, x) == terminal_of(cell, y)) {
        ok_ = false;  // a leaf joins its terminal to one portal only
        return;
      }
      segments_.emplace_back(x, y);
      return;
    }
    const CellId cx = child_toward(cell, x, y);
    const CellId cy = child_toward(cell, y, x);
    if (!ok_) return;
    const bool tx = terminal_of(cell, x);
    const bool ty = terminal_of(cell, y);
    // Both ends reachable inside one child.
    if (cx == cy || (!ty && qt_.closure_contains(cx, y))) {
      connect(x, y, cx);
      return;
    }
    if (!tx && qt_.closure_contains(cy, x)) {
      connect(x, y, cy);
      return;
    }
    // Portals are already positions of this cell. A terminal leaves its
    // child through the portal minimizing the detour among those whose join
    // to the other side needs no shared child.
    const auto ca = tx ? portals_of(cx) : std::vector<DyadicPoint>{x};
    const auto cb = ty ? portals_of(cy) : std::vector<DyadicPoint>{y};
    double best = kInfinity;
    DyadicPoint a, b;
    for (const auto& pa : ca) {
      for (const auto& pb : cb) {
        const DyadicPoint jb = qt_.closure_contains(cy, pa) ? pa : pb;
        if (jb != pa && common_child(cell, pa, jb)) continue;
        const double cost = distance(x, pa) + distance(pa, jb) + distance(jb, y);
        if (cost < best) {
          best = cost;
          a = pa;
          b = jb;
        }
      }
    }
    if (best == kInfinity) {
      ok_ = false;
      return;
    }
    if (a != b) segments_.emplace_back(a, b);
    expose(cx, a);
    expose(cy, b);
    connect(x, a, cx);
    connect(b, y, cy);
  }

  const Quadtree& qt_;
  const Config& cfg_;
  std::set<DyadicPoint> terminals_;
  std::map<CellId, std::set<DyadicPoint>> used_;
  std::vector<std::pair<DyadicPoint, DyadicPoint>> segments_;
  mutable bool ok_ = true;
};

}  // namespace

std::optional<double> portal_snapped_upper(const std::vector<GridPoint>& points, const Quadtree& qt,
                                           const Config& cfg) {
  Snapper s(qt, cfg);
  for (auto [i, j] : emst_edges(points)) s.route(points[i], points[j]);
  return s.result();
}

BoundsCheck bounds_check(double weight, const std::vector<GridPoint>& points, const Quadtree& qt,
                         const Config& cfg) {
  BoundsCheck out;
  auto& r = out.report;
  r.emst = emst_weight(points);
  r.diameter = diameter(points);
  r.lower = std::max(r.diameter, r.emst / 2.0);
  r.upper = portal_snapped_upper(points, qt, cfg);
  r.feasible_upper = r.upper.has_value();
  const double slack = kBoundsTolerance * std::max(1.0, weight);
  out.pass = r.lower <= weight + slack && (!r.upper || weight <= *r.upper + slack);
  return out;
}

bool assert_static_equivalence(const Copy& c) {
  const DPStore fresh = solve_static(c.model(), c.tree(), c.active());
  if (!(fresh == c.store())) return false;
  const double w = fresh.table(c.model(), c.tree().root())[0].weight;
  return std::bit_cast<std::uint64_t>(w) == std::bit_cast<std::uint64_t>(c.weight());
}

}  // namespace dynsteiner
