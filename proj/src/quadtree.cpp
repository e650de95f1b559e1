#include "dynsteiner/quadtree.hpp"

#include <random>

namespace dynsteiner {

namespace {

// floor(a / 2^e) for signed a.
Coord floor_shift(Coord a, int e) { return a >= 0 ? (a >> e) : -((-a + (Coord{1} << e) - 1) >> e); }

bool divisible_pow2(Coord a, int e) { return e <= 0 || (a & ((Coord{1} << e) - 1)) == 0; }

}  // namespace

Shift draw_shift(std::uint64_t seed, Coord delta, int dim) {
  if (!is_power_of_two(delta)) throw DomainError("grid size must be a power of two");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Coord> dist(0, delta - 1);
  Shift s;
  s.offsets.resize(static_cast<std::size_t>(dim));
  for (auto& o : s.offsets) o = dist(rng);
  return s;
}

Quadtree::Quadtree(Coord delta, int dim, Shift shift)
    : delta_(delta), dim_(dim), root_level_(log2_exact(delta) + 1), shift_(std::move(shift)) {
  if (static_cast<int>(shift_.offsets.size()) != dim) throw UsageError("shift has wrong dimension");
  for (Coord o : shift_.offsets) {
    if (o < 0 || o >= delta) throw DomainError("shift component outside [0, delta)");
  }
}

CellId Quadtree::root() const { return CellId{root_level_, std::vector<Coord>(dim_, 0)}; }

std::vector<Coord> Quadtree::lower_corner(const CellId& c) const {
  std::vector<Coord> lo(dim_);
  for (int i = 0; i < dim_; ++i) lo[i] = -shift_.offsets[i] + c.index[i] * side(c.level);
  return lo;
}

bool Quadtree::contains(const CellId& c, const GridPoint& p) const {
  const auto lo = lower_corner(c);
  for (int i = 0; i < dim_; ++i) {
    if (p.coords[i] < lo[i] || p.coords[i] >= lo[i] + side(c.level)) return false;
  }
  return true;
}

bool Quadtree::closure_contains(const CellId& c, const DyadicPoint& u) const {
  const auto lo = lower_corner(c);
  const int g = u.scale_exponent();
  for (int i = 0; i < dim_; ++i) {
    const Coord n = u.numerators()[i];
    if (n < (lo[i] << g) || n > ((lo[i] + side(c.level)) << g)) return false;
  }
  return true;
}

CellId Quadtree::cell_at(const GridPoint& p, int level) const {
  CellId c{level, std::vector<Coord>(dim_)};
  for (int i = 0; i < dim_; ++i) c.index[i] = floor_shift(p.coords[i] + shift_.offsets[i], level);
  return c;
}

std::vector<CellId> Quadtree::path_to_root(const GridPoint& p) const {
  std::vector<CellId> path;
  path.reserve(static_cast<std::size_t>(root_level_) + 1);
  for (int l = 0; l <= root_level_; ++l) path.push_back(cell_at(p, l));
  return path;
}

std::vector<CellId> Quadtree::children(const CellId& c) const {
  if (c.level == 0) throw UsageError("children() called on a leaf cell");
  std::vector<CellId> out;
  const int n = 1 << dim_;
  out.reserve(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    CellId ch{c.level - 1, std::vector<Coord>(dim_)};
    for (int i = 0; i < dim_; ++i) ch.index[i] = 2 * c.index[i] + ((j >> i) & 1);
    out.push_back(std::move(ch));
  }
  return out;
}

CellId Quadtree::parent(const CellId& c) const {
  if (c.level >= root_level_) throw UsageError("parent() called on the root cell");
  CellId p{c.level + 1, std::vector<Coord>(dim_)};
  for (int i = 0; i < dim_; ++i) p.index[i] = floor_shift(c.index[i], 1);
  return p;
}

int Quadtree::child_ordinal(const CellId& c) const {
  int j = 0;
  for (int i = 0; i < dim_; ++i) j |= static_cast<int>(c.index[i] & 1) << i;
  return j;
}

DyadicPoint Quadtree::lattice_point(const CellId& c, int density, const std::vector<int>& local) const {
  const int kexp = log2_exact(density);
  const auto lo = lower_corner(c);
  std::vector<Coord> num(dim_);
  for (int i = 0; i < dim_; ++i) num[i] = lo[i] * density + local[i] * side(c.level);
  return DyadicPoint(std::move(num), kexp);
}

PortalLayout Quadtree::portals(const CellId& c, int density) const {
  if (density < 1) throw UsageError("portal density must be at least 1");
  PortalLayout layout;
  layout.density = density;
  std::vector<int> q(dim_, 0);
  while (true) {
    bool boundary = false;
    for (int v : q) boundary = boundary || v == 0 || v == density;
    if (boundary) layout.portals.push_back(lattice_point(c, density, q));
    int axis = dim_ - 1;
    while (axis >= 0 && q[axis] == density) q[axis--] = 0;
    if (axis < 0) break;
    ++q[axis];
  }
  return layout;
}

std::vector<CellId> Quadtree::cells_with_portal(const DyadicPoint& u, int level, int density) const {
  if (static_cast<int>(u.dim()) != dim_) throw UsageError("point has wrong dimension");
  const int g = u.scale_exponent();
  // Per axis: candidate cell indices and whether u sits on a cell boundary.
  std::vector<std::vector<Coord>> cand(dim_);
  bool on_boundary = false;
  const Coord cells_per_axis = Coord{1} << (root_level_ - level);
  for (int i = 0; i < dim_; ++i) {
    const Coord scaled = u.numerators()[i] + (shift_.offsets[i] << g);
    const Coord t = floor_shift(scaled, level + g);
    if (divisible_pow2(scaled, level + g)) {
      on_boundary = true;
      cand[i] = {t - 1, t};
    } else {
      cand[i] = {t};
    }
  }
  std::vector<CellId> out;
  if (!on_boundary) return out;
  std::vector<std::size_t> pick(dim_, 0);
  while (true) {
    CellId c{level, std::vector<Coord>(dim_)};
    bool in_range = true;
    for (int i = 0; i < dim_; ++i) {
      c.index[i] = cand[i][pick[i]];
      in_range = in_range && c.index[i] >= 0 && c.index[i] < cells_per_axis;
    }
    if (in_range) {
      const auto lo = lower_corner(c);
      bool lattice = true;
      for (int i = 0; i < dim_; ++i) {
        // (u_i - lo_i) * density / side must be an integer.
        const Coord rel = (u.numerators()[i] - (lo[i] << g)) * density;
        lattice = lattice && divisible_pow2(rel, level + g);
      }
      if (lattice) out.push_back(std::move(c));
    }
    int axis = dim_ - 1;
    while (axis >= 0 && pick[axis] + 1 == cand[axis].size()) pick[axis--] = 0;
    if (axis < 0) break;
    ++pick[axis];
  }
  return out;
}

}  // namespace dynsteiner
