#pragma once

#include <cstdint>
#include <vector>

#include "dynsteiner/geometry.hpp"

namespace dynsteiner {

/// Per-axis offset of the root box. The root covers [-s_i, 2*delta - s_i).
struct Shift {
  std::vector<Coord> offsets;
  bool operator==(const Shift&) const = default;
};

Shift draw_shift(std::uint64_t seed, Coord delta, int dim);

/// A cell of the shifted hierarchy. Level-i cells have side 2^i and are
/// half-open boxes [-s + index * 2^i, -s + (index + 1) * 2^i).
struct CellId {
  int level = 0;
  std::vector<Coord> index;

  auto operator<=>(const CellId&) const = default;
  bool operator==(const CellId&) const = default;
};

struct PortalLayout {
  int density = 1;
  std::vector<DyadicPoint> portals;
};

/// Pure geometry of one shifted quadtree over [1, delta]^d.
class Quadtree {
 public:
  Quadtree(Coord delta, int dim, Shift shift);

  Coord delta() const { return delta_; }
  int dim() const { return dim_; }
  int root_level() const { return root_level_; }
  const Shift& shift() const { return shift_; }

  CellId root() const;
  Coord side(int level) const { return Coord{1} << level; }
  std::vector<Coord> lower_corner(const CellId& c) const;

  bool contains(const CellId& c, const GridPoint& p) const;
  // Closed-box membership, used for portals lying on cell boundaries.
  bool closure_contains(const CellId& c, const DyadicPoint& u) const;

  CellId cell_at(const GridPoint& p, int level) const;
  // Containing cell per level, leaf first; length root_level() + 1.
  std::vector<CellId> path_to_root(const GridPoint& p) const;
  std::vector<CellId> children(const CellId& c) const;
  CellId parent(const CellId& c) const;
  int child_ordinal(const CellId& c) const;

  PortalLayout portals(const CellId& c, int density) const;
  // Absolute position of a point of the cell's local portal lattice.
  DyadicPoint lattice_point(const CellId& c, int density, const std::vector<int>& local) const;
  std::vector<CellId> cells_with_portal(const DyadicPoint& u, int level, int density) const;

 private:
  Coord delta_;
  int dim_;
  int root_level_;
  Shift shift_;
};

}  // namespace dynsteiner
