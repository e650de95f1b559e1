#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "dynsteiner/quadtree.hpp"

namespace dynsteiner {

using PortalMask = std::uint64_t;

/// The portal lattice of a cell in local coordinates {0..k}^d, restricted to
/// the boundary. Identical for every cell at every level; ids follow the
/// lexicographic order of the local coordinates.
class PortalLattice {
 public:
  PortalLattice(int dim, int density);

  int dim() const { return dim_; }
  int density() const { return density_; }
  int size() const { return static_cast<int>(points_.size()); }
  const std::vector<int>& point(int id) const { return points_[static_cast<std::size_t>(id)]; }
  // -1 when q is not a boundary lattice point.
  int id_of(const std::vector<int>& q) const;
  int facet_count() const { return 2 * dim_; }
  // facet = 2 * axis + (0 for the low side, 1 for the high side)
  PortalMask facet_mask(int facet) const { return facets_[static_cast<std::size_t>(facet)]; }
  bool respects_cap(PortalMask active, int cap) const;

 private:
  int dim_;
  int density_;
  std::vector<std::vector<int>> points_;
  std::map<std::vector<int>, int> ids_;
  std::vector<PortalMask> facets_;
};

/// One (A, Pi, phi) triple in local portal ids. Parts are ordered by their
/// lowest portal id. `roots[p]` is the part root r(S), or -1 for the part
/// flagged as containing the global root.
struct LocalIndex {
  PortalMask active = 0;
  std::vector<PortalMask> parts;
  int yes_part = -1;
  std::vector<int> roots;

  bool operator==(const LocalIndex&) const = default;
  auto operator<=>(const LocalIndex&) const = default;
};

/// What the evaluator knows about a cell when deciding index validity.
struct CellContext {
  bool leaf = false;
  bool has_terminal = false;
  bool whole_set_inside = false;
  bool contains_global_root = false;
};

/// The universe of local indices for a (dim, density, crossings) setting,
/// sorted by canonical encoding. Index id 0 is always A = {}.
class IndexSpace {
 public:
  IndexSpace(int dim, int density, int crossings);

  const PortalLattice& lattice() const { return lattice_; }
  int crossings() const { return crossings_; }
  std::size_t size() const { return indices_.size(); }
  const LocalIndex& at(std::size_t id) const { return indices_[id]; }
  std::optional<std::size_t> find(const LocalIndex& ix) const;

  // Active portal sets respecting the per-facet cap, ascending by encoding.
  const std::vector<PortalMask>& active_sets() const { return active_sets_; }
  // Set partitions of `active`, each part list ordered by lowest id.
  std::vector<std::vector<PortalMask>> partitions(PortalMask active) const;

  bool valid(const LocalIndex& ix, const CellContext& ctx) const;

 private:
  PortalLattice lattice_;
  int crossings_;
  std::vector<LocalIndex> indices_;
  std::map<LocalIndex, std::size_t> lookup_;
  std::vector<PortalMask> active_sets_;
};

/// Index of one augmented subproblem (R, A, Pi, phi).
struct EntryIndex {
  CellId cell;
  LocalIndex local;
  bool operator==(const EntryIndex&) const = default;
};

// Every valid (A, Pi, phi) for the cell, in canonical order.
std::vector<LocalIndex> enumerate_indices(const IndexSpace& space, const CellContext& ctx);

std::vector<std::uint8_t> encode_local(const LocalIndex& ix);
std::vector<std::uint8_t> encode(const EntryIndex& ix);
EntryIndex decode(std::span<const std::uint8_t> bytes);

int popcount(PortalMask m);

}  // namespace dynsteiner
