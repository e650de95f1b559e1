#pragma once

#include <cstdint>

#include "dynsteiner/geometry.hpp"

namespace dynsteiner {

/// Parameters of one engine copy. `density` (portal lattice granularity per
/// facet) and `crossings` (active portals allowed per facet) are the
/// operative knobs; epsilon is carried for reporting only.
struct Config {
  Coord delta = 8;
  int dim = 2;
  double epsilon = 0.5;
  int density = 1;
  int crossings = 1;
  std::uint64_t seed = 1;

  // Throws DomainError / UsageError on invalid parameters.
  void validate() const;
  // Root level of the hierarchy, log2(2 * delta).
  int root_level() const { return log2_exact(delta) + 1; }
  // Upper bound on the number of active points, delta^dim.
  std::uint64_t grid_volume() const;
};

}  // namespace dynsteiner
