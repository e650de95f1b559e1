#pragma once

#include <optional>
#include <vector>

#include "dynsteiner/engine.hpp"

namespace dynsteiner {

// Relative slack for floating comparisons in bound checks.
inline constexpr double kBoundsTolerance = 1e-9;

struct BoundsReport {
  double emst = 0.0;
  double diameter = 0.0;
  double lower = 0.0;  // max(diameter, emst / 2)
  std::optional<double> upper;
  bool feasible_upper = false;
};

struct BoundsCheck {
  BoundsReport report;
  bool pass = false;
};

// Prim, O(n^2).
double emst_weight(const std::vector<GridPoint>& points);
// Edges of the tree emst_weight measures, as index pairs.
std::vector<std::pair<std::size_t, std::size_t>> emst_edges(const std::vector<GridPoint>& points);
double diameter(const std::vector<GridPoint>& points);

/// Routes every EMST edge the way the DP could: recursively from the root,
/// an edge whose ends fall in different children crosses the cell as one
/// segment between portals of those children (a terminal's exit portal is
/// the one with the least detour whose join needs no shared child), then
/// each side continues inside its child. Returns the total length of the
/// distinct segments when every leaf uses one portal, no cell facet carries
/// more than `crossings` used portals, and the segments form a forest.
/// Absent otherwise.
std::optional<double> portal_snapped_upper(const std::vector<GridPoint>& points, const Quadtree& qt,
                                           const Config& cfg);

BoundsCheck bounds_check(double weight, const std::vector<GridPoint>& points, const Quadtree& qt,
                         const Config& cfg);

// Recomputes the copy's store from scratch and compares entry for entry.
bool assert_static_equivalence(const Copy& c);

}  // namespace dynsteiner
