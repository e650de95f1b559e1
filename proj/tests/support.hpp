#pragma once

#include <random>
#include <string>
#include <vector>

#include "dynsteiner/engine.hpp"
#include "dynsteiner/query.hpp"

namespace testsupport {

using namespace dynsteiner;

GridPoint pt(std::initializer_list<Coord> c);

// Equal within relative 1e-12, or both +inf.
bool same_weight(double a, double b);

// Config at desk scale: d=2, k=1, r=1.
Config small_config(Coord delta, std::uint64_t seed);

// Uniform random point of [1, delta]^dim.
GridPoint random_point(std::mt19937_64& rng, Coord delta, int dim);

// Valid random op against the copy's current active set.
UpdateOp random_op(std::mt19937_64& rng, const ActiveSet& active, double insert_prob = 0.6);

/// Empty when the implicit tree of `c` passes every structural check:
/// acyclic, connected, spans the active set, edge sum equals weight,
/// membership / neighbors / traverse agree, parent-child consistency and a
/// parentless global root. Otherwise a description of the first violation.
std::string integrity_violation(const Copy& c, bool probe_non_members = true);

// Leaf table straight from geometry: distance from the terminal to each portal.
std::vector<double> brute_force_leaf(const DpModel& model, const Quadtree& qt, const CellId& cell,
                                     const ActiveSet& active);

/// Parent table of one cell computed without the combination template:
/// every child entry tuple and every cross-child edge set is enumerated and
/// filtered by check_consistency. Exhaustive, so practical at level 1 only; returns one weight per index id (only id `only` when given, the
/// rest +inf).
std::vector<double> brute_force_cell(const IndexSpace& space, const CombinationTemplate& tpl, int level,
                                     const std::vector<const Table*>& kids, const std::vector<bool>& has_terminals,
                                     int yes_child, std::optional<std::size_t> only = std::nullopt);

/// Compares, for one tuple of child index ids, the set of (parent, edge set)
/// transitions check_consistency accepts against those the template lists.
/// Empty on agreement.
std::string completeness_violation(const DpModel& model, int level, const std::vector<std::uint16_t>& tuple);

// Minimum spanning tree weight by enumerating every labelled tree through
// its Pruefer sequence. Exponential; n <= 7 or so.
double mst_by_enumeration(const std::vector<GridPoint>& pts);

}  // namespace testsupport
