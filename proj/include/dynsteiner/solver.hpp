#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "dynsteiner/config.hpp"
#include "dynsteiner/entries.hpp"
#include "dynsteiner/quadtree.hpp"

namespace dynsteiner {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Weight of one subproblem plus its argmin certificate. `combination` names
/// the chosen child entries and directed edge set inside the cell's
/// CombinationTemplate; it is -1 at leaves and for unreachable entries.
struct EntryValue {
  double weight = kInfinity;
  std::int32_t combination = -1;

  bool reachable() const { return weight != kInfinity; }
  // Bitwise comparison of the weight.
  bool operator==(const EntryValue& o) const;
};

// Dense over IndexSpace ids; unreachable entries hold +inf.
using Table = std::vector<EntryValue>;

/// A point of the doubled lattice {0..2k}^d spanned by the child portal
/// lattices of one cell.
struct FinePosition {
  std::vector<int> coords;
  std::uint32_t child_mask = 0;
  std::vector<int> child_portal;  // per child ordinal, -1 when absent
  int parent_portal = -1;
};

struct DirectedEdge {
  std::uint16_t tail = 0;
  std::uint16_t head = 0;
  auto operator<=>(const DirectedEdge&) const = default;
};

/// A consistent (child entries, edge set) -> parent entry transition.
struct Combination {
  std::uint32_t child_offset = 0;
  std::uint32_t edge_offset = 0;
  std::uint16_t edge_count = 0;
  std::uint16_t parent = 0;
  std::int8_t yes_child = -1;
  bool all_empty = false;
  double edge_units = 0.0;  // total edge length in fine-lattice units
};

/// A bucket regrouped for evaluation. Consecutive combinations sharing a
/// child tuple form a group; inside a group only those whose edge length
/// strictly improves on every earlier one for the same parent are kept, the
/// rest cannot win a first-wins minimum.
struct EvalPlan {
  struct Group {
    std::uint32_t first_combo = 0;  // children() of this combination
    std::uint32_t begin = 0, end = 0;
    bool all_empty = false;
  };
  struct Entry {
    double edge_units = 0.0;
    std::uint32_t combo = 0;
    std::uint16_t parent = 0;
  };
  std::vector<Group> groups;
  std::vector<Entry> entries;
  // skip[g * child_count + j]: first later group differing in children 0..j.
  std::vector<std::uint32_t> skip;
};

/// Every consistent transition for one cell, precomputed once. The
/// transition structure does not depend on the cell's position or level
/// (only edge lengths scale), so one template serves the whole hierarchy.
/// Combinations are sorted by (child ids, edge list) so that a first-wins
/// strict minimum yields the least canonical argmin.
class CombinationTemplate {
 public:
  CombinationTemplate(const IndexSpace& space, bool leaf_children);

  int child_count() const { return child_count_; }
  const std::vector<FinePosition>& positions() const { return positions_; }
  // Fine position of child j's portal, or -1.
  int position_of(int child, int portal) const;
  std::size_t size() const { return combos_.size(); }
  const Combination& at(std::size_t c) const { return combos_[c]; }
  std::span<const std::uint16_t> children(std::size_t c) const;
  std::span<const DirectedEdge> edges(std::size_t c) const;
  // Combinations usable when the global root lies in child `yes_child`
  // (or nowhere under the cell when -1).
  const std::vector<std::uint32_t>& bucket(int yes_child) const;
  const EvalPlan& plan(int yes_child) const;

 private:
  int child_count_;
  std::vector<FinePosition> positions_;
  std::vector<int> position_index_;  // child * portal_count + portal
  int portal_count_ = 0;
  std::vector<Combination> combos_;
  std::vector<std::uint16_t> child_ids_;
  std::vector<DirectedEdge> edge_pool_;
  std::vector<std::vector<std::uint32_t>> buckets_;
  std::vector<EvalPlan> plans_;

  EvalPlan make_plan(const std::vector<std::uint32_t>& bucket) const;
};

/// Shared, read-only DP machinery for one (delta, dim, density, crossings).
struct DpModel {
  Config config;
  IndexSpace space;
  CombinationTemplate leaf_template;     // parents at level 1
  CombinationTemplate general_template;  // parents at level >= 2
  std::vector<Table> prototypes;         // empty-cell table per level

  explicit DpModel(const Config& cfg);
  const CombinationTemplate& template_for(int level) const {
    return level == 1 ? leaf_template : general_template;
  }
  // Length of one fine-lattice unit for a parent cell at `level`.
  double fine_unit(int level) const;
};

// Models are cached per (delta, dim, density, crossings) and shared.
std::shared_ptr<const DpModel> shared_model(const Config& cfg);

// ---- consistency predicate -------------------------------------------------

/// An explicit (parent, children, E) triple in cell-local terms, as checked
/// by check_consistency. Edge endpoints index `CombinationTemplate::positions`.
struct CombinationCandidate {
  LocalIndex parent;
  std::vector<LocalIndex> children;
  std::vector<DirectedEdge> edges;
};

/// Independent check of every consistency condition between a parent entry,
/// its 2^d child entries and a directed edge set. `root_child` is the child
/// ordinal holding the designated global root, if any under this cell.
bool check_consistency(const CombinationTemplate& tpl, const IndexSpace& space,
                       const CombinationCandidate& cand, std::optional<int> root_child);

/// All directed cross-child forests over the given per-child position lists
/// (positions are opaque ids; a position may appear in several children).
std::vector<std::vector<DirectedEdge>> enumerate_edge_sets(
    const std::vector<std::vector<std::uint16_t>>& active_per_child);

// ---- evaluation ------------------------------------------------------------

Table evaluate_leaf(const DpModel& model, std::optional<GridPoint> terminal, bool whole_set_inside,
                    bool terminal_is_root);

Table evaluate_cell(const DpModel& model, int level, std::span<const Table* const> child_tables,
                    std::span<const bool> child_has_terminals, int yes_child);

struct CellTable {
  std::size_t occupancy = 0;  // distinct active points inside the cell
  Table entries;
  bool operator==(const CellTable&) const = default;
};

/// Materialized tables of one copy: exactly the cells holding at least one
/// active point. Every other cell resolves to the level prototype.
struct DPStore {
  std::map<CellId, CellTable> tables;

  const Table& table(const DpModel& model, const CellId& c) const;
  bool operator==(const DPStore&) const = default;
};

DPStore solve_static(const DpModel& model, const Quadtree& qt, const ActiveSet& active);

// Adjusts occupancy counts along p's path; call before update_path.
void add_occupancy(DPStore& store, const Quadtree& qt, const GridPoint& p, int delta);

/// Re-evaluates, bottom-up, every cell on the path of each touched point.
/// Returns the number of distinct cells processed.
std::size_t update_path(DPStore& store, const DpModel& model, const Quadtree& qt, const ActiveSet& active,
                        std::span<const GridPoint> touched);

}  // namespace dynsteiner
