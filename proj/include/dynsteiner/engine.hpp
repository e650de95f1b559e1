#pragma once

#include <memory>
#include <optional>

#include "dynsteiner/config.hpp"
#include "dynsteiner/geometry.hpp"
#include "dynsteiner/quadtree.hpp"
#include "dynsteiner/solver.hpp"

namespace dynsteiner {

/// One independent copy: a shifted quadtree with its incrementally
/// maintained DP store.
class Copy {
 public:
  static Copy initialize(const Config& cfg);

  void insert(const GridPoint& x);
  // Throws InvalidOperation when x is not active.
  void remove(const GridPoint& x);

  // Root-cell A = {} entry; cached, O(1).
  double weight() const { return weight_; }
  // The designated root (lex-min active point). Also checks that the chosen
  // solution carries exactly one Yes-flagged part at its first branching.
  std::optional<GridPoint> global_root() const;

  const Config& config() const { return cfg_; }
  const DpModel& model() const { return *model_; }
  const Quadtree& tree() const { return tree_; }
  const ActiveSet& active() const { return active_; }
  const DPStore& store() const { return store_; }
  // Testing hook for corruption checks.
  DPStore& mutable_store() { return store_; }

  // Cells re-evaluated by the last update.
  std::size_t last_touched() const { return last_touched_; }
  bool last_root_changed() const { return last_root_changed_; }

  // Byte-level state equality (shift, active multiset, every table).
  bool operator==(const Copy& o) const;

 private:
  Copy(const Config& cfg, std::shared_ptr<const DpModel> model, Quadtree tree);
  void apply_change(const GridPoint& x, bool occupancy_changed, int delta,
                    const std::optional<GridPoint>& old_root);
  void refresh_weight();

  Config cfg_;
  std::shared_ptr<const DpModel> model_;
  Quadtree tree_;
  ActiveSet active_;
  DPStore store_;
  double weight_ = 0.0;
  std::size_t last_touched_ = 0;
  bool last_root_changed_ = false;
};

}  // namespace dynsteiner
