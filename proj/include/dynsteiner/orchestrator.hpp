#pragma once

#include <cstdint>
#include <vector>

#include "dynsteiner/engine.hpp"

namespace dynsteiner {

// Copies kept during phase i: ceil(log2(2^i * n / delta)).
int copies_for_phase(int phase, std::uint64_t n, double fail_prob);
// Phase of global step s >= 1: n(2^i - 2) < s <= n(2^(i+1) - 2).
int phase_of_step(std::uint64_t step, std::uint64_t n);
std::uint64_t copy_seed(std::uint64_t master, std::uint64_t ordinal);

/// Maintains independent copies on the doubling phase schedule and routes
/// queries to the minimum-weight copy.
class Engine {
 public:
  Engine(const Config& cfg, double fail_prob);

  // Validates against the reference multiset first, so a failing op leaves
  // every copy untouched.
  void apply(const UpdateOp& op);

  const Copy& best() const;
  std::size_t best_index() const;
  double best_weight() const { return best().weight(); }

  const std::vector<Copy>& copies() const { return copies_; }
  const ActiveSet& reference() const { return reference_; }
  std::uint64_t steps() const { return steps_; }
  int phase() const { return phase_; }
  double fail_prob() const { return fail_prob_; }
  std::uint64_t grid_volume() const { return n_; }
  // Cells re-evaluated by the last apply, summed over copies.
  std::size_t last_touched() const { return last_touched_; }

 private:
  void grow_to(int count);

  Config cfg_;
  double fail_prob_;
  std::uint64_t n_;
  std::vector<Copy> copies_;
  ActiveSet reference_;
  std::uint64_t steps_ = 0;
  int phase_ = 1;
  std::size_t last_touched_ = 0;
};

}  // namespace dynsteiner
