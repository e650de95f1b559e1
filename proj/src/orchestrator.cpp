#include "dynsteiner/orchestrator.hpp"

#include <cmath>

namespace dynsteiner {

int copies_for_phase(int phase, std::uint64_t n, double fail_prob) {
  // Tolerance keeps exact powers of two from rounding up.
  const double v = phase + std::log2(static_cast<double>(n)) - std::log2(fail_prob);
  return static_cast<int>(std::ceil(v - 1e-9));
}

int phase_of_step(std::uint64_t step, std::uint64_t n) {
  if (step == 0) throw UsageError("steps are numbered from 1");
  int i = 1;
  // Upper end of phase i is n(2^(i+1) - 2).
  while (step > n * ((std::uint64_t{1} << (i + 1)) - 2)) ++i;
  return i;
}

std::uint64_t copy_seed(std::uint64_t master, std::uint64_t ordinal) {
  // splitmix64 over the pair
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (ordinal + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Engine::Engine(const Config& cfg, double fail_prob)
    : cfg_(cfg), fail_prob_(fail_prob), n_(cfg.grid_volume()), reference_(cfg.delta, cfg.dim) {
  cfg.validate();
  if (!(fail_prob > 0.0 && fail_prob < 1.0)) throw DomainError("failure probability must lie in (0, 1)");
  grow_to(copies_for_phase(1, n_, fail_prob_));
}

void Engine::grow_to(int count) {
  while (static_cast<int>(copies_.size()) < count) {
    Config c = cfg_;
    c.seed = copy_seed(cfg_.seed, copies_.size());
    Copy copy = Copy::initialize(c);
    for (const auto& [p, m] : reference_.multiplicities()) {
      for (int i = 0; i < m; ++i) copy.insert(p);
    }
    copies_.push_back(std::move(copy));
  }
}

void Engine::apply(const UpdateOp& op) {
  if (op.kind == UpdateKind::kInsert) {
    reference_.check_in_grid(op.point);
  } else if (!reference_.contains(op.point)) {
    throw InvalidOperation("delete of a point that is not active");
  }
  const std::uint64_t step = steps_ + 1;
  const int ph = phase_of_step(step, n_);
  if (ph != phase_) {
    phase_ = ph;
    grow_to(copies_for_phase(ph, n_, fail_prob_));
  }
  last_touched_ = 0;
  for (auto& c : copies_) {
    if (op.kind == UpdateKind::kInsert) {
      c.insert(op.point);
    } else {
      c.remove(op.point);
    }
    last_touched_ += c.last_touched();
  }
  if (op.kind == UpdateKind::kInsert) {
    reference_.activate(op.point);
  } else {
    reference_.deactivate(op.point);
  }
  steps_ = step;
}

std::size_t Engine::best_index() const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < copies_.size(); ++i) {
    if (copies_[i].weight() < copies_[best].weight()) best = i;
  }
  return best;
}

const Copy& Engine::best() const { return copies_[best_index()]; }

}  // namespace dynsteiner
