#include "dynsteiner/workload.hpp"

#include <algorithm>
#include <random>
#include <set>

namespace dynsteiner {

GenKind parse_gen_kind(const std::string& name) {
  if (name == "uniform") return GenKind::kUniform;
  if (name == "clustered") return GenKind::kClustered;
  if (name == "churn") return GenKind::kChurn;
  if (name == "adversarial-root") return GenKind::kAdversarialRoot;
  throw UsageError("unknown generator kind: " + name);
}

std::string to_string(GenKind kind) {
  switch (kind) {
    case GenKind::kUniform:
      return "uniform";
    case GenKind::kClustered:
      return "clustered";
    case GenKind::kChurn:
      return "churn";
    case GenKind::kAdversarialRoot:
      return "adversarial-root";
  }
  return "uniform";
}

namespace {

class Builder {
 public:
  explicit Builder(const GenSpec& spec) : spec_(spec), rng_(spec.seed), active_(spec.delta, spec.dim) {}

  GridPoint uniform_point() {
    std::uniform_int_distribution<Coord> coord(1, spec_.delta);
    GridPoint p;
    for (int i = 0; i < spec_.dim; ++i) p.coords.push_back(coord(rng_));
    return p;
  }

  GridPoint near(const GridPoint& centre, double spread) {
    std::normal_distribution<double> off(0.0, spread);
    GridPoint p;
    for (Coord c : centre.coords) {
      const auto v = static_cast<Coord>(std::llround(static_cast<double>(c) + off(rng_)));
      p.coords.push_back(std::clamp<Coord>(v, 1, spec_.delta));
    }
    return p;
  }

  GridPoint random_active() {
    const auto& m = active_.multiplicities();
    std::uniform_int_distribution<std::size_t> pick(0, m.size() - 1);
    return std::next(m.begin(), static_cast<std::ptrdiff_t>(pick(rng_)))->first;
  }

  bool coin(double p) { return std::bernoulli_distribution(p)(rng_); }

  void insert(const GridPoint& p) {
    active_.activate(p);
    ops_.push_back(UpdateOp{p, UpdateKind::kInsert});
  }

  void remove(const GridPoint& p) {
    active_.deactivate(p);
    ops_.push_back(UpdateOp{p, UpdateKind::kDelete});
  }

  const ActiveSet& active() const { return active_; }
  std::vector<UpdateOp> take() { return std::move(ops_); }
  std::mt19937_64& rng() { return rng_; }

 private:
  const GenSpec& spec_;
  std::mt19937_64 rng_;
  ActiveSet active_;
  std::vector<UpdateOp> ops_;
};

}  // namespace

std::vector<UpdateOp> generate(const GenSpec& spec) {
  if (!is_power_of_two(spec.delta) || spec.dim < 1) throw DomainError("invalid grid for workload generation");
  Builder b(spec);
  switch (spec.kind) {
    case GenKind::kUniform:
      for (std::size_t t = 0; t < spec.length; ++t) {
        if (b.active().empty() || b.coin(0.6)) {
          b.insert(b.uniform_point());
        } else {
          b.remove(b.random_active());
        }
      }
      break;
    case GenKind::kClustered: {
      const std::size_t k = std::max<std::size_t>(1, static_cast<std::size_t>(spec.delta / 4));
      std::vector<GridPoint> centres;
      for (std::size_t i = 0; i < k; ++i) centres.push_back(b.uniform_point());
      const double spread = std::max(0.5, static_cast<double>(spec.delta) / 16.0);
      std::uniform_int_distribution<std::size_t> which(0, k - 1);
      for (std::size_t t = 0; t < spec.length; ++t) {
        if (b.active().empty() || b.coin(0.6)) {
          b.insert(b.near(centres[which(b.rng())], spread));
        } else {
          b.remove(b.random_active());
        }
      }
      break;
    }
    case GenKind::kChurn: {
      std::size_t inserts = (spec.length + 1) / 2;
      for (std::size_t t = 0; t < spec.length; ++t) {
        if (inserts > 0 && (b.active().empty() || b.coin(0.5))) {
          b.insert(b.uniform_point());
          --inserts;
        } else {
          b.remove(b.random_active());
        }
      }
      break;
    }
    case GenKind::kAdversarialRoot: {
      std::uint64_t volume = 1;
      for (int i = 0; i < spec.dim; ++i) volume *= static_cast<std::uint64_t>(spec.delta);
      const auto batch = static_cast<std::size_t>(std::min<std::uint64_t>(volume / 2 + 1, 64));
      std::size_t emitted = 0;
      while (emitted < spec.length) {
        std::set<GridPoint> fresh;
        while (fresh.size() < batch) fresh.insert(b.uniform_point());
        const std::vector<GridPoint> order(fresh.rbegin(), fresh.rend());
        for (const auto& p : order) {
          if (emitted == spec.length) break;
          b.insert(p);
          ++emitted;
        }
        for (const auto& p : order) {
          if (emitted == spec.length) break;
          if (!b.active().contains(p)) continue;
          b.remove(p);
          ++emitted;
        }
      }
      break;
    }
  }
  return b.take();
}

}  // namespace dynsteiner
