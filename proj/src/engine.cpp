#include "dynsteiner/engine.hpp"

#include <bit>
#include <stdexcept>

namespace dynsteiner {

Copy::Copy(const Config& cfg, std::shared_ptr<const DpModel> model, Quadtree tree)
    : cfg_(cfg), model_(std::move(model)), tree_(std::move(tree)), active_(cfg.delta, cfg.dim) {}

Copy Copy::initialize(const Config& cfg) {
  cfg.validate();
  auto model = shared_model(cfg);
  Quadtree tree(cfg.delta, cfg.dim, draw_shift(cfg.seed, cfg.delta, cfg.dim));
  Copy c(cfg, std::move(model), std::move(tree));
  c.refresh_weight();
  return c;
}

void Copy::insert(const GridPoint& x) {
  active_.check_in_grid(x);
  const auto old_root = active_.lex_min();
  const bool fresh = !active_.contains(x);
  active_.activate(x);
  apply_change(x, fresh, +1, old_root);
}

void Copy::remove(const GridPoint& x) {
  if (x.dim() != static_cast<std::size_t>(cfg_.dim) || !active_.contains(x)) {
    throw InvalidOperation("delete of a point that is not active");
  }
  const auto old_root = active_.lex_min();
  active_.deactivate(x);
  apply_change(x, !active_.contains(x), -1, old_root);
}

void Copy::apply_change(const GridPoint& x, bool occupancy_changed, int delta,
                        const std::optional<GridPoint>& old_root) {
  const auto new_root = active_.lex_min();
  last_root_changed_ = old_root != new_root;
  if (!occupancy_changed) {
    // Multiplicity only: no table depends on it.
    last_touched_ = 0;
    return;
  }
  add_occupancy(store_, tree_, x, delta);
  std::vector<GridPoint> touched{x};
  // The Yes chain moves from the old root's path to the new one's.
  if (last_root_changed_) {
    if (old_root && *old_root != x) touched.push_back(*old_root);
    if (new_root && *new_root != x) touched.push_back(*new_root);
  }
  last_touched_ = update_path(store_, *model_, tree_, active_, touched);
  refresh_weight();
}

void Copy::refresh_weight() {
  weight_ = store_.table(*model_, tree_.root())[0].weight;
}

std::optional<GridPoint> Copy::global_root() const {
  const auto root = active_.lex_min();
  if (!root) return root;
  // Descend through closed (all-empty) combinations to the first branching.
  CellId cell = tree_.root();
  while (cell.level > 0) {
    const auto& entry = store_.table(*model_, cell)[0];
    const auto& tpl = model_->template_for(cell.level);
    if (entry.combination < 0) throw std::logic_error("root entry has no certificate");
    const auto& combo = tpl.at(static_cast<std::size_t>(entry.combination));
    if (!combo.all_empty) {
      int yes = 0;
      for (auto id : tpl.children(static_cast<std::size_t>(entry.combination))) {
        yes += model_->space.at(id).yes_part >= 0 ? 1 : 0;
      }
      if (yes != 1 || combo.yes_child != tree_.child_ordinal(tree_.cell_at(*root, cell.level - 1))) {
        throw std::logic_error("Yes annotation does not single out the global root");
      }
      break;
    }
    cell = tree_.cell_at(*root, cell.level - 1);
  }
  return root;
}

bool Copy::operator==(const Copy& o) const {
  return tree_.shift() == o.tree_.shift() && active_ == o.active_ && store_ == o.store_ &&
         std::bit_cast<std::uint64_t>(weight_) == std::bit_cast<std::uint64_t>(o.weight_);
}

}  // namespace dynsteiner
