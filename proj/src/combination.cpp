#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <string>

#include "dynsteiner/solver.hpp"

namespace dynsteiner {

namespace {

// Beyond this the one-off transition enumeration takes hours.
constexpr double kMaxChildTuples = 2e5;

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(static_cast<std::size_t>(n)) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  }
  // False when a and b were already connected.
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
    return true;
  }
};

std::vector<int> mask_bits(PortalMask m) {
  std::vector<int> out;
  while (m) {
    out.push_back(std::countr_zero(m));
    m &= m - 1;
  }
  return out;
}

struct ChildOption {
  PortalMask active = 0;
  std::vector<PortalMask> parts;
};

struct PartNode {
  int child = 0;
  int part = 0;
  std::vector<int> positions;  // fine position ids
};

// Builds the transitions of one cell by enumerating child (A, Pi) tuples,
// undirected cross-child forests, exposed parent portals and component
// sources; orientation (child phi, edge directions) follows from the source.
class Generator {
 public:
  Generator(const IndexSpace& space, bool leaf_children, std::vector<FinePosition>& positions,
            std::vector<Combination>& combos, std::vector<std::uint16_t>& child_ids,
            std::vector<DirectedEdge>& edges)
      : space_(space), lat_(space.lattice()), positions_(positions), combos_(combos),
        child_ids_(child_ids), edges_(edges) {
    nc_ = 1 << lat_.dim();
    build_positions();
    for (PortalMask a : space_.active_sets()) {
      if (leaf_children && popcount(a) > 1) continue;
      for (auto& parts : space_.partitions(a)) options_.push_back(ChildOption{a, parts});
    }
    double tuples = 1.0;
    for (int j = 0; j < nc_; ++j) tuples *= static_cast<double>(options_.size());
    if (tuples > kMaxChildTuples) {
      throw UsageError("portal density / crossing cap too large for this dimension: " +
                       std::to_string(static_cast<unsigned long long>(tuples)) + " child tuples per cell");
    }
    choice_.assign(static_cast<std::size_t>(nc_), 0);
  }

  void run() { choose(0); }

 private:
  void build_positions() {
    const int d = lat_.dim();
    const int k = lat_.density();
    std::vector<int> q(static_cast<std::size_t>(d), 0);
    pos_of_.assign(static_cast<std::size_t>(nc_), std::vector<int>(static_cast<std::size_t>(lat_.size()), -1));
    while (true) {
      FinePosition fp;
      fp.coords = q;
      fp.child_portal.assign(static_cast<std::size_t>(nc_), -1);
      for (int j = 0; j < nc_; ++j) {
        std::vector<int> local(static_cast<std::size_t>(d));
        bool inside = true;
        for (int i = 0; i < d; ++i) {
          local[static_cast<std::size_t>(i)] = q[static_cast<std::size_t>(i)] - ((j >> i) & 1) * k;
          inside = inside && local[static_cast<std::size_t>(i)] >= 0 && local[static_cast<std::size_t>(i)] <= k;
        }
        if (!inside) continue;
        const int id = lat_.id_of(local);
        if (id >= 0) {
          fp.child_portal[static_cast<std::size_t>(j)] = id;
          fp.child_mask |= 1u << j;
        }
      }
      bool even = true;
      std::vector<int> half(static_cast<std::size_t>(d));
      for (int i = 0; i < d; ++i) {
        even = even && q[static_cast<std::size_t>(i)] % 2 == 0;
        half[static_cast<std::size_t>(i)] = q[static_cast<std::size_t>(i)] / 2;
      }
      if (even) fp.parent_portal = lat_.id_of(half);
      if (fp.child_mask != 0) {
        const int pid = static_cast<int>(positions_.size());
        for (int j = 0; j < nc_; ++j) {
          if (fp.child_portal[static_cast<std::size_t>(j)] >= 0) {
            pos_of_[static_cast<std::size_t>(j)][static_cast<std::size_t>(fp.child_portal[static_cast<std::size_t>(j)])] = pid;
          }
        }
        positions_.push_back(std::move(fp));
      }
      int axis = d - 1;
      while (axis >= 0 && q[static_cast<std::size_t>(axis)] == 2 * k) q[static_cast<std::size_t>(axis--)] = 0;
      if (axis < 0) break;
      ++q[static_cast<std::size_t>(axis)];
    }
  }

  void choose(int j) {
    if (j == nc_) {
      process_tuple();
      return;
    }
    for (std::size_t o = 0; o < options_.size(); ++o) {
      choice_[static_cast<std::size_t>(j)] = o;
      choose(j + 1);
    }
  }

  const ChildOption& option(int j) const { return options_[choice_[static_cast<std::size_t>(j)]]; }

  void process_tuple() {
    parts_.clear();
    for (int j = 0; j < nc_; ++j) {
      const auto& opt = option(j);
      for (std::size_t p = 0; p < opt.parts.size(); ++p) {
        PartNode node{j, static_cast<int>(p), {}};
        for (int pid : mask_bits(opt.parts[p])) {
          node.positions.push_back(pos_of_[static_cast<std::size_t>(j)][static_cast<std::size_t>(pid)]);
        }
        parts_.push_back(std::move(node));
      }
    }
    if (parts_.empty()) {
      emit_all_empty();
      return;
    }
    // Node ids: parts first, then used positions.
    used_.clear();
    node_of_pos_.assign(positions_.size(), -1);
    part_count_.assign(positions_.size(), 0);
    for (const auto& part : parts_) {
      for (int pos : part.positions) {
        if (part_count_[static_cast<std::size_t>(pos)]++ == 0) used_.push_back(pos);
      }
    }
    std::sort(used_.begin(), used_.end());
    const int np = static_cast<int>(parts_.size());
    for (std::size_t i = 0; i < used_.size(); ++i) node_of_pos_[static_cast<std::size_t>(used_[i])] = np + static_cast<int>(i);
    node_count_ = np + static_cast<int>(used_.size());

    UnionFind uf(node_count_);
    for (int p = 0; p < np; ++p) {
      for (int pos : parts_[static_cast<std::size_t>(p)].positions) {
        if (!uf.unite(p, node_of_pos_[static_cast<std::size_t>(pos)])) return;  // shared-portal cycle
      }
    }
    // Children in which each position is active; an edge may not join two
    // portals active in the same child.
    std::vector<std::uint32_t> active_in(positions_.size(), 0);
    for (const auto& part : parts_) {
      for (int pos : part.positions) active_in[static_cast<std::size_t>(pos)] |= 1u << part.child;
    }
    candidates_.clear();
    for (std::size_t a = 0; a < used_.size(); ++a) {
      for (std::size_t b = a + 1; b < used_.size(); ++b) {
        if ((active_in[static_cast<std::size_t>(used_[a])] & active_in[static_cast<std::size_t>(used_[b])]) == 0) {
          candidates_.emplace_back(used_[a], used_[b]);
        }
      }
    }
    chosen_.clear();
    choose_edges(0, uf);
  }

  void choose_edges(std::size_t i, const UnionFind& uf) {
    if (i == candidates_.size()) {
      process_edges(uf);
      return;
    }
    choose_edges(i + 1, uf);
    UnionFind next = uf;
    const auto [a, b] = candidates_[i];
    if (next.unite(node_of_pos_[static_cast<std::size_t>(a)], node_of_pos_[static_cast<std::size_t>(b)])) {
      chosen_.push_back(candidates_[i]);
      choose_edges(i + 1, next);
      chosen_.pop_back();
    }
  }

  void process_edges(UnionFind uf) {
    std::vector<char> incident(positions_.size(), 0);
    for (auto [a, b] : chosen_) incident[static_cast<std::size_t>(a)] = incident[static_cast<std::size_t>(b)] = 1;
    std::vector<int> forced, optional;
    for (int pos : used_) {
      const auto& fp = positions_[static_cast<std::size_t>(pos)];
      const bool inc = incident[static_cast<std::size_t>(pos)] != 0;
      if (fp.parent_portal < 0) {
        if (!inc && part_count_[static_cast<std::size_t>(pos)] < 2) return;  // dangling portal
      } else if (inc) {
        optional.push_back(pos);
      } else {
        forced.push_back(pos);
      }
    }
    // Components, ordered by their smallest node id.
    const int np = static_cast<int>(parts_.size());
    std::vector<int> comp_of_node(static_cast<std::size_t>(node_count_));
    std::vector<int> comp_root;
    for (int n = 0; n < node_count_; ++n) {
      const int r = uf.find(n);
      auto it = std::find(comp_root.begin(), comp_root.end(), r);
      if (it == comp_root.end()) {
        comp_of_node[static_cast<std::size_t>(n)] = static_cast<int>(comp_root.size());
        comp_root.push_back(r);
      } else {
        comp_of_node[static_cast<std::size_t>(n)] = static_cast<int>(it - comp_root.begin());
      }
    }
    const int ncomp = static_cast<int>(comp_root.size());

    // Adjacency for orientation.
    adj_.assign(static_cast<std::size_t>(node_count_), {});
    for (int p = 0; p < np; ++p) {
      for (int pos : parts_[static_cast<std::size_t>(p)].positions) {
        const int n = node_of_pos_[static_cast<std::size_t>(pos)];
        adj_[static_cast<std::size_t>(p)].push_back(n);
        adj_[static_cast<std::size_t>(n)].push_back(p);
      }
    }
    for (auto [a, b] : chosen_) {
      const int na = node_of_pos_[static_cast<std::size_t>(a)];
      const int nb = node_of_pos_[static_cast<std::size_t>(b)];
      adj_[static_cast<std::size_t>(na)].push_back(nb);
      adj_[static_cast<std::size_t>(nb)].push_back(na);
    }

    const std::size_t nopt = optional.size();
    for (std::uint32_t sub = 0; sub < (1u << nopt); ++sub) {
      std::vector<int> exposed = forced;
      for (std::size_t i = 0; i < nopt; ++i) {
        if (sub & (1u << i)) exposed.push_back(optional[i]);
      }
      PortalMask pmask = 0;
      for (int pos : exposed) pmask |= PortalMask{1} << positions_[static_cast<std::size_t>(pos)].parent_portal;
      if (!lat_.respects_cap(pmask, space_.crossings())) continue;

      std::vector<std::vector<int>> comp_exposed(static_cast<std::size_t>(ncomp));
      for (int pos : exposed) {
        comp_exposed[static_cast<std::size_t>(comp_of_node[static_cast<std::size_t>(node_of_pos_[static_cast<std::size_t>(pos)])])].push_back(pos);
      }
      if (pmask != 0) {
        bool all_reach = true;
        for (const auto& ce : comp_exposed) all_reach = all_reach && !ce.empty();
        if (!all_reach) continue;
      } else if (ncomp != 1) {
        continue;
      }
      // Source of the global root: none, or one child part.
      const int yes_lo = pmask == 0 ? 0 : -1;
      for (int yes = yes_lo; yes < np; ++yes) {
        const int yes_comp = yes >= 0 ? comp_of_node[static_cast<std::size_t>(yes)] : -1;
        std::vector<int> pick(static_cast<std::size_t>(ncomp), 0);
        while (true) {
          emit(yes, yes_comp, comp_exposed, pick, pmask);
          int c = ncomp - 1;
          while (c >= 0 && (c == yes_comp || pick[static_cast<std::size_t>(c)] + 1 >= static_cast<int>(comp_exposed[static_cast<std::size_t>(c)].size()))) {
            pick[static_cast<std::size_t>(c)] = 0;
            --c;
          }
          if (c < 0) break;
          ++pick[static_cast<std::size_t>(c)];
        }
      }
    }
  }

  void emit(int yes, int yes_comp, const std::vector<std::vector<int>>& comp_exposed, const std::vector<int>& pick, PortalMask pmask) {
    const int np = static_cast<int>(parts_.size());
    const int ncomp = static_cast<int>(comp_exposed.size());
    // Orient every component from its source.
    std::vector<int> parent(static_cast<std::size_t>(node_count_), -2);
    std::vector<int> queue;
    for (int c = 0; c < ncomp; ++c) {
      const int src = c == yes_comp
                          ? yes
                          : node_of_pos_[static_cast<std::size_t>(comp_exposed[static_cast<std::size_t>(c)][static_cast<std::size_t>(pick[static_cast<std::size_t>(c)])])];
      parent[static_cast<std::size_t>(src)] = -1;
      queue.push_back(src);
    }
    for (std::size_t qi = 0; qi < queue.size(); ++qi) {
      const int n = queue[qi];
      for (int m : adj_[static_cast<std::size_t>(n)]) {
        if (parent[static_cast<std::size_t>(m)] == -2) {
          parent[static_cast<std::size_t>(m)] = n;
          queue.push_back(m);
        }
      }
    }
    // Child entries.
    std::vector<LocalIndex> children(static_cast<std::size_t>(nc_));
    for (int j = 0; j < nc_; ++j) {
      children[static_cast<std::size_t>(j)].active = option(j).active;
      children[static_cast<std::size_t>(j)].parts = option(j).parts;
    }
    for (int p = 0; p < np; ++p) {
      const auto& part = parts_[static_cast<std::size_t>(p)];
      auto& ch = children[static_cast<std::size_t>(part.child)];
      if (p == yes) {
        ch.yes_part = part.part;
        ch.roots.push_back(-1);
      } else {
        const int via = parent[static_cast<std::size_t>(p)];
        const int pos = used_[static_cast<std::size_t>(via - np)];
        ch.roots.push_back(positions_[static_cast<std::size_t>(pos)].child_portal[static_cast<std::size_t>(part.child)]);
      }
    }
    // Parent entry.
    LocalIndex par;
    par.active = pmask;
    if (pmask != 0) {
      std::vector<std::pair<PortalMask, int>> comps;  // (part mask, comp)
      for (int c = 0; c < ncomp; ++c) {
        PortalMask m = 0;
        for (int pos : comp_exposed[static_cast<std::size_t>(c)]) m |= PortalMask{1} << positions_[static_cast<std::size_t>(pos)].parent_portal;
        comps.emplace_back(m, c);
      }
      std::sort(comps.begin(), comps.end(), [](const auto& x, const auto& y) {
        return std::countr_zero(x.first) < std::countr_zero(y.first);
      });
      for (std::size_t i = 0; i < comps.size(); ++i) {
        const auto [m, c] = comps[i];
        par.parts.push_back(m);
        if (c == yes_comp) {
          par.yes_part = static_cast<int>(i);
          par.roots.push_back(-1);
        } else {
          const int pos = comp_exposed[static_cast<std::size_t>(c)][static_cast<std::size_t>(pick[static_cast<std::size_t>(c)])];
          par.roots.push_back(positions_[static_cast<std::size_t>(pos)].parent_portal);
        }
      }
    }
    Combination combo;
    combo.child_offset = static_cast<std::uint32_t>(child_ids_.size());
    for (const auto& ch : children) {
      const auto id = space_.find(ch);
      if (!id) return;
      child_ids_.push_back(static_cast<std::uint16_t>(*id));
    }
    const auto pid = space_.find(par);
    if (!pid) {
      child_ids_.resize(combo.child_offset);
      return;
    }
    combo.parent = static_cast<std::uint16_t>(*pid);
    combo.yes_child = static_cast<std::int8_t>(yes >= 0 ? parts_[static_cast<std::size_t>(yes)].child : -1);
    std::vector<DirectedEdge> directed;
    for (auto [a, b] : chosen_) {
      const int na = node_of_pos_[static_cast<std::size_t>(a)];
      const int nb = node_of_pos_[static_cast<std::size_t>(b)];
      if (parent[static_cast<std::size_t>(nb)] == na) {
        directed.push_back({static_cast<std::uint16_t>(a), static_cast<std::uint16_t>(b)});
      } else {
        directed.push_back({static_cast<std::uint16_t>(b), static_cast<std::uint16_t>(a)});
      }
    }
    std::sort(directed.begin(), directed.end());
    combo.edge_offset = static_cast<std::uint32_t>(edges_.size());
    combo.edge_count = static_cast<std::uint16_t>(directed.size());
    for (const auto& e : directed) {
      edges_.push_back(e);
      combo.edge_units += edge_length(e.tail, e.head);
    }
    combos_.push_back(combo);
  }

  void emit_all_empty() {
    Combination combo;
    combo.child_offset = static_cast<std::uint32_t>(child_ids_.size());
    for (int j = 0; j < nc_; ++j) child_ids_.push_back(0);
    combo.edge_offset = static_cast<std::uint32_t>(edges_.size());
    combo.all_empty = true;
    combos_.push_back(combo);
  }

  double edge_length(int a, int b) const {
    double s = 0.0;
    const auto& ca = positions_[static_cast<std::size_t>(a)].coords;
    const auto& cb = positions_[static_cast<std::size_t>(b)].coords;
    for (std::size_t i = 0; i < ca.size(); ++i) {
      const double diff = ca[i] - cb[i];
      s += diff * diff;
    }
    return std::sqrt(s);
  }

  const IndexSpace& space_;
  const PortalLattice& lat_;
  std::vector<FinePosition>& positions_;
  std::vector<Combination>& combos_;
  std::vector<std::uint16_t>& child_ids_;
  std::vector<DirectedEdge>& edges_;
  int nc_ = 0;
  std::vector<std::vector<int>> pos_of_;
  std::vector<ChildOption> options_;
  std::vector<std::size_t> choice_;
  std::vector<PartNode> parts_;
  std::vector<int> used_;
  std::vector<int> node_of_pos_;
  std::vector<int> part_count_;
  int node_count_ = 0;
  std::vector<std::pair<int, int>> candidates_;
  std::vector<std::pair<int, int>> chosen_;
  std::vector<std::vector<int>> adj_;
};

}  // namespace

CombinationTemplate::CombinationTemplate(const IndexSpace& space, bool leaf_children)
    : child_count_(1 << space.lattice().dim()) {
  std::vector<Combination> raw;
  std::vector<std::uint16_t> raw_children;
  std::vector<DirectedEdge> raw_edges;
  Generator gen(space, leaf_children, positions_, raw, raw_children, raw_edges);
  gen.run();
  portal_count_ = space.lattice().size();
  position_index_.assign(static_cast<std::size_t>(child_count_ * portal_count_), -1);
  for (std::size_t i = 0; i < positions_.size(); ++i) {
    for (int j = 0; j < child_count_; ++j) {
      const int q = positions_[i].child_portal[static_cast<std::size_t>(j)];
      if (q >= 0) position_index_[static_cast<std::size_t>(j * portal_count_ + q)] = static_cast<int>(i);
    }
  }

  const auto nc = static_cast<std::size_t>(child_count_);
  std::vector<std::uint32_t> order(raw.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](std::uint32_t x, std::uint32_t y) {
    const auto& a = raw[x];
    const auto& b = raw[y];
    const auto* ca = raw_children.data() + a.child_offset;
    const auto* cb = raw_children.data() + b.child_offset;
    if (!std::equal(ca, ca + nc, cb)) return std::lexicographical_compare(ca, ca + nc, cb, cb + nc);
    const auto* ea = raw_edges.data() + a.edge_offset;
    const auto* eb = raw_edges.data() + b.edge_offset;
    if (!std::equal(ea, ea + a.edge_count, eb, eb + b.edge_count)) {
      return std::lexicographical_compare(ea, ea + a.edge_count, eb, eb + b.edge_count);
    }
    return a.parent < b.parent;
  });
  combos_.reserve(raw.size());
  child_ids_.reserve(raw_children.size());
  edge_pool_.reserve(raw_edges.size());
  buckets_.assign(nc + 1, {});
  for (std::uint32_t o : order) {
    Combination c = raw[o];
    const auto* ch = raw_children.data() + c.child_offset;
    const auto* ed = raw_edges.data() + c.edge_offset;
    c.child_offset = static_cast<std::uint32_t>(child_ids_.size());
    child_ids_.insert(child_ids_.end(), ch, ch + nc);
    c.edge_offset = static_cast<std::uint32_t>(edge_pool_.size());
    edge_pool_.insert(edge_pool_.end(), ed, ed + c.edge_count);
    const auto id = static_cast<std::uint32_t>(combos_.size());
    combos_.push_back(c);
    if (c.all_empty) {
      for (auto& b : buckets_) b.push_back(id);
    } else {
      buckets_[static_cast<std::size_t>(c.yes_child + 1)].push_back(id);
    }
  }
  for (const auto& b : buckets_) plans_.push_back(make_plan(b));
}

EvalPlan CombinationTemplate::make_plan(const std::vector<std::uint32_t>& bucket) const {
  const auto nc = static_cast<std::size_t>(child_count_);
  EvalPlan plan;
  std::map<std::uint16_t, double> best;  // per parent, inside the current group
  for (std::size_t i = 0; i < bucket.size(); ++i) {
    const auto cid = bucket[i];
    const Combination& c = combos_[cid];
    const bool fresh = plan.groups.empty() || c.all_empty || plan.groups.back().all_empty ||
                       !std::ranges::equal(children(cid), children(plan.groups.back().first_combo));
    if (fresh) {
      const auto at = static_cast<std::uint32_t>(plan.entries.size());
      plan.groups.push_back({cid, at, at, c.all_empty});
      best.clear();
    }
    auto it = best.find(c.parent);
    if (it != best.end() && !(c.edge_units < it->second)) continue;
    best[c.parent] = c.edge_units;
    plan.entries.push_back({c.edge_units, cid, c.parent});
    plan.groups.back().end = static_cast<std::uint32_t>(plan.entries.size());
  }
  const std::size_t ng = plan.groups.size();
  plan.skip.assign(ng * nc, static_cast<std::uint32_t>(ng));
  for (std::size_t g = ng; g-- > 0;) {
    const auto ids = children(plan.groups[g].first_combo);
    for (std::size_t j = 0; j < nc; ++j) {
      std::size_t h = g + 1;
      // Skip along the chain of groups sharing prefix 0..j.
      while (h < ng) {
        if (plan.groups[h].all_empty) break;
        const auto other = children(plan.groups[h].first_combo);
        if (!std::equal(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(j) + 1, other.begin())) break;
        h = plan.skip[h * nc + j];
      }
      plan.skip[g * nc + j] = static_cast<std::uint32_t>(h);
    }
  }
  return plan;
}

const EvalPlan& CombinationTemplate::plan(int yes_child) const {
  return plans_.at(static_cast<std::size_t>(yes_child + 1));
}

int CombinationTemplate::position_of(int child, int portal) const {
  return position_index_.at(static_cast<std::size_t>(child * portal_count_ + portal));
}

std::span<const std::uint16_t> CombinationTemplate::children(std::size_t c) const {
  return {child_ids_.data() + combos_[c].child_offset, static_cast<std::size_t>(child_count_)};
}

std::span<const DirectedEdge> CombinationTemplate::edges(std::size_t c) const {
  return {edge_pool_.data() + combos_[c].edge_offset, combos_[c].edge_count};
}

const std::vector<std::uint32_t>& CombinationTemplate::bucket(int yes_child) const {
  return buckets_.at(static_cast<std::size_t>(yes_child + 1));
}

}  // namespace dynsteiner
