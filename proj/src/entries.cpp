#include "dynsteiner/entries.hpp"

#include <algorithm>
#include <bit>

#include "dynsteiner/config.hpp"

namespace dynsteiner {

int popcount(PortalMask m) { return std::popcount(m); }

void Config::validate() const {
  if (!is_power_of_two(delta)) throw DomainError("grid size must be a power of two");
  if (dim < 1) throw DomainError("dimension must be at least 1");
  if (density < 1 || !is_power_of_two(density)) throw DomainError("portal density must be a power of two");
  if (crossings < 1) throw DomainError("crossing cap must be at least 1");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw DomainError("epsilon must lie in (0, 1)");
}

std::uint64_t Config::grid_volume() const {
  std::uint64_t n = 1;
  for (int i = 0; i < dim; ++i) n *= static_cast<std::uint64_t>(delta);
  return n;
}

PortalLattice::PortalLattice(int dim, int density) : dim_(dim), density_(density) {
  if (dim < 1 || density < 1) throw UsageError("invalid lattice parameters");
  std::vector<int> q(static_cast<std::size_t>(dim), 0);
  while (true) {
    bool boundary = false;
    for (int v : q) boundary = boundary || v == 0 || v == density;
    if (boundary) {
      ids_[q] = static_cast<int>(points_.size());
      points_.push_back(q);
    }
    int axis = dim - 1;
    while (axis >= 0 && q[static_cast<std::size_t>(axis)] == density) q[static_cast<std::size_t>(axis--)] = 0;
    if (axis < 0) break;
    ++q[static_cast<std::size_t>(axis)];
  }
  if (points_.size() > 64) throw UsageError("portal lattice too large (more than 64 portals per cell)");
  facets_.assign(static_cast<std::size_t>(2 * dim), 0);
  for (std::size_t id = 0; id < points_.size(); ++id) {
    for (int axis = 0; axis < dim; ++axis) {
      const int v = points_[id][static_cast<std::size_t>(axis)];
      if (v == 0) facets_[static_cast<std::size_t>(2 * axis)] |= PortalMask{1} << id;
      if (v == density) facets_[static_cast<std::size_t>(2 * axis + 1)] |= PortalMask{1} << id;
    }
  }
}

int PortalLattice::id_of(const std::vector<int>& q) const {
  auto it = ids_.find(q);
  return it == ids_.end() ? -1 : it->second;
}

bool PortalLattice::respects_cap(PortalMask active, int cap) const {
  for (PortalMask f : facets_) {
    if (popcount(active & f) > cap) return false;
  }
  return true;
}

namespace {

std::vector<int> bits_of(PortalMask m) {
  std::vector<int> out;
  while (m) {
    out.push_back(std::countr_zero(m));
    m &= m - 1;
  }
  return out;
}

void partitions_rec(const std::vector<int>& elems, std::size_t i, std::vector<PortalMask>& cur,
                    std::vector<std::vector<PortalMask>>& out) {
  if (i == elems.size()) {
    out.push_back(cur);
    return;
  }
  const PortalMask bit = PortalMask{1} << elems[i];
  for (std::size_t p = 0; p < cur.size(); ++p) {
    cur[p] |= bit;
    partitions_rec(elems, i + 1, cur, out);
    cur[p] &= ~bit;
  }
  cur.push_back(bit);
  partitions_rec(elems, i + 1, cur, out);
  cur.pop_back();
}

void put_u8(std::vector<std::uint8_t>& out, int v) { out.push_back(static_cast<std::uint8_t>(v)); }

}  // namespace

std::vector<std::vector<PortalMask>> IndexSpace::partitions(PortalMask active) const {
  std::vector<std::vector<PortalMask>> out;
  std::vector<PortalMask> cur;
  partitions_rec(bits_of(active), 0, cur, out);
  return out;
}

IndexSpace::IndexSpace(int dim, int density, int crossings)
    : lattice_(dim, density), crossings_(crossings) {
  const int n = lattice_.size();
  // Subsets of the portal set honoring the per-facet cap, grown by size.
  std::vector<PortalMask> frontier{0};
  std::vector<PortalMask> all{0};
  while (!frontier.empty()) {
    std::vector<PortalMask> next;
    for (PortalMask m : frontier) {
      const int start = m ? 64 - std::countl_zero(m) : 0;
      for (int id = start; id < n; ++id) {
        const PortalMask grown = m | (PortalMask{1} << id);
        if (lattice_.respects_cap(grown, crossings_)) next.push_back(grown);
      }
    }
    all.insert(all.end(), next.begin(), next.end());
    frontier = std::move(next);
  }

  for (PortalMask a : all) {
    for (auto& parts : partitions(a)) {
      const int np = static_cast<int>(parts.size());
      // yes_part in {-1, 0..np-1}; every other part picks a root among its members.
      for (int yes = -1; yes < np; ++yes) {
        std::vector<std::vector<int>> choices(static_cast<std::size_t>(np));
        for (int p = 0; p < np; ++p) {
          choices[static_cast<std::size_t>(p)] = p == yes ? std::vector<int>{-1} : bits_of(parts[static_cast<std::size_t>(p)]);
        }
        std::vector<std::size_t> pick(static_cast<std::size_t>(np), 0);
        while (true) {
          LocalIndex ix;
          ix.active = a;
          ix.parts = parts;
          ix.yes_part = yes;
          for (int p = 0; p < np; ++p) ix.roots.push_back(choices[static_cast<std::size_t>(p)][pick[static_cast<std::size_t>(p)]]);
          indices_.push_back(std::move(ix));
          int q = np - 1;
          while (q >= 0 && pick[static_cast<std::size_t>(q)] + 1 == choices[static_cast<std::size_t>(q)].size()) pick[static_cast<std::size_t>(q--)] = 0;
          if (q < 0) break;
          ++pick[static_cast<std::size_t>(q)];
        }
        if (np == 0) break;
      }
    }
  }

  std::vector<std::pair<std::vector<std::uint8_t>, std::size_t>> keyed;
  keyed.reserve(indices_.size());
  for (std::size_t i = 0; i < indices_.size(); ++i) keyed.emplace_back(encode_local(indices_[i]), i);
  std::sort(keyed.begin(), keyed.end());
  std::vector<LocalIndex> sorted;
  sorted.reserve(indices_.size());
  for (auto& [key, i] : keyed) sorted.push_back(std::move(indices_[i]));
  indices_ = std::move(sorted);
  if (indices_.size() > 65535) throw UsageError("index space too large for this configuration");
  for (std::size_t i = 0; i < indices_.size(); ++i) lookup_.emplace(indices_[i], i);

  std::vector<std::pair<std::vector<std::uint8_t>, PortalMask>> akeys;
  for (PortalMask a : all) {
    LocalIndex probe;
    probe.active = a;
    akeys.emplace_back(encode_local(probe), a);
  }
  std::sort(akeys.begin(), akeys.end());
  for (auto& [key, a] : akeys) active_sets_.push_back(a);
}

std::optional<std::size_t> IndexSpace::find(const LocalIndex& ix) const {
  auto it = lookup_.find(ix);
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

bool IndexSpace::valid(const LocalIndex& ix, const CellContext& ctx) const {
  if (ctx.leaf && popcount(ix.active) > 1) return false;
  if (!ctx.has_terminal) return ix.yes_part < 0;
  if (ix.active == 0) return ctx.whole_set_inside;
  return ctx.contains_global_root ? ix.yes_part >= 0 : ix.yes_part < 0;
}

std::vector<LocalIndex> enumerate_indices(const IndexSpace& space, const CellContext& ctx) {
  std::vector<LocalIndex> out;
  for (std::size_t i = 0; i < space.size(); ++i) {
    if (space.valid(space.at(i), ctx)) out.push_back(space.at(i));
  }
  return out;
}

std::vector<std::uint8_t> encode_local(const LocalIndex& ix) {
  std::vector<std::uint8_t> out;
  const auto ids = bits_of(ix.active);
  put_u8(out, static_cast<int>(ids.size()));
  for (int id : ids) put_u8(out, id);
  put_u8(out, static_cast<int>(ix.parts.size()));
  for (std::size_t p = 0; p < ix.parts.size(); ++p) {
    const auto members = bits_of(ix.parts[p]);
    put_u8(out, static_cast<int>(members.size()));
    for (int id : members) put_u8(out, id);
    const bool yes = static_cast<int>(p) == ix.yes_part;
    put_u8(out, yes ? 1 : 0);
    put_u8(out, yes ? 0xFF : ix.roots[p]);
  }
  return out;
}

std::vector<std::uint8_t> encode(const EntryIndex& ix) {
  std::vector<std::uint8_t> out;
  put_u8(out, ix.cell.level);
  put_u8(out, static_cast<int>(ix.cell.index.size()));
  for (Coord c : ix.cell.index) {
    // Offset-binary keeps byte order equal to numeric order.
    const auto u = static_cast<std::uint64_t>(c) ^ (std::uint64_t{1} << 63);
    for (int b = 7; b >= 0; --b) out.push_back(static_cast<std::uint8_t>(u >> (8 * b)));
  }
  const auto local = encode_local(ix.local);
  out.insert(out.end(), local.begin(), local.end());
  return out;
}

EntryIndex decode(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 0;
  auto next = [&]() -> std::uint8_t {
    if (pos >= bytes.size()) throw UsageError("decode: truncated entry encoding");
    return bytes[pos++];
  };
  EntryIndex ix;
  ix.cell.level = next();
  const int dim = next();
  for (int i = 0; i < dim; ++i) {
    std::uint64_t u = 0;
    for (int b = 0; b < 8; ++b) u = (u << 8) | next();
    ix.cell.index.push_back(static_cast<Coord>(u ^ (std::uint64_t{1} << 63)));
  }
  const int na = next();
  for (int i = 0; i < na; ++i) ix.local.active |= PortalMask{1} << next();
  const int np = next();
  for (int p = 0; p < np; ++p) {
    const int size = next();
    PortalMask part = 0;
    for (int i = 0; i < size; ++i) part |= PortalMask{1} << next();
    ix.local.parts.push_back(part);
    const bool yes = next() == 1;
    const std::uint8_t root = next();
    if (yes) {
      ix.local.yes_part = p;
      ix.local.roots.push_back(-1);
    } else {
      ix.local.roots.push_back(root);
    }
  }
  if (pos != bytes.size()) throw UsageError("decode: trailing bytes");
  return ix;
}

}  // namespace dynsteiner
