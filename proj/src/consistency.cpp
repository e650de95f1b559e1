#include <algorithm>
#include <bit>
#include <map>
#include <numeric>
#include <set>

#include "dynsteiner/solver.hpp"

namespace dynsteiner {

namespace {

struct Dsu {
  std::vector<int> p;
  explicit Dsu(std::size_t n) : p(n) { std::iota(p.begin(), p.end(), 0); }
  int find(int x) { return p[static_cast<std::size_t>(x)] == x ? x : p[static_cast<std::size_t>(x)] = find(p[static_cast<std::size_t>(x)]); }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    p[static_cast<std::size_t>(a)] = b;
    return true;
  }
};

}  // namespace

bool check_consistency(const CombinationTemplate& tpl, const IndexSpace& space,
                       const CombinationCandidate& cand, std::optional<int> root_child) {
  const auto& pos = tpl.positions();
  const int nc = tpl.child_count();
  if (static_cast<int>(cand.children.size()) != nc) return false;
  const auto& lat = space.lattice();

  // Supernodes: one per child part; one node per distinct position in use.
  struct Part {
    int child, index;
    std::vector<int> positions;
    bool yes;
    int root_position;  // -1 for the yes part
  };
  std::vector<Part> parts;
  std::map<int, int> pos_node;
  auto position_of = [&](int child, int portal) {
    for (std::size_t i = 0; i < pos.size(); ++i) {
      if (pos[i].child_portal[static_cast<std::size_t>(child)] == portal) return static_cast<int>(i);
    }
    return -1;
  };
  int yes_count = 0;
  for (int j = 0; j < nc; ++j) {
    const auto& ch = cand.children[static_cast<std::size_t>(j)];
    PortalMask covered = 0;
    for (std::size_t p = 0; p < ch.parts.size(); ++p) {
      if (ch.parts[p] & covered) return false;
      covered |= ch.parts[p];
      Part part{j, static_cast<int>(p), {}, static_cast<int>(p) == ch.yes_part, -1};
      for (PortalMask m = ch.parts[p]; m; m &= m - 1) {
        const int fp = position_of(j, std::countr_zero(m));
        if (fp < 0) return false;
        part.positions.push_back(fp);
        pos_node.emplace(fp, 0);
      }
      if (!part.yes) {
        if (ch.roots[p] < 0 || !(ch.parts[p] >> ch.roots[p] & 1)) return false;
        part.root_position = position_of(j, ch.roots[p]);
      }
      yes_count += part.yes ? 1 : 0;
      parts.push_back(std::move(part));
    }
    if (covered != ch.active) return false;
    // Yes flags may only appear under the designated root, exactly once there.
    const bool is_root_child = root_child && *root_child == j;
    if (ch.yes_part >= 0 && !is_root_child) return false;
    if (is_root_child && ch.active != 0 && ch.yes_part < 0) return false;
  }
  if (yes_count > 1) return false;

  const int np = static_cast<int>(parts.size());
  int next = np;
  for (auto& [fp, node] : pos_node) node = next++;
  const auto node_count = static_cast<std::size_t>(next);

  // (1) forest over supernodes, shared portals counted as connections.
  Dsu dsu(node_count);
  std::vector<std::vector<int>> adj(node_count);
  for (int p = 0; p < np; ++p) {
    for (int fp : parts[static_cast<std::size_t>(p)].positions) {
      const int n = pos_node.at(fp);
      if (!dsu.unite(p, n)) return false;
      adj[static_cast<std::size_t>(p)].push_back(n);
      adj[static_cast<std::size_t>(n)].push_back(p);
    }
  }
  std::map<int, std::uint32_t> active_in;
  for (const auto& part : parts) {
    for (int fp : part.positions) active_in[fp] |= 1u << part.child;
  }
  std::map<int, int> incoming, incident;
  for (const auto& e : cand.edges) {
    if (!pos_node.count(e.tail) || !pos_node.count(e.head)) return false;
    // Endpoints must be active in different child cells.
    if (active_in[e.tail] & active_in[e.head]) return false;
    const int a = pos_node.at(e.tail);
    const int b = pos_node.at(e.head);
    if (!dsu.unite(a, b)) return false;
    adj[static_cast<std::size_t>(a)].push_back(b);
    adj[static_cast<std::size_t>(b)].push_back(a);
    ++incoming[e.head];
    ++incident[e.head];
    ++incident[e.tail];
  }

  // (3) only part roots receive edges.
  for (const auto& [fp, cnt] : incoming) {
    if (cnt > 1) return false;
    for (const auto& part : parts) {
      if (std::find(part.positions.begin(), part.positions.end(), fp) == part.positions.end()) continue;
      if (part.yes || part.root_position != fp) return false;
    }
  }

  // (5) dangling portals and mandatory exposure.
  std::map<int, int> part_count;
  for (const auto& part : parts) {
    for (int fp : part.positions) ++part_count[fp];
  }
  for (const auto& [fp, node] : pos_node) {
    const bool inc = incident.count(fp) > 0;
    const int pp = pos[static_cast<std::size_t>(fp)].parent_portal;
    if (pp < 0) {
      if (!inc && part_count[fp] < 2) return false;
    } else if (!inc && !(cand.parent.active >> pp & 1)) {
      return false;
    }
  }
  // Parent portals must be backed by a child portal at the same position.
  for (PortalMask m = cand.parent.active; m; m &= m - 1) {
    const int pp = std::countr_zero(m);
    bool backed = false;
    for (const auto& [fp, node] : pos_node) backed = backed || pos[static_cast<std::size_t>(fp)].parent_portal == pp;
    if (!backed) return false;
  }
  if (!lat.respects_cap(cand.parent.active, space.crossings())) return false;

  // (4) merged components restricted to A must equal the parent partition.
  std::map<int, PortalMask> comp_mask;
  std::map<int, int> comp_yes;
  for (int p = 0; p < np; ++p) {
    comp_mask[dsu.find(p)] |= 0;
    if (parts[static_cast<std::size_t>(p)].yes) comp_yes[dsu.find(p)] = p;
  }
  for (const auto& [fp, node] : pos_node) {
    const int pp = pos[static_cast<std::size_t>(fp)].parent_portal;
    if (pp >= 0 && (cand.parent.active >> pp & 1)) comp_mask[dsu.find(node)] |= PortalMask{1} << pp;
  }
  if (cand.parent.active == 0) {
    if (np == 0) return cand.edges.empty() && cand.parent.parts.empty();
    if (comp_mask.size() != 1 || comp_yes.empty()) return false;
  } else {
    std::vector<PortalMask> merged;
    for (const auto& [c, m] : comp_mask) {
      if (m == 0) return false;
      merged.push_back(m);
    }
    std::vector<PortalMask> given = cand.parent.parts;
    std::sort(merged.begin(), merged.end());
    std::sort(given.begin(), given.end());
    if (merged != given) return false;
  }

  // (2) + (6) orientation: from the yes part, or from the declared part root.
  std::vector<int> bfs_parent(node_count, -2);
  std::vector<int> queue;
  for (const auto& [c, m] : comp_mask) {
    int src = -1;
    auto yit = comp_yes.find(c);
    int parent_part = -1;
    for (std::size_t i = 0; i < cand.parent.parts.size(); ++i) {
      if (cand.parent.parts[i] == m && m != 0) parent_part = static_cast<int>(i);
    }
    const bool parent_yes = parent_part >= 0 && parent_part == cand.parent.yes_part;
    if (yit != comp_yes.end()) {
      if (m != 0 && !parent_yes) return false;
      src = yit->second;
    } else {
      if (parent_yes || parent_part < 0) return false;
      const int rp = cand.parent.roots[static_cast<std::size_t>(parent_part)];
      if (rp < 0 || !(m >> rp & 1)) return false;
      for (const auto& [fp, node] : pos_node) {
        if (pos[static_cast<std::size_t>(fp)].parent_portal == rp) src = node;
      }
    }
    bfs_parent[static_cast<std::size_t>(src)] = -1;
    queue.push_back(src);
  }
  for (std::size_t qi = 0; qi < queue.size(); ++qi) {
    const int n = queue[qi];
    for (int m : adj[static_cast<std::size_t>(n)]) {
      if (bfs_parent[static_cast<std::size_t>(m)] == -2) {
        bfs_parent[static_cast<std::size_t>(m)] = n;
        queue.push_back(m);
      }
    }
  }
  for (int p = 0; p < np; ++p) {
    const auto& part = parts[static_cast<std::size_t>(p)];
    if (part.yes) continue;
    if (bfs_parent[static_cast<std::size_t>(p)] != pos_node.at(part.root_position)) return false;
  }
  for (const auto& e : cand.edges) {
    if (bfs_parent[static_cast<std::size_t>(pos_node.at(e.head))] != pos_node.at(e.tail)) return false;
  }
  return true;
}

std::vector<std::vector<DirectedEdge>> enumerate_edge_sets(
    const std::vector<std::vector<std::uint16_t>>& active_per_child) {
  std::set<std::uint16_t> all;
  for (const auto& list : active_per_child) all.insert(list.begin(), list.end());
  const std::vector<std::uint16_t> nodes(all.begin(), all.end());
  auto share_child = [&](std::uint16_t a, std::uint16_t b) {
    for (const auto& list : active_per_child) {
      const bool ha = std::find(list.begin(), list.end(), a) != list.end();
      const bool hb = std::find(list.begin(), list.end(), b) != list.end();
      if (ha && hb) return true;
    }
    return false;
  };
  std::vector<std::pair<std::uint16_t, std::uint16_t>> cand;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (std::size_t j = i + 1; j < nodes.size(); ++j) {
      if (!share_child(nodes[i], nodes[j])) cand.emplace_back(nodes[i], nodes[j]);
    }
  }
  std::vector<std::vector<DirectedEdge>> out;
  std::vector<DirectedEdge> cur;
  auto index_of = [&](std::uint16_t v) {
    return static_cast<int>(std::lower_bound(nodes.begin(), nodes.end(), v) - nodes.begin());
  };
  auto rec = [&](auto&& self, std::size_t i, Dsu dsu) -> void {
    if (i == cand.size()) {
      auto sorted = cur;
      std::sort(sorted.begin(), sorted.end());
      out.push_back(std::move(sorted));
      return;
    }
    self(self, i + 1, dsu);
    const auto [a, b] = cand[i];
    if (dsu.unite(index_of(a), index_of(b))) {
      for (const DirectedEdge e : {DirectedEdge{a, b}, DirectedEdge{b, a}}) {
        cur.push_back(e);
        self(self, i + 1, dsu);
        cur.pop_back();
      }
    }
  };
  rec(rec, 0, Dsu(nodes.size()));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace dynsteiner
