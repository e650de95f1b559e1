#include <doctest.h>

#include <set>

#include "dynsteiner/entries.hpp"
#include "dynsteiner/solver.hpp"
#include "support.hpp"

using namespace testsupport;

TEST_CASE("portal lattice") {
  const PortalLattice k1(2, 1);
  CHECK(k1.size() == 4);
  const PortalLattice k2(2, 2);
  CHECK(k2.size() == 8);
  CHECK(k2.id_of({1, 1}) == -1);
  CHECK(k2.id_of({0, 0}) == 0);
  // Per facet: (k+1)^(d-1) portals.
  for (int f = 0; f < k2.facet_count(); ++f) CHECK(popcount(k2.facet_mask(f)) == 3);
  const PortalLattice d3(3, 2);
  for (int f = 0; f < d3.facet_count(); ++f) CHECK(popcount(d3.facet_mask(f)) == 9);
}

TEST_CASE("index universe, d=2 k=1 r=1") {
  const IndexSpace space(2, 1, 1);
  CHECK(space.size() == 21);
  CHECK(space.at(0).active == 0);
  for (std::size_t i = 0; i < space.size(); ++i) {
    const auto& ix = space.at(i);
    CHECK(space.lattice().respects_cap(ix.active, 1));
    PortalMask cover = 0;
    for (std::size_t p = 0; p < ix.parts.size(); ++p) {
      CHECK((cover & ix.parts[p]) == 0);
      cover |= ix.parts[p];
      if (static_cast<int>(p) == ix.yes_part) {
        CHECK(ix.roots[p] == -1);
      } else {
        CHECK((ix.parts[p] >> ix.roots[p] & 1) == 1);
      }
    }
    CHECK(cover == ix.active);
  }
}

TEST_CASE("enumerate_indices") {
  const IndexSpace space(2, 1, 1);
  CellContext empty_leaf{true, false, false, false};
  const auto a = enumerate_indices(space, empty_leaf);
  CHECK(a.size() == 5);

  CellContext terminal_leaf{true, true, false, false};
  const auto b = enumerate_indices(space, terminal_leaf);
  CHECK(b.size() == 4);
  for (const auto& ix : b) CHECK(popcount(ix.active) == 1);

  CellContext empty_cell{false, false, false, false};
  for (const auto& ix : enumerate_indices(space, empty_cell)) CHECK(ix.yes_part < 0);

  CellContext alone{true, true, true, true};
  CHECK(enumerate_indices(space, alone).size() == 5);
}

TEST_CASE("encode / decode") {
  const IndexSpace space(2, 1, 1);
  std::set<std::vector<std::uint8_t>> seen;
  std::vector<std::vector<std::uint8_t>> order;
  for (std::size_t i = 0; i < space.size(); ++i) {
    EntryIndex ix{CellId{3, {-1, 2}}, space.at(i)};
    const auto bytes = encode(ix);
    CHECK(decode(bytes) == ix);
    CHECK(seen.insert(bytes).second);
    order.push_back(bytes);
  }
  // Ids follow encoding order.
  CHECK(std::is_sorted(order.begin(), order.end()));

  // A second, independently built universe enumerates identically.
  const IndexSpace again(2, 1, 1);
  for (std::size_t i = 0; i < space.size(); ++i) CHECK(encode_local(again.at(i)) == encode_local(space.at(i)));

  const IndexSpace larger(2, 2, 2);
  std::set<std::vector<std::uint8_t>> big;
  for (std::size_t i = 0; i < larger.size(); ++i) CHECK(big.insert(encode_local(larger.at(i))).second);

  CHECK_THROWS_AS(decode(std::vector<std::uint8_t>{3}), UsageError);
}

TEST_CASE("prototype values") {
  const auto model = shared_model(small_config(8, 1));
  for (std::size_t level = 0; level < model->prototypes.size(); ++level) {
    const auto& table = model->prototypes[level];
    CHECK(table[0].weight == 0.0);
    for (std::size_t id = 0; id < model->space.size(); ++id) {
      const auto& ix = model->space.at(id);
      // A terminal-free cell never holds the global root.
      if (ix.yes_part >= 0) CHECK(table[id].weight == kInfinity);
      bool singletons = ix.yes_part < 0 && (level > 0 || popcount(ix.active) <= 1);
      for (PortalMask p : ix.parts) singletons = singletons && popcount(p) == 1;
      if (singletons) CHECK(table[id].weight == 0.0);
    }
  }
}

TEST_CASE("prototype of a two-corner part, by exhaustive combination search") {
  // Corners (0,0) and (2,0) of a side-2 cell share a facet, so this needs r = 2.
  const IndexSpace space(2, 1, 2);
  const CombinationTemplate tpl(space, true);
  Table leaf(space.size());
  for (std::size_t id = 0; id < space.size(); ++id) {
    const auto& ix = space.at(id);
    if (popcount(ix.active) <= 1 && ix.yes_part < 0) leaf[id].weight = 0.0;
  }
  const int a = space.lattice().id_of({0, 0});
  const int b = space.lattice().id_of({1, 0});
  const PortalMask both = (PortalMask{1} << a) | (PortalMask{1} << b);
  LocalIndex target{both, {both}, -1, {a}};
  const auto tid = space.find(target);
  REQUIRE(tid);

  const std::vector<const Table*> kids(4, &leaf);
  const auto brute = brute_force_cell(space, tpl, 1, kids, std::vector<bool>(4, false), -1);
  CHECK(brute[*tid] == doctest::Approx(2.0).epsilon(1e-12));

  // The template recursion reaches the same value.
  double best = kInfinity;
  for (std::size_t c = 0; c < tpl.size(); ++c) {
    if (tpl.at(c).parent != *tid || tpl.at(c).yes_child >= 0) continue;
    double s = tpl.at(c).edge_units;
    for (auto id : tpl.children(c)) s += leaf[id].weight;
    best = std::min(best, s);
  }
  CHECK(best == doctest::Approx(2.0).epsilon(1e-12));
}
