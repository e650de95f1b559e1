#pragma once

#include <optional>
#include <vector>

#include "dynsteiner/engine.hpp"

namespace dynsteiner {

enum class NodeKind { kTerminal, kPortal };

/// A node of the implicit tree. Positions the DP identifies (shared child
/// portals, a parent portal and the child portal beneath it, a terminal
/// sitting on its leaf portal) are one node. `anchor` is the highest cell
/// whose chosen combination introduces the node and `slot` its fine position
/// there (-1 for a terminal anchored at its own leaf). Two nodes at the same
/// position with different anchors come from unrelated branches of the DP.
struct TreeNode {
  DyadicPoint position;
  NodeKind kind = NodeKind::kPortal;
  CellId anchor;
  int slot = -1;

  auto operator<=>(const TreeNode&) const = default;
  bool operator==(const TreeNode&) const = default;
};

struct Neighborhood {
  TreeNode node;  // the occurrence of u the answer refers to
  std::optional<TreeNode> parent;
  std::vector<TreeNode> children;
};

/// One directed edge of the chosen solution (parent -> child).
struct TreeEdge {
  TreeNode tail;
  TreeNode head;
  double length = 0.0;
};

struct QueryStats {
  std::size_t cells_touched = 0;
};

// Every edge of the chosen solution, sorted by (tail, head).
std::vector<TreeEdge> traverse(const Copy& c);

bool is_member(const Copy& c, const DyadicPoint& u, QueryStats* stats = nullptr);

/// Null for non-members. When u occurs more than once, the answer is for
/// the terminal if u is one, else for the occurrence anchored highest.
std::optional<Neighborhood> neighbors(const Copy& c, const DyadicPoint& u, QueryStats* stats = nullptr);

}  // namespace dynsteiner
