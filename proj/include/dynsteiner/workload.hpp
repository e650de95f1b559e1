#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dynsteiner/geometry.hpp"

namespace dynsteiner {

enum class GenKind { kUniform, kClustered, kChurn, kAdversarialRoot };

struct GenSpec {
  GenKind kind = GenKind::kUniform;
  std::size_t length = 0;
  std::uint64_t seed = 1;
  Coord delta = 8;
  int dim = 2;
};

GenKind parse_gen_kind(const std::string& name);
std::string to_string(GenKind kind);

/// Always valid: deletes only target points present in a shadow active set.
/// `churn` of length 2L has exactly L inserts and L deletes and ends empty
/// (an odd length ends with one point left); `adversarial-root` inserts
/// batches of distinct points in decreasing lexicographic order, then
/// clears them.
std::vector<UpdateOp> generate(const GenSpec& spec);

}  // namespace dynsteiner
