#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dynsteiner {

// Error kinds shared by the whole library.
struct DomainError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct InvalidOperation : std::logic_error {
  using std::logic_error::logic_error;
};
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

using Coord = std::int64_t;

/// A point of the integer grid [1, delta]^d.
struct GridPoint {
  std::vector<Coord> coords;

  std::size_t dim() const { return coords.size(); }
  auto operator<=>(const GridPoint&) const = default;
  bool operator==(const GridPoint&) const = default;
};

/// Exact dyadic rational point: numerators / 2^scale_exponent (grid units).
/// Always held in canonical form, so equal values compare equal bit-for-bit.
class DyadicPoint {
 public:
  DyadicPoint() = default;
  DyadicPoint(std::vector<Coord> numerators, int scale_exponent);
  explicit DyadicPoint(const GridPoint& p) : DyadicPoint(p.coords, 0) {}

  const std::vector<Coord>& numerators() const { return num_; }
  int scale_exponent() const { return exp_; }
  std::size_t dim() const { return num_.size(); }

  double coord(std::size_t axis) const;
  std::vector<double> to_doubles() const;
  // Integer point when the value has no fractional part.
  std::optional<GridPoint> as_grid_point() const;
  std::string to_string() const;

  auto operator<=>(const DyadicPoint&) const = default;
  bool operator==(const DyadicPoint&) const = default;

 private:
  std::vector<Coord> num_;
  int exp_ = 0;
};

double distance(const DyadicPoint& p, const DyadicPoint& q);
double distance(const GridPoint& p, const GridPoint& q);

enum class UpdateKind { kInsert, kDelete };

struct UpdateOp {
  GridPoint point;
  UpdateKind kind = UpdateKind::kInsert;
  bool operator==(const UpdateOp&) const = default;
};

/// Multiset of grid points. A coordinate is active while its multiplicity
/// is positive; the lexicographically smallest active point is kept at the
/// front of the ordered index.
class ActiveSet {
 public:
  ActiveSet(Coord delta, int dim);

  Coord delta() const { return delta_; }
  int dim() const { return dim_; }

  void activate(const GridPoint& p);
  void deactivate(const GridPoint& p);

  int multiplicity(const GridPoint& p) const;
  bool contains(const GridPoint& p) const { return multiplicity(p) > 0; }
  std::size_t size() const { return mult_.size(); }
  bool empty() const { return mult_.empty(); }
  std::optional<GridPoint> lex_min() const;
  std::vector<GridPoint> points() const;
  const std::map<GridPoint, int>& multiplicities() const { return mult_; }

  // Throws DomainError when p is not a point of [1, delta]^d.
  void check_in_grid(const GridPoint& p) const;

  bool operator==(const ActiveSet&) const = default;

 private:
  Coord delta_;
  int dim_;
  std::map<GridPoint, int> mult_;
};

bool is_power_of_two(Coord v);
int log2_exact(Coord v);

}  // namespace dynsteiner
