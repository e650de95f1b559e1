#include "dynsteiner/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dynsteiner {

bool is_power_of_two(Coord v) { return v > 0 && (v & (v - 1)) == 0; }

int log2_exact(Coord v) {
  if (!is_power_of_two(v)) throw DomainError("value is not a power of two");
  int e = 0;
  while ((Coord{1} << e) < v) ++e;
  return e;
}

DyadicPoint::DyadicPoint(std::vector<Coord> numerators, int scale_exponent)
    : num_(std::move(numerators)), exp_(scale_exponent) {
  if (exp_ < 0) {
    for (auto& n : num_) n <<= -exp_;
    exp_ = 0;
  }
  while (exp_ > 0 && std::all_of(num_.begin(), num_.end(), [](Coord n) { return (n & 1) == 0; })) {
    for (auto& n : num_) n /= 2;
    --exp_;
  }
}

double DyadicPoint::coord(std::size_t axis) const {
  return std::ldexp(static_cast<double>(num_.at(axis)), -exp_);
}

std::vector<double> DyadicPoint::to_doubles() const {
  std::vector<double> out(num_.size());
  for (std::size_t i = 0; i < num_.size(); ++i) out[i] = coord(i);
  return out;
}

std::optional<GridPoint> DyadicPoint::as_grid_point() const {
  if (exp_ != 0) return std::nullopt;
  return GridPoint{num_};
}

std::string DyadicPoint::to_string() const {
  std::ostringstream os;
  os.precision(17);
  os << '(';
  for (std::size_t i = 0; i < num_.size(); ++i) {
    if (i) os << ',';
    os << coord(i);
  }
  os << ')';
  return os.str();
}

double distance(const DyadicPoint& p, const DyadicPoint& q) {
  if (p.dim() != q.dim()) throw UsageError("distance: dimension mismatch");
  const int g = std::max(p.scale_exponent(), q.scale_exponent());
  double sumsq = 0.0;
  for (std::size_t i = 0; i < p.dim(); ++i) {
    const Coord a = p.numerators()[i] << (g - p.scale_exponent());
    const Coord b = q.numerators()[i] << (g - q.scale_exponent());
    const double diff = static_cast<double>(a - b);
    sumsq += diff * diff;
  }
  return std::ldexp(std::sqrt(sumsq), -g);
}

double distance(const GridPoint& p, const GridPoint& q) {
  return distance(DyadicPoint(p), DyadicPoint(q));
}

ActiveSet::ActiveSet(Coord delta, int dim) : delta_(delta), dim_(dim) {
  if (!is_power_of_two(delta)) throw DomainError("grid size must be a power of two");
  if (dim < 1) throw DomainError("dimension must be at least 1");
}

void ActiveSet::check_in_grid(const GridPoint& p) const {
  if (static_cast<int>(p.dim()) != dim_) throw DomainError("point has wrong dimension");
  for (Coord c : p.coords) {
    if (c < 1 || c > delta_) throw DomainError("point outside the grid");
  }
}

void ActiveSet::activate(const GridPoint& p) {
  check_in_grid(p);
  ++mult_[p];
}

void ActiveSet::deactivate(const GridPoint& p) {
  auto it = mult_.find(p);
  if (it == mult_.end()) throw InvalidOperation("delete of a point that is not active");
  if (--it->second == 0) mult_.erase(it);
}

int ActiveSet::multiplicity(const GridPoint& p) const {
  auto it = mult_.find(p);
  return it == mult_.end() ? 0 : it->second;
}

std::optional<GridPoint> ActiveSet::lex_min() const {
  if (mult_.empty()) return std::nullopt;
  return mult_.begin()->first;
}

std::vector<GridPoint> ActiveSet::points() const {
  std::vector<GridPoint> out;
  out.reserve(mult_.size());
  for (const auto& [p, m] : mult_) out.push_back(p);
  return out;
}

}  // namespace dynsteiner
