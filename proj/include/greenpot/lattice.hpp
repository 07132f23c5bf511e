#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

namespace greenpot {

using IntPoint = std::vector<long>;

struct IntPointHash {
  std::size_t operator()(const IntPoint& p) const noexcept;
};

// Finite subset of Z^d kept in lexicographic order with a point -> index map.
class LatticeSet {
 public:
  LatticeSet() = default;
  // Sorts the points; throws std::invalid_argument on duplicates or on a
  // point whose length differs from d.
  LatticeSet(int d, std::vector<IntPoint> points);

  int dim() const { return d_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const std::vector<IntPoint>& points() const { return points_; }
  const IntPoint& operator[](std::size_t i) const { return points_[i]; }

  std::optional<std::size_t> index_of(std::span<const long> p) const;
  bool contains(std::span<const long> p) const { return index_of(p).has_value(); }

  // Lattice points outside the set adjacent to it, lexicographically ordered.
  std::vector<IntPoint> outer_boundary() const;

  // Per point, the 2d neighbour indices (order +e1,-e1,+e2,-e2,...); -1 when
  // the neighbour is outside the set.
  std::vector<long> neighbour_table() const;

 private:
  int d_ = 0;
  std::vector<IntPoint> points_;
  std::unordered_map<IntPoint, std::size_t, IntPointHash> index_;
};

}  // namespace greenpot
