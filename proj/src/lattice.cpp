#include "greenpot/lattice.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace greenpot {

std::size_t IntPointHash::operator()(const IntPoint& p) const noexcept {
  std::size_t h = 0x9e3779b97f4a7c15ULL;
  for (long v : p) {
    h ^= static_cast<std::size_t>(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return h;
}

LatticeSet::LatticeSet(int d, std::vector<IntPoint> points) : d_(d), points_(std::move(points)) {
  if (d_ < 1) throw std::invalid_argument("LatticeSet: dimension must be positive");
  for (const auto& p : points_) {
    if (p.size() != static_cast<std::size_t>(d_)) {
      throw std::invalid_argument("LatticeSet: point dimension mismatch");
    }
  }
  std::sort(points_.begin(), points_.end());
  if (std::adjacent_find(points_.begin(), points_.end()) != points_.end()) {
    throw std::invalid_argument("LatticeSet: duplicate point");
  }
  index_.reserve(points_.size());
  for (std::size_t i = 0; i < points_.size(); ++i) index_.emplace(points_[i], i);
}

std::optional<std::size_t> LatticeSet::index_of(std::span<const long> p) const {
  auto it = index_.find(IntPoint(p.begin(), p.end()));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<IntPoint> LatticeSet::outer_boundary() const {
  std::set<IntPoint> boundary;
  for (const auto& p : points_) {
    IntPoint q = p;
    for (int k = 0; k < d_; ++k) {
      for (long step : {1L, -1L}) {
        q[k] = p[k] + step;
        if (!contains(q)) boundary.insert(q);
      }
      q[k] = p[k];
    }
  }
  return {boundary.begin(), boundary.end()};
}

std::vector<long> LatticeSet::neighbour_table() const {
  const std::size_t width = 2 * static_cast<std::size_t>(d_);
  std::vector<long> table(points_.size() * width, -1);
  for (std::size_t i = 0; i < points_.size(); ++i) {
    IntPoint q = points_[i];
    for (int k = 0; k < d_; ++k) {
      for (int s = 0; s < 2; ++s) {
        q[k] = points_[i][k] + (s == 0 ? 1 : -1);
        if (auto j = index_of(q)) table[i * width + 2 * k + s] = static_cast<long>(*j);
      }
      q[k] = points_[i][k];
    }
  }
  return table;
}

}  // namespace greenpot
