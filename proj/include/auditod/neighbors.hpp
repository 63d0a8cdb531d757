#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "auditod/core_data.hpp"

namespace auditod {

struct Neighbor {
  std::size_t index = 0;
  double distance = 0.0;
};

// Euclidean distance with a fixed left-to-right summation order; every
// neighbor computation in the library goes through this function.
double euclidean_distance(std::span<const double> a, std::span<const double> b);
double squared_distance(std::span<const double> a, std::span<const double> b);

// Exact k-nearest-neighbor index over the rows of a FeatureFrame (kd-tree).
// Neighbors are ordered by (distance, row index); the query row itself is
// excluded by index, so duplicates of it still count as neighbors.
class NeighborIndex {
 public:
  explicit NeighborIndex(const FeatureFrame& frame, std::size_t leaf_size = 16);
  ~NeighborIndex();
  NeighborIndex(NeighborIndex&&) noexcept;
  NeighborIndex& operator=(NeighborIndex&&) noexcept;

  std::vector<Neighbor> query_row(std::size_t row, std::size_t k) const;

  // All rows, k neighbors each (row-major, k entries per row).
  std::vector<std::vector<Neighbor>> all_knn(std::size_t k) const;

 private:
  struct Tree;
  const FeatureFrame* frame_;
  std::unique_ptr<Tree> tree_;
};

}  // namespace auditod
