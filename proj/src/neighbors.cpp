#include "auditod/neighbors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "auditod/error.hpp"

namespace auditod {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    sum += d * d;
  }
  return sum;
}

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  return std::sqrt(squared_distance(a, b));
}

struct NeighborIndex::Tree {
  struct Node {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t left = 0;   // 0 means leaf
    std::size_t right = 0;
    std::vector<double> lo;
    std::vector<double> hi;
  };

  const FeatureFrame& frame;
  std::size_t leaf_size;
  std::vector<std::size_t> order;
  std::vector<Node> nodes;

  Tree(const FeatureFrame& f, std::size_t leaf) : frame(f), leaf_size(std::max<std::size_t>(leaf, 1)) {
    order.resize(frame.rows());
    std::iota(order.begin(), order.end(), std::size_t{0});
    nodes.reserve(2 * frame.rows() / leaf_size + 2);
    build(0, order.size());
  }

  std::size_t build(std::size_t begin, std::size_t end) {
    const std::size_t p = frame.cols();
    Node node;
    node.begin = begin;
    node.end = end;
    node.lo.assign(p, std::numeric_limits<double>::infinity());
    node.hi.assign(p, -std::numeric_limits<double>::infinity());
    for (std::size_t i = begin; i < end; ++i) {
      auto row = frame.row(order[i]);
      for (std::size_t j = 0; j < p; ++j) {
        node.lo[j] = std::min(node.lo[j], row[j]);
        node.hi[j] = std::max(node.hi[j], row[j]);
      }
    }
    const std::size_t id = nodes.size();
    nodes.push_back(node);
    if (end - begin <= leaf_size) return id;

    std::size_t dim = 0;
    double widest = -1.0;
    for (std::size_t j = 0; j < p; ++j) {
      if (node.hi[j] - node.lo[j] > widest) {
        widest = node.hi[j] - node.lo[j];
        dim = j;
      }
    }
    if (widest <= 0.0) return id;  // all points identical

    const std::size_t mid = begin + (end - begin) / 2;
    auto key_less = [&](std::size_t a, std::size_t b) {
      const double va = frame.values()(a, dim);
      const double vb = frame.values()(b, dim);
      return va < vb || (va == vb && a < b);
    };
    std::nth_element(order.begin() + begin, order.begin() + mid, order.begin() + end, key_less);
    const std::size_t left = build(begin, mid);
    const std::size_t right = build(mid, end);
    nodes[id].left = left;
    nodes[id].right = right;
    return id;
  }

  // Lower bound on the squared distance from q to any point in the node box.
  double box_bound(const Node& node, std::span<const double> q) const {
    double sum = 0.0;
    for (std::size_t j = 0; j < q.size(); ++j) {
      double gap = 0.0;
      if (q[j] < node.lo[j]) {
        gap = node.lo[j] - q[j];
      } else if (q[j] > node.hi[j]) {
        gap = q[j] - node.hi[j];
      }
      sum += gap * gap;
    }
    return sum;
  }

  struct Candidate {
    double d2;
    std::size_t index;
    bool operator<(const Candidate& o) const {
      return d2 < o.d2 || (d2 == o.d2 && index < o.index);
    }
  };

  void search(std::size_t node_id, std::span<const double> q, std::size_t self, std::size_t k,
              std::vector<Candidate>& heap) const {
    const Node& node = nodes[node_id];
    if (heap.size() == k && box_bound(node, q) > heap.front().d2) return;
    if (node.left == 0) {
      for (std::size_t i = node.begin; i < node.end; ++i) {
        const std::size_t idx = order[i];
        if (idx == self) continue;
        const Candidate c{squared_distance(frame.row(idx), q), idx};
        if (heap.size() < k) {
          heap.push_back(c);
          std::push_heap(heap.begin(), heap.end());
        } else if (c < heap.front()) {
          std::pop_heap(heap.begin(), heap.end());
          heap.back() = c;
          std::push_heap(heap.begin(), heap.end());
        }
      }
      return;
    }
    const double bl = box_bound(nodes[node.left], q);
    const double br = box_bound(nodes[node.right], q);
    if (bl <= br) {
      search(node.left, q, self, k, heap);
      search(node.right, q, self, k, heap);
    } else {
      search(node.right, q, self, k, heap);
      search(node.left, q, self, k, heap);
    }
  }
};

NeighborIndex::NeighborIndex(const FeatureFrame& frame, std::size_t leaf_size)
    : frame_(&frame), tree_(std::make_unique<Tree>(frame, leaf_size)) {}

NeighborIndex::~NeighborIndex() = default;
NeighborIndex::NeighborIndex(NeighborIndex&&) noexcept = default;
NeighborIndex& NeighborIndex::operator=(NeighborIndex&&) noexcept = default;

std::vector<Neighbor> NeighborIndex::query_row(std::size_t row, std::size_t k) const {
  if (k == 0 || k >= frame_->rows()) {
    throw Error(ErrorCode::InvalidConfig, "n_neighbors must be in [1, n-1]");
  }
  std::vector<Tree::Candidate> heap;
  heap.reserve(k);
  tree_->search(0, frame_->row(row), row, k, heap);
  std::sort_heap(heap.begin(), heap.end());
  std::vector<Neighbor> out;
  out.reserve(k);
  for (const auto& c : heap) out.push_back({c.index, std::sqrt(c.d2)});
  return out;
}

std::vector<std::vector<Neighbor>> NeighborIndex::all_knn(std::size_t k) const {
  std::vector<std::vector<Neighbor>> out;
  out.reserve(frame_->rows());
  for (std::size_t i = 0; i < frame_->rows(); ++i) out.push_back(query_row(i, k));
  return out;
}

}  // namespace auditod
