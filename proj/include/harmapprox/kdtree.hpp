#pragma once

#include <cstddef>
#include <vector>

#include "harmapprox/core.hpp"

namespace ha {

// Static kd-tree over a point cloud: nearest neighbours and box queries.
class KdTree {
 public:
  KdTree() = default;
  explicit KdTree(std::vector<Vec> pts);

  bool empty() const { return pts_.empty(); }
  std::size_t size() const { return pts_.size(); }
  const std::vector<Vec>& points() const { return pts_; }

  // Index of the nearest point and its distance.
  std::pair<std::size_t, double> nearest(const Vec& x) const;
  // Indices of the k nearest points, closest first.
  std::vector<std::size_t> k_nearest(const Vec& x, std::size_t k) const;
  // True if some point lies in the half-open box [lo, hi).
  bool any_in_box(const Vec& lo, const Vec& hi) const;

 private:
  struct Node {
    int axis = -1;
    std::size_t begin = 0, end = 0;  // range in order_
    int left = -1, right = -1;
    Vec lo, hi;  // bounding box of the range
  };
  int build(std::size_t begin, std::size_t end, int depth);
  void search(int node, const Vec& x, std::size_t k,
              std::vector<std::pair<double, std::size_t>>& heap) const;
  bool box_query(int node, const Vec& lo, const Vec& hi) const;

  std::vector<Vec> pts_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace ha
