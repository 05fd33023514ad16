#include "harmapprox/kdtree.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <queue>

namespace ha {

namespace {
constexpr std::size_t kLeaf = 16;

double box_dist2(const Vec& x, const Vec& lo, const Vec& hi) {
  double s = 0;
  for (int i = 0; i < x.d; ++i) {
    double e = std::max({lo[i] - x[i], 0.0, x[i] - hi[i]});
    s += e * e;
  }
  return s;
}
}  // namespace

KdTree::KdTree(std::vector<Vec> pts) : pts_(std::move(pts)) {
  order_.resize(pts_.size());
  std::iota(order_.begin(), order_.end(), 0);
  if (!pts_.empty()) root_ = build(0, pts_.size(), 0);
}

int KdTree::build(std::size_t begin, std::size_t end, int depth) {
  Node n;
  n.begin = begin;
  n.end = end;
  const int d = pts_[order_[begin]].d;
  n.lo = n.hi = pts_[order_[begin]];
  for (std::size_t i = begin; i < end; ++i) {
    const Vec& p = pts_[order_[i]];
    for (int k = 0; k < d; ++k) {
      n.lo[k] = std::min(n.lo[k], p[k]);
      n.hi[k] = std::max(n.hi[k], p[k]);
    }
  }
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(n);
  if (end - begin <= kLeaf) return id;
  int axis = 0;
  for (int k = 1; k < d; ++k)
    if (n.hi[k] - n.lo[k] > n.hi[axis] - n.lo[axis]) axis = k;
  (void)depth;
  const std::size_t mid = (begin + end) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::size_t a, std::size_t b) { return pts_[a][axis] < pts_[b][axis]; });
  const int l = build(begin, mid, depth + 1);
  const int r = build(mid, end, depth + 1);
  nodes_[id].axis = axis;
  nodes_[id].left = l;
  nodes_[id].right = r;
  return id;
}

void KdTree::search(int id, const Vec& x, std::size_t k,
                    std::vector<std::pair<double, std::size_t>>& heap) const {
  const Node& n = nodes_[id];
  const double bound = heap.size() < k ? std::numeric_limits<double>::infinity() : heap.front().first;
  if (box_dist2(x, n.lo, n.hi) > bound) return;
  if (n.left < 0) {
    for (std::size_t i = n.begin; i < n.end; ++i) {
      const std::size_t idx = order_[i];
      const double d2 = (pts_[idx] - x).norm2();
      if (heap.size() < k) {
        heap.emplace_back(d2, idx);
        std::push_heap(heap.begin(), heap.end());
      } else if (d2 < heap.front().first) {
        std::pop_heap(heap.begin(), heap.end());
        heap.back() = {d2, idx};
        std::push_heap(heap.begin(), heap.end());
      }
    }
    return;
  }
  const Node& L = nodes_[n.left];
  const Node& R = nodes_[n.right];
  if (box_dist2(x, L.lo, L.hi) <= box_dist2(x, R.lo, R.hi)) {
    search(n.left, x, k, heap);
    search(n.right, x, k, heap);
  } else {
    search(n.right, x, k, heap);
    search(n.left, x, k, heap);
  }
}

std::pair<std::size_t, double> KdTree::nearest(const Vec& x) const {
  if (pts_.empty()) throw InvalidArgument("nearest query on empty tree");
  std::vector<std::pair<double, std::size_t>> heap;
  heap.reserve(1);
  search(root_, x, 1, heap);
  return {heap.front().second, std::sqrt(heap.front().first)};
}

std::vector<std::size_t> KdTree::k_nearest(const Vec& x, std::size_t k) const {
  std::vector<std::pair<double, std::size_t>> heap;
  if (pts_.empty() || k == 0) return {};
  k = std::min(k, pts_.size());
  heap.reserve(k);
  search(root_, x, k, heap);
  std::sort_heap(heap.begin(), heap.end());
  std::vector<std::size_t> out;
  for (auto& h : heap) out.push_back(h.second);
  return out;
}

bool KdTree::box_query(int id, const Vec& lo, const Vec& hi) const {
  const Node& n = nodes_[id];
  for (int k = 0; k < lo.d; ++k)
    if (n.hi[k] < lo[k] || n.lo[k] >= hi[k]) return false;
  if (n.left < 0) {
    for (std::size_t i = n.begin; i < n.end; ++i) {
      const Vec& p = pts_[order_[i]];
      bool in = true;
      for (int k = 0; k < lo.d && in; ++k) in = p[k] >= lo[k] && p[k] < hi[k];
      if (in) return true;
    }
    return false;
  }
  return box_query(n.left, lo, hi) || box_query(n.right, lo, hi);
}

bool KdTree::any_in_box(const Vec& lo, const Vec& hi) const {
  return !pts_.empty() && box_query(root_, lo, hi);
}

}  // namespace ha
