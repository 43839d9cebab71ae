#include <algorithm>
#include <numeric>
#include <queue>

#include "coughscreen/classifiers.hpp"

namespace coughscreen::classifiers {

KdTree::KdTree(Matrix points, std::size_t leaf_size)
    : points_(std::move(points)), leaf_size_(std::max<std::size_t>(1, leaf_size)) {
  order_.resize(points_.rows());
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  if (!order_.empty()) build(0, order_.size());
}

int KdTree::build(std::size_t begin, std::size_t end) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{begin, end});
  if (end - begin <= leaf_size_) return id;

  // Split on the widest dimension at the median.
  std::size_t axis = 0;
  double widest = -1.0;
  for (std::size_t c = 0; c < points_.cols(); ++c) {
    double lo = points_(order_[begin], c);
    double hi = lo;
    for (std::size_t i = begin + 1; i < end; ++i) {
      lo = std::min(lo, points_(order_[i], c));
      hi = std::max(hi, points_(order_[i], c));
    }
    if (hi - lo > widest) {
      widest = hi - lo;
      axis = c;
    }
  }
  if (widest <= 0.0) return id;  // all points identical

  const std::size_t mid = begin + (end - begin) / 2;
  auto less = [&](std::size_t a, std::size_t b) {
    const double va = points_(a, axis);
    const double vb = points_(b, axis);
    return va < vb || (va == vb && a < b);
  };
  std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                   order_.begin() + static_cast<std::ptrdiff_t>(mid),
                   order_.begin() + static_cast<std::ptrdiff_t>(end), less);
  const double split = points_(order_[mid], axis);
  const int left = build(begin, mid);
  const int right = build(mid, end);
  nodes_[static_cast<std::size_t>(id)].axis = axis;
  nodes_[static_cast<std::size_t>(id)].split = split;
  nodes_[static_cast<std::size_t>(id)].left = left;
  nodes_[static_cast<std::size_t>(id)].right = right;
  return id;
}

std::vector<std::size_t> KdTree::nearest(std::span<const double> query, std::size_t k) const {
  using Entry = std::pair<double, std::size_t>;  // (squared distance, index)
  std::priority_queue<Entry> best;               // worst entry on top
  k = std::min(k, points_.rows());
  if (k == 0) return {};

  auto offer = [&](std::size_t i) {
    const Entry e{squared_distance(points_.row(i), query), i};
    if (best.size() < k) {
      best.push(e);
    } else if (e < best.top()) {
      best.pop();
      best.push(e);
    }
  };
  auto visit = [&](auto&& self, int id) -> void {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.left < 0) {
      for (std::size_t i = n.begin; i < n.end; ++i) offer(order_[i]);
      return;
    }
    const double diff = query[n.axis] - n.split;
    const int near = diff < 0.0 ? n.left : n.right;
    const int far = diff < 0.0 ? n.right : n.left;
    self(self, near);
    // Points on the far side are at least |diff| away along the split axis.
    // Equal bounds are still visited so index ties resolve exactly.
    if (best.size() < k || diff * diff <= best.top().first) self(self, far);
  };
  visit(visit, 0);

  std::vector<std::size_t> out(best.size());
  for (std::size_t i = out.size(); i-- > 0;) {
    out[i] = best.top().second;
    best.pop();
  }
  return out;
}

TrainedModel train_knn(const Matrix& x, std::span<const int> y, const ClassifierSpec& spec) {
  if (spec.family != Family::kKNN) throw std::invalid_argument("train_knn: spec is not KNN");
  spec.validate();
  check_training_data(x, y);
  if (spec.neighbours > x.rows()) {
    throw DataError("knn: " + std::to_string(spec.neighbours) + " neighbours requested but only " +
                    std::to_string(x.rows()) + " training examples");
  }
  Standardizer scaler = spec.standardizes() ? Standardizer::fit(x) : Standardizer::identity(x.cols());
  KnnParams p;
  p.tree = KdTree(spec.standardizes() ? scaler.apply(x) : x, spec.leaf_size);
  p.labels.assign(y.begin(), y.end());
  return TrainedModel(spec, x.cols(), std::move(scaler), std::move(p));
}

}  // namespace coughscreen::classifiers
