#include <algorithm>
#include <cmath>
#include <limits>

#include "driftkit/error.hpp"
#include "driftkit/learners.hpp"

namespace driftkit {

double harmonic_number(std::size_t k) {
  // Exact partial sums; leaf sizes never exceed the subsample, so a table
  // covers every call made while scoring.
  static const std::vector<double> table = [] {
    std::vector<double> t(4097, 0.0);
    for (std::size_t i = 1; i < t.size(); ++i) t[i] = t[i - 1] + 1.0 / static_cast<double>(i);
    return t;
  }();
  if (k < table.size()) return table[k];
  double h = table.back();
  for (std::size_t i = table.size(); i <= k; ++i) h += 1.0 / static_cast<double>(i);
  return h;
}

double average_path_length(std::size_t n) {
  if (n <= 1) return 0.0;
  const double nn = static_cast<double>(n);
  return 2.0 * harmonic_number(n - 1) - 2.0 * (nn - 1.0) / nn;
}

IsolationForest::IsolationForest(IsolationForestOptions options) : options_(options) {
  if (options_.n_trees == 0) throw ConfigError("iforest: n_trees must be positive");
  if (options_.subsample < 2) throw ConfigError("iforest: subsample must be >= 2");
}

namespace {

struct Builder {
  std::span<const FeatureVector> points;
  std::size_t dim;
  std::size_t height_limit;
  Rng& rng;
  IsolationForest::Tree tree;

  std::uint32_t build(std::vector<std::uint32_t>& idx, std::uint32_t depth) {
    const auto id = static_cast<std::uint32_t>(tree.size());
    tree.push_back({});
    tree[id].size = idx.size();
    tree[id].depth = depth;
    if (depth >= height_limit || idx.size() <= 1) return id;

    // Attribute drawn from every dimension. On an attribute that is constant
    // over the node, the split sits just above that value: the node's points
    // all go left and any larger value lands in an empty external node.
    const auto f = static_cast<std::uint32_t>(rng.below(dim));
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (auto p : idx) {
      const double v = points[p].value(f);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    const double threshold = hi > lo ? hi - rng.uniform() * (hi - lo)
                                     : std::nextafter(lo, std::numeric_limits<double>::infinity());

    std::vector<std::uint32_t> left;
    std::vector<std::uint32_t> right;
    for (auto p : idx) {
      (points[p].value(f) < threshold ? left : right).push_back(p);
    }
    idx.clear();
    idx.shrink_to_fit();
    const auto l = build(left, depth + 1);
    const auto r = build(right, depth + 1);
    tree[id].feature = f;
    tree[id].threshold = threshold;
    tree[id].left = l;
    tree[id].right = r;
    return id;
  }
};

}  // namespace

void IsolationForest::fit(std::span<const FeatureVector> points) {
  if (points.size() < 2) throw DataError("iforest: fit needs at least two points");
  dim_ = points.front().dim();
  for (const auto& p : points) {
    if (p.dim() != dim_) throw DataError("iforest: points have mixed dimensions");
  }
  psi_ = std::min(options_.subsample, points.size());
  height_limit_ = static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(psi_))));
  Rng rng(options_.seed);
  trees_.clear();
  trees_.reserve(options_.n_trees);
  for (std::size_t t = 0; t < options_.n_trees; ++t) {
    auto idx = rng.sample_distinct(static_cast<std::uint32_t>(points.size()),
                                   static_cast<std::uint32_t>(psi_));
    Builder b{points, dim_, height_limit_, rng, {}};
    b.build(idx, 0);
    trees_.push_back(std::move(b.tree));
  }
}

namespace {

template <class Get>
double walk(const IsolationForest::Tree& tree, Get value) {
  std::uint32_t i = 0;
  while (tree[i].feature >= 0) {
    const auto& n = tree[i];
    i = value(static_cast<std::uint32_t>(n.feature)) < n.threshold ? n.left : n.right;
  }
  return static_cast<double>(tree[i].depth) + average_path_length(tree[i].size);
}

}  // namespace

double IsolationForest::path_length(const Tree& tree, const FeatureVector& x) {
  return walk(tree, [&](std::uint32_t f) { return x.value(f); });
}

double IsolationForest::expected_path_length(const FeatureVector& x) const {
  if (!fitted()) throw StateError("iforest: score before fit");
  double total = 0.0;
  for (const auto& t : trees_) total += path_length(t, x);
  return total / static_cast<double>(trees_.size());
}

double IsolationForest::score(const FeatureVector& x) const {
  return std::pow(2.0, -expected_path_length(x) / average_path_length(psi_));
}

double IsolationForest::score(std::span<const double> dense) const {
  if (!fitted()) throw StateError("iforest: score before fit");
  if (dense.size() != dim_) throw DataError("iforest: dense point has the wrong dimension");
  double total = 0.0;
  for (const auto& t : trees_) total += walk(t, [&](std::uint32_t f) { return dense[f]; });
  const double h = total / static_cast<double>(trees_.size());
  return std::pow(2.0, -h / average_path_length(psi_));
}

}  // namespace driftkit
