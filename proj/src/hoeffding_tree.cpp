#include <algorithm>
#include <cmath>

#include "driftkit/error.hpp"
#include "driftkit/learners.hpp"

namespace driftkit {

double hoeffding_bound(double range, double delta, double n) {
  return std::sqrt(range * range * std::log(1.0 / delta) / (2.0 * n));
}

double entropy(std::span<const double> counts) {
  double total = 0.0;
  for (double c : counts) total += c;
  if (total <= 0.0) return 0.0;
  double h = 0.0;
  for (double c : counts) {
    if (c > 0.0) {
      const double p = c / total;
      h -= p * std::log2(p);
    }
  }
  return h;
}

HoeffdingTree::HoeffdingTree(std::vector<std::string> classes, std::size_t dim,
                             HoeffdingTreeOptions options)
    : Learner(std::move(classes)), dim_(dim), options_(options), rng_(options.seed) {
  if (dim_ == 0) throw ConfigError("ht: dim must be positive");
  if (!(options_.delta > 0.0 && options_.delta < 1.0)) throw ConfigError("ht: delta in (0,1)");
  if (!(options_.grace_period > 0.0)) throw ConfigError("ht: grace_period must be positive");
  reset();
}

void HoeffdingTree::reset() {
  nodes_.clear();
  split_history_.clear();
  examples_seen_ = 0.0;
  rng_ = Rng(options_.seed);
  make_leaf(std::vector<double>(n_classes(), 0.0), 0);
}

std::uint32_t HoeffdingTree::make_leaf(std::vector<double> counts, std::uint32_t depth) {
  Node node;
  node.depth = depth;
  node.class_counts = std::move(counts);
  node.seen_counts.assign(n_classes(), 0.0);
  if (options_.subspace_size > 0 && options_.subspace_size < dim_) {
    node.subspace = rng_.sample_distinct(static_cast<std::uint32_t>(dim_),
                                         static_cast<std::uint32_t>(options_.subspace_size));
  }
  nodes_.push_back(std::move(node));
  return static_cast<std::uint32_t>(nodes_.size() - 1);
}

std::uint32_t HoeffdingTree::route(const FeatureVector& x) const {
  std::uint32_t i = 0;
  while (!nodes_[i].is_leaf()) {
    const auto& n = nodes_[i];
    i = x.value(static_cast<std::uint32_t>(n.feature)) > 0.0 ? n.present_child : n.absent_child;
  }
  return i;
}

std::size_t HoeffdingTree::n_leaves() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.is_leaf(); }));
}

void HoeffdingTree::learn_one(const FeatureVector& x, std::size_t label, double weight) {
  if (label >= n_classes()) throw std::out_of_range("ht: label index out of range");
  if (weight <= 0.0) return;
  examples_seen_ += weight;
  const std::uint32_t leaf = route(x);
  auto& node = nodes_[leaf];
  node.class_counts[label] += weight;
  node.seen_counts[label] += weight;
  for (const auto& [f, v] : x.entries()) {
    if (v <= 0.0) continue;
    if (node.subspace && !std::binary_search(node.subspace->begin(), node.subspace->end(), f)) {
      continue;
    }
    auto [it, inserted] = node.presence.try_emplace(f);
    if (inserted) it->second.assign(n_classes(), 0.0);
    it->second[label] += weight;
  }
  double seen = 0.0;
  for (double c : node.seen_counts) seen += c;
  if (seen - node.weight_at_last_eval >= options_.grace_period) {
    node.weight_at_last_eval = seen;
    attempt_split(leaf);
  }
}

void HoeffdingTree::attempt_split(std::uint32_t leaf) {
  const std::vector<double> seen = nodes_[leaf].seen_counts;
  const auto nonzero = std::count_if(seen.begin(), seen.end(), [](double c) { return c > 0.0; });
  if (nonzero < 2) return;

  double n = 0.0;
  for (double c : seen) n += c;
  const double prior = entropy(seen);

  std::int64_t best_feature = -1;
  double best = 0.0;
  double second = 0.0;  // the "no split" candidate has gain 0
  std::vector<double> absent(n_classes());
  for (const auto& [f, present] : nodes_[leaf].presence) {
    double n_present = 0.0;
    for (std::size_t c = 0; c < n_classes(); ++c) {
      absent[c] = seen[c] - present[c];
      n_present += present[c];
    }
    const double n_absent = n - n_present;
    const double gain =
        prior - (n_present / n) * entropy(present) - (n_absent / n) * entropy(absent);
    const bool better = best_feature < 0 || gain > best ||
                        (gain == best && static_cast<std::int64_t>(f) < best_feature);
    if (better) {
      if (best_feature >= 0) second = std::max(second, best);
      best = gain;
      best_feature = f;
    } else {
      second = std::max(second, gain);
    }
  }
  if (best_feature < 0 || best <= 0.0) return;

  const double range = std::log2(static_cast<double>(n_classes()));
  const double eps = hoeffding_bound(range, options_.delta, n);
  if (!(best - second >= eps || eps < options_.tie_threshold)) return;

  const auto f = static_cast<std::uint32_t>(best_feature);
  const std::vector<double> present = nodes_[leaf].presence.at(f);
  std::vector<double> absent_counts(n_classes());
  for (std::size_t c = 0; c < n_classes(); ++c) absent_counts[c] = seen[c] - present[c];
  const std::uint32_t depth = nodes_[leaf].depth + 1;
  const std::uint32_t absent_child = make_leaf(absent_counts, depth);
  const std::uint32_t present_child = make_leaf(present, depth);
  auto& node = nodes_[leaf];  // make_leaf may reallocate
  node.feature = best_feature;
  node.absent_child = absent_child;
  node.present_child = present_child;
  node.presence.clear();
  node.subspace.reset();
  split_history_.push_back(examples_seen_);
}

std::vector<double> HoeffdingTree::predict_proba(const FeatureVector& x) const {
  const auto& counts = nodes_[route(x)].class_counts;
  double total = 0.0;
  for (double c : counts) total += c;
  std::vector<double> out(n_classes(), 1.0 / static_cast<double>(n_classes()));
  if (total > 0.0) {
    for (std::size_t c = 0; c < n_classes(); ++c) out[c] = counts[c] / total;
  }
  return out;
}

nlohmann::json HoeffdingTree::to_json() const {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : nodes_) {
    nlohmann::json j = {{"class_counts", n.class_counts}};
    if (!n.is_leaf()) {
      j["feature"] = n.feature;
      j["absent"] = n.absent_child;
      j["present"] = n.present_child;
    }
    nodes.push_back(std::move(j));
  }
  return {{"version", 1},
          {"learner", "ht"},
          {"classes", classes()},
          {"dim", dim_},
          {"delta", options_.delta},
          {"grace_period", options_.grace_period},
          {"tie_threshold", options_.tie_threshold},
          {"nodes", std::move(nodes)}};
}

}  // namespace driftkit
