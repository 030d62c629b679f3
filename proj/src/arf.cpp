#include <algorithm>
#include <cmath>

#include "driftkit/error.hpp"
#include "driftkit/learners.hpp"

namespace driftkit {

AdaptiveRandomForest::AdaptiveRandomForest(std::vector<std::string> classes, std::size_t dim,
                                           ArfOptions options)
    : Learner(std::move(classes)), dim_(dim), options_(options), rng_(options.seed) {
  if (dim_ == 0) throw ConfigError("arf: dim must be positive");
  if (options_.n_trees == 0) throw ConfigError("arf: n_trees must be positive");
  if (!options_.constant_weight && !(options_.lambda > 0.0)) {
    throw ConfigError("arf: lambda must be positive");
  }
  if (options_.subspace_size == ArfOptions::kAllFeatures) {
    subspace_ = 0;
  } else if (options_.subspace_size == 0) {
    subspace_ = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(dim_))));
  } else {
    subspace_ = options_.subspace_size;
  }
  if (subspace_ >= dim_) subspace_ = 0;
  init_members();
}

std::unique_ptr<HoeffdingTree> AdaptiveRandomForest::new_tree(std::size_t index,
                                                              std::uint64_t generation) const {
  auto opts = options_.tree;
  opts.subspace_size = subspace_;
  opts.seed = mix_seed(options_.seed, index * 1000003ULL + generation);
  return std::make_unique<HoeffdingTree>(classes(), dim_, opts);
}

void AdaptiveRandomForest::init_members() {
  members_.clear();
  members_.resize(options_.n_trees);
  for (std::size_t i = 0; i < members_.size(); ++i) {
    auto& m = members_[i];
    m.tree = new_tree(i, 0);
    if (options_.detectors) {
      m.warning.emplace(Adwin::Options{options_.warning_delta});
      m.drift.emplace(Adwin::Options{options_.drift_delta});
    }
  }
}

void AdaptiveRandomForest::reset() {
  rng_ = Rng(options_.seed);
  events_.clear();
  examples_ = 0;
  init_members();
}

void AdaptiveRandomForest::learn_one(const FeatureVector& x, std::size_t label, double weight) {
  ++examples_;
  for (std::size_t i = 0; i < members_.size(); ++i) {
    auto& m = members_[i];
    const unsigned k = options_.constant_weight ? 1U : rng_.poisson(options_.lambda);
    if (k == 0) continue;
    const double w = weight * static_cast<double>(k);

    if (options_.detectors) {
      const double error = m.tree->predict_one(x) != label ? 1.0 : 0.0;
      if (m.warning->update(error) == DriftSignal::kDrift) {
        m.background = new_tree(i, ++m.generation);
        m.warning.emplace(Adwin::Options{options_.warning_delta});
        events_.push_back({examples_, i, DriftSignal::kWarning});
      }
      if (m.drift->update(error) == DriftSignal::kDrift) {
        m.tree = m.background ? std::move(m.background) : new_tree(i, ++m.generation);
        m.background.reset();
        m.warning.emplace(Adwin::Options{options_.warning_delta});
        m.drift.emplace(Adwin::Options{options_.drift_delta});
        events_.push_back({examples_, i, DriftSignal::kDrift});
      }
    }
    m.tree->learn_one(x, label, w);
    if (m.background) m.background->learn_one(x, label, w);
  }
}

std::vector<double> AdaptiveRandomForest::predict_proba(const FeatureVector& x) const {
  std::vector<double> votes(n_classes(), 0.0);
  for (const auto& m : members_) {
    const auto p = m.tree->predict_proba(x);
    for (std::size_t c = 0; c < votes.size(); ++c) votes[c] += p[c];
  }
  double total = 0.0;
  for (double v : votes) total += v;
  for (auto& v : votes) v /= total;
  return votes;
}

std::size_t AdaptiveRandomForest::drift_count() const {
  return static_cast<std::size_t>(std::count_if(
      events_.begin(), events_.end(), [](const ArfEvent& e) { return e.kind == DriftSignal::kDrift; }));
}

nlohmann::json AdaptiveRandomForest::to_json() const {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& m : members_) trees.push_back(m.tree->to_json());
  return {{"version", 1},        {"learner", "arf"},         {"classes", classes()},
          {"dim", dim_},         {"lambda", options_.lambda}, {"subspace", subspace_},
          {"examples", examples_}, {"trees", std::move(trees)}};
}

}  // namespace driftkit
