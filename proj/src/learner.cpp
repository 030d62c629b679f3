#include <algorithm>
#include <stdexcept>

#include "driftkit/error.hpp"
#include "driftkit/learners.hpp"

namespace driftkit {

Learner::Learner(std::vector<std::string> classes) : classes_(std::move(classes)) {
  std::sort(classes_.begin(), classes_.end());
  classes_.erase(std::unique(classes_.begin(), classes_.end()), classes_.end());
  if (classes_.size() < 2) throw ConfigError("a classifier needs at least two classes");
}

std::size_t Learner::predict_one(const FeatureVector& x) const {
  const auto proba = predict_proba(x);
  return argmax(proba);
}

void Learner::learn_one(const FeatureVector& x, const std::string& label) {
  learn_one(x, class_index(label), 1.0);
}

std::size_t Learner::class_index(const std::string& label) const {
  auto it = std::lower_bound(classes_.begin(), classes_.end(), label);
  if (it == classes_.end() || *it != label) {
    throw std::out_of_range("label '" + label + "' is not in the class alphabet");
  }
  return static_cast<std::size_t>(it - classes_.begin());
}

std::size_t argmax(std::span<const double> scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

LearnerKind parse_learner_kind(const std::string& name) {
  if (name == "nb") return LearnerKind::kNaiveBayes;
  if (name == "ht") return LearnerKind::kHoeffdingTree;
  if (name == "arf") return LearnerKind::kArf;
  if (name == "iforest") return LearnerKind::kIsolationForest;
  throw ConfigError("unknown learner '" + name + "' (expected nb|ht|arf|iforest)");
}

std::string to_string(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::kNaiveBayes:
      return "nb";
    case LearnerKind::kHoeffdingTree:
      return "ht";
    case LearnerKind::kArf:
      return "arf";
    case LearnerKind::kIsolationForest:
      return "iforest";
  }
  return "?";
}

std::unique_ptr<Learner> make_learner(const LearnerSpec& spec, std::vector<std::string> classes,
                                      std::size_t dim) {
  switch (spec.kind) {
    case LearnerKind::kNaiveBayes:
      return std::make_unique<NaiveBayes>(std::move(classes), dim, spec.nb_alpha);
    case LearnerKind::kHoeffdingTree: {
      auto opts = spec.tree;
      opts.seed = spec.seed;
      return std::make_unique<HoeffdingTree>(std::move(classes), dim, opts);
    }
    case LearnerKind::kArf: {
      auto opts = spec.arf;
      opts.seed = spec.seed;
      return std::make_unique<AdaptiveRandomForest>(std::move(classes), dim, opts);
    }
    case LearnerKind::kIsolationForest:
      throw ConfigError("iforest is an anomaly model, not an incremental classifier");
  }
  throw ConfigError("unknown learner kind");
}

}  // namespace driftkit
