#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "driftkit/drift.hpp"
#include "driftkit/features.hpp"
#include "driftkit/random.hpp"

namespace driftkit {

// Incremental classifier over a fixed, sorted class alphabet. Class indices
// follow the alphabet order, so ties always resolve to the lexicographically
// smallest label. Before any learning every class scores uniformly.
class Learner {
 public:
  explicit Learner(std::vector<std::string> classes);
  virtual ~Learner() = default;

  virtual void learn_one(const FeatureVector& x, std::size_t label, double weight = 1.0) = 0;
  // One score per class, summing to 1.
  virtual std::vector<double> predict_proba(const FeatureVector& x) const = 0;
  virtual void reset() = 0;
  virtual std::string name() const = 0;
  virtual nlohmann::json to_json() const = 0;

  std::size_t predict_one(const FeatureVector& x) const;
  void learn_one(const FeatureVector& x, const std::string& label);
  const std::string& predict_label(const FeatureVector& x) const {
    return classes_[predict_one(x)];
  }

  const std::vector<std::string>& classes() const { return classes_; }
  std::size_t n_classes() const { return classes_.size(); }
  // Throws std::out_of_range for labels outside the alphabet.
  std::size_t class_index(const std::string& label) const;

 private:
  std::vector<std::string> classes_;
};

// Lowest index wins ties.
std::size_t argmax(std::span<const double> scores);

// Multinomial naive Bayes with Laplace smoothing over per-class feature mass.
class NaiveBayes final : public Learner {
 public:
  NaiveBayes(std::vector<std::string> classes, std::size_t dim, double alpha = 1.0);

  void learn_one(const FeatureVector& x, std::size_t label, double weight = 1.0) override;
  using Learner::learn_one;
  std::vector<double> predict_proba(const FeatureVector& x) const override;
  void reset() override;
  std::string name() const override { return "nb"; }
  nlohmann::json to_json() const override;
  static std::unique_ptr<NaiveBayes> from_json(const nlohmann::json& j);

  // Unnormalized log posterior per class.
  std::vector<double> log_joint(const FeatureVector& x) const;

 private:
  std::size_t dim_;
  double alpha_;
  std::vector<double> class_weight_;
  std::vector<double> class_mass_;
  std::vector<std::vector<double>> feature_mass_;
};

struct HoeffdingTreeOptions {
  double delta = 1e-7;
  double grace_period = 200.0;
  double tie_threshold = 0.05;
  // Features considered per leaf. 0 or >= dim means every feature.
  std::size_t subspace_size = 0;
  std::uint64_t seed = 1;
};

// Hoeffding bound: sqrt(range^2 ln(1/delta) / (2n)).
double hoeffding_bound(double range, double delta, double n);
double entropy(std::span<const double> counts);

// VFDT over binary presence tests ("feature value > 0"), information gain,
// majority-class leaves.
class HoeffdingTree final : public Learner {
 public:
  struct Node {
    std::int64_t feature = -1;  // -1 for leaves
    std::uint32_t absent_child = 0;
    std::uint32_t present_child = 0;
    std::uint32_t depth = 0;
    // Prediction counts, including the share inherited from the parent split.
    std::vector<double> class_counts;
    // Counts of examples that reached this leaf since it was created.
    std::vector<double> seen_counts;
    double weight_at_last_eval = 0.0;
    std::unordered_map<std::uint32_t, std::vector<double>> presence;
    std::optional<std::vector<std::uint32_t>> subspace;  // sorted

    bool is_leaf() const { return feature < 0; }
  };

  HoeffdingTree(std::vector<std::string> classes, std::size_t dim,
                HoeffdingTreeOptions options = {});

  void learn_one(const FeatureVector& x, std::size_t label, double weight = 1.0) override;
  using Learner::learn_one;
  std::vector<double> predict_proba(const FeatureVector& x) const override;
  void reset() override;
  std::string name() const override { return "ht"; }
  nlohmann::json to_json() const override;

  const std::vector<Node>& nodes() const { return nodes_; }
  std::size_t n_leaves() const;
  std::size_t n_splits() const { return (nodes_.size() - 1) / 2; }
  // Number of examples at which the tree made its splits (first split first).
  const std::vector<double>& split_history() const { return split_history_; }
  const HoeffdingTreeOptions& options() const { return options_; }

 private:
  std::uint32_t route(const FeatureVector& x) const;
  std::uint32_t make_leaf(std::vector<double> counts, std::uint32_t depth);
  void attempt_split(std::uint32_t leaf);

  std::size_t dim_;
  HoeffdingTreeOptions options_;
  Rng rng_;
  std::vector<Node> nodes_;
  double examples_seen_ = 0.0;
  std::vector<double> split_history_;
};

struct ArfOptions {
  std::size_t n_trees = 10;
  double lambda = 6.0;
  // Every tree sees every example with weight 1 (no online bagging).
  bool constant_weight = false;
  // 0: ceil(sqrt(dim)); kAllFeatures: no subspace restriction.
  std::size_t subspace_size = 0;
  bool detectors = true;
  double warning_delta = 0.01;
  double drift_delta = 0.001;
  HoeffdingTreeOptions tree;
  std::uint64_t seed = 1;

  static constexpr std::size_t kAllFeatures = std::numeric_limits<std::size_t>::max();
};

struct ArfEvent {
  std::uint64_t example = 0;
  std::size_t tree = 0;
  DriftSignal kind = DriftSignal::kWarning;
};

// Adaptive Random Forest: Poisson online bagging of Hoeffding trees over
// random feature subspaces, with a warning ADWIN per tree that starts a
// background tree and a drift ADWIN that swaps it in.
class AdaptiveRandomForest final : public Learner {
 public:
  AdaptiveRandomForest(std::vector<std::string> classes, std::size_t dim, ArfOptions options = {});

  void learn_one(const FeatureVector& x, std::size_t label, double weight = 1.0) override;
  using Learner::learn_one;
  std::vector<double> predict_proba(const FeatureVector& x) const override;
  void reset() override;
  std::string name() const override { return "arf"; }
  nlohmann::json to_json() const override;

  const std::vector<ArfEvent>& events() const { return events_; }
  std::size_t drift_count() const;
  std::size_t subspace_size() const { return subspace_; }
  const HoeffdingTree& tree(std::size_t i) const { return *members_[i].tree; }
  bool has_background(std::size_t i) const { return members_[i].background != nullptr; }

 private:
  struct Member {
    std::unique_ptr<HoeffdingTree> tree;
    std::unique_ptr<HoeffdingTree> background;
    std::optional<Adwin> warning;
    std::optional<Adwin> drift;
    std::uint64_t generation = 0;
  };

  std::unique_ptr<HoeffdingTree> new_tree(std::size_t index, std::uint64_t generation) const;
  void init_members();

  std::size_t dim_;
  ArfOptions options_;
  std::size_t subspace_;
  Rng rng_;
  std::vector<Member> members_;
  std::vector<ArfEvent> events_;
  std::uint64_t examples_ = 0;
};

struct IsolationForestOptions {
  std::size_t n_trees = 100;
  std::size_t subsample = 256;
  std::uint64_t seed = 1;
};

// Average unsuccessful-search path length in a BST of n points:
// c(n) = 2 H(n-1) - 2 (n-1) / n, with c(n) = 0 for n <= 1.
double average_path_length(std::size_t n);
double harmonic_number(std::size_t k);

// Batch-fit one-class anomaly model.
class IsolationForest {
 public:
  struct Node {
    std::int64_t feature = -1;  // -1 for external nodes
    double threshold = 0.0;     // x[feature] < threshold goes left
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    std::size_t size = 0;
    std::uint32_t depth = 0;
  };
  using Tree = std::vector<Node>;

  explicit IsolationForest(IsolationForestOptions options = {});

  // Throws DataError with fewer than two points or mixed dimensions.
  void fit(std::span<const FeatureVector> points);
  // s(x) = 2^(-E[h(x)] / c(psi)) in (0, 1].
  double score(const FeatureVector& x) const;
  // Same score for a dense point of length dim.
  double score(std::span<const double> dense) const;
  double expected_path_length(const FeatureVector& x) const;
  static double path_length(const Tree& tree, const FeatureVector& x);

  bool fitted() const { return !trees_.empty(); }
  const std::vector<Tree>& trees() const { return trees_; }
  std::size_t sample_size() const { return psi_; }
  std::size_t height_limit() const { return height_limit_; }

 private:
  IsolationForestOptions options_;
  std::vector<Tree> trees_;
  std::size_t psi_ = 0;
  std::size_t height_limit_ = 0;
  std::size_t dim_ = 0;
};

enum class LearnerKind { kNaiveBayes, kHoeffdingTree, kArf, kIsolationForest };

LearnerKind parse_learner_kind(const std::string& name);
std::string to_string(LearnerKind kind);

struct LearnerSpec {
  LearnerKind kind = LearnerKind::kArf;
  double nb_alpha = 1.0;
  HoeffdingTreeOptions tree;
  ArfOptions arf;
  IsolationForestOptions iforest;
  std::uint64_t seed = 1;
};

// Throws ConfigError for the isolation forest, which is not a classifier.
std::unique_ptr<Learner> make_learner(const LearnerSpec& spec,
                                      std::vector<std::string> classes, std::size_t dim);

}  // namespace driftkit
