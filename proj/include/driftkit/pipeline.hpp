#pragma once

#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "driftkit/drift.hpp"
#include "driftkit/features.hpp"
#include "driftkit/learners.hpp"
#include "driftkit/stream.hpp"

namespace driftkit {

// NoDetector: plain incremental learning, extractor fit once.
// StaticExtractor: on drift the classifier is replaced, the extractor kept.
// RetrainExtractor: on drift both extractor and classifier are refit.
enum class PipelineMode { kNoDetector, kStaticExtractor, kRetrainExtractor };

PipelineMode parse_pipeline_mode(const std::string& name);
std::string to_string(PipelineMode mode);

struct PipelineComponents {
  std::function<Featurizer(std::span<const StreamRecord>)> fit_featurizer;
  std::function<std::unique_ptr<Learner>(std::vector<std::string> classes, std::size_t dim)>
      make_learner;
  std::function<std::unique_ptr<DriftDetector>()> make_detector;
};

PipelineComponents make_components(const FeaturizerSpec& featurizer, const LearnerSpec& learner,
                                   const DetectorSpec& detector);

struct PipelineOptions {
  PipelineMode mode = PipelineMode::kRetrainExtractor;
  std::size_t reservoir_capacity = 1000;
  std::size_t pending_capacity = 1'000'000;
  // Labels known up front in addition to those seen in the bootstrap data.
  std::vector<std::string> classes = {kBenign, kMalicious};
};

struct Prediction {
  std::string id;
  Day t = 0;
  std::string label;
  // Probability the classifier assigns to the predicted label.
  double score = 0.0;
  // Share of the record's tokens unknown to the current extractor.
  double oov_fraction = 0.0;
};

struct PipelineEvent {
  Day t = 0;
  DriftSignal kind = DriftSignal::kWarning;
  std::string detector;
};

// Labeled feature-space example (oversampling output) used to augment the
// bootstrap classifier. Never enters buffers or refits.
struct LabeledFeatures {
  FeatureVector x;
  std::string label;
};

class Pipeline {
 public:
  // Fits E on the training records, trains C one pass over them and starts a
  // fresh detector. Throws DataError on an empty, unlabeled or synthetic
  // training set.
  static Pipeline bootstrap(const Stream& train, PipelineComponents components,
                            PipelineOptions options = {},
                            std::span<const LabeledFeatures> extra = {});

  // Extract with the current E and predict with the current C. The only
  // state touched is the pending-prediction log keyed by record id.
  Prediction process(const StreamRecord& record);
  // Same prediction without recording it.
  Prediction predict(const StreamRecord& record) const;

  // Feeds (prediction != label) to D and follows the Normal / Warning /
  // Drift path. Throws StateError for an unknown or already delivered id.
  DriftSignal deliver_label(const StreamRecord& record, const std::string& true_label);

  PipelineMode mode() const { return options_.mode; }
  const Featurizer& extractor() const { return *extractor_; }
  const Learner& classifier() const { return *classifier_; }
  const DriftDetector* detector() const { return detector_.get(); }
  const std::vector<StreamRecord>& warning_buffer() const { return warning_buffer_; }
  std::size_t reservoir_size() const { return reservoir_.size(); }
  const std::vector<PipelineEvent>& events() const { return events_; }
  const std::vector<std::string>& diagnostics() const { return diagnostics_; }
  std::size_t retrain_count() const { return retrains_; }
  std::size_t pending_count() const { return pending_.size(); }

 private:
  struct Labeled {
    StreamRecord record;
    std::size_t label;
  };

  Pipeline() = default;
  void learn(const StreamRecord& record, std::size_t label);
  void push_reservoir(const StreamRecord& record, std::size_t label);
  void retrain(Day t);

  PipelineComponents components_;
  PipelineOptions options_;
  std::vector<std::string> classes_;
  std::optional<Featurizer> extractor_;
  std::unique_ptr<Learner> classifier_;
  std::unique_ptr<DriftDetector> detector_;
  std::vector<StreamRecord> warning_buffer_;
  std::vector<std::size_t> warning_labels_;
  std::deque<Labeled> reservoir_;
  std::unordered_map<std::string, std::size_t> pending_;
  std::unordered_set<std::string> delivered_;
  std::vector<PipelineEvent> events_;
  std::vector<std::string> diagnostics_;
  DriftSignal level_ = DriftSignal::kNormal;
  std::size_t retrains_ = 0;
};

}  // namespace driftkit
