#include "driftkit/pipeline.hpp"

#include <algorithm>
#include <set>

#include "driftkit/error.hpp"

namespace driftkit {

PipelineMode parse_pipeline_mode(const std::string& name) {
  if (name == "no_detector") return PipelineMode::kNoDetector;
  if (name == "static_extractor") return PipelineMode::kStaticExtractor;
  if (name == "retrain_extractor") return PipelineMode::kRetrainExtractor;
  throw ConfigError("unknown mode '" + name +
                    "' (expected no_detector|static_extractor|retrain_extractor)");
}

std::string to_string(PipelineMode mode) {
  switch (mode) {
    case PipelineMode::kNoDetector:
      return "no_detector";
    case PipelineMode::kStaticExtractor:
      return "static_extractor";
    case PipelineMode::kRetrainExtractor:
      return "retrain_extractor";
  }
  return "?";
}

PipelineComponents make_components(const FeaturizerSpec& featurizer, const LearnerSpec& learner,
                                   const DetectorSpec& detector) {
  PipelineComponents c;
  c.fit_featurizer = [featurizer](std::span<const StreamRecord> corpus) {
    return Featurizer::fit(featurizer, corpus);
  };
  c.make_learner = [learner](std::vector<std::string> classes, std::size_t dim) {
    return driftkit::make_learner(learner, std::move(classes), dim);
  };
  c.make_detector = [detector]() { return make_detector(detector); };
  return c;
}

Pipeline Pipeline::bootstrap(const Stream& train, PipelineComponents components,
                             PipelineOptions options, std::span<const LabeledFeatures> extra) {
  if (train.empty()) throw DataError("bootstrap needs a non-empty training stream");
  for (const auto& r : train) {
    if (!r.true_label) throw DataError("bootstrap record '" + r.id + "' is unlabeled");
    if (r.synthetic) throw DataError("bootstrap record '" + r.id + "' is synthetic");
  }
  Pipeline p;
  p.components_ = std::move(components);
  p.options_ = std::move(options);
  std::set<std::string> classes(p.options_.classes.begin(), p.options_.classes.end());
  classes.insert(train.class_alphabet().begin(), train.class_alphabet().end());
  p.classes_.assign(classes.begin(), classes.end());

  p.extractor_ = p.components_.fit_featurizer(train.records());
  p.classifier_ = p.components_.make_learner(p.classes_, p.extractor_->dim());
  for (const auto& r : train) {
    const auto y = p.classifier_->class_index(*r.true_label);
    p.classifier_->learn_one(p.extractor_->transform(r), y);
    p.push_reservoir(r, y);
  }
  for (const auto& e : extra) {
    if (e.x.dim() != p.extractor_->dim()) {
      throw DataError("bootstrap feature-space example has the wrong dimension");
    }
    p.classifier_->learn_one(e.x, p.classifier_->class_index(e.label));
  }
  if (p.options_.mode != PipelineMode::kNoDetector) {
    p.detector_ = p.components_.make_detector();
    if (!p.detector_) throw ConfigError("mode " + to_string(p.options_.mode) + " needs a detector");
  }
  return p;
}

Prediction Pipeline::predict(const StreamRecord& record) const {
  if (record.synthetic) {
    throw DataError("record '" + record.id + "' is synthetic and has no raw tokens");
  }
  const auto x = extractor_->transform(record);
  const auto proba = classifier_->predict_proba(x);
  const auto k = argmax(proba);
  return {record.id, record.timestamp, classifier_->classes()[k], proba[k],
          extractor_->oov_fraction(record)};
}

Prediction Pipeline::process(const StreamRecord& record) {
  if (pending_.size() >= options_.pending_capacity) {
    throw StateError("pending prediction capacity (" +
                     std::to_string(options_.pending_capacity) + ") exceeded");
  }
  if (pending_.contains(record.id) || delivered_.contains(record.id)) {
    throw StateError("record '" + record.id + "' was already processed");
  }
  auto pred = predict(record);
  pending_.emplace(record.id, classifier_->class_index(pred.label));
  return pred;
}

void Pipeline::learn(const StreamRecord& record, std::size_t label) {
  classifier_->learn_one(extractor_->transform(record), label);
}

void Pipeline::push_reservoir(const StreamRecord& record, std::size_t label) {
  if (options_.reservoir_capacity == 0) return;
  reservoir_.push_back({record, label});
  while (reservoir_.size() > options_.reservoir_capacity) reservoir_.pop_front();
}

DriftSignal Pipeline::deliver_label(const StreamRecord& record, const std::string& true_label) {
  auto it = pending_.find(record.id);
  if (it == pending_.end()) {
    if (delivered_.contains(record.id)) {
      throw StateError("duplicate label delivery for '" + record.id + "'");
    }
    throw StateError("label for unknown record id '" + record.id + "'");
  }
  const std::size_t predicted = it->second;
  const std::size_t y = classifier_->class_index(true_label);
  pending_.erase(it);
  delivered_.insert(record.id);

  if (options_.mode == PipelineMode::kNoDetector) {
    learn(record, y);
    push_reservoir(record, y);
    return DriftSignal::kNormal;
  }

  const double error = predicted != y ? 1.0 : 0.0;
  const DriftSignal signal = detector_->update(error);
  switch (signal) {
    case DriftSignal::kNormal:
      learn(record, y);
      push_reservoir(record, y);
      warning_buffer_.clear();
      warning_labels_.clear();
      break;
    case DriftSignal::kWarning:
      if (level_ != DriftSignal::kWarning) {
        events_.push_back({record.timestamp, DriftSignal::kWarning, detector_->name()});
      }
      learn(record, y);
      push_reservoir(record, y);
      warning_buffer_.push_back(record);
      warning_labels_.push_back(y);
      break;
    case DriftSignal::kDrift:
      events_.push_back({record.timestamp, DriftSignal::kDrift, detector_->name()});
      retrain(record.timestamp);
      learn(record, y);
      push_reservoir(record, y);
      break;
  }
  level_ = signal == DriftSignal::kDrift ? DriftSignal::kNormal : signal;
  return signal;
}

void Pipeline::retrain(Day t) {
  std::vector<Labeled> source;
  if (!warning_buffer_.empty()) {
    for (std::size_t i = 0; i < warning_buffer_.size(); ++i) {
      source.push_back({warning_buffer_[i], warning_labels_[i]});
    }
    std::set<std::size_t> labels(warning_labels_.begin(), warning_labels_.end());
    if (labels.size() < 2) {
      diagnostics_.push_back("t=" + std::to_string(t) +
                             ": single-class warning buffer augmented with the reservoir");
      std::unordered_set<std::string> ids;
      for (const auto& s : source) ids.insert(s.record.id);
      std::vector<Labeled> merged;
      for (const auto& r : reservoir_) {
        if (!ids.contains(r.record.id)) merged.push_back(r);
      }
      merged.insert(merged.end(), source.begin(), source.end());
      std::stable_sort(merged.begin(), merged.end(), [](const Labeled& a, const Labeled& b) {
        if (a.record.timestamp != b.record.timestamp) return a.record.timestamp < b.record.timestamp;
        return a.record.id < b.record.id;
      });
      source = std::move(merged);
    }
  } else {
    if (reservoir_.empty()) {
      throw StateError("drift with an empty warning buffer and an empty reservoir");
    }
    source.assign(reservoir_.begin(), reservoir_.end());
  }

  if (options_.mode == PipelineMode::kRetrainExtractor) {
    std::vector<StreamRecord> raw;
    raw.reserve(source.size());
    for (const auto& s : source) raw.push_back(s.record);
    extractor_ = components_.fit_featurizer(raw);
  }
  classifier_ = components_.make_learner(classes_, extractor_->dim());
  for (const auto& s : source) learn(s.record, s.label);
  detector_ = components_.make_detector();
  warning_buffer_.clear();
  warning_labels_.clear();
  ++retrains_;
}

}  // namespace driftkit
