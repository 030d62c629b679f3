#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "driftkit/learners.hpp"
#include "driftkit/pipeline.hpp"
#include "driftkit/stream.hpp"

namespace driftkit {

// counts[true][predicted] over a sorted class alphabet.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::vector<std::string> classes);

  void add(std::size_t truth, std::size_t predicted, std::uint64_t n = 1);
  void add(const std::string& truth, const std::string& predicted, std::uint64_t n = 1);

  std::uint64_t at(std::size_t truth, std::size_t predicted) const {
    return counts_[truth * classes_.size() + predicted];
  }
  std::uint64_t total() const { return total_; }
  std::uint64_t trace() const;
  const std::vector<std::string>& classes() const { return classes_; }
  std::size_t index_of(const std::string& label) const;

 private:
  std::vector<std::string> classes_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

struct Metrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  // Set when the ratio had a zero denominator and was reported as 0.
  bool precision_undefined = false;
  bool recall_undefined = false;
};

// Throws std::invalid_argument on an empty matrix or unknown positive label.
Metrics compute_metrics(const ConfusionMatrix& cm, const std::string& positive);

struct MetricSeries {
  std::vector<std::pair<std::size_t, double>> points;

  void push(double value) { points.emplace_back(points.size(), value); }
  std::vector<double> values() const;
  std::size_t size() const { return points.size(); }
};

// Normalized trapezoid over equally spaced points:
//   (1 / (N - 1)) * sum_{k=1}^{N-1} (f_k + f_{k+1}) / 2.
// Throws std::invalid_argument with fewer than two points.
double aut(std::span<const double> values);
double aut(const MetricSeries& series);

struct DelayPolicy {
  Day delay_days = 0;
  // max(label_available_at, timestamp + delay_days)
  Day effective(const StreamRecord& r) const {
    return std::max(r.label_available_at, r.timestamp + delay_days);
  }
};

struct PrequentialOptions {
  DelayPolicy delay;
  // Records per metric window. Ignored when window_days > 0.
  std::size_t window = 1000;
  // Calendar windows of this many days instead of record-count windows.
  Day window_days = 0;
  std::string positive = kMalicious;
};

struct Delivery {
  std::string id;
  Day available_at = 0;
  // Timestamp of the stream record whose arrival triggered the delivery.
  Day delivered_at = 0;
  DriftSignal signal = DriftSignal::kNormal;
};

struct PrequentialResult {
  MetricSeries accuracy;
  MetricSeries precision;
  MetricSeries recall;
  MetricSeries f1;
  // Per window: whether precision / recall were undefined.
  std::vector<std::pair<bool, bool>> undefined;
  std::vector<std::size_t> window_sizes;
  ConfusionMatrix final_cm{{kBenign, kMalicious}};
  Metrics final;
  double aut_f1 = 0.0;
  std::vector<Prediction> predictions;
  std::vector<std::string> truths;  // aligned with predictions
  std::vector<Delivery> deliveries;
  std::vector<PipelineEvent> events;
};

// Test-then-train over the stream in timestamp order. Before a record at
// time t is predicted, every pending label with effective availability <= t
// is delivered (ascending availability, then id). Records reach the pipeline
// with their label stripped.
PrequentialResult run_prequential(const Stream& test, Pipeline& pipeline,
                                  const PrequentialOptions& options);

// Metric windows over an existing prediction log.
void fill_windows(PrequentialResult& result, const PrequentialOptions& options);

struct WindowSweepConfig {
  std::vector<double> proportions = {0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0};
  std::size_t n_gram = 15;
  double train_fraction = 0.5;
  IsolationForestOptions forest;
};

struct SweepPoint {
  double proportion = 0.0;
  double threshold = 0.0;
  Metrics metrics;
  ConfusionMatrix cm{{"anomalous", "normal"}};
};

struct WindowSweepResult {
  MetricSeries f1;
  std::vector<SweepPoint> points;
};

// Sliding call-frequency windows of width n_gram. The isolation forest is
// fit on the windows of normal training traces only; a trace is anomalous
// iff its highest window score over the first ceil(p * len) calls reaches
// the threshold picked once on the full training traces to maximize F1.
WindowSweepResult window_sweep(const std::vector<Trace>& traces, std::size_t call_dim,
                               const WindowSweepConfig& cfg);

}  // namespace driftkit
