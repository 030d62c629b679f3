#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "driftkit/features.hpp"
#include "driftkit/stream.hpp"

namespace driftkit {

// Half-open periods of period_length days starting at t0.
struct PeriodPartition {
  Day t0 = 0;
  Day period_length = 30;

  std::int64_t period_of(Day t) const {
    const Day d = t - t0;
    return d >= 0 ? d / period_length : -((-d + period_length - 1) / period_length);
  }
};

struct UndersampleResult {
  Stream stream;
  std::vector<std::string> warnings;
};

// Within each period the majority class is uniformly downsampled to that
// period's minority count. Periods are never pooled; single-class periods
// are kept whole with a warning.
UndersampleResult temporal_undersample(const Stream& stream, Day period_length,
                                       std::uint64_t seed);

struct FeatureRecord {
  std::string id;
  FeatureVector x;
  std::string label;
  Day timestamp = 0;
};

struct SyntheticRecord {
  std::string id;
  FeatureVector x;
  std::string label;
  Day timestamp = 0;
  std::pair<std::string, std::string> parents;
  double u = 0.0;
};

struct OversampleOptions {
  Day period_length = 30;
  std::size_t k_neighbors = 5;
  // Desired minority:majority count ratio after oversampling.
  double target_ratio = 1.0;
  std::uint64_t seed = 0;
  // False gives period-blind SMOTE, kept as a control.
  bool temporal = true;
};

struct OversampleResult {
  std::vector<SyntheticRecord> synthetic;
  std::vector<std::string> warnings;
  std::string minority_label;
};

// SMOTE whose neighbor search and parent pairs stay inside one class and one
// period. The total number of synthetics, round(target * majority) - minority,
// is allotted to periods in proportion to each period's own deficit.
OversampleResult temporal_oversample(const std::vector<FeatureRecord>& records,
                                     const OversampleOptions& options);

// Synthetic records as stream records (no tokens, synthetic flag set).
std::vector<StreamRecord> to_stream_records(const std::vector<SyntheticRecord>& synthetic);

}  // namespace driftkit
