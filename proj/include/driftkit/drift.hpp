#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace driftkit {

enum class DriftSignal { kNormal, kWarning, kDrift };

std::string to_string(DriftSignal s);

// Supervised change detector fed one observation per labeled example
// (usually the 0/1 error indicator). Drift resets the detector's statistics
// before update() returns.
class DriftDetector {
 public:
  virtual ~DriftDetector() = default;
  virtual DriftSignal update(double value) = 0;
  virtual void reset() = 0;
  virtual std::string name() const = 0;
  virtual bool has_warning_level() const = 0;
  // Same configuration, empty state.
  virtual std::unique_ptr<DriftDetector> clone_fresh() const = 0;
};

// Drift Detection Method: monitors the running error rate p and its
// binomial standard deviation s against the lowest p + s seen so far.
class Ddm final : public DriftDetector {
 public:
  struct Options {
    std::size_t min_samples = 30;
    double warning_factor = 2.0;
    double drift_factor = 3.0;
  };
  struct Stats {
    std::size_t n = 0;
    double p = 0.0;
    double s = 0.0;
    double p_min = 0.0;
    double s_min = 0.0;
    bool has_min = false;
  };

  Ddm() : Ddm(Options{}) {}
  explicit Ddm(Options options);

  DriftSignal update(double error) override;
  void reset() override { stats_ = {}; }
  std::string name() const override { return "ddm"; }
  bool has_warning_level() const override { return true; }
  std::unique_ptr<DriftDetector> clone_fresh() const override {
    return std::make_unique<Ddm>(options_);
  }

  const Stats& stats() const { return stats_; }
  const Options& options() const { return options_; }

  // Level for given statistics: Drift when p + s > p_min + drift_factor*s_min,
  // Warning when p + s > p_min + warning_factor*s_min.
  static DriftSignal classify(double p, double s, double p_min, double s_min,
                              double warning_factor = 2.0, double drift_factor = 3.0);

 private:
  Options options_;
  Stats stats_;
};

// Early Drift Detection Method: tracks the distance (in examples) between
// consecutive errors. A shrinking mean + 2 std relative to its maximum
// signals warning (ratio < alpha) or drift (ratio < beta).
class Eddm final : public DriftDetector {
 public:
  struct Options {
    std::size_t min_errors = 30;
    double alpha = 0.95;
    double beta = 0.90;
  };
  struct Stats {
    std::size_t n = 0;              // examples since reset
    std::size_t last_error = 0;     // example index of the previous error
    std::size_t num_errors = 0;
    double mean = 0.0;              // mean distance between errors
    double m2 = 0.0;                // Welford sum of squared deviations
    double max_level = 0.0;         // max of mean + 2 std
    double ratio = 1.0;             // last (mean + 2 std) / max_level
  };

  Eddm() : Eddm(Options{}) {}
  explicit Eddm(Options options);

  DriftSignal update(double error) override;
  void reset() override;
  std::string name() const override { return "eddm"; }
  bool has_warning_level() const override { return true; }
  std::unique_ptr<DriftDetector> clone_fresh() const override {
    return std::make_unique<Eddm>(options_);
  }

  const Stats& stats() const { return stats_; }
  double std_dev() const;

 private:
  Options options_;
  Stats stats_;
  DriftSignal level_ = DriftSignal::kNormal;
};

// ADaptive WINdowing over an exponential histogram. A cut at any bucket
// boundary whose sub-window means differ by at least
//   eps = sqrt(ln(4 W / delta) / (2 m)),  m = 1 / (1/n0 + 1/n1)
// drops the older sub-window. Never emits Warning.
class Adwin final : public DriftDetector {
 public:
  struct Options {
    double delta = 0.002;
    std::size_t max_buckets = 5;
    // Shortest sub-window on either side of an admissible cut.
    std::size_t min_sub_window = 5;
  };
  struct Bucket {
    double count = 0.0;
    double sum = 0.0;
  };

  Adwin() : Adwin(Options{}) {}
  explicit Adwin(Options options);

  DriftSignal update(double value) override;
  void reset() override;
  std::string name() const override { return "adwin"; }
  bool has_warning_level() const override { return false; }
  std::unique_ptr<DriftDetector> clone_fresh() const override {
    return std::make_unique<Adwin>(options_);
  }

  std::size_t width() const { return static_cast<std::size_t>(width_); }
  double total() const { return total_; }
  double mean() const { return width_ > 0 ? total_ / width_ : 0.0; }
  // Oldest first.
  std::vector<Bucket> buckets() const;
  std::size_t detections() const { return detections_; }
  const Options& options() const { return options_; }

  static double cut_threshold(double n0, double n1, double width, double delta);

 private:
  void insert(double value);
  void compress();
  bool drop_one_cut();

  Options options_;
  // rows_[i] holds buckets of 2^i observations, oldest at the front.
  std::vector<std::deque<Bucket>> rows_;
  double width_ = 0.0;
  double total_ = 0.0;
  std::size_t detections_ = 0;
};

enum class DetectorKind { kNone, kDdm, kEddm, kAdwin };

DetectorKind parse_detector_kind(const std::string& name);
std::string to_string(DetectorKind kind);

struct DetectorSpec {
  DetectorKind kind = DetectorKind::kNone;
  Ddm::Options ddm;
  Eddm::Options eddm;
  Adwin::Options adwin;
};

// nullptr for kNone.
std::unique_ptr<DriftDetector> make_detector(const DetectorSpec& spec);

}  // namespace driftkit
