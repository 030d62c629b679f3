#include "driftkit/drift.hpp"

#include <cmath>
#include <limits>

#include "driftkit/error.hpp"

namespace driftkit {

std::string to_string(DriftSignal s) {
  switch (s) {
    case DriftSignal::kNormal:
      return "normal";
    case DriftSignal::kWarning:
      return "warning";
    case DriftSignal::kDrift:
      return "drift";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// DDM

Ddm::Ddm(Options options) : options_(options) {
  if (options_.min_samples == 0) options_.min_samples = 1;
  if (!(options_.warning_factor > 0.0 && options_.drift_factor >= options_.warning_factor)) {
    throw ConfigError("ddm: need 0 < warning_factor <= drift_factor");
  }
}

DriftSignal Ddm::classify(double p, double s, double p_min, double s_min,
                          double warning_factor, double drift_factor) {
  if (p + s > p_min + drift_factor * s_min) return DriftSignal::kDrift;
  if (p + s > p_min + warning_factor * s_min) return DriftSignal::kWarning;
  return DriftSignal::kNormal;
}

DriftSignal Ddm::update(double error) {
  auto& st = stats_;
  ++st.n;
  st.p += (error - st.p) / static_cast<double>(st.n);
  st.s = std::sqrt(st.p * (1.0 - st.p) / static_cast<double>(st.n));
  if (st.n < options_.min_samples) return DriftSignal::kNormal;

  if (!st.has_min || st.p + st.s < st.p_min + st.s_min) {
    st.p_min = st.p;
    st.s_min = st.s;
    st.has_min = true;
  }
  const auto level = classify(st.p, st.s, st.p_min, st.s_min, options_.warning_factor,
                              options_.drift_factor);
  if (level == DriftSignal::kDrift) reset();
  return level;
}

// ---------------------------------------------------------------------------
// EDDM

Eddm::Eddm(Options options) : options_(options) {
  if (!(options_.beta > 0.0 && options_.beta <= options_.alpha && options_.alpha <= 1.0)) {
    throw ConfigError("eddm: need 0 < beta <= alpha <= 1");
  }
}

void Eddm::reset() {
  stats_ = {};
  level_ = DriftSignal::kNormal;
}

double Eddm::std_dev() const {
  return stats_.num_errors > 0
             ? std::sqrt(stats_.m2 / static_cast<double>(stats_.num_errors))
             : 0.0;
}

DriftSignal Eddm::update(double error) {
  auto& st = stats_;
  ++st.n;
  if (error < 0.5) return level_;

  const double distance = static_cast<double>(st.n - st.last_error);
  st.last_error = st.n;
  ++st.num_errors;
  const double old_mean = st.mean;
  st.mean += (distance - st.mean) / static_cast<double>(st.num_errors);
  st.m2 += (distance - old_mean) * (distance - st.mean);

  const double current = st.mean + 2.0 * std_dev();
  if (current > st.max_level) st.max_level = current;
  st.ratio = st.max_level > 0.0 ? current / st.max_level : 1.0;

  if (st.num_errors < options_.min_errors) {
    level_ = DriftSignal::kNormal;
  } else if (st.ratio < options_.beta) {
    reset();
    return DriftSignal::kDrift;
  } else if (st.ratio < options_.alpha) {
    level_ = DriftSignal::kWarning;
  } else {
    level_ = DriftSignal::kNormal;
  }
  return level_;
}

// ---------------------------------------------------------------------------
// ADWIN

Adwin::Adwin(Options options) : options_(options) {
  if (!(options_.delta > 0.0 && options_.delta < 1.0)) {
    throw ConfigError("adwin: delta must lie in (0, 1)");
  }
  if (options_.max_buckets < 2) throw ConfigError("adwin: max_buckets must be >= 2");
  if (options_.min_sub_window == 0) options_.min_sub_window = 1;
}

void Adwin::reset() {
  rows_.clear();
  width_ = 0.0;
  total_ = 0.0;
}

double Adwin::cut_threshold(double n0, double n1, double width, double delta) {
  const double m = 1.0 / (1.0 / n0 + 1.0 / n1);
  return std::sqrt(std::log(4.0 * width / delta) / (2.0 * m));
}

std::vector<Adwin::Bucket> Adwin::buckets() const {
  std::vector<Bucket> out;
  for (auto row = rows_.rbegin(); row != rows_.rend(); ++row) {
    out.insert(out.end(), row->begin(), row->end());
  }
  return out;
}

void Adwin::insert(double value) {
  if (rows_.empty()) rows_.emplace_back();
  rows_[0].push_back({1.0, value});
  width_ += 1.0;
  total_ += value;
}

void Adwin::compress() {
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    if (rows_[i].size() <= options_.max_buckets) break;
    const Bucket a = rows_[i].front();
    rows_[i].pop_front();
    const Bucket b = rows_[i].front();
    rows_[i].pop_front();
    if (i + 1 == rows_.size()) rows_.emplace_back();
    rows_[i + 1].push_back({a.count + b.count, a.sum + b.sum});
  }
}

// Scans cuts oldest to newest; on the first cut that fires, drops every
// bucket older than it. Returns whether anything was dropped.
bool Adwin::drop_one_cut() {
  const double min_side = static_cast<double>(options_.min_sub_window);
  if (width_ < 2.0 * min_side) return false;
  const double log_term = std::log(4.0 * width_ / options_.delta);

  double n0 = 0.0;
  double s0 = 0.0;
  for (std::size_t r = rows_.size(); r-- > 0;) {
    auto& row = rows_[r];
    for (std::size_t k = 0; k < row.size(); ++k) {
      n0 += row[k].count;
      s0 += row[k].sum;
      const double n1 = width_ - n0;
      if (n1 < min_side) return false;
      if (n0 < min_side) continue;
      const double s1 = total_ - s0;
      const double diff = std::fabs(s0 / n0 - s1 / n1);
      const double m = 1.0 / (1.0 / n0 + 1.0 / n1);
      if (diff >= std::sqrt(log_term / (2.0 * m))) {
        // Drop rows above r entirely and the first k + 1 buckets of row r.
        rows_.resize(r + 1);
        row.erase(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(k + 1));
        while (!rows_.empty() && rows_.back().empty()) rows_.pop_back();
        width_ = 0.0;
        total_ = 0.0;
        for (const auto& rr : rows_) {
          for (const auto& b : rr) {
            width_ += b.count;
            total_ += b.sum;
          }
        }
        return true;
      }
    }
  }
  return false;
}

DriftSignal Adwin::update(double value) {
  insert(value);
  compress();
  bool changed = false;
  while (drop_one_cut()) changed = true;
  if (changed) {
    ++detections_;
    return DriftSignal::kDrift;
  }
  return DriftSignal::kNormal;
}

// ---------------------------------------------------------------------------

DetectorKind parse_detector_kind(const std::string& name) {
  if (name == "none") return DetectorKind::kNone;
  if (name == "ddm") return DetectorKind::kDdm;
  if (name == "eddm") return DetectorKind::kEddm;
  if (name == "adwin") return DetectorKind::kAdwin;
  throw ConfigError("unknown detector '" + name + "' (expected none|ddm|eddm|adwin)");
}

std::string to_string(DetectorKind kind) {
  switch (kind) {
    case DetectorKind::kNone:
      return "none";
    case DetectorKind::kDdm:
      return "ddm";
    case DetectorKind::kEddm:
      return "eddm";
    case DetectorKind::kAdwin:
      return "adwin";
  }
  return "?";
}

std::unique_ptr<DriftDetector> make_detector(const DetectorSpec& spec) {
  switch (spec.kind) {
    case DetectorKind::kNone:
      return nullptr;
    case DetectorKind::kDdm:
      return std::make_unique<Ddm>(spec.ddm);
    case DetectorKind::kEddm:
      return std::make_unique<Eddm>(spec.eddm);
    case DetectorKind::kAdwin:
      return std::make_unique<Adwin>(spec.adwin);
  }
  return nullptr;
}

}  // namespace driftkit
