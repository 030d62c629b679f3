#include "driftkit/resampling.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "driftkit/error.hpp"
#include "driftkit/random.hpp"

namespace driftkit {

UndersampleResult temporal_undersample(const Stream& stream, Day period_length,
                                       std::uint64_t seed) {
  if (period_length <= 0) throw ConfigError("period_length must be positive");
  if (stream.class_alphabet().size() > 2) {
    throw ConfigError("temporal undersampling expects a binary-labeled stream");
  }
  UndersampleResult out;
  if (stream.empty()) return out;
  const PeriodPartition part{stream[0].timestamp, period_length};

  // period -> label -> record indices (stream order)
  std::map<std::int64_t, std::map<std::string, std::vector<std::uint32_t>>> groups;
  for (std::size_t i = 0; i < stream.size(); ++i) {
    const auto& r = stream[i];
    if (!r.true_label) throw DataError("record '" + r.id + "' is unlabeled");
    groups[part.period_of(r.timestamp)][*r.true_label].push_back(static_cast<std::uint32_t>(i));
  }

  Rng rng(seed);
  std::vector<char> keep(stream.size(), 1);
  for (auto& [period, by_label] : groups) {
    if (by_label.size() < 2) {
      out.warnings.push_back("period " + std::to_string(period) + " has a single class (" +
                             by_label.begin()->first + "); left untouched");
      continue;
    }
    auto first = by_label.begin();
    auto second = std::next(first);
    if (first->second.size() == second->second.size()) continue;
    auto& majority = first->second.size() > second->second.size() ? first->second : second->second;
    const auto target = static_cast<std::uint32_t>(
        std::min(first->second.size(), second->second.size()));
    for (auto idx : majority) keep[idx] = 0;
    for (auto k : rng.sample_distinct(static_cast<std::uint32_t>(majority.size()), target)) {
      keep[majority[k]] = 1;
    }
  }
  std::vector<StreamRecord> kept;
  for (std::size_t i = 0; i < stream.size(); ++i) {
    if (keep[i]) kept.push_back(stream[i]);
  }
  out.stream = Stream(std::move(kept));
  return out;
}

namespace {

double squared_distance(const FeatureVector& a, const FeatureVector& b) {
  const auto& ea = a.entries();
  const auto& eb = b.entries();
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < ea.size() || j < eb.size()) {
    if (j == eb.size() || (i < ea.size() && ea[i].first < eb[j].first)) {
      d += ea[i].second * ea[i].second;
      ++i;
    } else if (i == ea.size() || eb[j].first < ea[i].first) {
      d += eb[j].second * eb[j].second;
      ++j;
    } else {
      const double diff = ea[i].second - eb[j].second;
      d += diff * diff;
      ++i;
      ++j;
    }
  }
  return d;
}

FeatureVector interpolate(const FeatureVector& a, const FeatureVector& b, double u) {
  const auto& ea = a.entries();
  const auto& eb = b.entries();
  std::vector<FeatureVector::Entry> e;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < ea.size() || j < eb.size()) {
    std::uint32_t k;
    double va = 0.0;
    double vb = 0.0;
    if (j == eb.size() || (i < ea.size() && ea[i].first < eb[j].first)) {
      k = ea[i].first;
      va = ea[i++].second;
    } else if (i == ea.size() || eb[j].first < ea[i].first) {
      k = eb[j].first;
      vb = eb[j++].second;
    } else {
      k = ea[i].first;
      va = ea[i++].second;
      vb = eb[j++].second;
    }
    const double v = va + u * (vb - va);
    if (v > 0.0) e.emplace_back(k, v);
  }
  return FeatureVector(a.dim(), std::move(e));
}

// Largest-remainder apportionment of total over weights.
std::vector<std::size_t> apportion(std::size_t total, const std::vector<double>& weights) {
  std::vector<std::size_t> out(weights.size(), 0);
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (total == 0 || sum <= 0.0) return out;
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double exact = static_cast<double>(total) * weights[i] / sum;
    out[i] = static_cast<std::size_t>(std::floor(exact));
    assigned += out[i];
    remainders.emplace_back(exact - std::floor(exact), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < total && k < remainders.size(); ++k, ++assigned) {
    ++out[remainders[k].second];
  }
  return out;
}

}  // namespace

OversampleResult temporal_oversample(const std::vector<FeatureRecord>& records,
                                     const OversampleOptions& options) {
  if (options.period_length <= 0) throw ConfigError("period_length must be positive");
  if (options.k_neighbors == 0) throw ConfigError("k_neighbors must be positive");
  if (!(options.target_ratio > 0.0)) throw ConfigError("target_ratio must be positive");
  OversampleResult out;
  if (records.empty()) return out;

  std::map<std::string, std::size_t> class_counts;
  Day t0 = records.front().timestamp;
  for (const auto& r : records) {
    ++class_counts[r.label];
    t0 = std::min(t0, r.timestamp);
  }
  if (class_counts.size() != 2) {
    throw ConfigError("temporal oversampling expects exactly two classes");
  }
  auto a = class_counts.begin();
  auto b = std::next(a);
  // Ties pick the lexicographically larger label as minority.
  const auto& minority = a->second < b->second ? a->first : b->first;
  const auto& majority = a->second < b->second ? b->first : a->first;
  out.minority_label = minority;
  const auto min_total = class_counts[minority];
  const auto maj_total = class_counts[majority];
  const auto wanted = std::llround(options.target_ratio * static_cast<double>(maj_total));
  if (wanted <= static_cast<long long>(min_total)) return out;
  const auto total = static_cast<std::size_t>(wanted - static_cast<long long>(min_total));

  const PeriodPartition part{t0, options.period_length};
  std::map<std::int64_t, std::vector<std::size_t>> minority_by_period;
  std::map<std::int64_t, std::size_t> majority_by_period;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto period = options.temporal ? part.period_of(records[i].timestamp) : 0;
    if (records[i].label == minority) {
      minority_by_period[period].push_back(i);
    } else {
      ++majority_by_period[period];
      minority_by_period.try_emplace(period);
    }
  }

  std::vector<std::int64_t> periods;
  std::vector<double> deficits;
  for (const auto& [period, members] : minority_by_period) {
    const double deficit = std::max(
        0.0, options.target_ratio * static_cast<double>(majority_by_period[period]) -
                 static_cast<double>(members.size()));
    if (deficit <= 0.0) continue;
    if (members.size() < 2) {
      out.warnings.push_back("period " + std::to_string(period) + " has " +
                             std::to_string(members.size()) +
                             " minority record(s); skipped");
      continue;
    }
    periods.push_back(period);
    deficits.push_back(deficit);
  }
  const auto alloc = apportion(total, deficits);

  Rng rng(options.seed);
  std::size_t next_id = 0;
  for (std::size_t p = 0; p < periods.size(); ++p) {
    const auto& members = minority_by_period[periods[p]];
    const std::size_t k = std::min(options.k_neighbors, members.size() - 1);
    // Brute-force k nearest neighbors within the period, ties by position.
    std::vector<std::vector<std::size_t>> neighbors(members.size());
    for (std::size_t i = 0; i < members.size(); ++i) {
      std::vector<std::pair<double, std::size_t>> d;
      for (std::size_t j = 0; j < members.size(); ++j) {
        if (j != i) d.emplace_back(squared_distance(records[members[i]].x, records[members[j]].x), j);
      }
      std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
      for (std::size_t q = 0; q < k; ++q) neighbors[i].push_back(d[q].second);
    }
    for (std::size_t s = 0; s < alloc[p]; ++s) {
      const std::size_t i = rng.below(members.size());
      const std::size_t j = neighbors[i][rng.below(k)];
      const auto& pa = records[members[i]];
      const auto& pb = records[members[j]];
      const double u = rng.uniform();
      SyntheticRecord syn;
      syn.id = "syn" + std::to_string(next_id++);
      syn.x = interpolate(pa.x, pb.x, u);
      syn.label = minority;
      syn.timestamp = static_cast<Day>(std::llround(
          static_cast<double>(pa.timestamp) +
          u * static_cast<double>(pb.timestamp - pa.timestamp)));
      syn.parents = {pa.id, pb.id};
      syn.u = u;
      out.synthetic.push_back(std::move(syn));
    }
  }
  return out;
}

std::vector<StreamRecord> to_stream_records(const std::vector<SyntheticRecord>& synthetic) {
  std::vector<StreamRecord> out;
  out.reserve(synthetic.size());
  for (const auto& s : synthetic) {
    StreamRecord r;
    r.id = s.id;
    r.timestamp = s.timestamp;
    r.label_available_at = s.timestamp;
    r.true_label = s.label;
    r.synthetic = true;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace driftkit
