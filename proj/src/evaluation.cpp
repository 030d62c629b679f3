#include "driftkit/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>
#include <tuple>

#include "driftkit/error.hpp"

namespace driftkit {

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> classes) : classes_(std::move(classes)) {
  std::sort(classes_.begin(), classes_.end());
  classes_.erase(std::unique(classes_.begin(), classes_.end()), classes_.end());
  counts_.assign(classes_.size() * classes_.size(), 0);
}

std::size_t ConfusionMatrix::index_of(const std::string& label) const {
  auto it = std::lower_bound(classes_.begin(), classes_.end(), label);
  if (it == classes_.end() || *it != label) {
    throw std::invalid_argument("label '" + label + "' is not in the confusion matrix");
  }
  return static_cast<std::size_t>(it - classes_.begin());
}

void ConfusionMatrix::add(std::size_t truth, std::size_t predicted, std::uint64_t n) {
  counts_.at(truth * classes_.size() + predicted) += n;
  total_ += n;
}

void ConfusionMatrix::add(const std::string& truth, const std::string& predicted,
                          std::uint64_t n) {
  add(index_of(truth), index_of(predicted), n);
}

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t t = 0;
  for (std::size_t i = 0; i < classes_.size(); ++i) t += at(i, i);
  return t;
}

Metrics compute_metrics(const ConfusionMatrix& cm, const std::string& positive) {
  if (cm.total() == 0) throw std::invalid_argument("metrics of an empty confusion matrix");
  const std::size_t pos = cm.index_of(positive);
  std::uint64_t tp = cm.at(pos, pos);
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  for (std::size_t k = 0; k < cm.classes().size(); ++k) {
    if (k == pos) continue;
    fp += cm.at(k, pos);
    fn += cm.at(pos, k);
  }
  Metrics m;
  m.accuracy = static_cast<double>(cm.trace()) / static_cast<double>(cm.total());
  if (tp + fp == 0) {
    m.precision_undefined = true;
  } else {
    m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  }
  if (tp + fn == 0) {
    m.recall_undefined = true;
  } else {
    m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  }
  if (m.precision + m.recall > 0.0) {
    m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  }
  return m;
}

std::vector<double> MetricSeries::values() const {
  std::vector<double> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(p.second);
  return out;
}

double aut(std::span<const double> values) {
  if (values.size() < 2) throw std::invalid_argument("AUT needs at least two points");
  double area = 0.0;
  for (std::size_t k = 0; k + 1 < values.size(); ++k) area += (values[k] + values[k + 1]) / 2.0;
  return area / static_cast<double>(values.size() - 1);
}

double aut(const MetricSeries& series) {
  const auto v = series.values();
  return aut(std::span<const double>(v));
}

// ---------------------------------------------------------------------------

void fill_windows(PrequentialResult& r, const PrequentialOptions& options) {
  r.accuracy = {};
  r.precision = {};
  r.recall = {};
  r.f1 = {};
  r.undefined.clear();
  r.window_sizes.clear();
  const std::size_t n = r.predictions.size();
  if (n == 0) return;

  // Window boundaries as [begin, end) ranges over the prediction log.
  std::vector<std::pair<std::size_t, std::size_t>> windows;
  if (options.window_days > 0) {
    const Day t0 = r.predictions.front().t;
    std::size_t begin = 0;
    for (std::size_t i = 1; i <= n; ++i) {
      if (i == n || (r.predictions[i].t - t0) / options.window_days !=
                        (r.predictions[begin].t - t0) / options.window_days) {
        windows.emplace_back(begin, i);
        begin = i;
      }
    }
  } else {
    const std::size_t w = std::max<std::size_t>(1, options.window);
    for (std::size_t b = 0; b + w <= n; b += w) windows.emplace_back(b, b + w);
    if (windows.empty()) windows.emplace_back(0, n);
  }

  for (const auto& [b, e] : windows) {
    ConfusionMatrix cm(r.final_cm.classes());
    for (std::size_t i = b; i < e; ++i) cm.add(r.truths[i], r.predictions[i].label);
    const auto m = compute_metrics(cm, options.positive);
    r.accuracy.push(m.accuracy);
    r.precision.push(m.precision);
    r.recall.push(m.recall);
    r.f1.push(m.f1);
    r.undefined.emplace_back(m.precision_undefined, m.recall_undefined);
    r.window_sizes.push_back(e - b);
  }
  r.aut_f1 = r.f1.size() >= 2 ? aut(r.f1) : r.f1.points.front().second;
}

PrequentialResult run_prequential(const Stream& test, Pipeline& pipeline,
                                  const PrequentialOptions& options) {
  PrequentialResult result;
  auto classes = pipeline.classifier().classes();
  result.final_cm = ConfusionMatrix(classes);

  using Pending = std::tuple<Day, std::string, std::size_t>;  // availability, id, index
  std::priority_queue<Pending, std::vector<Pending>, std::greater<>> pending;

  auto deliver_until = [&](Day t) {
    while (!pending.empty() && std::get<0>(pending.top()) <= t) {
      const auto [avail, id, idx] = pending.top();
      pending.pop();
      const auto& rec = test[idx];
      const auto signal = pipeline.deliver_label(rec, *rec.true_label);
      result.deliveries.push_back({id, avail, t, signal});
    }
  };

  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto& rec = test[i];
    deliver_until(rec.timestamp);
    StreamRecord unlabeled = rec;
    unlabeled.true_label.reset();
    auto pred = pipeline.process(unlabeled);
    if (!rec.true_label) continue;
    result.final_cm.add(*rec.true_label, pred.label);
    result.truths.push_back(*rec.true_label);
    result.predictions.push_back(std::move(pred));
    pending.emplace(options.delay.effective(rec), rec.id, i);
  }

  if (result.final_cm.total() > 0) {
    result.final = compute_metrics(result.final_cm, options.positive);
  }
  fill_windows(result, options);
  result.events = pipeline.events();
  return result;
}

// ---------------------------------------------------------------------------
// Window sweep

namespace {

class WindowScorer {
 public:
  WindowScorer(std::size_t dim, std::size_t width) : dim_(dim), width_(width) {}

  FeatureVector counts(std::span<const std::uint32_t> calls) const {
    std::vector<FeatureVector::Entry> e;
    e.reserve(calls.size());
    for (auto c : calls) e.emplace_back(c, 1.0);
    return FeatureVector(dim_, std::move(e));
  }

  // Calls fn(dense counts) for every full-width window of the trace (one
  // window when shorter).
  template <class Fn>
  void for_each_window(const std::vector<std::uint32_t>& calls, Fn fn) const {
    std::vector<double> dense(dim_, 0.0);
    const std::size_t first = std::min(width_, calls.size());
    for (std::size_t k = 0; k < first; ++k) dense[calls[k]] += 1.0;
    fn(std::span<const double>(dense));
    for (std::size_t k = width_; k < calls.size(); ++k) {
      dense[calls[k]] += 1.0;
      dense[calls[k - width_]] -= 1.0;
      fn(std::span<const double>(dense));
    }
  }

  std::size_t width() const { return width_; }

 private:
  std::size_t dim_;
  std::size_t width_;
};

struct ScoredTrace {
  bool anomalous = false;
  // prefix_max[k]: highest score among the first k + 1 full windows.
  std::vector<double> prefix_max;
  const std::vector<std::uint32_t>* calls = nullptr;
};

double trace_score(const ScoredTrace& st, double proportion, const WindowScorer& scorer,
                   const IsolationForest& forest) {
  const std::size_t len = st.calls->size();
  const auto prefix =
      static_cast<std::size_t>(std::ceil(proportion * static_cast<double>(len) - 1e-12));
  if (prefix == 0) throw ConfigError("proportion yields a zero-length prefix");
  const std::size_t used = std::min(prefix, len);
  if (used >= scorer.width()) return st.prefix_max[used - scorer.width()];
  return forest.score(scorer.counts({st.calls->data(), used}));
}

Metrics verdict_metrics(const std::vector<double>& scores, const std::vector<ScoredTrace>& traces,
                        double threshold, ConfusionMatrix* out) {
  ConfusionMatrix cm({"anomalous", "normal"});
  for (std::size_t i = 0; i < scores.size(); ++i) {
    cm.add(traces[i].anomalous ? "anomalous" : "normal",
           scores[i] >= threshold ? "anomalous" : "normal");
  }
  if (out) *out = cm;
  return compute_metrics(cm, "anomalous");
}

}  // namespace

WindowSweepResult window_sweep(const std::vector<Trace>& traces, std::size_t call_dim,
                               const WindowSweepConfig& cfg) {
  if (traces.size() < 2) throw DataError("window sweep needs at least two traces");
  if (cfg.n_gram == 0) throw ConfigError("n_gram must be positive");
  if (!(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0)) {
    throw ConfigError("train_fraction must lie in (0, 1)");
  }
  for (double p : cfg.proportions) {
    if (!(p > 0.0 && p <= 1.0)) throw ConfigError("proportions must lie in (0, 1]");
  }
  const auto n_train = std::min(
      traces.size() - 1,
      static_cast<std::size_t>(std::ceil(cfg.train_fraction * static_cast<double>(traces.size()))));

  const WindowScorer scorer(call_dim, cfg.n_gram);
  std::vector<FeatureVector> normal_windows;
  for (std::size_t i = 0; i < n_train; ++i) {
    if (traces[i].anomalous) continue;
    scorer.for_each_window(traces[i].calls, [&](std::span<const double> w) {
      normal_windows.push_back(FeatureVector::from_dense(w));
    });
  }
  if (normal_windows.size() < 2) throw DataError("too few normal training windows");
  IsolationForest forest(cfg.forest);
  forest.fit(normal_windows);
  normal_windows.clear();

  std::vector<ScoredTrace> scored(traces.size());
  for (std::size_t i = 0; i < traces.size(); ++i) {
    auto& st = scored[i];
    st.anomalous = traces[i].anomalous;
    st.calls = &traces[i].calls;
    if (traces[i].calls.size() < scorer.width()) continue;
    double running = 0.0;
    scorer.for_each_window(traces[i].calls, [&](std::span<const double> w) {
      running = std::max(running, forest.score(w));
      st.prefix_max.push_back(running);
    });
  }
  const std::vector<ScoredTrace> train(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n_train));
  const std::vector<ScoredTrace> test(scored.begin() + static_cast<std::ptrdiff_t>(n_train), scored.end());

  // One threshold, picked on the full training traces (the offline
  // detector), is applied to every prefix length.
  std::vector<double> train_scores;
  for (const auto& st : train) train_scores.push_back(trace_score(st, 1.0, scorer, forest));
  std::vector<double> candidates = train_scores;
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  // Every threshold in (candidates[k-1], candidates[k]] gives the same
  // training verdicts; use the middle of that gap.
  std::size_t best = candidates.size() - 1;
  double best_f1 = -1.0;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const double f1 = verdict_metrics(train_scores, train, candidates[k], nullptr).f1;
    if (f1 >= best_f1) {
      best_f1 = f1;
      best = k;
    }
  }
  const double threshold =
      best == 0 ? candidates[0] : 0.5 * (candidates[best - 1] + candidates[best]);

  WindowSweepResult result;
  for (double p : cfg.proportions) {
    std::vector<double> test_scores;
    for (const auto& st : test) test_scores.push_back(trace_score(st, p, scorer, forest));
    SweepPoint point;
    point.proportion = p;
    point.threshold = threshold;
    point.metrics = verdict_metrics(test_scores, test, threshold, &point.cm);
    result.f1.push(point.metrics.f1);
    result.points.push_back(std::move(point));
  }
  return result;
}

}  // namespace driftkit
