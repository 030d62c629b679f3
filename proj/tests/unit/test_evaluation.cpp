#include <gtest/gtest.h>

#include <algorithm>
#include <map>

#include "driftkit/error.hpp"
#include "driftkit/evaluation.hpp"

using namespace driftkit;

namespace {

ConfusionMatrix binary_cm(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn, std::uint64_t tn) {
  ConfusionMatrix cm({kBenign, kMalicious});
  cm.add(kMalicious, kMalicious, tp);
  cm.add(kBenign, kMalicious, fp);
  cm.add(kMalicious, kBenign, fn);
  cm.add(kBenign, kBenign, tn);
  return cm;
}

struct Fixture {
  Stream train;
  Stream test;
};

Fixture small_stream(std::size_t n = 500, std::uint64_t seed = 1) {
  GeneratorConfig g;
  g.n_records = n;
  g.seed = seed;
  auto split = temporal_split(generate_text_stream(g), 0.3);
  return {split.train, split.test};
}

PipelineComponents nb_bow() {
  FeaturizerSpec f;
  f.kind = FeaturizerKind::kBow;
  LearnerSpec l;
  l.kind = LearnerKind::kNaiveBayes;
  return make_components(f, l, {});
}

}  // namespace

TEST(Metrics, AccuracyPitfallExample) {
  const auto m = compute_metrics(binary_cm(0, 0, 2, 8), kMalicious);
  EXPECT_DOUBLE_EQ(m.accuracy, 0.8);
  EXPECT_EQ(m.recall, 0.0);
  EXPECT_EQ(m.precision, 0.0);
  EXPECT_TRUE(m.precision_undefined);
  EXPECT_FALSE(m.recall_undefined);
  EXPECT_EQ(m.f1, 0.0);
}

TEST(Metrics, HandCountedExample) {
  const auto m = compute_metrics(binary_cm(3, 1, 2, 4), kMalicious);
  EXPECT_DOUBLE_EQ(m.precision, 0.75);
  EXPECT_DOUBLE_EQ(m.recall, 0.6);
  EXPECT_NEAR(m.f1, 0.666667, 1e-6);
  EXPECT_NEAR(m.f1, 2.0 * 0.45 / 1.35, 1e-15);
  EXPECT_DOUBLE_EQ(m.accuracy, 0.7);
}

TEST(Metrics, PerfectClassifierAndErrors) {
  const auto m = compute_metrics(binary_cm(5, 0, 0, 5), kMalicious);
  EXPECT_EQ(m.accuracy, 1.0);
  EXPECT_EQ(m.precision, 1.0);
  EXPECT_EQ(m.recall, 1.0);
  EXPECT_EQ(m.f1, 1.0);
  EXPECT_THROW(compute_metrics(ConfusionMatrix({kBenign, kMalicious}), kMalicious), std::invalid_argument);
  EXPECT_THROW(compute_metrics(binary_cm(1, 0, 0, 0), "grayware"), std::invalid_argument);
}

TEST(Aut, HandTrapezoid) {
  const std::vector<double> v{1.0, 0.5, 0.5};
  EXPECT_DOUBLE_EQ(aut(v), 0.625);
  const std::vector<double> c(7, 0.42);
  EXPECT_NEAR(aut(c), 0.42, 1e-15);
  for (std::size_t n : {2, 3, 11, 101}) {
    std::vector<double> lin(n);
    for (std::size_t k = 0; k < n; ++k) lin[k] = static_cast<double>(k) / static_cast<double>(n - 1);
    EXPECT_NEAR(aut(lin), 0.5, 1e-12) << n;
  }
  EXPECT_THROW(aut(std::vector<double>{0.3}), std::invalid_argument);
}

TEST(Aut, LinearInScale) {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> f(2 + rng.below(30));
    for (auto& x : f) x = rng.uniform();
    const double alpha = rng.uniform();
    std::vector<double> g = f;
    for (auto& x : g) x *= alpha;
    EXPECT_NEAR(aut(g), alpha * aut(f), 1e-12);
    EXPECT_GE(aut(f), 0.0);
    EXPECT_LE(aut(f), 1.0);
  }
}

TEST(Prequential, DelayZeroMatchesASimpleLoop) {
  auto fx = small_stream(143);  // 100 test records
  ASSERT_EQ(fx.test.size(), 100u);
  auto p = Pipeline::bootstrap(fx.train, nb_bow(), {PipelineMode::kNoDetector});
  PrequentialOptions opts;
  opts.window = 20;
  auto result = run_prequential(fx.test, p, opts);

  // Oracle: fit once, then predict and learn one record at a time.
  auto f = Featurizer::fit({FeaturizerKind::kBow}, fx.train.records());
  NaiveBayes nb({kBenign, kMalicious}, f.dim());
  for (const auto& r : fx.train) nb.learn_one(f.transform(r), *r.true_label);
  ConfusionMatrix cm({kBenign, kMalicious});
  ASSERT_EQ(result.predictions.size(), 100u);
  for (std::size_t i = 0; i < fx.test.size(); ++i) {
    const auto& r = fx.test[i];
    const auto x = f.transform(r);
    const auto pred = nb.predict_label(x);
    ASSERT_EQ(result.predictions[i].label, pred) << i;
    ASSERT_EQ(result.predictions[i].id, r.id);
    cm.add(*r.true_label, pred);
    nb.learn_one(x, *r.true_label);
  }
  const auto m = compute_metrics(cm, kMalicious);
  EXPECT_EQ(result.final.f1, m.f1);
  EXPECT_EQ(result.final.accuracy, m.accuracy);
  EXPECT_EQ(result.f1.size(), 5u);
}

TEST(Prequential, WindowMetricsMatchARecountOfThePredictionLog) {
  auto fx = small_stream(1500, 2);
  auto p = Pipeline::bootstrap(fx.train, nb_bow(), {PipelineMode::kNoDetector});
  PrequentialOptions opts;
  opts.window = 150;
  auto r = run_prequential(fx.test, p, opts);
  ASSERT_EQ(r.f1.size(), r.predictions.size() / 150);
  for (std::size_t w = 0; w < r.f1.size(); ++w) {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    std::uint64_t ok = 0;
    for (std::size_t i = w * 150; i < (w + 1) * 150; ++i) {
      const bool truth = r.truths[i] == kMalicious;
      const bool pred = r.predictions[i].label == kMalicious;
      tp += truth && pred;
      fp += !truth && pred;
      fn += truth && !pred;
      ok += truth == pred;
    }
    const double prec = tp + fp ? static_cast<double>(tp) / (tp + fp) : 0.0;
    const double rec = tp + fn ? static_cast<double>(tp) / (tp + fn) : 0.0;
    EXPECT_DOUBLE_EQ(r.accuracy.points[w].second, ok / 150.0);
    EXPECT_DOUBLE_EQ(r.precision.points[w].second, prec);
    EXPECT_DOUBLE_EQ(r.recall.points[w].second, rec);
    EXPECT_DOUBLE_EQ(r.f1.points[w].second, prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0);
    EXPECT_EQ(r.f1.points[w].first, w);
  }
  EXPECT_DOUBLE_EQ(r.aut_f1, aut(r.f1));
}

TEST(Prequential, DelayedLabelsArriveWithTheFirstLaterRecord) {
  auto fx = small_stream(1200, 3);
  auto p = Pipeline::bootstrap(fx.train, nb_bow(), {PipelineMode::kNoDetector});
  PrequentialOptions opts;
  opts.delay.delay_days = 2;
  auto r = run_prequential(fx.test, p, opts);

  std::map<std::string, Day> ts;
  for (const auto& rec : fx.test) ts[rec.id] = rec.timestamp;
  ASSERT_FALSE(r.deliveries.empty());
  for (std::size_t k = 0; k < r.deliveries.size(); ++k) {
    const auto& d = r.deliveries[k];
    EXPECT_EQ(d.available_at, ts[d.id] + 2);
    // Never consumed before it is available ...
    EXPECT_GE(d.delivered_at, d.available_at);
    // ... and handed over at the first record at or after availability.
    const auto first = std::find_if(fx.test.begin(), fx.test.end(),
                                    [&](const StreamRecord& x) { return x.timestamp >= d.available_at; });
    ASSERT_NE(first, fx.test.end());
    EXPECT_EQ(d.delivered_at, first->timestamp);
    if (k > 0) {
      const auto& prev = r.deliveries[k - 1];
      EXPECT_TRUE(prev.available_at < d.available_at ||
                  (prev.available_at == d.available_at && prev.id < d.id));
    }
  }
  // Labels not yet available when the stream ends are never delivered.
  const Day last = fx.test.records().back().timestamp;
  std::size_t expected = 0;
  for (const auto& rec : fx.test) expected += rec.timestamp + 2 <= last;
  EXPECT_EQ(r.deliveries.size(), expected);
}

TEST(Prequential, DelayBeyondTheSpanFreezesTheModel) {
  auto fx = small_stream(800, 4);
  auto frozen = Pipeline::bootstrap(fx.train, nb_bow(), {PipelineMode::kNoDetector});
  auto p = Pipeline::bootstrap(fx.train, nb_bow(), {PipelineMode::kNoDetector});
  PrequentialOptions opts;
  opts.delay.delay_days = 10000;
  auto r = run_prequential(fx.test, p, opts);
  EXPECT_TRUE(r.deliveries.empty());
  for (std::size_t i = 0; i < fx.test.size(); ++i) {
    const auto want = frozen.predict(fx.test[i]);
    ASSERT_EQ(r.predictions[i].label, want.label);
    ASSERT_EQ(r.predictions[i].score, want.score);
  }
}

TEST(Prequential, RecordLabelAvailabilityOverridesShorterDelay) {
  StreamRecord r;
  r.timestamp = 5;
  r.label_available_at = 20;
  EXPECT_EQ((DelayPolicy{3}).effective(r), 20);
  EXPECT_EQ((DelayPolicy{30}).effective(r), 35);
}

TEST(Prequential, CalendarWindows) {
  auto fx = small_stream(1500, 5);
  auto p = Pipeline::bootstrap(fx.train, nb_bow(), {PipelineMode::kNoDetector});
  PrequentialOptions opts;
  opts.window_days = 30;
  auto r = run_prequential(fx.test, p, opts);
  std::size_t total = 0;
  for (auto s : r.window_sizes) total += s;
  EXPECT_EQ(total, r.predictions.size());
  const Day span = r.predictions.back().t - r.predictions.front().t;
  EXPECT_EQ(r.f1.size(), static_cast<std::size_t>(span / 30 + 1));
}

namespace {

// Normal traces over calls [0, 10); anomalous ones end with a burst of
// out-of-alphabet calls 10..12 in their last 20 calls.
std::vector<Trace> late_burst_traces(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Trace> out;
  for (int i = 0; i < 120; ++i) {
    Trace t;
    t.id = "t" + std::to_string(i);
    const std::size_t len = 200 + rng.below(100);
    for (std::size_t k = 0; k < len; ++k) t.calls.push_back(static_cast<std::uint32_t>(rng.below(10)));
    if (i % 5 == 0) {
      t.anomalous = true;
      t.bursts.push_back({len - 20, 20});
      for (std::size_t k = len - 20; k < len; ++k) t.calls[k] = static_cast<std::uint32_t>(10 + rng.below(3));
    }
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace

TEST(WindowSweep, UnseenBurstsGiveZeroRecallAndFullTracesFindThem) {
  WindowSweepConfig cfg;
  cfg.proportions = {0.1, 0.5, 1.0};
  cfg.forest.n_trees = 50;
  const auto r = window_sweep(late_burst_traces(1), 13, cfg);
  ASSERT_EQ(r.points.size(), 3u);
  EXPECT_EQ(r.points[0].metrics.recall, 0.0);
  EXPECT_EQ(r.points[1].metrics.recall, 0.0);
  EXPECT_EQ(r.points[2].metrics.f1, 1.0);
  EXPECT_EQ(r.f1.size(), 3u);
}

TEST(WindowSweep, DisjointAnomaliesAreFoundOnFullTraces) {
  for (std::uint64_t seed : {0, 1, 2}) {
    TraceConfig tc;
    tc.seed = seed;
    tc.n_traces = 120;
    WindowSweepConfig cfg;
    cfg.proportions = {0.01, 1.0};
    cfg.forest.seed = seed;
    const auto r = window_sweep(generate_traces(tc), trace_call_dimension(tc), cfg);
    EXPECT_EQ(r.points.back().metrics.f1, 1.0) << "seed " << seed;
    EXPECT_GE(r.points.back().metrics.f1 - r.points.front().metrics.f1, 0.10);
  }
}

TEST(WindowSweep, InvalidConfigs) {
  const auto traces = late_burst_traces(2);
  WindowSweepConfig cfg;
  cfg.proportions = {0.0};
  EXPECT_THROW(window_sweep(traces, 13, cfg), ConfigError);
  cfg.proportions = {1.5};
  EXPECT_THROW(window_sweep(traces, 13, cfg), ConfigError);
  cfg = {};
  cfg.train_fraction = 1.0;
  EXPECT_THROW(window_sweep(traces, 13, cfg), ConfigError);
  cfg = {};
  cfg.n_gram = 0;
  EXPECT_THROW(window_sweep(traces, 13, cfg), ConfigError);
  EXPECT_THROW(window_sweep({traces[0]}, 13, {}), DataError);
}
