#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "driftkit/error.hpp"
#include "driftkit/features.hpp"
#include "driftkit/learners.hpp"
#include "driftkit/stream.hpp"

using namespace driftkit;

namespace {

const std::vector<std::string> kClasses{"neg", "pos"};

FeatureVector fv(std::size_t dim, std::vector<FeatureVector::Entry> e) { return {dim, std::move(e)}; }

void expect_distribution(const std::vector<double>& p) {
  ASSERT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-9);
  for (double v : p) ASSERT_GE(v, 0.0);
}

// Generated text stream turned into features by a tfidf extractor fitted on
// the first fifth.
struct Featurized {
  std::vector<FeatureVector> x;
  std::vector<std::size_t> y;
  std::size_t dim = 0;
  std::vector<std::string> classes;
};

Featurized featurized_stream(std::size_t n, std::uint64_t seed, std::vector<Day> drift_at = {365}) {
  GeneratorConfig cfg;
  cfg.n_records = n;
  cfg.seed = seed;
  cfg.drift_at = std::move(drift_at);
  auto s = generate_text_stream(cfg);
  auto f = Featurizer::fit({}, std::span<const StreamRecord>(s.records()).first(n / 5));
  Featurized out;
  out.dim = f.dim();
  out.classes = s.class_alphabet();
  for (const auto& r : s) {
    out.x.push_back(f.transform(r));
    out.y.push_back(r.true_label == out.classes[0] ? 0 : 1);
  }
  return out;
}

}  // namespace

TEST(Learner, UntrainedScoresAreUniform) {
  for (auto kind : {LearnerKind::kNaiveBayes, LearnerKind::kHoeffdingTree, LearnerKind::kArf}) {
    LearnerSpec spec;
    spec.kind = kind;
    auto l = make_learner(spec, kClasses, 4);
    auto p = l->predict_proba(fv(4, {{1, 1.0}}));
    EXPECT_DOUBLE_EQ(p[0], 0.5) << to_string(kind);
    EXPECT_EQ(l->predict_label(fv(4, {})), "neg");
  }
  LearnerSpec forest;
  forest.kind = LearnerKind::kIsolationForest;
  EXPECT_THROW(make_learner(forest, kClasses, 4), ConfigError);
  EXPECT_THROW(parse_learner_kind("svm"), ConfigError);
}

TEST(Learner, ProbabilitiesSumToOneThroughoutLearning) {
  auto data = featurized_stream(1500, 3);
  for (auto kind : {LearnerKind::kNaiveBayes, LearnerKind::kHoeffdingTree, LearnerKind::kArf}) {
    LearnerSpec spec;
    spec.kind = kind;
    auto l = make_learner(spec, data.classes, data.dim);
    for (std::size_t i = 0; i < data.x.size(); ++i) {
      expect_distribution(l->predict_proba(data.x[i]));
      l->learn_one(data.x[i], data.y[i]);
    }
  }
}

TEST(NaiveBayes, SeparableToy) {
  NaiveBayes nb({"neg", "pos"}, 2);
  nb.learn_one(fv(2, {{0, 1.0}}), "pos");
  nb.learn_one(fv(2, {{1, 1.0}}), "neg");
  EXPECT_EQ(nb.predict_label(fv(2, {{0, 1.0}})), "pos");
  EXPECT_EQ(nb.predict_label(fv(2, {{1, 1.0}})), "neg");
  // Equal priors on the zero vector: tie goes to the smaller label.
  EXPECT_EQ(nb.predict_label(fv(2, {})), "neg");
  nb.learn_one(fv(2, {{0, 1.0}}), "pos");
  EXPECT_EQ(nb.predict_label(fv(2, {})), "pos");
}

TEST(NaiveBayes, PosteriorMatchesHandBayes) {
  NaiveBayes nb({"neg", "pos"}, 2);
  nb.learn_one(fv(2, {{0, 2.0}}), "pos");
  nb.learn_one(fv(2, {{0, 1.0}, {1, 1.0}}), "pos");
  nb.learn_one(fv(2, {{1, 3.0}}), "neg");
  // Smoothed priors 3/5 and 2/5. Feature likelihoods: pos (3+1)/6, (1+1)/6;
  // neg (0+1)/5, (3+1)/5. Query x = {f0: 1, f1: 2}.
  const double pos = 0.6 * (4.0 / 6.0) * (2.0 / 6.0) * (2.0 / 6.0);
  const double neg = 0.4 * (1.0 / 5.0) * (4.0 / 5.0) * (4.0 / 5.0);
  auto p = nb.predict_proba(fv(2, {{0, 1.0}, {1, 2.0}}));
  EXPECT_NEAR(p[1], pos / (pos + neg), 1e-9);
  EXPECT_NEAR(p[0], neg / (pos + neg), 1e-9);
}

TEST(NaiveBayes, JsonRoundTrip) {
  auto data = featurized_stream(600, 1);
  NaiveBayes nb(data.classes, data.dim);
  for (std::size_t i = 0; i < 300; ++i) nb.learn_one(data.x[i], data.y[i]);
  auto copy = NaiveBayes::from_json(nb.to_json());
  // Class mass is re-summed on load, so allow rounding differences.
  for (std::size_t i = 300; i < 600; ++i) {
    const auto a = nb.predict_proba(data.x[i]);
    const auto b = copy->predict_proba(data.x[i]);
    for (std::size_t c = 0; c < a.size(); ++c) ASSERT_NEAR(a[c], b[c], 1e-12);
  }
}

TEST(HoeffdingTree, BoundAtTwoHundred) {
  EXPECT_NEAR(hoeffding_bound(1.0, 1e-7, 200), 0.200737, 1e-6);
  EXPECT_NEAR(hoeffding_bound(1.0, 1e-7, 200), std::sqrt(std::log(1e7) / 400.0), 1e-15);
}

TEST(HoeffdingTree, SeparableFeatureSplitsAtGracePeriod) {
  // "pos" records carry feature 0, "neg" records are empty. At n = 200 the
  // leaf holds 100/100: information gain of the split is exactly 1 bit and
  // the runner-up (no split) has 0, so 1 >= eps(200) = 0.2007 splits.
  HoeffdingTree ht(kClasses, 3);
  for (int i = 0; i < 199; ++i) ht.learn_one(i % 2 ? fv(3, {{0, 1.0}}) : fv(3, {}), i % 2);
  EXPECT_EQ(ht.n_splits(), 0u);
  ht.learn_one(fv(3, {{0, 1.0}}), 1);
  ASSERT_EQ(ht.n_splits(), 1u);
  EXPECT_EQ(ht.split_history().front(), 200.0);
  EXPECT_EQ(ht.nodes()[0].feature, 0);
  EXPECT_EQ(ht.predict_label(fv(3, {{0, 2.0}})), "pos");
  EXPECT_EQ(ht.predict_label(fv(3, {{1, 2.0}})), "neg");
}

TEST(HoeffdingTree, SingleClassStaysALeaf) {
  HoeffdingTree ht(kClasses, 5);
  Rng rng(1);
  for (int i = 0; i < 2000; ++i) {
    ht.learn_one(fv(5, {{static_cast<std::uint32_t>(rng.below(5)), 1.0}}), 0);
  }
  EXPECT_EQ(ht.n_leaves(), 1u);
}

TEST(HoeffdingTree, TieBreakingEvenWhenGainsAreClose) {
  // Two perfectly redundant features: gains tie, so the split waits until
  // eps drops below the tie threshold.
  HoeffdingTree ht(kClasses, 2);
  const double needed = std::log(1e7) / (2.0 * 0.05 * 0.05);  // eps(n) < 0.05
  int n = 0;
  while (ht.n_splits() == 0 && n < 10000) {
    const std::size_t y = n % 2;
    ht.learn_one(y ? fv(2, {{0, 1.0}, {1, 1.0}}) : fv(2, {}), y);
    ++n;
  }
  ASSERT_EQ(ht.n_splits(), 1u);
  EXPECT_GT(n, needed);
  EXPECT_LE(n, needed + 200);
  EXPECT_EQ(ht.nodes()[0].feature, 0);  // lower index wins the tie
}

TEST(HoeffdingTree, SeparableIidPrequentialAccuracy) {
  // Class y carries feature y plus four noise features. Features 0 and 1 are
  // equally informative, so the first split waits for the tie threshold
  // (about 3,200 examples); accuracy is measured after 5,000.
  HoeffdingTree ht(kClasses, 20);
  Rng rng(4);
  int correct = 0;
  int scored = 0;
  for (int i = 0; i < 7000; ++i) {
    const std::size_t y = rng.below(2);
    std::vector<FeatureVector::Entry> e{{static_cast<std::uint32_t>(y), 1.0}};
    for (int k = 0; k < 4; ++k) e.push_back({static_cast<std::uint32_t>(2 + rng.below(18)), 1.0});
    auto x = fv(20, e);
    if (i >= 5000) {
      correct += ht.predict_one(x) == y;
      ++scored;
    }
    ht.learn_one(x, y);
  }
  EXPECT_GE(correct / static_cast<double>(scored), 0.95);
}

TEST(HoeffdingTree, SingleFeatureStreamCumulativeAccuracy) {
  HoeffdingTree ht(kClasses, 20);
  Rng rng(6);
  int correct = 0;
  const int n = 5000;
  for (int i = 0; i < n; ++i) {
    const std::size_t y = rng.below(2);
    std::vector<FeatureVector::Entry> e;
    if (y == 1) e.push_back({0, 1.0});
    for (int k = 0; k < 4; ++k) e.push_back({static_cast<std::uint32_t>(2 + rng.below(18)), 1.0});
    auto x = fv(20, e);
    correct += ht.predict_one(x) == y;
    ht.learn_one(x, y);
  }
  EXPECT_GE(correct / static_cast<double>(n), 0.95);
}

TEST(Arf, ReducesToHoeffdingTree) {
  auto data = featurized_stream(5000, 2);
  ArfOptions opts;
  opts.n_trees = 1;
  opts.constant_weight = true;
  opts.detectors = false;
  opts.subspace_size = ArfOptions::kAllFeatures;
  AdaptiveRandomForest arf(data.classes, data.dim, opts);
  HoeffdingTree ht(data.classes, data.dim, opts.tree);
  for (std::size_t i = 0; i < data.x.size(); ++i) {
    const auto pa = arf.predict_proba(data.x[i]);
    const auto ph = ht.predict_proba(data.x[i]);
    ASSERT_EQ(arf.predict_one(data.x[i]), ht.predict_one(data.x[i])) << i;
    for (std::size_t c = 0; c < pa.size(); ++c) ASSERT_NEAR(pa[c], ph[c], 1e-12);
    arf.learn_one(data.x[i], data.y[i]);
    ht.learn_one(data.x[i], data.y[i]);
  }
  EXPECT_GT(ht.n_splits(), 0u);
  EXPECT_EQ(arf.tree(0).n_splits(), ht.n_splits());
}

TEST(Arf, SeedDeterminism) {
  auto data = featurized_stream(2000, 5);
  auto run = [&](std::uint64_t seed) {
    ArfOptions opts;
    opts.seed = seed;
    AdaptiveRandomForest arf(data.classes, data.dim, opts);
    std::vector<double> scores;
    for (std::size_t i = 0; i < data.x.size(); ++i) {
      scores.push_back(arf.predict_proba(data.x[i])[1]);
      arf.learn_one(data.x[i], data.y[i]);
    }
    return std::pair{scores, arf.to_json().dump()};
  };
  EXPECT_EQ(run(7), run(7));
  EXPECT_NE(run(7).first, run(8).first);
}

TEST(Arf, DefaultSubspaceIsCeilSqrtDim) {
  AdaptiveRandomForest arf(kClasses, 101);
  EXPECT_EQ(arf.subspace_size(), 11u);
}

TEST(Arf, TreesSwapAfterAbruptDrift) {
  // The extractor is fitted before the drift, so the new concept shows up as
  // a jump in per-tree error once its records become all out-of-vocabulary.
  // Day 365 of 730 is the midpoint of the stream.
  int swapped = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto data = featurized_stream(6000, 100 + seed);
    ArfOptions opts;
    opts.seed = seed;
    AdaptiveRandomForest arf(data.classes, data.dim, opts);
    for (std::size_t i = 0; i < data.x.size(); ++i) arf.learn_one(data.x[i], data.y[i]);
    const auto& ev = arf.events();
    swapped += std::any_of(ev.begin(), ev.end(), [&](const ArfEvent& e) {
      return e.kind == DriftSignal::kDrift && e.example > data.x.size() / 2;
    });
  }
  EXPECT_GT(swapped, 10) << swapped << "/20 seeds";
}
