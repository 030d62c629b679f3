#include <gtest/gtest.h>

#include <cmath>

#include "driftkit/error.hpp"
#include "driftkit/features.hpp"

using namespace driftkit;

namespace {

using Docs = std::vector<std::vector<std::string>>;

VocabFeaturizer fit_docs(const Docs& docs, VocabMode mode, std::size_t min_freq = 1, bool normalize = false) {
  return VocabFeaturizer::fit(std::span<const std::vector<std::string>>(docs), {mode, min_freq, normalize});
}

}  // namespace

TEST(FeatureVector, MergesDuplicatesAndSorts) {
  FeatureVector v(5, {{3, 1.0}, {1, 2.0}, {3, 0.5}, {0, 0.0}});
  ASSERT_EQ(v.nnz(), 2u);
  EXPECT_EQ(v.entries()[0], (FeatureVector::Entry{1, 2.0}));
  EXPECT_EQ(v.entries()[1], (FeatureVector::Entry{3, 1.5}));
  EXPECT_DOUBLE_EQ(v.value(3), 1.5);
  EXPECT_DOUBLE_EQ(v.value(2), 0.0);
  EXPECT_DOUBLE_EQ(v.mass(), 3.5);
  EXPECT_THROW(FeatureVector(2, {{2, 1.0}}), std::invalid_argument);
  EXPECT_THROW(FeatureVector(2, {{0, -1.0}}), std::invalid_argument);
  const std::vector<double> dense{0.0, 2.0, 0.0, 1.5, 0.0};
  EXPECT_EQ(FeatureVector::from_dense(dense), v);
  EXPECT_EQ(v.to_dense(), dense);
}

TEST(VocabFeaturizer, FitCountsDocumentFrequency) {
  auto f = fit_docs({{"a", "b"}, {"a"}}, VocabMode::kCounts);
  EXPECT_EQ(f.vocabulary(), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(f.doc_freq(), (std::vector<std::size_t>{2, 1}));
  EXPECT_EQ(f.n_docs(), 2u);
  EXPECT_EQ(fit_docs({{"a", "b"}, {"a"}}, VocabMode::kCounts, 2).vocabulary(),
            std::vector<std::string>{"a"});
  // A repeated token counts once toward df.
  EXPECT_EQ(fit_docs({{"a", "a", "a"}, {"b"}}, VocabMode::kCounts).doc_freq(),
            (std::vector<std::size_t>{1, 1}));
}

TEST(VocabFeaturizer, FitErrors) {
  EXPECT_THROW(fit_docs({}, VocabMode::kTfidf), DataError);
  EXPECT_THROW(fit_docs({{"a"}, {"b"}}, VocabMode::kTfidf, 2), DataError);
}

TEST(VocabFeaturizer, TfidfHandExample) {
  auto f = fit_docs({{"a", "b"}, {"a"}}, VocabMode::kTfidf);
  const std::vector<std::string> doc{"a", "b"};
  auto v = f.transform(doc);
  EXPECT_NEAR(v.value(0), 1.0, 1e-6);
  EXPECT_NEAR(v.value(1), 1.405465, 1e-6);

  auto normed = fit_docs({{"a", "b"}, {"a"}}, VocabMode::kTfidf, 1, true).transform(doc);
  EXPECT_NEAR(normed.value(0), 0.579739, 1e-6);
  // (1, 1 + ln 1.5) / its L2 norm, evaluated separately.
  EXPECT_NEAR(normed.value(1), 0.8148025, 1e-6);
  EXPECT_NEAR(normed.l2_norm(), 1.0, 1e-12);
}

TEST(VocabFeaturizer, CountsAndOutOfVocabulary) {
  auto f = fit_docs({{"a", "b"}, {"a"}}, VocabMode::kCounts);
  const std::vector<std::string> doc{"b", "a", "b", "zz"};
  auto v = f.transform(doc);
  EXPECT_DOUBLE_EQ(v.value(0), 1.0);
  EXPECT_DOUBLE_EQ(v.value(1), 2.0);
  EXPECT_DOUBLE_EQ(f.oov_fraction(doc), 0.25);

  const std::vector<std::string> oov{"x", "y"};
  auto z = f.transform(oov);
  EXPECT_TRUE(z.empty());
  EXPECT_EQ(z.dim(), 2u);
  EXPECT_EQ(f.index_of("b"), 1);
  EXPECT_EQ(f.index_of("x"), -1);
}

TEST(VocabFeaturizer, TfidfNonnegativeAndRefitStable) {
  Docs docs;
  for (int i = 0; i < 40; ++i) {
    docs.push_back({"t" + std::to_string(i % 7), "t" + std::to_string(i % 3), "common"});
  }
  auto f = fit_docs(docs, VocabMode::kTfidf, 1, true);
  auto g = fit_docs(docs, VocabMode::kTfidf, 1, true);
  EXPECT_EQ(f.vocabulary(), g.vocabulary());
  for (const auto& d : docs) {
    auto v = f.transform(d);
    EXPECT_EQ(v, g.transform(d));
    for (const auto& [i, x] : v.entries()) EXPECT_GT(x, 0.0);
  }
}

TEST(VocabFeaturizer, JsonRoundTrip) {
  auto f = fit_docs({{"a", "b"}, {"a", "c"}}, VocabMode::kTfidf, 1, true);
  auto g = VocabFeaturizer::from_json(f.to_json());
  const std::vector<std::string> doc{"c", "a"};
  EXPECT_EQ(f.transform(doc), g.transform(doc));
  auto bad = f.to_json();
  bad["mode"] = "bogus";
  EXPECT_THROW(VocabFeaturizer::from_json(bad), DataError);
}

TEST(VocabFeaturizer, VocabularySwapIsEntirelyOutOfVocabulary) {
  GeneratorConfig cfg;
  cfg.n_records = 3000;
  cfg.noise = 0.0;
  cfg.drift_at = {365};
  auto s = generate_text_stream(cfg);
  std::vector<StreamRecord> before;
  std::vector<StreamRecord> after;
  for (const auto& r : s) {
    if (r.true_label != kMalicious) continue;
    (r.timestamp < 365 ? before : after).push_back(r);
  }
  auto f = VocabFeaturizer::fit(std::span<const StreamRecord>(before),
                                VocabFeaturizer::default_options(VocabMode::kTfidf));
  for (const auto& r : after) EXPECT_DOUBLE_EQ(f.oov_fraction(r.tokens), 1.0);
}

TEST(Hashing, FnvReferenceConstant) {
  // Computed ahead of time with a separate FNV-1a 64 implementation.
  EXPECT_EQ(fnv1a64("open"), 17892686645580689641ULL);
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  HashFeaturizer h({std::size_t{1} << 18});
  EXPECT_EQ(h.index("open"), 159977u);
}

TEST(Hashing, CountsAndMass) {
  HashFeaturizer h({1024});
  const std::vector<std::string> doc{"open", "read", "open", "close", "x", "y", "z"};
  auto v = h.transform(doc);
  EXPECT_DOUBLE_EQ(v.value(h.index("open")), 2.0);
  EXPECT_DOUBLE_EQ(v.mass(), static_cast<double>(doc.size()));

  // Heavy collisions still conserve mass.
  HashFeaturizer tiny({2});
  EXPECT_DOUBLE_EQ(tiny.transform(doc).mass(), static_cast<double>(doc.size()));
}

TEST(Hashing, DimensionMustBeAPowerOfTwo) {
  EXPECT_THROW(HashFeaturizer({1000}), ConfigError);
  EXPECT_THROW(HashFeaturizer({0}), ConfigError);
  EXPECT_NO_THROW(HashFeaturizer({1}));
}

TEST(Featurizer, KindsDispatch) {
  std::vector<StreamRecord> corpus(2);
  corpus[0].id = "a";
  corpus[0].tokens = {"x", "y"};
  corpus[1].id = "b";
  corpus[1].tokens = {"x"};
  FeaturizerSpec spec;
  spec.kind = FeaturizerKind::kBow;
  auto bow = Featurizer::fit(spec, corpus);
  EXPECT_EQ(bow.dim(), 2u);
  EXPECT_DOUBLE_EQ(bow.transform(corpus[0]).value(0), 1.0);

  spec.kind = FeaturizerKind::kHashing;
  spec.hash_dim = 64;
  auto hashed = Featurizer::fit(spec, corpus);
  EXPECT_EQ(hashed.dim(), 64u);
  EXPECT_EQ(hashed.vocab(), nullptr);
  EXPECT_DOUBLE_EQ(hashed.oov_fraction(corpus[0]), 0.0);

  auto synthetic = corpus;
  synthetic[1].synthetic = true;
  spec.kind = FeaturizerKind::kTfidf;
  EXPECT_THROW(Featurizer::fit(spec, synthetic), DataError);
  EXPECT_THROW(parse_featurizer_kind("word2vec"), ConfigError);
}
