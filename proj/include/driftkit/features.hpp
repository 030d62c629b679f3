#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "driftkit/stream.hpp"

namespace driftkit {

// Sparse nonnegative vector. Entries are kept sorted by index with no
// duplicates and no explicit zeros.
class FeatureVector {
 public:
  using Entry = std::pair<std::uint32_t, double>;

  FeatureVector() = default;
  explicit FeatureVector(std::size_t dim) : dim_(dim) {}
  // Entries may be unsorted and repeat indices (values are summed). Throws
  // std::invalid_argument on an index >= dim or a negative/non-finite value.
  FeatureVector(std::size_t dim, std::vector<Entry> entries);

  static FeatureVector from_dense(std::span<const double> dense);

  std::size_t dim() const { return dim_; }
  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t nnz() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  double value(std::uint32_t index) const;
  double mass() const;
  double l2_norm() const;
  std::vector<double> to_dense() const;

  bool operator==(const FeatureVector&) const = default;

 private:
  std::size_t dim_ = 0;
  std::vector<Entry> entries_;
};

enum class VocabMode { kCounts, kTfidf };

// Fitted bag-of-words / TF-IDF extractor. Vocabulary indices follow the
// order in which tokens were first seen in the fitting corpus.
class VocabFeaturizer {
 public:
  struct Options {
    VocabMode mode = VocabMode::kTfidf;
    std::size_t min_freq = 1;
    bool normalize = true;
  };

  static Options default_options(VocabMode mode) {
    return {mode, 1, mode == VocabMode::kTfidf};
  }

  // Throws DataError on an empty corpus, on synthetic records, and when no
  // token reaches min_freq.
  static VocabFeaturizer fit(std::span<const StreamRecord> corpus, Options options);
  static VocabFeaturizer fit(std::span<const std::vector<std::string>> docs, Options options);

  // Unknown tokens are dropped.
  FeatureVector transform(std::span<const std::string> tokens) const;
  FeatureVector transform(const StreamRecord& record) const { return transform(record.tokens); }

  double idf(std::uint32_t index) const;
  // Fraction of token occurrences not covered by the vocabulary.
  double oov_fraction(std::span<const std::string> tokens) const;

  std::size_t dim() const { return vocabulary_.size(); }
  const std::vector<std::string>& vocabulary() const { return vocabulary_; }
  const std::vector<std::size_t>& doc_freq() const { return doc_freq_; }
  std::size_t n_docs() const { return n_docs_; }
  const Options& options() const { return options_; }
  // -1 when the token is out of vocabulary.
  std::int64_t index_of(std::string_view token) const;

  nlohmann::json to_json() const;
  static VocabFeaturizer from_json(const nlohmann::json& j);

 private:
  Options options_;
  std::vector<std::string> vocabulary_;
  std::vector<std::size_t> doc_freq_;
  std::size_t n_docs_ = 0;
  std::unordered_map<std::string, std::uint32_t> index_;
};

std::uint64_t fnv1a64(std::string_view bytes);

struct HashFeaturizerConfig {
  std::size_t dim = std::size_t{1} << 18;
};

// Hashing trick: index = FNV-1a-64(token) mod dim, value = term count.
class HashFeaturizer {
 public:
  explicit HashFeaturizer(HashFeaturizerConfig cfg = {});
  std::size_t dim() const { return cfg_.dim; }
  std::uint32_t index(std::string_view token) const {
    return static_cast<std::uint32_t>(fnv1a64(token) & (cfg_.dim - 1));
  }
  FeatureVector transform(std::span<const std::string> tokens) const;
  FeatureVector transform(const StreamRecord& record) const { return transform(record.tokens); }

 private:
  HashFeaturizerConfig cfg_;
};

enum class FeaturizerKind { kBow, kTfidf, kHashing };

struct FeaturizerSpec {
  FeaturizerKind kind = FeaturizerKind::kTfidf;
  std::size_t min_freq = 1;
  // Empty means the default for the kind (on for tfidf, off otherwise).
  std::optional<bool> normalize;
  std::size_t hash_dim = std::size_t{1} << 18;
};

FeaturizerKind parse_featurizer_kind(const std::string& name);
std::string to_string(FeaturizerKind kind);

// The extractor used by pipelines: one of the vocabulary featurizers or the
// stateless hashing trick, behind one fit/transform surface.
class Featurizer {
 public:
  static Featurizer fit(const FeaturizerSpec& spec, std::span<const StreamRecord> corpus);

  FeatureVector transform(const StreamRecord& record) const;
  double oov_fraction(const StreamRecord& record) const;
  std::size_t dim() const;
  FeaturizerKind kind() const { return spec_.kind; }
  const VocabFeaturizer* vocab() const { return vocab_ ? &*vocab_ : nullptr; }

  nlohmann::json to_json() const;

 private:
  FeaturizerSpec spec_;
  std::optional<VocabFeaturizer> vocab_;
  std::optional<HashFeaturizer> hash_;
};

}  // namespace driftkit
