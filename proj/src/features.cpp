#include "driftkit/features.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "driftkit/error.hpp"

namespace driftkit {

FeatureVector::FeatureVector(std::size_t dim, std::vector<Entry> entries) : dim_(dim) {
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.first < b.first; });
  for (const auto& [idx, v] : entries) {
    if (idx >= dim) throw std::invalid_argument("feature index out of range");
    if (!std::isfinite(v) || v < 0.0) {
      throw std::invalid_argument("feature values must be finite and nonnegative");
    }
    if (!entries_.empty() && entries_.back().first == idx) {
      entries_.back().second += v;
    } else {
      entries_.emplace_back(idx, v);
    }
  }
  std::erase_if(entries_, [](const Entry& e) { return e.second == 0.0; });
}

FeatureVector FeatureVector::from_dense(std::span<const double> dense) {
  std::vector<Entry> entries;
  for (std::size_t i = 0; i < dense.size(); ++i) {
    if (dense[i] != 0.0) entries.emplace_back(static_cast<std::uint32_t>(i), dense[i]);
  }
  return FeatureVector(dense.size(), std::move(entries));
}

double FeatureVector::value(std::uint32_t index) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), index,
                             [](const Entry& e, std::uint32_t i) { return e.first < i; });
  return (it != entries_.end() && it->first == index) ? it->second : 0.0;
}

double FeatureVector::mass() const {
  double s = 0.0;
  for (const auto& e : entries_) s += e.second;
  return s;
}

double FeatureVector::l2_norm() const {
  double s = 0.0;
  for (const auto& e : entries_) s += e.second * e.second;
  return std::sqrt(s);
}

std::vector<double> FeatureVector::to_dense() const {
  std::vector<double> out(dim_, 0.0);
  for (const auto& [i, v] : entries_) out[i] = v;
  return out;
}

// ---------------------------------------------------------------------------

VocabFeaturizer VocabFeaturizer::fit(std::span<const StreamRecord> corpus, Options options) {
  std::vector<std::vector<std::string>> docs;
  docs.reserve(corpus.size());
  for (const auto& r : corpus) {
    if (r.synthetic) {
      throw DataError("record '" + r.id + "' is synthetic and has no raw tokens to fit on");
    }
    docs.push_back(r.tokens);
  }
  return fit(std::span<const std::vector<std::string>>(docs), options);
}

VocabFeaturizer VocabFeaturizer::fit(std::span<const std::vector<std::string>> docs,
                                     Options options) {
  if (docs.empty()) throw DataError("cannot fit a featurizer on an empty corpus");
  if (options.min_freq == 0) options.min_freq = 1;

  std::vector<std::string> order;
  std::unordered_map<std::string, std::size_t> df;
  std::unordered_set<std::string_view> seen_in_doc;
  for (const auto& doc : docs) {
    seen_in_doc.clear();
    for (const auto& tok : doc) {
      if (!seen_in_doc.insert(tok).second) continue;
      auto [it, inserted] = df.try_emplace(tok, 0);
      if (inserted) order.push_back(tok);
      ++it->second;
    }
  }

  VocabFeaturizer f;
  f.options_ = options;
  f.n_docs_ = docs.size();
  for (const auto& tok : order) {
    const std::size_t d = df.at(tok);
    if (d < options.min_freq) continue;
    f.index_.emplace(tok, static_cast<std::uint32_t>(f.vocabulary_.size()));
    f.vocabulary_.push_back(tok);
    f.doc_freq_.push_back(d);
  }
  if (f.vocabulary_.empty()) {
    throw DataError("no token reaches min_freq=" + std::to_string(options.min_freq));
  }
  return f;
}

std::int64_t VocabFeaturizer::index_of(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? -1 : static_cast<std::int64_t>(it->second);
}

double VocabFeaturizer::idf(std::uint32_t index) const {
  return std::log((1.0 + static_cast<double>(n_docs_)) /
                  (1.0 + static_cast<double>(doc_freq_.at(index)))) +
         1.0;
}

FeatureVector VocabFeaturizer::transform(std::span<const std::string> tokens) const {
  std::vector<FeatureVector::Entry> entries;
  entries.reserve(tokens.size());
  for (const auto& tok : tokens) {
    if (auto it = index_.find(tok); it != index_.end()) entries.emplace_back(it->second, 1.0);
  }
  FeatureVector counts(dim(), std::move(entries));
  if (options_.mode == VocabMode::kCounts && !options_.normalize) return counts;

  std::vector<FeatureVector::Entry> weighted = counts.entries();
  if (options_.mode == VocabMode::kTfidf) {
    for (auto& [i, v] : weighted) v *= idf(i);
  }
  if (options_.normalize) {
    double norm = 0.0;
    for (const auto& e : weighted) norm += e.second * e.second;
    norm = std::sqrt(norm);
    if (norm > 0.0) {
      for (auto& e : weighted) e.second /= norm;
    }
  }
  return FeatureVector(dim(), std::move(weighted));
}

double VocabFeaturizer::oov_fraction(std::span<const std::string> tokens) const {
  if (tokens.empty()) return 0.0;
  std::size_t oov = 0;
  for (const auto& tok : tokens) oov += index_.find(tok) == index_.end();
  return static_cast<double>(oov) / static_cast<double>(tokens.size());
}

nlohmann::json VocabFeaturizer::to_json() const {
  return {
      {"version", 1},
      {"mode", options_.mode == VocabMode::kTfidf ? "tfidf" : "counts"},
      {"min_freq", options_.min_freq},
      {"normalize", options_.normalize},
      {"n_docs", n_docs_},
      {"vocabulary", vocabulary_},
      {"doc_freq", doc_freq_},
  };
}

VocabFeaturizer VocabFeaturizer::from_json(const nlohmann::json& j) {
  try {
    if (j.at("version").get<int>() != 1) throw DataError("unsupported featurizer version");
    VocabFeaturizer f;
    const auto mode = j.at("mode").get<std::string>();
    if (mode != "tfidf" && mode != "counts") throw DataError("unknown mode '" + mode + "'");
    f.options_.mode = mode == "tfidf" ? VocabMode::kTfidf : VocabMode::kCounts;
    f.options_.min_freq = j.at("min_freq").get<std::size_t>();
    f.options_.normalize = j.at("normalize").get<bool>();
    f.n_docs_ = j.at("n_docs").get<std::size_t>();
    f.vocabulary_ = j.at("vocabulary").get<std::vector<std::string>>();
    f.doc_freq_ = j.at("doc_freq").get<std::vector<std::size_t>>();
    if (f.vocabulary_.size() != f.doc_freq_.size()) {
      throw DataError("vocabulary and doc_freq lengths differ");
    }
    for (std::size_t i = 0; i < f.vocabulary_.size(); ++i) {
      if (!f.index_.emplace(f.vocabulary_[i], static_cast<std::uint32_t>(i)).second) {
        throw DataError("duplicate vocabulary token '" + f.vocabulary_[i] + "'");
      }
    }
    return f;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed featurizer state: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

HashFeaturizer::HashFeaturizer(HashFeaturizerConfig cfg) : cfg_(cfg) {
  if (cfg_.dim == 0 || (cfg_.dim & (cfg_.dim - 1)) != 0) {
    throw ConfigError("hashing dim must be a power of two");
  }
}

FeatureVector HashFeaturizer::transform(std::span<const std::string> tokens) const {
  std::vector<FeatureVector::Entry> entries;
  entries.reserve(tokens.size());
  for (const auto& tok : tokens) entries.emplace_back(index(tok), 1.0);
  return FeatureVector(dim(), std::move(entries));
}

// ---------------------------------------------------------------------------

FeaturizerKind parse_featurizer_kind(const std::string& name) {
  if (name == "bow") return FeaturizerKind::kBow;
  if (name == "tfidf") return FeaturizerKind::kTfidf;
  if (name == "hashing") return FeaturizerKind::kHashing;
  throw ConfigError("unknown featurizer '" + name + "' (expected bow|tfidf|hashing)");
}

std::string to_string(FeaturizerKind kind) {
  switch (kind) {
    case FeaturizerKind::kBow:
      return "bow";
    case FeaturizerKind::kTfidf:
      return "tfidf";
    case FeaturizerKind::kHashing:
      return "hashing";
  }
  return "?";
}

Featurizer Featurizer::fit(const FeaturizerSpec& spec, std::span<const StreamRecord> corpus) {
  Featurizer f;
  f.spec_ = spec;
  if (spec.kind == FeaturizerKind::kHashing) {
    f.hash_.emplace(HashFeaturizerConfig{spec.hash_dim});
    return f;
  }
  const auto mode = spec.kind == FeaturizerKind::kTfidf ? VocabMode::kTfidf : VocabMode::kCounts;
  auto options = VocabFeaturizer::default_options(mode);
  options.min_freq = spec.min_freq;
  if (spec.normalize) options.normalize = *spec.normalize;
  f.vocab_ = VocabFeaturizer::fit(corpus, options);
  return f;
}

FeatureVector Featurizer::transform(const StreamRecord& record) const {
  return vocab_ ? vocab_->transform(record) : hash_->transform(record);
}

double Featurizer::oov_fraction(const StreamRecord& record) const {
  return vocab_ ? vocab_->oov_fraction(record.tokens) : 0.0;
}

std::size_t Featurizer::dim() const { return vocab_ ? vocab_->dim() : hash_->dim(); }

nlohmann::json Featurizer::to_json() const {
  if (vocab_) return vocab_->to_json();
  return {{"version", 1}, {"mode", "hashing"}, {"dim", hash_->dim()}};
}

}  // namespace driftkit
