#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace driftkit {

// Days since an arbitrary epoch. All timing (first-seen, label availability,
// delays, resampling periods) is expressed in whole days.
using Day = std::int64_t;

inline const std::string kBenign = "benign";
inline const std::string kMalicious = "malicious";

struct StreamRecord {
  std::string id;
  Day timestamp = 0;
  std::vector<std::string> tokens;
  std::optional<std::string> true_label;
  Day label_available_at = 0;
  std::optional<std::string> subclass;
  // Feature-space only samples (oversampling output). They carry no tokens
  // and are rejected by anything that needs raw attributes.
  bool synthetic = false;

  bool operator==(const StreamRecord&) const = default;
};

// Records ordered by (timestamp, id). Immutable once built.
class Stream {
 public:
  Stream() = default;
  // Sorts, validates record invariants and derives the class alphabet.
  // Throws DataError on duplicate ids or label_available_at < timestamp.
  explicit Stream(std::vector<StreamRecord> records);

  const std::vector<StreamRecord>& records() const { return records_; }
  const std::vector<std::string>& class_alphabet() const { return classes_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const StreamRecord& operator[](std::size_t i) const { return records_[i]; }
  auto begin() const { return records_.begin(); }
  auto end() const { return records_.end(); }

 private:
  std::vector<StreamRecord> records_;
  std::vector<std::string> classes_;
};

enum class StreamFormat { kJsonl, kCsv };

StreamFormat parse_stream_format(const std::string& name);

// Reads a stream file. Malformed rows raise DataError with the 1-based line
// number. An empty file yields an empty stream.
Stream load_stream(const std::filesystem::path& path, StreamFormat format);
Stream parse_stream(const std::string& text, StreamFormat format);

// Canonical serialization, one record per line in stream order. The JSONL
// form is byte-stable and is what dataset hashes are computed over.
std::string to_jsonl(const Stream& stream);
std::string to_csv(const Stream& stream);
void save_stream(const Stream& stream, const std::filesystem::path& path,
                 StreamFormat format);

struct GeneratorConfig {
  std::size_t n_records = 20000;
  double class_ratio = 0.18;
  std::vector<Day> drift_at = {365};
  std::size_t vocab_size = 100;
  std::size_t tokens_per_record = 20;
  double noise = 0.1;
  // Per period (the span split into equal parts), per label, the relative
  // weight of each subclass. Subclass j of a label is named "<label>_<j>".
  std::vector<std::map<std::string, std::vector<double>>> subclass_schedule;
  std::uint64_t seed = 0;
  Day start_day = 0;
  Day span_days = 730;
  double zipf_exponent = 1.0;
};

// Throws ConfigError when any field is out of range.
void validate(const GeneratorConfig& cfg);

// Vocabulary-drift stream: benign tokens come from a stationary vocabulary,
// malicious tokens from concept k, where k counts the drift points at or
// before the record's timestamp. Concept vocabularies are disjoint.
Stream generate_text_stream(const GeneratorConfig& cfg);

// Names of the tokens making up one concept vocabulary.
std::string benign_token(std::size_t index);
std::string malicious_token(std::size_t concept_index, std::size_t index);

struct TraceConfig {
  std::size_t n_traces = 200;
  std::size_t trace_length_min = 400;
  std::size_t trace_length_max = 1600;
  std::size_t syscall_alphabet_size = 40;
  double anomaly_ratio = 0.2;
  std::size_t anomaly_burst_length = 40;
  // Bursts use calls outside the normal alphabet; otherwise they are drawn
  // from the rarest tenth of the normal alphabet.
  bool disjoint_anomalies = true;
  std::uint64_t seed = 0;
};

void validate(const TraceConfig& cfg);

struct Burst {
  std::size_t begin = 0;
  std::size_t length = 0;
};

struct Trace {
  std::string id;
  std::vector<std::uint32_t> calls;
  bool anomalous = false;
  std::vector<Burst> bursts;
};

// Size of the normal alphabet plus the out-of-alphabet burst calls.
std::size_t trace_call_dimension(const TraceConfig& cfg);
std::string syscall_name(std::uint32_t call, std::size_t alphabet_size);

std::vector<Trace> generate_traces(const TraceConfig& cfg);

std::string traces_to_jsonl(const std::vector<Trace>& traces,
                            std::size_t alphabet_size);

struct SplitResult {
  Stream train;
  Stream test;
  std::vector<std::string> warnings;
};

// Earliest ceil(fraction * n) records go to train. Requires 0 < fraction < 1
// and a non-empty stream; a split that leaves test empty is rejected.
SplitResult temporal_split(const Stream& stream, double fraction);

}  // namespace driftkit
