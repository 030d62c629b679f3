#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "driftkit/drift.hpp"
#include "driftkit/evaluation.hpp"
#include "driftkit/features.hpp"
#include "driftkit/learners.hpp"
#include "driftkit/pipeline.hpp"
#include "driftkit/stream.hpp"

namespace driftkit {

struct DatasetConfig {
  enum class Kind { kPath, kGenerator, kTraces };
  Kind kind = Kind::kGenerator;
  std::filesystem::path path;
  StreamFormat format = StreamFormat::kJsonl;
  GeneratorConfig generator;
  // Whether the generator seed was given explicitly (otherwise the
  // experiment seed is used).
  bool generator_seed_set = false;
  TraceConfig traces;
  bool traces_seed_set = false;
};

struct ResamplingConfig {
  enum class Kind { kNone, kTemporalUnder, kTemporalOver };
  Kind kind = Kind::kNone;
  Day period_length = 30;
  std::size_t k_neighbors = 5;
  double target_ratio = 1.0;
};

struct ExperimentConfig {
  DatasetConfig dataset;
  FeaturizerSpec featurizer;
  LearnerSpec learner;
  bool learner_seed_set = false;
  DetectorSpec detector;
  PipelineMode mode = PipelineMode::kRetrainExtractor;
  std::vector<Day> delay_days = {0};
  // True when delay_days was given as a list (one output per delay).
  bool delay_sweep = false;
  double split_fraction = 0.25;
  std::size_t window_w = 1000;
  Day window_days = 0;
  std::size_t reservoir_capacity = 1000;
  ResamplingConfig resampling;
  WindowSweepConfig window_sweep;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "out";
};

// Validates against the schema (unknown keys and out-of-range values raise
// ConfigError) and fills defaults.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
// Canonical JSON form with every default made explicit.
nlohmann::json to_json(const ExperimentConfig& cfg);
// Copy with the experiment seed (and implicit generator/trace seeds) set.
ExperimentConfig with_seed(ExperimentConfig cfg, std::uint64_t seed);

// The built-in scenario: 20,000 records, one vocabulary drift at day 365,
// 18% malicious, tfidf + ARF + ADWIN, retraining the extractor on drift.
ExperimentConfig default_experiment();

struct Dataset {
  bool is_traces = false;
  Stream stream;
  std::vector<Trace> traces;
  std::size_t call_dim = 0;
  std::string hash;  // SHA-256 of the canonical JSONL bytes
};

Dataset load_dataset(const ExperimentConfig& cfg);
std::string sha256_hex(const std::string& bytes);

struct RunResult {
  nlohmann::json summary;
  std::string metrics_csv;
  std::string events_jsonl;
  std::string predictions_jsonl;
  // In-memory detail for callers that aggregate runs.
  std::optional<PrequentialResult> prequential;
  std::optional<WindowSweepResult> sweep;
};

// One prequential run (or window sweep for trace datasets) at one delay.
RunResult run_experiment(const ExperimentConfig& cfg, const Dataset& data, Day delay_days);
RunResult run_experiment(const ExperimentConfig& cfg, Day delay_days);

// Mean of the windowed F1 over the last half of the windows.
double final_half_f1(const MetricSeries& f1);

void write_run(const RunResult& run, const std::filesystem::path& dir);

// Runs every delay of the config, writing summary.json / metrics.csv /
// events.jsonl (plus predictions.jsonl) under output_dir, or under
// output_dir/delay_<N> for a delay list. Returns summaries keyed by delay.
std::map<Day, nlohmann::json> run_to_disk(const ExperimentConfig& cfg, std::size_t workers);

struct SweepRow {
  std::uint64_t seed = 0;
  Day delay = 0;
  nlohmann::json summary;
};

// Independent runs over seeds x delays on a worker pool; each run lands in
// output_dir/seed_<s>[/delay_<N>]. Writes sweep.csv.
std::vector<SweepRow> sweep_to_disk(const ExperimentConfig& cfg,
                                    const std::vector<std::uint64_t>& seeds, std::size_t workers);

// Writes the dataset for the config into output_dir (data.jsonl or
// traces.jsonl) and returns a one-line count summary.
std::string generate_to_disk(const ExperimentConfig& cfg);

struct Report {
  std::string markdown;
  std::string csv;
};

// Joins run summaries. Throws DataError when summaries are missing or were
// computed over different datasets.
Report build_report(const std::vector<std::filesystem::path>& run_dirs);
Report build_report(const std::vector<std::pair<std::string, nlohmann::json>>& summaries);

// Runs fn(i) for i in [0, n) on up to `workers` threads.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

}  // namespace driftkit
