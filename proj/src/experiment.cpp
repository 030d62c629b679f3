#include "driftkit/experiment.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "driftkit/error.hpp"
#include "driftkit/random.hpp"
#include "driftkit/resampling.hpp"

namespace driftkit {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// Reads one JSON object of the config, remembering which keys were consumed
// so that leftovers can be rejected.
class Obj {
 public:
  Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("must be an object");
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError((path_.empty() ? std::string("config") : path_) + ": " + what);
  }
  std::string sub(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* get(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }
  bool has(const std::string& key) const { return j_.contains(key); }

  double number(const std::string& key, double def) {
    const json* v = get(key);
    if (!v) return def;
    if (!v->is_number()) throw ConfigError(sub(key) + ": expected a number");
    const double d = v->get<double>();
    if (!std::isfinite(d)) throw ConfigError(sub(key) + ": must be finite");
    return d;
  }

  std::int64_t integer(const std::string& key, std::int64_t def) {
    const json* v = get(key);
    if (!v) return def;
    if (!v->is_number_integer()) throw ConfigError(sub(key) + ": expected an integer");
    return v->get<std::int64_t>();
  }

  std::uint64_t unsigned_int(const std::string& key, std::uint64_t def) {
    const json* v = get(key);
    if (!v) return def;
    if (v->is_number_unsigned()) return v->get<std::uint64_t>();
    if (v->is_number_integer()) {
      // Values set from signed C++ integers are stored signed even when >= 0.
      if (v->get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v->get<std::int64_t>());
      throw ConfigError(sub(key) + ": must be nonnegative");
    }
    throw ConfigError(sub(key) + ": expected a nonnegative integer");
  }

  bool boolean(const std::string& key, bool def) {
    const json* v = get(key);
    if (!v) return def;
    if (!v->is_boolean()) throw ConfigError(sub(key) + ": expected true or false");
    return v->get<bool>();
  }

  std::string string(const std::string& key, const std::string& def) {
    const json* v = get(key);
    if (!v) return def;
    if (!v->is_string()) throw ConfigError(sub(key) + ": expected a string");
    return v->get<std::string>();
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.contains(item.key())) fail("unknown key '" + item.key() + "'");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

GeneratorConfig parse_generator(const json& j, const std::string& path, bool& seed_set) {
  Obj o(j, path);
  GeneratorConfig g;
  g.n_records = o.unsigned_int("n_records", g.n_records);
  g.class_ratio = o.number("class_ratio", g.class_ratio);
  if (const json* d = o.get("drift_at")) {
    if (!d->is_array()) throw ConfigError(o.sub("drift_at") + ": expected a list of days");
    g.drift_at.clear();
    for (const auto& v : *d) {
      if (!v.is_number_integer()) throw ConfigError(o.sub("drift_at") + ": expected integers");
      g.drift_at.push_back(v.get<Day>());
    }
  }
  g.vocab_size = o.unsigned_int("vocab_size", g.vocab_size);
  g.tokens_per_record = o.unsigned_int("tokens_per_record", g.tokens_per_record);
  g.noise = o.number("noise", g.noise);
  if (const json* s = o.get("subclass_schedule")) {
    if (!s->is_array()) throw ConfigError(o.sub("subclass_schedule") + ": expected a list");
    for (const auto& period : *s) {
      if (!period.is_object()) {
        throw ConfigError(o.sub("subclass_schedule") + ": each period is a label -> weights map");
      }
      std::map<std::string, std::vector<double>> m;
      for (const auto& [label, weights] : period.items()) {
        if (!weights.is_array()) throw ConfigError(o.sub("subclass_schedule") + ": weights must be a list");
        for (const auto& w : weights) {
          if (!w.is_number()) throw ConfigError(o.sub("subclass_schedule") + ": weights must be numbers");
          m[label].push_back(w.get<double>());
        }
      }
      g.subclass_schedule.push_back(std::move(m));
    }
  }
  seed_set = o.has("seed");
  g.seed = o.unsigned_int("seed", g.seed);
  g.start_day = o.integer("start_day", g.start_day);
  g.span_days = o.integer("span_days", g.span_days);
  g.zipf_exponent = o.number("zipf_exponent", g.zipf_exponent);
  o.finish();
  try {
    validate(g);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return g;
}

TraceConfig parse_traces(const json& j, const std::string& path, bool& seed_set) {
  Obj o(j, path);
  TraceConfig t;
  t.n_traces = o.unsigned_int("n_traces", t.n_traces);
  t.trace_length_min = o.unsigned_int("trace_length_min", t.trace_length_min);
  t.trace_length_max = o.unsigned_int("trace_length_max", t.trace_length_max);
  t.syscall_alphabet_size = o.unsigned_int("syscall_alphabet_size", t.syscall_alphabet_size);
  t.anomaly_ratio = o.number("anomaly_ratio", t.anomaly_ratio);
  t.anomaly_burst_length = o.unsigned_int("anomaly_burst_length", t.anomaly_burst_length);
  t.disjoint_anomalies = o.boolean("disjoint_anomalies", t.disjoint_anomalies);
  seed_set = o.has("seed");
  t.seed = o.unsigned_int("seed", t.seed);
  o.finish();
  try {
    validate(t);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return t;
}

DatasetConfig parse_dataset(const json& j) {
  Obj o(j, "dataset");
  DatasetConfig d;
  const int sources = int(o.has("generator")) + int(o.has("path")) + int(o.has("traces"));
  if (sources != 1) o.fail("exactly one of 'generator', 'path', 'traces' is required");
  if (const json* g = o.get("generator")) {
    d.kind = DatasetConfig::Kind::kGenerator;
    d.generator = parse_generator(*g, "dataset.generator", d.generator_seed_set);
  } else if (const json* t = o.get("traces")) {
    d.kind = DatasetConfig::Kind::kTraces;
    d.traces = parse_traces(*t, "dataset.traces", d.traces_seed_set);
  } else {
    d.kind = DatasetConfig::Kind::kPath;
    d.path = o.string("path", "");
    if (d.path.empty()) o.fail("path must not be empty");
    const auto fallback = d.path.extension() == ".csv" ? "csv" : "jsonl";
    d.format = parse_stream_format(o.string("format", fallback));
  }
  if (d.kind != DatasetConfig::Kind::kPath && o.has("format")) {
    o.fail("'format' only applies to a 'path' dataset");
  }
  o.finish();
  return d;
}

FeaturizerSpec parse_featurizer(const json& j) {
  FeaturizerSpec f;
  if (j.is_string()) {
    f.kind = parse_featurizer_kind(j.get<std::string>());
    return f;
  }
  Obj o(j, "featurizer");
  f.kind = parse_featurizer_kind(o.string("kind", to_string(f.kind)));
  f.min_freq = o.unsigned_int("min_freq", f.min_freq);
  if (o.has("normalize")) f.normalize = o.boolean("normalize", false);
  f.hash_dim = o.unsigned_int("dim", f.hash_dim);
  o.finish();
  require(f.min_freq >= 1, "featurizer.min_freq must be >= 1");
  require(f.hash_dim > 0 && (f.hash_dim & (f.hash_dim - 1)) == 0 && f.hash_dim <= (1ULL << 31),
          "featurizer.dim must be a power of two no larger than 2^31");
  if (f.kind != FeaturizerKind::kHashing && j.contains("dim")) {
    throw ConfigError("featurizer.dim only applies to the hashing featurizer");
  }
  if (f.kind == FeaturizerKind::kHashing && j.contains("min_freq")) {
    throw ConfigError("featurizer.min_freq does not apply to the hashing featurizer");
  }
  return f;
}

void parse_tree_options(Obj& o, HoeffdingTreeOptions& t) {
  t.grace_period = o.number("grace_period", t.grace_period);
  t.delta = o.number("delta", t.delta);
  t.tie_threshold = o.number("tie_threshold", t.tie_threshold);
  require(t.grace_period > 0.0, o.sub("grace_period") + " must be positive");
  require(t.delta > 0.0 && t.delta < 1.0, o.sub("delta") + " must lie in (0, 1)");
  require(t.tie_threshold >= 0.0, o.sub("tie_threshold") + " must be nonnegative");
}

LearnerSpec parse_learner(const json& j, bool& seed_set) {
  LearnerSpec l;
  seed_set = false;
  if (j.is_string()) {
    l.kind = parse_learner_kind(j.get<std::string>());
    return l;
  }
  Obj o(j, "learner");
  l.kind = parse_learner_kind(o.string("kind", to_string(l.kind)));
  seed_set = o.has("seed");
  l.seed = o.unsigned_int("seed", l.seed);
  switch (l.kind) {
    case LearnerKind::kNaiveBayes:
      l.nb_alpha = o.number("alpha", l.nb_alpha);
      require(l.nb_alpha > 0.0, "learner.alpha must be positive");
      break;
    case LearnerKind::kHoeffdingTree:
      parse_tree_options(o, l.tree);
      break;
    case LearnerKind::kArf: {
      auto& a = l.arf;
      a.n_trees = o.unsigned_int("n_trees", a.n_trees);
      a.lambda = o.number("lambda", a.lambda);
      a.constant_weight = o.boolean("constant_weight", a.constant_weight);
      if (const json* s = o.get("subspace_size")) {
        if (s->is_string() && s->get<std::string>() == "all") {
          a.subspace_size = ArfOptions::kAllFeatures;
        } else if (s->is_number_integer() && s->get<std::int64_t>() >= 0) {
          a.subspace_size = static_cast<std::size_t>(s->get<std::int64_t>());
        } else {
          throw ConfigError("learner.subspace_size: expected a count or \"all\"");
        }
      }
      a.detectors = o.boolean("detectors", a.detectors);
      a.warning_delta = o.number("warning_delta", a.warning_delta);
      a.drift_delta = o.number("drift_delta", a.drift_delta);
      parse_tree_options(o, a.tree);
      require(a.n_trees >= 1, "learner.n_trees must be >= 1");
      require(a.lambda > 0.0, "learner.lambda must be positive");
      require(a.warning_delta > 0.0 && a.warning_delta < 1.0, "learner.warning_delta must lie in (0, 1)");
      require(a.drift_delta > 0.0 && a.drift_delta < 1.0, "learner.drift_delta must lie in (0, 1)");
      break;
    }
    case LearnerKind::kIsolationForest:
      l.iforest.n_trees = o.unsigned_int("n_trees", l.iforest.n_trees);
      l.iforest.subsample = o.unsigned_int("subsample", l.iforest.subsample);
      require(l.iforest.n_trees >= 1, "learner.n_trees must be >= 1");
      require(l.iforest.subsample >= 2, "learner.subsample must be >= 2");
      break;
  }
  o.finish();
  return l;
}

DetectorSpec parse_detector(const json& j) {
  DetectorSpec d;
  if (j.is_string()) {
    d.kind = parse_detector_kind(j.get<std::string>());
    return d;
  }
  Obj o(j, "detector");
  d.kind = parse_detector_kind(o.string("kind", to_string(d.kind)));
  switch (d.kind) {
    case DetectorKind::kNone:
      break;
    case DetectorKind::kDdm:
      d.ddm.min_samples = o.unsigned_int("min_samples", d.ddm.min_samples);
      d.ddm.warning_factor = o.number("warning_factor", d.ddm.warning_factor);
      d.ddm.drift_factor = o.number("drift_factor", d.ddm.drift_factor);
      break;
    case DetectorKind::kEddm:
      d.eddm.min_errors = o.unsigned_int("min_errors", d.eddm.min_errors);
      d.eddm.alpha = o.number("alpha", d.eddm.alpha);
      d.eddm.beta = o.number("beta", d.eddm.beta);
      break;
    case DetectorKind::kAdwin:
      d.adwin.delta = o.number("delta", d.adwin.delta);
      d.adwin.max_buckets = o.unsigned_int("max_buckets", d.adwin.max_buckets);
      d.adwin.min_sub_window = o.unsigned_int("min_sub_window", d.adwin.min_sub_window);
      break;
  }
  o.finish();
  try {
    (void)make_detector(d);  // constructors range-check their options
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("detector: ") + e.what());
  }
  return d;
}

ResamplingConfig parse_resampling(const json& j) {
  ResamplingConfig r;
  auto kind_of = [](const std::string& s) {
    if (s == "none") return ResamplingConfig::Kind::kNone;
    if (s == "temporal_under") return ResamplingConfig::Kind::kTemporalUnder;
    if (s == "temporal_over") return ResamplingConfig::Kind::kTemporalOver;
    throw ConfigError("unknown resampling '" + s + "' (expected none|temporal_under|temporal_over)");
  };
  if (j.is_string()) {
    r.kind = kind_of(j.get<std::string>());
    return r;
  }
  Obj o(j, "resampling");
  r.kind = kind_of(o.string("kind", "none"));
  r.period_length = o.integer("period_days", r.period_length);
  if (r.kind == ResamplingConfig::Kind::kTemporalOver) {
    r.k_neighbors = o.unsigned_int("k", r.k_neighbors);
    r.target_ratio = o.number("target_ratio", r.target_ratio);
  }
  o.finish();
  require(r.period_length > 0, "resampling.period_days must be positive");
  require(r.k_neighbors >= 1, "resampling.k must be >= 1");
  require(r.target_ratio > 0.0 && r.target_ratio <= 1.0, "resampling.target_ratio must lie in (0, 1]");
  return r;
}

WindowSweepConfig parse_window_sweep(const json& j) {
  Obj o(j, "window_sweep");
  WindowSweepConfig w;
  if (const json* p = o.get("proportions")) {
    if (!p->is_array() || p->empty()) throw ConfigError("window_sweep.proportions: expected a non-empty list");
    w.proportions.clear();
    for (const auto& v : *p) {
      if (!v.is_number()) throw ConfigError("window_sweep.proportions: expected numbers");
      w.proportions.push_back(v.get<double>());
    }
  }
  w.n_gram = o.unsigned_int("n_gram", w.n_gram);
  w.train_fraction = o.number("train_fraction", w.train_fraction);
  o.finish();
  for (double p : w.proportions) require(p > 0.0 && p <= 1.0, "window_sweep.proportions must lie in (0, 1]");
  require(w.n_gram >= 1, "window_sweep.n_gram must be >= 1");
  require(w.train_fraction > 0.0 && w.train_fraction < 1.0, "window_sweep.train_fraction must lie in (0, 1)");
  return w;
}

// Seeds not given explicitly follow the experiment seed.
void derive_seeds(ExperimentConfig& cfg, bool learner_seed_set) {
  if (!cfg.dataset.generator_seed_set) cfg.dataset.generator.seed = cfg.seed;
  if (!cfg.dataset.traces_seed_set) cfg.dataset.traces.seed = cfg.seed;
  if (!learner_seed_set) cfg.learner.seed = mix_seed(cfg.seed, 1);
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
  Obj o(j, "");
  ExperimentConfig cfg;
  const json* dataset = o.get("dataset");
  if (!dataset) o.fail("'dataset' is required");
  cfg.dataset = parse_dataset(*dataset);
  if (const json* f = o.get("featurizer")) cfg.featurizer = parse_featurizer(*f);
  bool learner_seed_set = false;
  if (const json* l = o.get("learner")) cfg.learner = parse_learner(*l, learner_seed_set);
  if (const json* d = o.get("detector")) cfg.detector = parse_detector(*d);
  cfg.mode = parse_pipeline_mode(o.string("mode", to_string(cfg.mode)));
  if (const json* d = o.get("delay_days")) {
    cfg.delay_days.clear();
    auto push = [&](const json& v) {
      if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
        throw ConfigError("delay_days: expected nonnegative integers");
      }
      cfg.delay_days.push_back(v.get<Day>());
    };
    if (d->is_array()) {
      cfg.delay_sweep = true;
      for (const auto& v : *d) push(v);
      if (cfg.delay_days.empty()) throw ConfigError("delay_days: empty list");
      std::set<Day> unique(cfg.delay_days.begin(), cfg.delay_days.end());
      if (unique.size() != cfg.delay_days.size()) throw ConfigError("delay_days: duplicate delay");
    } else {
      push(*d);
    }
  }
  cfg.split_fraction = o.number("split_fraction", cfg.split_fraction);
  cfg.window_w = o.unsigned_int("window_w", cfg.window_w);
  cfg.window_days = o.integer("window_days", cfg.window_days);
  cfg.reservoir_capacity = o.unsigned_int("reservoir_capacity", cfg.reservoir_capacity);
  if (const json* r = o.get("resampling")) cfg.resampling = parse_resampling(*r);
  if (const json* w = o.get("window_sweep")) cfg.window_sweep = parse_window_sweep(*w);
  cfg.seed = o.unsigned_int("seed", cfg.seed);
  cfg.output_dir = o.string("output_dir", cfg.output_dir.string());
  o.finish();

  require(cfg.split_fraction > 0.0 && cfg.split_fraction < 1.0, "split_fraction must lie in (0, 1)");
  require(cfg.window_w >= 1, "window_w must be >= 1");
  require(cfg.window_days >= 0, "window_days must be nonnegative");
  require(cfg.reservoir_capacity >= 1, "reservoir_capacity must be >= 1");
  const bool traces = cfg.dataset.kind == DatasetConfig::Kind::kTraces;
  const bool iforest = cfg.learner.kind == LearnerKind::kIsolationForest;
  if (traces && !iforest) throw ConfigError("trace datasets are scored with learner 'iforest'");
  if (!traces && iforest) throw ConfigError("learner 'iforest' needs a 'traces' dataset");
  if (traces && cfg.resampling.kind != ResamplingConfig::Kind::kNone) {
    throw ConfigError("resampling does not apply to trace datasets");
  }
  cfg.learner_seed_set = learner_seed_set;
  derive_seeds(cfg, learner_seed_set);
  return cfg;
}

namespace {

json generator_json(const GeneratorConfig& g) {
  json schedule = json::array();
  for (const auto& period : g.subclass_schedule) schedule.push_back(period);
  return {{"n_records", g.n_records},     {"class_ratio", g.class_ratio},
          {"drift_at", g.drift_at},       {"vocab_size", g.vocab_size},
          {"tokens_per_record", g.tokens_per_record}, {"noise", g.noise},
          {"subclass_schedule", schedule}, {"seed", g.seed},
          {"start_day", g.start_day},     {"span_days", g.span_days},
          {"zipf_exponent", g.zipf_exponent}};
}

json traces_json(const TraceConfig& t) {
  return {{"n_traces", t.n_traces},
          {"trace_length_min", t.trace_length_min},
          {"trace_length_max", t.trace_length_max},
          {"syscall_alphabet_size", t.syscall_alphabet_size},
          {"anomaly_ratio", t.anomaly_ratio},
          {"anomaly_burst_length", t.anomaly_burst_length},
          {"disjoint_anomalies", t.disjoint_anomalies},
          {"seed", t.seed}};
}

json tree_json(const HoeffdingTreeOptions& t) {
  return {{"grace_period", t.grace_period}, {"delta", t.delta}, {"tie_threshold", t.tie_threshold}};
}

json learner_json(const LearnerSpec& l) {
  json j = {{"kind", to_string(l.kind)}, {"seed", l.seed}};
  switch (l.kind) {
    case LearnerKind::kNaiveBayes:
      j["alpha"] = l.nb_alpha;
      break;
    case LearnerKind::kHoeffdingTree:
      j.update(tree_json(l.tree));
      break;
    case LearnerKind::kArf:
      j.update(tree_json(l.arf.tree));
      j["n_trees"] = l.arf.n_trees;
      j["lambda"] = l.arf.lambda;
      j["constant_weight"] = l.arf.constant_weight;
      if (l.arf.subspace_size == ArfOptions::kAllFeatures) {
        j["subspace_size"] = "all";
      } else {
        j["subspace_size"] = l.arf.subspace_size;
      }
      j["detectors"] = l.arf.detectors;
      j["warning_delta"] = l.arf.warning_delta;
      j["drift_delta"] = l.arf.drift_delta;
      break;
    case LearnerKind::kIsolationForest:
      j["n_trees"] = l.iforest.n_trees;
      j["subsample"] = l.iforest.subsample;
      break;
  }
  return j;
}

json detector_json(const DetectorSpec& d) {
  json j = {{"kind", to_string(d.kind)}};
  switch (d.kind) {
    case DetectorKind::kNone:
      break;
    case DetectorKind::kDdm:
      j.update({{"min_samples", d.ddm.min_samples},
                {"warning_factor", d.ddm.warning_factor},
                {"drift_factor", d.ddm.drift_factor}});
      break;
    case DetectorKind::kEddm:
      j.update({{"min_errors", d.eddm.min_errors}, {"alpha", d.eddm.alpha}, {"beta", d.eddm.beta}});
      break;
    case DetectorKind::kAdwin:
      j.update({{"delta", d.adwin.delta},
                {"max_buckets", d.adwin.max_buckets},
                {"min_sub_window", d.adwin.min_sub_window}});
      break;
  }
  return j;
}

json resampling_json(const ResamplingConfig& r) {
  switch (r.kind) {
    case ResamplingConfig::Kind::kNone:
      return {{"kind", "none"}};
    case ResamplingConfig::Kind::kTemporalUnder:
      return {{"kind", "temporal_under"}, {"period_days", r.period_length}};
    case ResamplingConfig::Kind::kTemporalOver:
      return {{"kind", "temporal_over"},
              {"period_days", r.period_length},
              {"k", r.k_neighbors},
              {"target_ratio", r.target_ratio}};
  }
  return {};
}

}  // namespace

json to_json(const ExperimentConfig& cfg) {
  json dataset;
  switch (cfg.dataset.kind) {
    case DatasetConfig::Kind::kGenerator:
      dataset["generator"] = generator_json(cfg.dataset.generator);
      break;
    case DatasetConfig::Kind::kTraces:
      dataset["traces"] = traces_json(cfg.dataset.traces);
      break;
    case DatasetConfig::Kind::kPath:
      dataset["path"] = cfg.dataset.path.string();
      dataset["format"] = cfg.dataset.format == StreamFormat::kCsv ? "csv" : "jsonl";
      break;
  }
  json featurizer = {{"kind", to_string(cfg.featurizer.kind)}};
  if (cfg.featurizer.kind == FeaturizerKind::kHashing) {
    featurizer["dim"] = cfg.featurizer.hash_dim;
  } else {
    featurizer["min_freq"] = cfg.featurizer.min_freq;
  }
  featurizer["normalize"] =
      cfg.featurizer.normalize.value_or(cfg.featurizer.kind == FeaturizerKind::kTfidf);
  json j = {{"dataset", dataset},
            {"featurizer", featurizer},
            {"learner", learner_json(cfg.learner)},
            {"detector", detector_json(cfg.detector)},
            {"mode", to_string(cfg.mode)},
            {"split_fraction", cfg.split_fraction},
            {"window_w", cfg.window_w},
            {"window_days", cfg.window_days},
            {"reservoir_capacity", cfg.reservoir_capacity},
            {"resampling", resampling_json(cfg.resampling)},
            {"window_sweep",
             {{"proportions", cfg.window_sweep.proportions},
              {"n_gram", cfg.window_sweep.n_gram},
              {"train_fraction", cfg.window_sweep.train_fraction}}},
            {"seed", cfg.seed},
            {"output_dir", cfg.output_dir.string()}};
  if (cfg.delay_sweep) {
    j["delay_days"] = cfg.delay_days;
  } else {
    j["delay_days"] = cfg.delay_days.front();
  }
  return j;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

ExperimentConfig with_seed(ExperimentConfig cfg, std::uint64_t seed) {
  cfg.seed = seed;
  derive_seeds(cfg, cfg.learner_seed_set);
  return cfg;
}

ExperimentConfig default_experiment() {
  ExperimentConfig cfg;
  cfg.featurizer.kind = FeaturizerKind::kTfidf;
  cfg.learner.kind = LearnerKind::kArf;
  cfg.detector.kind = DetectorKind::kAdwin;
  cfg.mode = PipelineMode::kRetrainExtractor;
  derive_seeds(cfg, false);
  return cfg;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

Dataset load_dataset(const ExperimentConfig& cfg) {
  Dataset d;
  switch (cfg.dataset.kind) {
    case DatasetConfig::Kind::kGenerator:
      d.stream = generate_text_stream(cfg.dataset.generator);
      break;
    case DatasetConfig::Kind::kPath:
      d.stream = load_stream(cfg.dataset.path, cfg.dataset.format);
      break;
    case DatasetConfig::Kind::kTraces:
      d.is_traces = true;
      d.traces = generate_traces(cfg.dataset.traces);
      d.call_dim = trace_call_dimension(cfg.dataset.traces);
      d.hash = sha256_hex(traces_to_jsonl(d.traces, cfg.dataset.traces.syscall_alphabet_size));
      return d;
  }
  d.hash = sha256_hex(to_jsonl(d.stream));
  return d;
}

double final_half_f1(const MetricSeries& f1) {
  const auto v = f1.values();
  if (v.empty()) return 0.0;
  const std::size_t begin = v.size() / 2;
  double sum = 0.0;
  for (std::size_t i = begin; i < v.size(); ++i) sum += v[i];
  return sum / static_cast<double>(v.size() - begin);
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

json metrics_json(const Metrics& m) {
  return {{"accuracy", m.accuracy},
          {"precision", m.precision},
          {"recall", m.recall},
          {"f1", m.f1},
          {"precision_undefined", m.precision_undefined},
          {"recall_undefined", m.recall_undefined}};
}

json confusion_json(const ConfusionMatrix& cm) {
  json counts = json::array();
  for (std::size_t t = 0; t < cm.classes().size(); ++t) {
    json row = json::array();
    for (std::size_t p = 0; p < cm.classes().size(); ++p) row.push_back(cm.at(t, p));
    counts.push_back(row);
  }
  return {{"classes", cm.classes()}, {"counts", counts}};
}

std::string config_key(const ExperimentConfig& cfg) {
  json j = to_json(cfg);
  j.erase("delay_days");
  j.erase("output_dir");
  return sha256_hex(j.dump()).substr(0, 16);
}

json base_summary(const ExperimentConfig& cfg, const Dataset& data, Day delay) {
  ExperimentConfig single = cfg;
  single.delay_days = {delay};
  single.delay_sweep = false;
  // Where the run is written does not change its content.
  json config = to_json(single);
  config.erase("output_dir");
  return {{"dataset_hash", data.hash},
          {"config_key", config_key(cfg)},
          {"config", config},
          {"delay_days", delay}};
}

RunResult run_traces(const ExperimentConfig& cfg, const Dataset& data, Day delay) {
  WindowSweepConfig wcfg = cfg.window_sweep;
  wcfg.forest = cfg.learner.iforest;
  wcfg.forest.seed = cfg.learner.seed;
  auto sweep = window_sweep(data.traces, data.call_dim, wcfg);

  RunResult out;
  json summary = base_summary(cfg, data, delay);
  summary["aut_f1"] = sweep.f1.size() >= 2 ? aut(sweep.f1) : sweep.f1.points.front().second;
  // The full-trace point (largest proportion) is the headline verdict.
  const auto last = std::max_element(sweep.points.begin(), sweep.points.end(),
                                     [](const auto& a, const auto& b) { return a.proportion < b.proportion; });
  json final = metrics_json(last->metrics);
  final["confusion"] = confusion_json(last->cm);
  summary["final"] = final;
  summary["drifts"] = json::array();
  json points = json::array();
  std::ostringstream csv;
  csv << "window_index,accuracy,precision,recall,f1\n";
  for (std::size_t i = 0; i < sweep.points.size(); ++i) {
    const auto& p = sweep.points[i];
    json pj = metrics_json(p.metrics);
    pj["proportion"] = p.proportion;
    pj["threshold"] = p.threshold;
    points.push_back(pj);
    csv << i << ',' << fmt(p.metrics.accuracy) << ',' << fmt(p.metrics.precision) << ','
        << fmt(p.metrics.recall) << ',' << fmt(p.metrics.f1) << '\n';
  }
  summary["sweep"] = points;
  out.summary = std::move(summary);
  out.metrics_csv = csv.str();
  out.sweep = std::move(sweep);
  return out;
}

RunResult run_stream(const ExperimentConfig& cfg, const Dataset& data, Day delay) {
  auto split = temporal_split(data.stream, cfg.split_fraction);
  std::vector<std::string> notes = split.warnings;
  Stream train = std::move(split.train);
  auto components = make_components(cfg.featurizer, cfg.learner, cfg.detector);

  std::vector<LabeledFeatures> extra;
  std::size_t n_synthetic = 0;
  switch (cfg.resampling.kind) {
    case ResamplingConfig::Kind::kNone:
      break;
    case ResamplingConfig::Kind::kTemporalUnder: {
      auto under = temporal_undersample(train, cfg.resampling.period_length, mix_seed(cfg.seed, 2));
      notes.insert(notes.end(), under.warnings.begin(), under.warnings.end());
      train = std::move(under.stream);
      break;
    }
    case ResamplingConfig::Kind::kTemporalOver: {
      const auto extractor = components.fit_featurizer(train.records());
      std::vector<FeatureRecord> fr;
      fr.reserve(train.size());
      for (const auto& r : train) {
        if (!r.true_label) continue;
        fr.push_back({r.id, extractor.transform(r), *r.true_label, r.timestamp});
      }
      OversampleOptions o;
      o.period_length = cfg.resampling.period_length;
      o.k_neighbors = cfg.resampling.k_neighbors;
      o.target_ratio = cfg.resampling.target_ratio;
      o.seed = mix_seed(cfg.seed, 3);
      auto over = temporal_oversample(fr, o);
      notes.insert(notes.end(), over.warnings.begin(), over.warnings.end());
      n_synthetic = over.synthetic.size();
      for (auto& s : over.synthetic) extra.push_back({std::move(s.x), s.label});
      break;
    }
  }

  PipelineOptions popts;
  popts.mode = cfg.mode;
  popts.reservoir_capacity = cfg.reservoir_capacity;
  popts.classes.insert(popts.classes.end(), data.stream.class_alphabet().begin(),
                       data.stream.class_alphabet().end());
  auto pipeline = Pipeline::bootstrap(train, components, popts, extra);

  PrequentialOptions prequential;
  prequential.delay.delay_days = delay;
  prequential.window = cfg.window_w;
  prequential.window_days = cfg.window_days;
  auto result = run_prequential(split.test, pipeline, prequential);
  notes.insert(notes.end(), pipeline.diagnostics().begin(), pipeline.diagnostics().end());

  RunResult out;
  json summary = base_summary(cfg, data, delay);
  summary["aut_f1"] = result.aut_f1;
  json final = metrics_json(result.final);
  final["confusion"] = confusion_json(result.final_cm);
  summary["final"] = final;
  json drifts = json::array();
  std::size_t warnings = 0;
  std::ostringstream events;
  for (const auto& e : result.events) {
    if (e.kind == DriftSignal::kDrift) drifts.push_back(e.t);
    if (e.kind == DriftSignal::kWarning) ++warnings;
    events << ordered_json{{"t", e.t}, {"kind", to_string(e.kind)}, {"detector", e.detector}}.dump()
           << '\n';
  }
  summary["drifts"] = drifts;
  summary["warnings"] = warnings;
  summary["retrains"] = pipeline.retrain_count();
  summary["final_half_f1"] = final_half_f1(result.f1);
  summary["windows"] = result.f1.size();
  summary["n_train"] = train.size();
  summary["n_test"] = split.test.size();
  summary["n_synthetic"] = n_synthetic;
  summary["notes"] = notes;
  if (const auto* arf = dynamic_cast<const AdaptiveRandomForest*>(&pipeline.classifier())) {
    summary["tree_replacements"] = arf->drift_count();
  }

  std::ostringstream csv;
  csv << "window_index,accuracy,precision,recall,f1\n";
  for (std::size_t i = 0; i < result.f1.size(); ++i) {
    csv << i << ',' << fmt(result.accuracy.points[i].second) << ','
        << fmt(result.precision.points[i].second) << ',' << fmt(result.recall.points[i].second)
        << ',' << fmt(result.f1.points[i].second) << '\n';
  }
  std::ostringstream preds;
  for (const auto& p : result.predictions) {
    preds << ordered_json{{"id", p.id}, {"t", p.t}, {"pred", p.label}, {"score", p.score}}.dump()
          << '\n';
  }
  out.summary = std::move(summary);
  out.metrics_csv = csv.str();
  out.events_jsonl = events.str();
  out.predictions_jsonl = preds.str();
  out.prequential = std::move(result);
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

void make_dirs(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create '" + dir.string() + "': " + ec.message());
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg, const Dataset& data, Day delay_days) {
  if (delay_days < 0) throw ConfigError("delay_days must be nonnegative");
  return data.is_traces ? run_traces(cfg, data, delay_days) : run_stream(cfg, data, delay_days);
}

RunResult run_experiment(const ExperimentConfig& cfg, Day delay_days) {
  return run_experiment(cfg, load_dataset(cfg), delay_days);
}

void write_run(const RunResult& run, const std::filesystem::path& dir) {
  make_dirs(dir);
  write_text(dir / "summary.json", run.summary.dump(2) + "\n");
  write_text(dir / "metrics.csv", run.metrics_csv);
  write_text(dir / "events.jsonl", run.events_jsonl);
  if (!run.predictions_jsonl.empty()) write_text(dir / "predictions.jsonl", run.predictions_jsonl);
}

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next.store(n);
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

namespace {

std::filesystem::path delay_dir(const std::filesystem::path& base, Day delay) {
  return base / ("delay_" + std::to_string(delay));
}

}  // namespace

std::map<Day, json> run_to_disk(const ExperimentConfig& cfg, std::size_t workers) {
  const Dataset data = load_dataset(cfg);
  std::vector<RunResult> runs(cfg.delay_days.size());
  parallel_for(runs.size(), workers,
               [&](std::size_t i) { runs[i] = run_experiment(cfg, data, cfg.delay_days[i]); });
  std::map<Day, json> out;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const Day delay = cfg.delay_days[i];
    write_run(runs[i], cfg.delay_sweep ? delay_dir(cfg.output_dir, delay) : cfg.output_dir);
    out[delay] = runs[i].summary;
  }
  if (cfg.delay_sweep) {
    json index = json::object();
    for (const auto& [delay, s] : out) {
      index[std::to_string(delay)] = {{"aut_f1", s["aut_f1"]}, {"final", s["final"]}, {"drifts", s["drifts"]}};
    }
    write_text(cfg.output_dir / "summaries.json", index.dump(2) + "\n");
  }
  return out;
}

std::vector<SweepRow> sweep_to_disk(const ExperimentConfig& cfg,
                                    const std::vector<std::uint64_t>& seeds, std::size_t workers) {
  if (seeds.empty()) throw ConfigError("sweep needs at least one seed");
  std::set<std::uint64_t> unique(seeds.begin(), seeds.end());
  if (unique.size() != seeds.size()) throw ConfigError("duplicate seed in sweep");

  std::vector<ExperimentConfig> configs;
  for (auto s : seeds) configs.push_back(with_seed(cfg, s));
  // Datasets are shared between the delays of one seed.
  std::vector<Dataset> datasets(configs.size());
  parallel_for(configs.size(), workers, [&](std::size_t i) { datasets[i] = load_dataset(configs[i]); });

  const std::size_t nd = cfg.delay_days.size();
  std::vector<SweepRow> rows(seeds.size() * nd);
  std::vector<RunResult> runs(rows.size());
  parallel_for(rows.size(), workers, [&](std::size_t k) {
    const std::size_t si = k / nd;
    const Day delay = cfg.delay_days[k % nd];
    runs[k] = run_experiment(configs[si], datasets[si], delay);
    rows[k] = {seeds[si], delay, runs[k].summary};
  });

  std::ostringstream csv;
  csv << "seed,delay_days,final_f1,final_precision,aut_f1,final_half_f1,drifts\n";
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto seed_dir = cfg.output_dir / ("seed_" + std::to_string(rows[k].seed));
    write_run(runs[k], cfg.delay_sweep ? delay_dir(seed_dir, rows[k].delay) : seed_dir);
    const auto& s = rows[k].summary;
    csv << rows[k].seed << ',' << rows[k].delay << ',' << fmt(s["final"]["f1"].get<double>()) << ','
        << fmt(s["final"]["precision"].get<double>()) << ',' << fmt(s["aut_f1"].get<double>()) << ','
        << fmt(s.value("final_half_f1", 0.0)) << ',' << s["drifts"].size() << '\n';
  }
  write_text(cfg.output_dir / "sweep.csv", csv.str());
  return rows;
}

std::string generate_to_disk(const ExperimentConfig& cfg) {
  make_dirs(cfg.output_dir);
  std::ostringstream msg;
  if (cfg.dataset.kind == DatasetConfig::Kind::kTraces) {
    const auto traces = generate_traces(cfg.dataset.traces);
    const auto path = cfg.output_dir / "traces.jsonl";
    write_text(path, traces_to_jsonl(traces, cfg.dataset.traces.syscall_alphabet_size));
    const auto anomalous = std::count_if(traces.begin(), traces.end(), [](const auto& t) { return t.anomalous; });
    msg << "wrote " << path.string() << ": " << traces.size() << " traces (normal "
        << traces.size() - static_cast<std::size_t>(anomalous) << ", anomalous " << anomalous << ")";
    return msg.str();
  }
  if (cfg.dataset.kind != DatasetConfig::Kind::kGenerator) {
    throw ConfigError("gen needs a 'generator' or 'traces' dataset");
  }
  const auto stream = generate_text_stream(cfg.dataset.generator);
  const auto path = cfg.output_dir / "data.jsonl";
  write_text(path, to_jsonl(stream));
  std::map<std::string, std::size_t> counts;
  for (const auto& r : stream) ++counts[r.true_label.value_or("unlabeled")];
  msg << "wrote " << path.string() << ": " << stream.size() << " records (";
  bool first = true;
  for (const auto& [label, n] : counts) {
    msg << (first ? "" : ", ") << label << ' ' << n;
    first = false;
  }
  msg << ")";
  return msg.str();
}

}  // namespace driftkit
