#include "driftkit/stream.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "driftkit/error.hpp"
#include "driftkit/random.hpp"

namespace driftkit {

using ordered_json = nlohmann::ordered_json;

Stream::Stream(std::vector<StreamRecord> records) : records_(std::move(records)) {
  std::stable_sort(records_.begin(), records_.end(),
                   [](const StreamRecord& a, const StreamRecord& b) {
                     if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
                     return a.id < b.id;
                   });
  std::unordered_set<std::string> ids;
  std::set<std::string> classes;
  for (const auto& r : records_) {
    if (!ids.insert(r.id).second) {
      throw DataError("duplicate record id '" + r.id + "'");
    }
    if (r.label_available_at < r.timestamp) {
      throw DataError("record '" + r.id + "': label_at " +
                      std::to_string(r.label_available_at) + " precedes ts " +
                      std::to_string(r.timestamp));
    }
    if (r.true_label) {
      if (r.tokens.empty() && !r.synthetic) {
        throw DataError("record '" + r.id + "' is labeled but has no tokens");
      }
      classes.insert(*r.true_label);
    }
  }
  classes_.assign(classes.begin(), classes.end());
}

StreamFormat parse_stream_format(const std::string& name) {
  if (name == "jsonl") return StreamFormat::kJsonl;
  if (name == "csv") return StreamFormat::kCsv;
  throw ConfigError("unknown stream format '" + name + "' (expected jsonl|csv)");
}

namespace {

[[noreturn]] void row_error(std::size_t line, const std::string& what) {
  throw DataError("line " + std::to_string(line) + ": " + what);
}

std::vector<std::string> split_tokens(const std::string& joined) {
  std::vector<std::string> out;
  std::istringstream in(joined);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

StreamRecord record_from_json(const nlohmann::json& j, std::size_t line) {
  if (!j.is_object()) row_error(line, "expected a JSON object");
  StreamRecord r;
  auto require = [&](const char* key) -> const nlohmann::json& {
    auto it = j.find(key);
    if (it == j.end()) row_error(line, std::string("missing required field '") + key + "'");
    return *it;
  };
  const auto& id = require("id");
  if (!id.is_string()) row_error(line, "field 'id' must be a string");
  r.id = id.get<std::string>();
  const auto& ts = require("ts");
  if (!ts.is_number_integer()) row_error(line, "field 'ts' must be an integer");
  r.timestamp = ts.get<Day>();
  const auto& label_at = require("label_at");
  if (!label_at.is_number_integer()) row_error(line, "field 'label_at' must be an integer");
  r.label_available_at = label_at.get<Day>();
  const auto& tokens = require("tokens");
  if (!tokens.is_array()) row_error(line, "field 'tokens' must be an array");
  for (const auto& t : tokens) {
    if (!t.is_string()) row_error(line, "tokens must be strings");
    r.tokens.push_back(t.get<std::string>());
  }
  if (auto it = j.find("label"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) row_error(line, "field 'label' must be a string or null");
    r.true_label = it->get<std::string>();
  }
  if (auto it = j.find("subclass"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) row_error(line, "field 'subclass' must be a string or null");
    r.subclass = it->get<std::string>();
  }
  if (auto it = j.find("synthetic"); it != j.end()) {
    if (!it->is_boolean()) row_error(line, "field 'synthetic' must be a boolean");
    r.synthetic = it->get<bool>();
  }
  if (r.label_available_at < r.timestamp) {
    row_error(line, "label_at precedes ts for record '" + r.id + "'");
  }
  return r;
}

// Minimal RFC 4180 field splitter (quoted fields, doubled quotes).
std::vector<std::string> split_csv_line(const std::string& line, std::size_t lineno) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  if (quoted) row_error(lineno, "unterminated quoted field");
  fields.push_back(std::move(cur));
  return fields;
}

Day parse_day(const std::string& s, const char* field, std::size_t line) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    row_error(line, std::string("field '") + field + "' is not an integer: '" + s + "'");
  }
}

const std::vector<std::string> kCsvColumns = {"id", "ts", "label", "label_at", "tokens",
                                              "subclass"};

Stream parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  std::vector<StreamRecord> records;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv_line(line, lineno);
    if (header.empty()) {
      header = fields;
      for (const char* req : {"id", "ts", "label_at", "tokens"}) {
        if (std::find(header.begin(), header.end(), req) == header.end()) {
          row_error(lineno, std::string("missing required column '") + req + "'");
        }
      }
      continue;
    }
    if (fields.size() != header.size()) {
      row_error(lineno, "expected " + std::to_string(header.size()) + " fields, got " +
                            std::to_string(fields.size()));
    }
    StreamRecord r;
    for (std::size_t i = 0; i < header.size(); ++i) {
      const auto& name = header[i];
      const auto& value = fields[i];
      if (name == "id") {
        r.id = value;
      } else if (name == "ts") {
        r.timestamp = parse_day(value, "ts", lineno);
      } else if (name == "label_at") {
        r.label_available_at = parse_day(value, "label_at", lineno);
      } else if (name == "label") {
        if (!value.empty()) r.true_label = value;
      } else if (name == "tokens") {
        r.tokens = split_tokens(value);
      } else if (name == "subclass") {
        if (!value.empty()) r.subclass = value;
      } else if (name == "synthetic") {
        r.synthetic = value == "true";
      }
    }
    if (r.id.empty()) row_error(lineno, "missing required field 'id'");
    if (r.label_available_at < r.timestamp) {
      row_error(lineno, "label_at precedes ts for record '" + r.id + "'");
    }
    records.push_back(std::move(r));
  }
  return Stream(std::move(records));
}

Stream parse_jsonl(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  std::vector<StreamRecord> records;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      row_error(lineno, std::string("invalid JSON: ") + e.what());
    }
    records.push_back(record_from_json(j, lineno));
  }
  return Stream(std::move(records));
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

Stream parse_stream(const std::string& text, StreamFormat format) {
  return format == StreamFormat::kJsonl ? parse_jsonl(text) : parse_csv(text);
}

Stream load_stream(const std::filesystem::path& path, StreamFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open stream file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_stream(buf.str(), format);
}

std::string to_jsonl(const Stream& stream) {
  std::string out;
  for (const auto& r : stream) {
    ordered_json j;
    j["id"] = r.id;
    j["ts"] = r.timestamp;
    j["label"] = r.true_label ? ordered_json(*r.true_label) : ordered_json(nullptr);
    j["label_at"] = r.label_available_at;
    j["tokens"] = r.tokens;
    j["subclass"] = r.subclass ? ordered_json(*r.subclass) : ordered_json(nullptr);
    if (r.synthetic) j["synthetic"] = true;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::string to_csv(const Stream& stream) {
  std::string out = "id,ts,label,label_at,tokens,subclass\n";
  for (const auto& r : stream) {
    std::string tokens;
    for (std::size_t i = 0; i < r.tokens.size(); ++i) {
      if (i) tokens += ' ';
      tokens += r.tokens[i];
    }
    out += csv_escape(r.id) + ',' + std::to_string(r.timestamp) + ',' +
           csv_escape(r.true_label.value_or("")) + ',' +
           std::to_string(r.label_available_at) + ',' + csv_escape(tokens) + ',' +
           csv_escape(r.subclass.value_or("")) + '\n';
  }
  return out;
}

void save_stream(const Stream& stream, const std::filesystem::path& path,
                 StreamFormat format) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << (format == StreamFormat::kJsonl ? to_jsonl(stream) : to_csv(stream));
  if (!out) throw DataError("write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// Text stream generator

void validate(const GeneratorConfig& cfg) {
  if (cfg.n_records == 0) throw ConfigError("n_records must be positive");
  if (!(cfg.class_ratio > 0.0 && cfg.class_ratio < 1.0)) {
    throw ConfigError("class_ratio must lie in (0, 1)");
  }
  if (cfg.vocab_size == 0) throw ConfigError("vocab_size must be positive");
  if (cfg.tokens_per_record == 0) throw ConfigError("tokens_per_record must be positive");
  if (!(cfg.noise >= 0.0 && cfg.noise < 1.0)) throw ConfigError("noise must lie in [0, 1)");
  if (cfg.span_days <= 0) throw ConfigError("span_days must be positive");
  if (!(cfg.zipf_exponent >= 0.0)) throw ConfigError("zipf_exponent must be >= 0");
  const Day end = cfg.start_day + cfg.span_days;
  for (std::size_t i = 0; i < cfg.drift_at.size(); ++i) {
    const Day d = cfg.drift_at[i];
    if (d <= cfg.start_day || d >= end) {
      throw ConfigError("drift_at " + std::to_string(d) + " outside the stream span (" +
                        std::to_string(cfg.start_day) + ", " + std::to_string(end) + ")");
    }
    if (i > 0 && d <= cfg.drift_at[i - 1]) {
      throw ConfigError("drift_at must be strictly increasing");
    }
  }
  for (const auto& period : cfg.subclass_schedule) {
    for (const auto& [label, weights] : period) {
      if (label != kBenign && label != kMalicious) {
        throw ConfigError("subclass_schedule label must be benign or malicious, got '" +
                          label + "'");
      }
      double total = 0.0;
      for (double w : weights) {
        if (!(w >= 0.0)) throw ConfigError("subclass weights must be nonnegative");
        total += w;
      }
      if (!(total > 0.0)) throw ConfigError("subclass weights must have a positive sum");
      if (weights.size() > cfg.vocab_size) {
        throw ConfigError("more subclasses than vocabulary tokens");
      }
    }
  }
}

std::string benign_token(std::size_t index) { return "b" + std::to_string(index); }

std::string malicious_token(std::size_t concept_index, std::size_t index) {
  return "m" + std::to_string(concept_index) + "_" + std::to_string(index);
}

namespace {

std::vector<double> zipf_cumulative(std::size_t n, double exponent) {
  std::vector<double> cum(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += 1.0 / std::pow(static_cast<double>(i + 1), exponent);
    cum[i] = acc;
  }
  return cum;
}

std::string pad_id(const char* prefix, std::size_t i, std::size_t width) {
  std::string digits = std::to_string(i);
  if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
  return prefix + digits;
}

std::size_t digits_for(std::size_t n) { return std::max<std::size_t>(6, std::to_string(n).size()); }

}  // namespace

Stream generate_text_stream(const GeneratorConfig& cfg) {
  validate(cfg);
  Rng rng(cfg.seed);
  const std::size_t n = cfg.n_records;
  const auto n_malicious = static_cast<std::size_t>(
      std::llround(cfg.class_ratio * static_cast<double>(n)));
  std::vector<char> is_malicious(n, 0);
  std::fill_n(is_malicious.begin(), n_malicious, 1);
  rng.shuffle(is_malicious);

  const auto cum = zipf_cumulative(cfg.vocab_size, cfg.zipf_exponent);
  const std::size_t periods = cfg.subclass_schedule.size();
  const std::size_t width = digits_for(n);

  std::vector<StreamRecord> records;
  records.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    StreamRecord r;
    r.id = pad_id("r", i, width);
    r.timestamp = cfg.start_day + static_cast<Day>((static_cast<unsigned __int128>(i) *
                                                    static_cast<unsigned __int128>(cfg.span_days)) /
                                                   n);
    r.label_available_at = r.timestamp;
    const bool malicious = is_malicious[i] != 0;
    const std::string& label = malicious ? kMalicious : kBenign;
    r.true_label = label;

    const auto concept_index = static_cast<std::size_t>(
        std::upper_bound(cfg.drift_at.begin(), cfg.drift_at.end(), r.timestamp) -
        cfg.drift_at.begin());

    // Subclass: restricts most draws to one slice of the class vocabulary.
    std::size_t n_slices = 0;
    std::size_t slice = 0;
    if (periods > 0) {
      const auto period = std::min<std::size_t>(
          periods - 1, static_cast<std::size_t>((r.timestamp - cfg.start_day) *
                                                static_cast<Day>(periods) / cfg.span_days));
      const auto& mix = cfg.subclass_schedule[period];
      if (auto it = mix.find(label); it != mix.end()) {
        std::vector<double> wcum(it->second.size());
        double acc = 0.0;
        for (std::size_t k = 0; k < wcum.size(); ++k) wcum[k] = acc += it->second[k];
        slice = rng.from_cumulative(wcum);
        n_slices = wcum.size();
        r.subclass = label + "_" + std::to_string(slice);
      }
    }

    r.tokens.reserve(cfg.tokens_per_record);
    for (std::size_t t = 0; t < cfg.tokens_per_record; ++t) {
      const bool leak = rng.bernoulli(cfg.noise);
      const bool draw_malicious = malicious != leak;
      std::size_t index;
      if (!leak && n_slices > 0 && rng.bernoulli(0.7)) {
        const std::size_t lo = slice * cfg.vocab_size / n_slices;
        const std::size_t hi = (slice + 1) * cfg.vocab_size / n_slices;
        index = lo + rng.below(std::max<std::size_t>(1, hi - lo));
      } else {
        index = rng.from_cumulative(cum);
      }
      r.tokens.push_back(draw_malicious ? malicious_token(concept_index, index)
                                        : benign_token(index));
    }
    records.push_back(std::move(r));
  }
  return Stream(std::move(records));
}

// ---------------------------------------------------------------------------
// Trace generator

namespace {
constexpr std::size_t kAnomalyAlphabet = 8;
}

void validate(const TraceConfig& cfg) {
  if (cfg.n_traces == 0) throw ConfigError("n_traces must be positive");
  if (cfg.syscall_alphabet_size < 2) throw ConfigError("syscall_alphabet_size must be >= 2");
  if (cfg.trace_length_min == 0 || cfg.trace_length_min > cfg.trace_length_max) {
    throw ConfigError("trace_length_range must satisfy 0 < min <= max");
  }
  if (!(cfg.anomaly_ratio >= 0.0 && cfg.anomaly_ratio < 1.0)) {
    throw ConfigError("anomaly_ratio must lie in [0, 1)");
  }
  if (cfg.anomaly_burst_length == 0 || cfg.anomaly_burst_length > cfg.trace_length_min) {
    throw ConfigError("anomaly_burst_length must lie in [1, trace_length_min]");
  }
}

std::size_t trace_call_dimension(const TraceConfig& cfg) {
  return cfg.syscall_alphabet_size + kAnomalyAlphabet;
}

std::string syscall_name(std::uint32_t call, std::size_t alphabet_size) {
  if (call < alphabet_size) return "sys_" + std::to_string(call);
  return "anom_" + std::to_string(call - alphabet_size);
}

std::vector<Trace> generate_traces(const TraceConfig& cfg) {
  validate(cfg);
  Rng rng(cfg.seed);
  const std::size_t n = cfg.n_traces;
  const auto n_anomalous = static_cast<std::size_t>(
      std::llround(cfg.anomaly_ratio * static_cast<double>(n)));
  std::vector<char> anomalous(n, 0);
  std::fill_n(anomalous.begin(), n_anomalous, 1);
  rng.shuffle(anomalous);

  const std::size_t alphabet = cfg.syscall_alphabet_size;
  const auto cum = zipf_cumulative(alphabet, 1.0);
  const std::size_t rare = std::max<std::size_t>(1, alphabet / 10);
  const std::size_t width = digits_for(n);

  std::vector<Trace> traces;
  traces.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Trace tr;
    tr.id = pad_id("t", i, width);
    const std::size_t len =
        cfg.trace_length_min + rng.below(cfg.trace_length_max - cfg.trace_length_min + 1);
    tr.calls.resize(len);
    for (auto& c : tr.calls) c = static_cast<std::uint32_t>(rng.from_cumulative(cum));
    tr.anomalous = anomalous[i] != 0;
    if (tr.anomalous) {
      Burst b;
      b.length = cfg.anomaly_burst_length;
      b.begin = rng.below(len - b.length + 1);
      for (std::size_t k = b.begin; k < b.begin + b.length; ++k) {
        tr.calls[k] = cfg.disjoint_anomalies
                          ? static_cast<std::uint32_t>(alphabet + rng.below(kAnomalyAlphabet))
                          : static_cast<std::uint32_t>(alphabet - rare + rng.below(rare));
      }
      tr.bursts.push_back(b);
    }
    traces.push_back(std::move(tr));
  }
  return traces;
}

std::string traces_to_jsonl(const std::vector<Trace>& traces, std::size_t alphabet_size) {
  std::string out;
  for (const auto& tr : traces) {
    ordered_json j;
    j["id"] = tr.id;
    j["label"] = tr.anomalous ? "anomalous" : "normal";
    std::vector<std::string> calls;
    calls.reserve(tr.calls.size());
    for (auto c : tr.calls) calls.push_back(syscall_name(c, alphabet_size));
    j["calls"] = std::move(calls);
    out += j.dump();
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------

SplitResult temporal_split(const Stream& stream, double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw ConfigError("split fraction must lie in (0, 1)");
  }
  if (stream.empty()) throw ConfigError("cannot split an empty stream");
  const std::size_t n = stream.size();
  const auto n_train =
      static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n)));
  if (n_train >= n) throw ConfigError("split leaves the test stream empty");
  SplitResult out;
  const auto& recs = stream.records();
  out.train = Stream({recs.begin(), recs.begin() + static_cast<std::ptrdiff_t>(n_train)});
  out.test = Stream({recs.begin() + static_cast<std::ptrdiff_t>(n_train), recs.end()});
  if (recs.front().timestamp == recs.back().timestamp) {
    out.warnings.push_back("all timestamps are equal; split follows id order");
  }
  return out;
}

}  // namespace driftkit
