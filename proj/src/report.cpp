#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "driftkit/error.hpp"
#include "driftkit/experiment.hpp"

namespace driftkit {

using nlohmann::json;

namespace {

json read_summary(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot read '" + file.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError("'" + file.string() + "' is not valid JSON: " + e.what());
  }
}

// A run directory holds summary.json directly, or one subdirectory per delay
// or seed (delay_N, seed_N) each holding its own.
void collect(const std::filesystem::path& dir, std::vector<std::pair<std::string, json>>& out) {
  if (std::filesystem::is_regular_file(dir / "summary.json")) {
    out.emplace_back(dir.string(), read_summary(dir / "summary.json"));
    return;
  }
  if (!std::filesystem::is_directory(dir)) throw DataError("no run directory at '" + dir.string() + "'");
  std::vector<std::pair<std::pair<int, long long>, std::filesystem::path>> subdirs;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_directory()) continue;
    const auto name = entry.path().filename().string();
    for (auto [prefix, rank] : {std::pair{"seed_", 0}, std::pair{"delay_", 1}}) {
      const std::string p = prefix;
      if (name.rfind(p, 0) == 0) {
        try {
          subdirs.push_back({{rank, std::stoll(name.substr(p.size()))}, entry.path()});
        } catch (const std::exception&) {
        }
      }
    }
  }
  if (subdirs.empty()) throw DataError("no summary.json under '" + dir.string() + "'");
  std::sort(subdirs.begin(), subdirs.end());
  for (const auto& [key, path] : subdirs) collect(path, out);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

Report build_report(const std::vector<std::filesystem::path>& run_dirs) {
  if (run_dirs.empty()) throw DataError("report needs at least one run directory");
  std::vector<std::pair<std::string, json>> summaries;
  for (const auto& d : run_dirs) collect(d, summaries);
  return build_report(summaries);
}

Report build_report(const std::vector<std::pair<std::string, json>>& summaries) {
  if (summaries.empty()) throw DataError("no summaries to report");
  for (const auto& [name, s] : summaries) {
    for (const char* key : {"aut_f1", "final", "drifts", "dataset_hash", "config_key", "config"}) {
      if (!s.contains(key)) throw DataError("summary '" + name + "' lacks '" + key + "'");
    }
  }
  const auto hash = summaries.front().second["dataset_hash"].get<std::string>();
  for (const auto& [name, s] : summaries) {
    const auto h = s["dataset_hash"].get<std::string>();
    if (h != hash) {
      throw DataError("refusing to compare runs over different datasets: '" + summaries.front().first +
                      "' has dataset " + hash.substr(0, 12) + ", '" + name + "' has " + h.substr(0, 12));
    }
  }

  struct Row {
    std::string run, mode, learner, detector, featurizer;
    long long delay = 0;
    double f1 = 0, aut = 0, precision = 0;
    std::size_t drifts = 0;
    std::string drop = "n/a";
    std::string delta;
  };
  std::vector<Row> rows;
  for (const auto& [name, s] : summaries) {
    const auto& c = s["config"];
    Row r;
    r.run = name;
    r.mode = c["mode"].get<std::string>();
    r.learner = c["learner"]["kind"].get<std::string>();
    r.detector = c["detector"]["kind"].get<std::string>();
    r.featurizer = c["featurizer"]["kind"].get<std::string>();
    r.delay = s.value("delay_days", 0LL);
    r.f1 = s["final"]["f1"].get<double>();
    r.precision = s["final"]["precision"].get<double>();
    r.aut = s["aut_f1"].get<double>();
    r.drifts = s["drifts"].size();
    // Baseline: the delay-0 run sharing the config key.
    for (const auto& [other_name, o] : summaries) {
      if (o["config_key"] == s["config_key"] && o.value("delay_days", 0LL) == 0) {
        const double base = o["final"]["precision"].get<double>();
        if (base > 0.0) r.drop = fmt(r.precision / base);
        break;
      }
    }
    r.delta = fmt(r.f1 - summaries.front().second["final"]["f1"].get<double>());
    rows.push_back(std::move(r));
  }

  Report rep;
  std::ostringstream md;
  md << "Dataset " << hash << "\n\n";
  md << "| run | mode | learner | detector | featurizer | delay | final F1 | AUT(F1) | drifts | "
        "precision | precision / delay-0 | dF1 |\n";
  md << "|---|---|---|---|---|---|---|---|---|---|---|---|\n";
  std::ostringstream csv;
  csv << "run,mode,learner,detector,featurizer,delay_days,final_f1,aut_f1,drifts,precision,"
         "precision_drop_ratio,delta_f1\n";
  for (const auto& r : rows) {
    md << "| " << r.run << " | " << r.mode << " | " << r.learner << " | " << r.detector << " | "
       << r.featurizer << " | " << r.delay << " | " << fmt(r.f1) << " | " << fmt(r.aut) << " | "
       << r.drifts << " | " << fmt(r.precision) << " | " << r.drop << " | " << r.delta << " |\n";
    csv << csv_field(r.run) << ',' << r.mode << ',' << r.learner << ',' << r.detector << ','
        << r.featurizer << ',' << r.delay << ',' << fmt(r.f1) << ',' << fmt(r.aut) << ','
        << r.drifts << ',' << fmt(r.precision) << ',' << r.drop << ',' << r.delta << '\n';
  }
  rep.markdown = md.str();
  rep.csv = csv.str();
  return rep;
}

}  // namespace driftkit
