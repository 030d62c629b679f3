// driftkit: generate streams, run prequential experiments, compare runs.
//
// Exit codes: 0 success, 1 runtime error, 2 config or usage error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <thread>

#include "driftkit/error.hpp"
#include "driftkit/experiment.hpp"

namespace {

using namespace driftkit;

struct Common {
  std::string config;
  std::string output_dir;
  std::optional<std::uint64_t> seed;
};

ExperimentConfig load(const Common& c) {
  auto cfg = load_config(c.config);
  if (c.seed) cfg = with_seed(cfg, *c.seed);
  if (!c.output_dir.empty()) cfg.output_dir = c.output_dir;
  return cfg;
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("-c,--config", c.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  sub->add_option("-o,--output-dir", c.output_dir, "Override output_dir from the config");
  sub->add_option("-s,--seed", c.seed, "Override the experiment seed");
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out || !(out << text)) throw DataError("cannot write '" + p.string() + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"driftkit: drift-aware stream classification experiments"};
  app.require_subcommand(1);

  Common gen_opts;
  auto* gen = app.add_subcommand("gen", "Write the configured dataset (data.jsonl or traces.jsonl) to output_dir");
  add_common(gen, gen_opts);

  Common run_opts;
  std::size_t run_workers = 0;
  auto* run = app.add_subcommand(
      "run", "Bootstrap, run prequentially and write summary.json, metrics.csv, events.jsonl");
  add_common(run, run_opts);
  run->add_option("-j,--workers", run_workers, "Parallel runs for a delay list (default: CPU count)");

  std::vector<std::string> report_dirs;
  std::string report_out;
  auto* report = app.add_subcommand("report", "Compare run directories (markdown table on stdout)");
  report->add_option("runs", report_dirs, "Run directories")->required();
  report->add_option("-o,--output-dir", report_out, "Also write report.md and report.csv here");

  Common sweep_opts;
  std::vector<std::uint64_t> seeds;
  std::size_t n_seeds = 0;
  std::size_t sweep_workers = 0;
  auto* sweep = app.add_subcommand("sweep", "Independent runs over seeds (and delays) on a worker pool");
  add_common(sweep, sweep_opts);
  auto* seeds_opt = sweep->add_option("--seeds", seeds, "Seeds to run")->delimiter(',');
  sweep->add_option("-n,--n-seeds", n_seeds, "Run seeds 0..n-1")->excludes(seeds_opt);
  sweep->add_option("-j,--workers", sweep_workers, "Worker threads (default: CPU count)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*gen) {
      std::cout << generate_to_disk(load(gen_opts)) << '\n';
    } else if (*run) {
      const auto cfg = load(run_opts);
      for (const auto& [delay, s] : run_to_disk(cfg, run_workers)) {
        std::cout << "delay " << delay << ": final F1 " << s["final"]["f1"].get<double>()
                  << ", AUT(F1) " << s["aut_f1"].get<double>() << ", drifts " << s["drifts"].size()
                  << '\n';
      }
      std::cout << "wrote " << cfg.output_dir.string() << '\n';
    } else if (*report) {
      std::vector<std::filesystem::path> dirs(report_dirs.begin(), report_dirs.end());
      const auto rep = build_report(dirs);
      std::cout << rep.markdown;
      if (!report_out.empty()) {
        std::filesystem::create_directories(report_out);
        write_file(std::filesystem::path(report_out) / "report.md", rep.markdown);
        write_file(std::filesystem::path(report_out) / "report.csv", rep.csv);
      }
    } else if (*sweep) {
      const auto cfg = load(sweep_opts);
      if (seeds.empty()) {
        if (n_seeds == 0) throw ConfigError("sweep needs --seeds or --n-seeds");
        for (std::uint64_t s = 0; s < n_seeds; ++s) seeds.push_back(s);
      }
      const auto rows = sweep_to_disk(cfg, seeds, sweep_workers);
      std::cout << rows.size() << " runs; wrote " << (cfg.output_dir / "sweep.csv").string() << '\n';
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
