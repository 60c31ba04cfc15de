#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "auditbench/report.hpp"

namespace {

namespace fs = std::filesystem;
using namespace auditbench;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitDegenerate = 4;

// Precedence: --seed flag, then AUDITBENCH_SEED, then the config value.
void apply_seed_override(ExperimentConfig& config,
                         const std::optional<uint64_t>& flag_seed) {
  if (flag_seed) {
    config.master_seed = *flag_seed;
    return;
  }
  if (const char* env = std::getenv("AUDITBENCH_SEED")) {
    try {
      config.master_seed = std::stoull(env);
    } catch (const std::exception&) {
      fail(Errc::ConfigError,
           std::string("AUDITBENCH_SEED is not an integer: '") + env + "'");
    }
  }
}

int classify_exit(const AuditError& e) {
  switch (e.code()) {
    case Errc::IoError:
    case Errc::EmptyFile:
      return kExitIo;
    default:
      return kExitConfig;
  }
}

int cmd_validate(const std::string& config_path) {
  ExperimentConfig config = parse_config(config_path);
  std::vector<std::string> diags = config.diagnostics();
  // The dataset header check runs here too, so validate and run agree on
  // every config.
  if (diags.empty() && config.dataset.kind == DatasetSource::Kind::Csv) {
    try {
      DataTable table = load_dataset(config);
      for (size_t k : config.features_grid) {
        if (k > table.n_features())
          diags.push_back(
              "grids.features entry exceeds the dataset's feature count");
      }
    } catch (const AuditError& e) {
      if (classify_exit(e) == kExitIo) throw;
      diags.push_back(e.what());
    }
  }
  if (diags.empty()) {
    std::cout << "OK\n";
    return kExitOk;
  }
  for (const std::string& d : diags) std::cerr << "invalid: " << d << "\n";
  return kExitConfig;
}

int cmd_gen_data(const std::string& config_path, const std::string& out_dir) {
  ExperimentConfig config = parse_config(config_path);
  if (config.dataset.kind != DatasetSource::Kind::Benchmark)
    fail(Errc::ConfigError, "gen-data needs a benchmark dataset spec");
  config.dataset.benchmark.validate();

  fs::create_directories(out_dir);
  DataTable table = generate_benchmark(config.dataset.benchmark);
  std::string path = (fs::path(out_dir) / "dataset.csv").string();
  write_csv(table, path);

  size_t n_under = 0, pos_under = 0, pos_priv = 0;
  for (size_t r = 0; r < table.n_rows(); ++r) {
    if (table.group(r) == Group::Underprivileged) {
      ++n_under;
      pos_under += static_cast<size_t>(table.y(r));
    } else {
      pos_priv += static_cast<size_t>(table.y(r));
    }
  }
  size_t n_priv = table.n_rows() - n_under;
  auto rate = [](size_t pos, size_t n) {
    return n ? static_cast<double>(pos) / static_cast<double>(n) : 0.0;
  };
  std::cout << "rows=" << table.n_rows() << "\n"
            << "privileged_rows=" << n_priv
            << " base_rate=" << rate(pos_priv, n_priv) << "\n"
            << "underprivileged_rows=" << n_under
            << " base_rate=" << rate(pos_under, n_under) << "\n"
            << "written=" << path << "\n";
  return kExitOk;
}

int cmd_run(const std::string& config_path, const std::string& out_dir,
            int jobs, const std::optional<uint64_t>& seed) {
  ExperimentConfig config = parse_config(config_path);
  apply_seed_override(config, seed);
  std::vector<std::string> diags = config.diagnostics();
  if (!diags.empty()) {
    for (const std::string& d : diags) std::cerr << "invalid: " << d << "\n";
    return kExitConfig;
  }

  ExperimentResult result = run_experiment(config, jobs);
  fs::create_directories(out_dir);
  write_results_csv(result, (fs::path(out_dir) / "results.csv").string());
  std::vector<SummaryRow> summary = aggregate({result});
  write_summary_csv(summary, (fs::path(out_dir) / "summary.csv").string());
  write_provenance(result, (fs::path(out_dir) / "provenance.txt").string());

  size_t skipped = 0;
  for (const ValueRecord& rec : result.records) skipped += rec.skipped;
  std::cout << "records=" << result.records.size() << " skipped=" << skipped
            << " out=" << out_dir << "\n";
  if (skipped * 2 > result.records.size()) {
    std::cerr << "more than half of all records were skipped\n";
    return kExitDegenerate;
  }
  return kExitOk;
}

int cmd_report(const std::string& in_dir, const std::string& format) {
  LoadedResults loaded = load_results_dir(in_dir);
  write_report(loaded, in_dir, format);
  std::cout << "report written to " << in_dir << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"auditbench: third-party audit simulation workbench"};
  app.require_subcommand(1);

  std::string config_path, out_dir = ".", in_dir, format = "md";
  int jobs = 1;
  std::optional<uint64_t> seed;

  CLI::App* validate = app.add_subcommand("validate", "check a config file");
  validate->add_option("--config", config_path, "experiment config path")
      ->required();

  CLI::App* gen = app.add_subcommand("gen-data", "write a benchmark dataset");
  gen->add_option("--config", config_path, "experiment config path")
      ->required();
  gen->add_option("--out", out_dir, "output directory");

  CLI::App* run = app.add_subcommand("run", "run the configured experiment");
  run->add_option("--config", config_path, "experiment config path")
      ->required();
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  run->add_option("--seed", seed, "master seed override (beats AUDITBENCH_SEED)");

  CLI::App* report = app.add_subcommand("report", "render tables + plot data");
  report->add_option("--in", in_dir, "results directory")->required();
  report->add_option("--format", format, "md or csv");

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) return cmd_validate(config_path);
    if (gen->parsed()) return cmd_gen_data(config_path, out_dir);
    if (run->parsed()) return cmd_run(config_path, out_dir, jobs, seed);
    if (report->parsed()) return cmd_report(in_dir, format);
  } catch (const AuditError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return classify_exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitOk;
}
