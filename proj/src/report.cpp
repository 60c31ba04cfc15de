#include "auditbench/report.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace auditbench {

namespace {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// Condition labels never contain commas or quotes by construction; CSV rows
// here are written verbatim.
void open_for_write(std::ofstream& out, const std::string& path) {
  out.open(path, std::ios::binary);
  if (!out) fail(Errc::IoError, "cannot write '" + path + "'");
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

void write_results_csv(const ExperimentResult& result,
                       const std::string& path) {
  std::ofstream out;
  open_for_write(out, path);
  out << "scenario,experiment,condition,repetition,metric,disparity_mode,"
         "value,kind,skipped,skip_reason\n";
  const char* scenario = scenario_name(result.config.scenario);
  const char* mode = disparity_mode_name(result.config.disparity_mode);
  for (const ValueRecord& rec : result.records) {
    std::string prefix = std::string(scenario) + "," + rec.experiment + "," +
                         rec.condition + "," + std::to_string(rec.repetition) +
                         "," + metric_name(rec.metric) + "," + mode + ",";
    if (rec.skipped) {
      out << prefix << ",point,1," << rec.skip_reason << "\n";
      continue;
    }
    out << prefix << format_double(rec.point) << ",point,0,\n";
    for (double v : rec.bootstrap)
      out << prefix << format_double(v) << ",bootstrap,0,\n";
  }
}

void write_summary_csv(const std::vector<SummaryRow>& rows,
                       const std::string& path) {
  std::ofstream out;
  open_for_write(out, path);
  out << "scenario,experiment,condition,metric,disparity_mode,baseline_lower,"
         "baseline_upper,baseline_config,experiment_config,outcome,"
         "overlap_proportion,n_values,n_skipped\n";
  for (const SummaryRow& row : rows) {
    out << row.scenario << ',' << row.experiment << ',' << row.condition << ','
        << row.metric << ',' << row.disparity_mode << ',';
    if (row.baseline) {
      out << format_double(row.baseline->lower) << ','
          << format_double(row.baseline->upper) << ','
          << configuration_name(classify_configuration(*row.baseline)) << ',';
    } else {
      out << ",,,";
    }
    if (row.report) {
      out << configuration_name(row.report->experiment_config) << ','
          << outcome_name(row.report->outcome) << ','
          << format_double(row.report->overlap) << ',';
    } else {
      out << ",,,";
    }
    out << row.n_values << ',' << row.n_skipped << "\n";
  }
}

void write_provenance(const ExperimentResult& result, const std::string& path,
                      bool with_timestamp) {
  std::ofstream out;
  open_for_write(out, path);
  if (with_timestamp) {
    auto now = std::chrono::system_clock::to_time_t(
        std::chrono::system_clock::now());
    char buf[64];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    out << "written_at=" << buf << "\n";
  }
  for (const std::string& line : result.provenance) out << line << "\n";
}

LoadedResults load_results_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  std::string summary_path = (fs::path(dir) / "summary.csv").string();
  std::string results_path = (fs::path(dir) / "results.csv").string();
  std::ifstream summary_in(summary_path);
  std::ifstream results_in(results_path);
  if (!summary_in || !results_in)
    fail(Errc::IoError, "no results found in '" + dir +
                            "' (need summary.csv and results.csv)");

  LoadedResults loaded;
  std::string line;
  std::getline(summary_in, line);  // header
  while (std::getline(summary_in, line)) {
    if (line.empty()) continue;
    auto f = split_fields(line);
    if (f.size() != 13) fail(Errc::IoError, "malformed summary.csv row");
    SummaryRow row;
    row.scenario = f[0];
    row.experiment = f[1];
    row.condition = f[2];
    row.metric = f[3];
    row.disparity_mode = f[4];
    if (!f[5].empty() && !f[6].empty()) {
      Interval iv;
      iv.lower = std::stod(f[5]);
      iv.upper = std::stod(f[6]);
      row.baseline = iv;
    }
    if (!f[10].empty()) {
      ReliabilityReport rep;
      if (row.baseline) rep.baseline = *row.baseline;
      rep.overlap = std::stod(f[10]);
      row.report = rep;
    }
    row.n_values = static_cast<size_t>(std::stoull(f[11]));
    row.n_skipped = static_cast<size_t>(std::stoull(f[12]));
    loaded.summary.push_back(std::move(row));
  }

  std::getline(results_in, line);  // header
  while (std::getline(results_in, line)) {
    if (line.empty()) continue;
    auto f = split_fields(line);
    if (f.size() != 10) fail(Errc::IoError, "malformed results.csv row");
    if (f[8] == "1" || f[6].empty()) continue;  // skip records
    loaded.values.push_back({f[1], f[2], f[4], std::stod(f[6])});
  }
  return loaded;
}

void write_report(const LoadedResults& loaded, const std::string& dir,
                  const std::string& format) {
  namespace fs = std::filesystem;
  if (format != "md" && format != "csv")
    fail(Errc::ConfigError, "report format must be 'md' or 'csv'");

  // Group summary rows by experiment, keeping first-appearance order.
  std::vector<std::string> experiments;
  std::map<std::string, std::vector<const SummaryRow*>> by_experiment;
  for (const SummaryRow& row : loaded.summary) {
    auto [it, inserted] = by_experiment.try_emplace(row.experiment);
    if (inserted) experiments.push_back(row.experiment);
    it->second.push_back(&row);
  }

  std::ofstream out;
  if (format == "md") {
    open_for_write(out, (fs::path(dir) / "report.md").string());
    out << "# Audit reliability report\n";
    for (const std::string& exp : experiments) {
      out << "\n## Experiment: " << exp << "\n\n";
      out << "| condition | metric | disparity | baseline 95% CI | outcome | "
             "overlap | n | skipped |\n";
      out << "|---|---|---|---|---|---|---|---|\n";
      for (const SummaryRow* row : by_experiment[exp]) {
        out << "| " << row->condition << " | " << row->metric << " | "
            << row->disparity_mode << " | ";
        if (row->baseline) {
          out << "[" << format_double(row->baseline->lower) << ", "
              << format_double(row->baseline->upper) << "]";
        } else {
          out << "-";
        }
        out << " | ";
        if (row->report) {
          out << outcome_name(row->report->outcome) << " | "
              << format_double(row->report->overlap);
        } else {
          out << "- | -";
        }
        out << " | " << row->n_values << " | " << row->n_skipped << " |\n";
      }
    }
  } else {
    open_for_write(out, (fs::path(dir) / "report.csv").string());
    out << "experiment,condition,metric,disparity_mode,baseline_lower,"
           "baseline_upper,outcome,overlap_proportion,n_values,n_skipped\n";
    for (const std::string& exp : experiments) {
      for (const SummaryRow* row : by_experiment[exp]) {
        out << exp << ',' << row->condition << ',' << row->metric << ','
            << row->disparity_mode << ',';
        if (row->baseline)
          out << format_double(row->baseline->lower) << ','
              << format_double(row->baseline->upper) << ',';
        else
          out << ",,";
        if (row->report)
          out << outcome_name(row->report->outcome) << ','
              << format_double(row->report->overlap) << ',';
        else
          out << ",,";
        out << row->n_values << ',' << row->n_skipped << "\n";
      }
    }
  }

  // Baseline interval per metric, for plot rows.
  std::map<std::string, Interval> baseline_by_metric;
  for (const SummaryRow& row : loaded.summary) {
    if (row.experiment == "baseline" && row.baseline)
      baseline_by_metric[row.metric] = *row.baseline;
  }
  std::ofstream plot;
  open_for_write(plot, (fs::path(dir) / "plot_data.csv").string());
  plot << "condition,metric,value,baseline_lower,baseline_upper\n";
  for (const auto& v : loaded.values) {
    plot << v.condition << ',' << v.metric << ',' << format_double(v.value)
         << ',';
    auto it = baseline_by_metric.find(v.metric);
    if (it != baseline_by_metric.end())
      plot << format_double(it->second.lower) << ','
           << format_double(it->second.upper);
    else
      plot << ',';
    plot << "\n";
  }
}

}  // namespace auditbench
