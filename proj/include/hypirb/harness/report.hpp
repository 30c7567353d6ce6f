#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hypirb/harness/metrics_log.hpp"

namespace hypirb::harness {

/// Summary of one run directory (or a median row over runs of one init mode).
struct RunSummary {
  std::string run;        // directory name, or "median"
  std::string init_mode;
  std::string seed;       // empty on median rows
  std::optional<double> steps_to_threshold;  // empty: never reached
  std::optional<double> median_early_grad_norm;
  std::optional<double> final_mode_gap;
  std::optional<double> final_w2;
};

struct Report {
  std::vector<RunSummary> rows;      // runs sorted by name, then one median row per init mode
  std::vector<std::string> problems; // missing or partial logs
};

struct ReportOptions {
  double w2_threshold = 0.1;
  /// Grad-norm window: steps 1..early_steps.
  std::size_t early_steps = 50;
};

/// Summarizes a run from its records (records in file order).
RunSummary summarize_run(const std::string& run, const std::string& init_mode, const std::string& seed,
                         const std::vector<MetricsRecord>& records, const ReportOptions& opt = {});

/// Scans every subdirectory of `runs_dir` holding metrics.jsonl.
Report build_report(const std::string& runs_dir, const ReportOptions& opt = {});

/// RFC-4180 CSV; a never-reached threshold prints as "∞".
std::string to_csv(const Report& r);
std::string csv_field(const std::string& s);

}  // namespace hypirb::harness
