#include "hypirb/harness/report.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <sstream>

#include "hypirb/harness/config.hpp"

namespace hypirb::harness {

namespace fs = std::filesystem;

namespace {

constexpr const char* kInfinity = "\xE2\x88\x9E";  // U+221E

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n % 2) return v[n / 2];
  const double a = v[n / 2 - 1], b = v[n / 2];
  if (std::isinf(a) || std::isinf(b)) return std::max(a, b);
  return 0.5 * (a + b);
}

std::optional<double> median_of(const std::vector<std::optional<double>>& xs) {
  std::vector<double> v;
  for (const auto& x : xs) {
    if (x) v.push_back(*x);
  }
  if (v.empty()) return std::nullopt;
  return median(std::move(v));
}

std::string num(const std::optional<double>& v) {
  if (!v) return "";
  std::ostringstream os;
  os.precision(10);
  os << *v;
  return os.str();
}

}  // namespace

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

RunSummary summarize_run(const std::string& run, const std::string& init_mode, const std::string& seed,
                         const std::vector<MetricsRecord>& records, const ReportOptions& opt) {
  RunSummary s{run, init_mode, seed, std::nullopt, std::nullopt, std::nullopt, std::nullopt};
  std::vector<double> early;
  for (const auto& r : records) {
    if (r.w2_eval) {
      if (!s.steps_to_threshold && *r.w2_eval <= opt.w2_threshold) s.steps_to_threshold = static_cast<double>(r.step);
      s.final_w2 = r.w2_eval;
    }
    if (r.mode_mass_gap) s.final_mode_gap = r.mode_mass_gap;
    if (r.grad_norm_g && r.step >= 1 && r.step <= opt.early_steps) early.push_back(*r.grad_norm_g);
  }
  if (!early.empty()) s.median_early_grad_norm = median(std::move(early));
  return s;
}

Report build_report(const std::string& runs_dir, const ReportOptions& opt) {
  Report rep;
  if (!fs::is_directory(runs_dir)) {
    rep.problems.push_back(runs_dir + ": not a directory");
    return rep;
  }
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(runs_dir)) {
    if (e.is_directory()) dirs.push_back(e.path());
  }
  std::sort(dirs.begin(), dirs.end());
  for (const auto& dir : dirs) {
    const std::string name = dir.filename().string();
    const fs::path log = dir / "metrics.jsonl";
    if (!fs::exists(log)) {
      rep.problems.push_back(name + ": no metrics.jsonl");
      continue;
    }
    std::string mode = "unknown", seed;
    try {
      const auto cfg = parse_experiment(read_json_file((dir / "config.json").string()));
      mode = adversarial::to_string(cfg.train.init_mode);
      seed = std::to_string(cfg.train.seed);
    } catch (const std::exception& e) {
      rep.problems.push_back(name + ": config.json unreadable (" + e.what() + ")");
    }
    MetricsLog m = read_metrics(log.string());
    for (const auto& p : m.problems) rep.problems.push_back(name + ": " + p);
    if (m.records.empty()) {
      rep.problems.push_back(name + ": empty metrics log");
      continue;
    }
    rep.rows.push_back(summarize_run(name, mode, seed, m.records, opt));
  }

  std::map<std::string, std::vector<const RunSummary*>> by_mode;
  for (const auto& r : rep.rows) by_mode[r.init_mode].push_back(&r);
  std::vector<RunSummary> medians;
  for (const auto& [mode, rows] : by_mode) {
    std::vector<std::optional<double>> steps, grads, gaps, w2s;
    for (const auto* r : rows) {
      steps.push_back(r->steps_to_threshold ? r->steps_to_threshold
                                            : std::optional<double>(std::numeric_limits<double>::infinity()));
      grads.push_back(r->median_early_grad_norm);
      gaps.push_back(r->final_mode_gap);
      w2s.push_back(r->final_w2);
    }
    RunSummary m{"median", mode, "", median_of(steps), median_of(grads), median_of(gaps), median_of(w2s)};
    if (m.steps_to_threshold && std::isinf(*m.steps_to_threshold)) m.steps_to_threshold.reset();
    medians.push_back(m);
  }
  rep.rows.insert(rep.rows.end(), medians.begin(), medians.end());
  return rep;
}

std::string to_csv(const Report& r) {
  std::ostringstream os;
  os << "run,init_mode,seed,steps_to_w2,median_early_grad_norm,final_mode_gap,final_w2\r\n";
  for (const auto& s : r.rows) {
    os << csv_field(s.run) << ',' << csv_field(s.init_mode) << ',' << csv_field(s.seed) << ','
       << (s.steps_to_threshold ? num(s.steps_to_threshold) : std::string(kInfinity)) << ','
       << num(s.median_early_grad_norm) << ',' << num(s.final_mode_gap) << ',' << num(s.final_w2) << "\r\n";
  }
  return os.str();
}

}  // namespace hypirb::harness
