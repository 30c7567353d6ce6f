#pragma once

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace hypirb::harness {

/// One line of training telemetry. Absent values serialize as null.
struct MetricsRecord {
  std::size_t step = 0;
  std::optional<double> loss_d;
  std::optional<double> loss_g_adv;
  std::optional<double> loss_g_mse;
  std::optional<double> loss_g_perc;
  std::optional<double> d_logit_real_mean;
  std::optional<double> d_logit_fake_mean;
  std::optional<double> grad_norm_g;
  std::optional<double> grad_norm_d;
  std::optional<double> w2_eval;
  std::optional<double> mode_mass_gap;
  std::optional<double> tv_eval;
  std::optional<double> wall_ms;
  std::optional<double> loss_g;
};

nlohmann::json to_json(const MetricsRecord& r);
MetricsRecord record_from_json(const nlohmann::json& j);
/// Compact single-line JSON.
std::string to_line(const MetricsRecord& r);

/// Appends records to a .jsonl file, flushing after each line.
class MetricsWriter {
 public:
  MetricsWriter(const std::string& path, bool append);
  void write(const MetricsRecord& r);

 private:
  std::ofstream out_;
};

struct MetricsLog {
  std::vector<MetricsRecord> records;
  std::vector<std::string> problems;  // unparsable lines, reported not thrown
};

MetricsLog read_metrics(const std::string& path);

}  // namespace hypirb::harness
