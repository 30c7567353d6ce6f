#include "hypirb/harness/metrics_log.hpp"

#include <stdexcept>

namespace hypirb::harness {

namespace {

template <typename F>
void each_field(F&& f, MetricsRecord& r) {
  f("loss_d", r.loss_d);
  f("loss_g_adv", r.loss_g_adv);
  f("loss_g_mse", r.loss_g_mse);
  f("loss_g_perc", r.loss_g_perc);
  f("d_logit_real_mean", r.d_logit_real_mean);
  f("d_logit_fake_mean", r.d_logit_fake_mean);
  f("grad_norm_g", r.grad_norm_g);
  f("grad_norm_d", r.grad_norm_d);
  f("w2_eval", r.w2_eval);
  f("mode_mass_gap", r.mode_mass_gap);
  f("tv_eval", r.tv_eval);
  f("wall_ms", r.wall_ms);
  f("loss_g", r.loss_g);
}

nlohmann::ordered_json ordered(const MetricsRecord& rec) {
  nlohmann::ordered_json j;
  j["step"] = rec.step;
  MetricsRecord copy = rec;
  each_field(
      [&](const char* key, std::optional<double>& v) {
        if (v) {
          j[key] = *v;
        } else {
          j[key] = nullptr;
        }
      },
      copy);
  return j;
}

}  // namespace

nlohmann::json to_json(const MetricsRecord& rec) { return nlohmann::json::parse(ordered(rec).dump()); }

std::string to_line(const MetricsRecord& rec) { return ordered(rec).dump(); }

MetricsRecord record_from_json(const nlohmann::json& j) {
  MetricsRecord r;
  r.step = j.at("step").get<std::size_t>();
  each_field(
      [&](const char* key, std::optional<double>& v) {
        if (j.contains(key) && !j.at(key).is_null()) v = j.at(key).get<double>();
      },
      r);
  return r;
}

MetricsWriter::MetricsWriter(const std::string& path, bool append)
    : out_(path, append ? std::ios::app : std::ios::trunc) {
  if (!out_) throw std::runtime_error("cannot open metrics file '" + path + "'");
}

void MetricsWriter::write(const MetricsRecord& r) {
  out_ << to_line(r) << '\n';
  out_.flush();
}

MetricsLog read_metrics(const std::string& path) {
  MetricsLog log;
  std::ifstream in(path);
  if (!in) {
    log.problems.push_back(path + ": cannot open");
    return log;
  }
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      log.records.push_back(record_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      log.problems.push_back(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return log;
}

}  // namespace hypirb::harness
