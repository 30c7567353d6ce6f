#include "hypirb/harness/config.hpp"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace hypirb::harness {

using nlohmann::json;

ConfigError::ConfigError(std::vector<std::string> diagnostics)
    : std::invalid_argument([&] {
        std::string msg = "invalid configuration";
        for (const auto& d : diagnostics) msg += "\n  " + d;
        return msg;
      }()),
      diagnostics_(std::move(diagnostics)) {}

diffusion::NoiseSchedule ScheduleConfig::build() const {
  return diffusion::make_schedule(T, beta_start, beta_end, kind);
}

namespace {

// Collects diagnostics while walking one JSON object.
class Reader {
 public:
  explicit Reader(std::vector<std::string>& errors) : errors_(errors) {}

  /// Returns false (after logging) unless `j` is an object; then rejects keys
  /// outside `allowed`.
  bool object(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) {
      fail(path, "expected an object");
      return false;
    }
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!ok.count(it.key())) fail(join(path, it.key()), "unknown key");
    }
    return true;
  }

  void size(const json& j, const std::string& path, const char* key, std::size_t& out, std::size_t min = 0) {
    const json* v = find(j, key);
    if (!v) return;
    if (!v->is_number_integer() || (v->is_number_integer() && !v->is_number_unsigned() && v->get<long long>() < 0)) {
      fail(join(path, key), "expected a non-negative integer");
      return;
    }
    const auto x = v->get<std::uint64_t>();
    if (x < min) {
      fail(join(path, key), "must be >= " + std::to_string(min));
      return;
    }
    out = static_cast<std::size_t>(x);
  }

  void u64(const json& j, const std::string& path, const char* key, std::uint64_t& out) {
    std::size_t tmp = out;
    size(j, path, key, tmp);
    out = tmp;
  }

  /// Accepts values in [lo, hi]; open ends when the flags are set.
  void real(const json& j, const std::string& path, const char* key, double& out, double lo, double hi,
            bool lo_open = false, bool hi_open = false) {
    const json* v = find(j, key);
    if (!v) return;
    if (!v->is_number()) {
      fail(join(path, key), "expected a number");
      return;
    }
    const double x = v->get<double>();
    const bool below = lo_open ? !(x > lo) : !(x >= lo);
    const bool above = hi_open ? !(x < hi) : !(x <= hi);
    if (below || above) {
      std::ostringstream os;
      os << "must lie in " << (lo_open ? '(' : '[') << lo << ", " << hi << (hi_open ? ')' : ']');
      fail(join(path, key), os.str());
      return;
    }
    out = x;
  }

  void boolean(const json& j, const std::string& path, const char* key, bool& out) {
    const json* v = find(j, key);
    if (!v) return;
    if (!v->is_boolean()) {
      fail(join(path, key), "expected true or false");
      return;
    }
    out = v->get<bool>();
  }

  void text(const json& j, const std::string& path, const char* key, std::string& out,
            std::initializer_list<const char*> choices = {}) {
    const json* v = find(j, key);
    if (!v) return;
    if (!v->is_string()) {
      fail(join(path, key), "expected a string");
      return;
    }
    const auto s = v->get<std::string>();
    if (choices.size()) {
      bool hit = false;
      std::string list;
      for (const char* c : choices) {
        hit = hit || s == c;
        list += list.empty() ? c : std::string("|") + c;
      }
      if (!hit) {
        fail(join(path, key), "'" + s + "' is not one of " + list);
        return;
      }
    }
    out = s;
  }

  /// Runs `fn` on a nested object if present.
  void section(const json& j, const std::string& path, const char* key,
               const std::function<void(const json&, const std::string&)>& fn) {
    if (const json* v = find(j, key)) fn(*v, join(path, key));
  }

  void fail(const std::string& path, const std::string& msg) { errors_.push_back(path + ": " + msg); }

 private:
  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }
  static const json* find(const json& j, const char* key) {
    if (!j.is_object()) return nullptr;
    auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
  }

  std::vector<std::string>& errors_;
};

constexpr double kInf = std::numeric_limits<double>::infinity();

void read_train(Reader& r, const json& j, const std::string& path, adversarial::TrainConfig& c) {
  if (!r.object(j, path, {"init_mode", "disc_init", "lora_rank", "lora_alpha", "weights", "lr_g", "lr_d", "batch",
                          "steps", "inject_noise", "texture_cond", "seed", "eval_every", "eval_n", "eval_seed",
                          "inject_alpha_bar", "ema_decay", "early_stop_w2", "log_wall_time"})) {
    return;
  }
  std::string mode = adversarial::to_string(c.init_mode);
  r.text(j, path, "init_mode", mode, {"diffusion", "mse", "dae", "scratch"});
  c.init_mode = adversarial::parse_init_mode(mode);
  r.text(j, path, "disc_init", c.disc_init, {"scratch", "pretrained"});
  r.size(j, path, "lora_rank", c.lora_rank);
  r.real(j, path, "lora_alpha", c.lora_alpha, 0.0, kInf, true, true);
  r.section(j, path, "weights", [&](const json& w, const std::string& p) {
    if (!r.object(w, p, {"adv", "perc", "mse"})) return;
    r.real(w, p, "adv", c.weights.adv, 0.0, kInf, false, true);
    r.real(w, p, "perc", c.weights.perc, 0.0, kInf, false, true);
    r.real(w, p, "mse", c.weights.mse, 0.0, kInf, false, true);
  });
  r.real(j, path, "lr_g", c.lr_g, 0.0, 1.0, true);
  r.real(j, path, "lr_d", c.lr_d, 0.0, 1.0, true);
  r.size(j, path, "batch", c.batch, 1);
  r.size(j, path, "steps", c.steps);
  r.real(j, path, "inject_noise", c.inject_noise, 0.0, kInf, false, true);
  r.boolean(j, path, "texture_cond", c.texture_cond);
  r.u64(j, path, "seed", c.seed);
  r.size(j, path, "eval_every", c.eval_every);
  r.size(j, path, "eval_n", c.eval_n, 2);
  r.u64(j, path, "eval_seed", c.eval_seed);
  r.real(j, path, "inject_alpha_bar", c.inject_alpha_bar, 0.0, 1.0, true, true);
  r.real(j, path, "ema_decay", c.ema_decay, 0.0, 1.0, false, true);
  r.real(j, path, "early_stop_w2", c.early_stop_w2, 0.0, kInf, false, true);
  r.boolean(j, path, "log_wall_time", c.log_wall_time);
}

void read_domain(Reader& r, const json& j, const std::string& path, adversarial::DomainConfig& c) {
  if (!r.object(j, path, {"kind", "modes", "radius", "component_std", "point_gain", "point_eta", "patch",
                          "richness_lo", "richness_hi", "blur", "blur_sigma", "blur_size", "patch_eta",
                          "score_hidden", "score_depth", "disc_hidden", "disc_depth", "ae_hidden", "time_steps"})) {
    return;
  }
  r.text(j, path, "kind", c.kind, {"gmm", "textures"});
  if (c.kind == "textures") c.use_texture_widths();  // explicit widths below still win
  r.size(j, path, "modes", c.modes, 1);
  r.real(j, path, "radius", c.radius, 0.0, kInf, true, true);
  r.real(j, path, "component_std", c.component_std, 0.0, kInf, true, true);
  r.real(j, path, "point_gain", c.point_gain, 0.0, kInf, true, true);
  r.real(j, path, "point_eta", c.point_eta, 0.0, kInf, false, true);
  r.size(j, path, "patch", c.patch, 3);
  r.real(j, path, "richness_lo", c.richness_lo, 0.0, kInf, true, true);
  r.real(j, path, "richness_hi", c.richness_hi, 0.0, kInf, true, true);
  if (c.richness_hi <= c.richness_lo) r.fail(path + ".richness_hi", "must exceed richness_lo");
  r.text(j, path, "blur", c.blur, {"gaussian", "box", "identity"});
  r.real(j, path, "blur_sigma", c.blur_sigma, 0.0, kInf, true, true);
  r.size(j, path, "blur_size", c.blur_size, 1);
  if (c.blur_size % 2 == 0) r.fail(path + ".blur_size", "must be odd");
  r.real(j, path, "patch_eta", c.patch_eta, 0.0, kInf, false, true);
  r.size(j, path, "score_hidden", c.score_hidden, 1);
  r.size(j, path, "score_depth", c.score_depth, 1);
  r.size(j, path, "disc_hidden", c.disc_hidden, 1);
  r.size(j, path, "disc_depth", c.disc_depth, 1);
  r.size(j, path, "ae_hidden", c.ae_hidden, 1);
  r.size(j, path, "time_steps", c.time_steps, 1);
}

void read_fit(Reader& r, const json& j, const std::string& path, adversarial::FitOptions& o) {
  if (!r.object(j, path, {"steps", "batch", "lr", "final_lr_frac"})) return;
  r.size(j, path, "steps", o.steps);
  r.size(j, path, "batch", o.batch, 1);
  r.real(j, path, "lr", o.lr, 0.0, 1.0, true);
  r.real(j, path, "final_lr_frac", o.final_lr_frac, 0.0, 1.0);
}

json fit_json(const adversarial::FitOptions& o) {
  return {{"steps", o.steps}, {"batch", o.batch}, {"lr", o.lr}, {"final_lr_frac", o.final_lr_frac}};
}

}  // namespace

json to_json(const adversarial::TrainConfig& c) {
  return {{"init_mode", adversarial::to_string(c.init_mode)},
          {"disc_init", c.disc_init},
          {"lora_rank", c.lora_rank},
          {"lora_alpha", c.lora_alpha},
          {"weights", {{"adv", c.weights.adv}, {"perc", c.weights.perc}, {"mse", c.weights.mse}}},
          {"lr_g", c.lr_g},
          {"lr_d", c.lr_d},
          {"batch", c.batch},
          {"steps", c.steps},
          {"inject_noise", c.inject_noise},
          {"texture_cond", c.texture_cond},
          {"seed", c.seed},
          {"eval_every", c.eval_every},
          {"eval_n", c.eval_n},
          {"eval_seed", c.eval_seed},
          {"inject_alpha_bar", c.inject_alpha_bar},
          {"ema_decay", c.ema_decay},
          {"early_stop_w2", c.early_stop_w2},
          {"log_wall_time", c.log_wall_time}};
}

json to_json(const adversarial::DomainConfig& c) {
  return {{"kind", c.kind},
          {"modes", c.modes},
          {"radius", c.radius},
          {"component_std", c.component_std},
          {"point_gain", c.point_gain},
          {"point_eta", c.point_eta},
          {"patch", c.patch},
          {"richness_lo", c.richness_lo},
          {"richness_hi", c.richness_hi},
          {"blur", c.blur},
          {"blur_sigma", c.blur_sigma},
          {"blur_size", c.blur_size},
          {"patch_eta", c.patch_eta},
          {"score_hidden", c.score_hidden},
          {"score_depth", c.score_depth},
          {"disc_hidden", c.disc_hidden},
          {"disc_depth", c.disc_depth},
          {"ae_hidden", c.ae_hidden},
          {"time_steps", c.time_steps}};
}

json to_json(const ExperimentConfig& c) {
  const auto& p = c.pretrain;
  const auto& pr = p.preremoval_opts;
  return {
      {"name", c.name},
      {"out_dir", c.out_dir},
      {"cache_dir", c.cache_dir},
      {"checkpoint_every", c.checkpoint_every},
      {"domain", to_json(c.domain)},
      {"schedule",
       {{"T", c.schedule.T},
        {"beta_start", c.schedule.beta_start},
        {"beta_end", c.schedule.beta_end},
        {"kind", c.schedule.kind}}},
      {"train", to_json(c.train)},
      {"pretrain",
       {{"seed", p.seed},
        {"diffusion", fit_json(p.diffusion)},
        {"regressor", fit_json(p.regressor)},
        {"dae_nu", p.dae_nu},
        {"disc", fit_json(p.disc)},
        {"ae", fit_json(p.ae)},
        {"preremoval", p.preremoval},
        {"preremoval_fit",
         {{"steps", pr.steps},
          {"batch", pr.batch},
          {"lr", pr.lr},
          {"target", degradation::to_string(pr.target)},
          {"max_recon_error", pr.max_recon_error},
          {"check_samples", pr.check_samples}}}}},
      {"assets",
       {{"diffusion", c.assets.diffusion},
        {"mse", c.assets.mse},
        {"dae", c.assets.dae},
        {"disc", c.assets.disc},
        {"ae", c.assets.ae},
        {"preremoval", c.assets.preremoval}}}};
}

adversarial::TrainConfig parse_train_config(const json& j, const std::string& path) {
  std::vector<std::string> errors;
  Reader r(errors);
  adversarial::TrainConfig c;
  read_train(r, j, path, c);
  if (!errors.empty()) throw ConfigError(errors);
  return c;
}

adversarial::DomainConfig parse_domain_config(const json& j, const std::string& path) {
  std::vector<std::string> errors;
  Reader r(errors);
  adversarial::DomainConfig c;
  read_domain(r, j, path, c);
  if (!errors.empty()) throw ConfigError(errors);
  return c;
}

ExperimentConfig parse_experiment(const json& j) {
  std::vector<std::string> errors;
  Reader r(errors);
  ExperimentConfig c;
  if (!r.object(j, "", {"name", "out_dir", "cache_dir", "checkpoint_every", "domain", "schedule", "train",
                        "pretrain", "assets"})) {
    throw ConfigError(errors);
  }
  r.text(j, "", "name", c.name);
  r.text(j, "", "out_dir", c.out_dir);
  if (c.out_dir.empty()) r.fail("out_dir", "must not be empty");
  r.text(j, "", "cache_dir", c.cache_dir);
  r.size(j, "", "checkpoint_every", c.checkpoint_every);
  r.section(j, "", "domain", [&](const json& s, const std::string& p) { read_domain(r, s, p, c.domain); });
  r.section(j, "", "schedule", [&](const json& s, const std::string& p) {
    if (!r.object(s, p, {"T", "beta_start", "beta_end", "kind"})) return;
    r.size(s, p, "T", c.schedule.T, 1);
    r.real(s, p, "beta_start", c.schedule.beta_start, 0.0, 1.0, true, true);
    r.real(s, p, "beta_end", c.schedule.beta_end, 0.0, 1.0, true, true);
    r.text(s, p, "kind", c.schedule.kind, {"linear"});
  });
  if (c.schedule.beta_end < c.schedule.beta_start) r.fail("schedule.beta_end", "must be >= beta_start");
  if (c.schedule.T != c.domain.time_steps) r.fail("schedule.T", "must equal domain.time_steps");
  r.section(j, "", "train", [&](const json& s, const std::string& p) { read_train(r, s, p, c.train); });
  r.section(j, "", "pretrain", [&](const json& s, const std::string& p) {
    if (!r.object(s, p, {"seed", "diffusion", "regressor", "dae_nu", "disc", "ae", "preremoval", "preremoval_fit"})) {
      return;
    }
    auto& pt = c.pretrain;
    r.u64(s, p, "seed", pt.seed);
    r.section(s, p, "diffusion", [&](const json& f, const std::string& fp) { read_fit(r, f, fp, pt.diffusion); });
    r.section(s, p, "regressor", [&](const json& f, const std::string& fp) { read_fit(r, f, fp, pt.regressor); });
    r.section(s, p, "disc", [&](const json& f, const std::string& fp) { read_fit(r, f, fp, pt.disc); });
    r.section(s, p, "ae", [&](const json& f, const std::string& fp) { read_fit(r, f, fp, pt.ae); });
    r.real(s, p, "dae_nu", pt.dae_nu, -1.0, kInf, false, true);
    r.boolean(s, p, "preremoval", pt.preremoval);
    r.section(s, p, "preremoval_fit", [&](const json& f, const std::string& fp) {
      auto& o = pt.preremoval_opts;
      if (!r.object(f, fp, {"steps", "batch", "lr", "target", "max_recon_error", "check_samples"})) return;
      r.size(f, fp, "steps", o.steps);
      r.size(f, fp, "batch", o.batch, 1);
      r.real(f, fp, "lr", o.lr, 0.0, 1.0, true);
      std::string target = degradation::to_string(o.target);
      r.text(f, fp, "target", target, {"shared", "anchored"});
      o.target = degradation::parse_preremoval_target(target);
      r.real(f, fp, "max_recon_error", o.max_recon_error, 0.0, kInf, true, true);
      r.size(f, fp, "check_samples", o.check_samples, 1);
    });
  });
  r.section(j, "", "assets", [&](const json& s, const std::string& p) {
    if (!r.object(s, p, {"diffusion", "mse", "dae", "disc", "ae", "preremoval"})) return;
    r.text(s, p, "diffusion", c.assets.diffusion);
    r.text(s, p, "mse", c.assets.mse);
    r.text(s, p, "dae", c.assets.dae);
    r.text(s, p, "disc", c.assets.disc);
    r.text(s, p, "ae", c.assets.ae);
    r.text(s, p, "preremoval", c.assets.preremoval);
  });
  if (c.train.texture_cond && c.domain.kind != "textures") {
    r.fail("train.texture_cond", "only available on the textures domain");
  }
  if (c.pretrain.preremoval && c.domain.kind != "textures") {
    r.fail("pretrain.preremoval", "only available on the textures domain");
  }
  if (!errors.empty()) throw ConfigError(errors);
  return c;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError({path + ": malformed JSON (" + std::string(e.what()) + ")"});
  }
}

ExperimentConfig load_experiment(const std::string& path) {
  ExperimentConfig c = parse_experiment(read_json_file(path));
  apply_seed_override(c);
  return c;
}

void apply_seed_override(ExperimentConfig& c) {
  if (const char* env = std::getenv("HYPIRB_SEED")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (!*env || *end || env[0] == '-') throw ConfigError({"HYPIRB_SEED: expected a non-negative integer"});
    c.train.seed = v;
  }
}

}  // namespace hypirb::harness
