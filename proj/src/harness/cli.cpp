#include "hypirb/harness/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "hypirb/adversarial/trainer.hpp"
#include "hypirb/harness/checkpoint.hpp"
#include "hypirb/harness/config.hpp"
#include "hypirb/harness/experiment.hpp"
#include "hypirb/harness/report.hpp"
#include "hypirb/metrics/theory.hpp"

namespace hypirb::harness {

namespace fs = std::filesystem;
using nlohmann::json;
using ad::Tensor;

namespace {

// Usage errors detected after parsing (bad values, unknown metric names).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

adversarial::DomainConfig domain_from_spec(const std::string& spec) {
  if (spec == "gmm" || spec == "textures") {
    adversarial::DomainConfig c;
    c.kind = spec;
    return c;
  }
  return parse_domain_config(read_json_file(spec), "spec");
}

int cmd_data_gen(const std::string& spec, std::size_t n, std::uint64_t seed, const std::string& out_path,
                 std::ostream& out) {
  if (n == 0) throw UsageError("--n must be positive");
  const auto dc = domain_from_spec(spec);
  adversarial::Domain domain(dc);
  Rng rng(seed);
  auto data = degradation::sample_dataset(domain.dataset(), n, rng);
  Checkpoint c;
  c.params.add("x", data.x);
  c.params.add("y", degradation::degrade(data.x, domain.degradation(), rng));
  if (!data.richness.empty()) c.params.add("richness", Tensor::from({n}, data.richness));
  if (!data.labels.empty()) {
    std::vector<double> labels(data.labels.begin(), data.labels.end());
    c.params.add("labels", Tensor::from({n}, std::move(labels)));
  }
  c.meta = {{"spec", to_json(dc)}, {"n", n}, {"seed", seed}};
  save_checkpoint(out_path, c);
  out << out_path << '\n';
  return 0;
}

ExperimentConfig config_with_overrides(const std::string& path, const json& train_overrides,
                                       const std::optional<std::string>& out_dir) {
  json j = read_json_file(path);
  if (!j.is_object()) throw ConfigError({"(root): expected an object"});
  for (auto it = train_overrides.begin(); it != train_overrides.end(); ++it) j["train"][it.key()] = it.value();
  if (out_dir) j["out_dir"] = *out_dir;
  ExperimentConfig cfg = parse_experiment(j);
  apply_seed_override(cfg);
  return cfg;
}

void use_ema(adversarial::Trainer& t) {
  auto& s = t.state();
  for (const auto& name : s.trainable.names()) {
    auto dst = s.trainable.at(name).mutable_data();
    auto src = s.ema.shadow.at(name).data();
    std::copy(src.begin(), src.end(), dst.begin());
  }
}

adversarial::Trainer load_run(const std::string& ckpt_path, ExperimentConfig& cfg, adversarial::Domain*& domain_out,
                              std::optional<adversarial::Domain>& domain_store) {
  Checkpoint ckpt = load_checkpoint(ckpt_path);
  cfg = checkpoint_experiment(ckpt);
  domain_store.emplace(make_domain(cfg));
  domain_out = &*domain_store;
  return adversarial::Trainer::resume(ckpt, cfg.train, *domain_store, cfg.schedule.build());
}

int cmd_eval(const std::string& ckpt_path, const std::string& metric_list, bool ema, std::ostream& out) {
  const auto names = split(metric_list, ',');
  for (const auto& m : names) {
    if (m != "w2" && m != "tv" && m != "modes") throw UsageError("unknown metric '" + m + "' (w2, tv, modes)");
  }
  ExperimentConfig cfg;
  adversarial::Domain* domain = nullptr;
  std::optional<adversarial::Domain> store;
  auto trainer = load_run(ckpt_path, cfg, domain, store);
  if (ema) use_ema(trainer);
  MetricsRecord rec;
  rec.step = trainer.state().step;
  trainer.evaluate(rec);
  json j = {{"step", rec.step}};
  for (const auto& m : names) {
    if (m == "w2") j["w2_eval"] = *rec.w2_eval;
    if (m == "modes") j["mode_mass_gap"] = *rec.mode_mass_gap;
    if (m == "tv") j["tv_eval"] = rec.tv_eval ? json(*rec.tv_eval) : json(nullptr);
  }
  out << j.dump() << '\n';
  return 0;
}

int cmd_restore(const std::string& ckpt_path, const std::string& input, const std::string& out_path, double rho,
                const std::optional<double>& texture, std::uint64_t seed, std::ostream& out) {
  if (rho < 0.0) throw UsageError("--rho must be >= 0");
  ExperimentConfig cfg;
  adversarial::Domain* domain = nullptr;
  std::optional<adversarial::Domain> store;
  auto trainer = load_run(ckpt_path, cfg, domain, store);
  if (texture && !cfg.train.texture_cond) throw UsageError("--texture needs a texture-conditioned run");
  Checkpoint in = load_checkpoint(input);
  if (!in.params.contains("y")) throw UsageError("input file has no 'y' tensor");
  const Tensor y = domain->encode_observation(in.params.at("y"));
  adversarial::RestoreControls controls{rho, std::nullopt, seed};
  if (texture) controls.tau = domain->dataset().textures.standardize(*texture);
  const auto& s = trainer.state();
  Tensor x_hat = domain->decode(adversarial::restore(s.gen, s.trainable, y, controls));
  Checkpoint result;
  result.params.add("x_hat", x_hat);
  result.meta = {{"checkpoint", ckpt_path}, {"input", input}, {"rho", rho}, {"seed", seed}};
  if (texture) result.meta["texture"] = *texture;
  save_checkpoint(out_path, result);
  out << out_path << '\n';
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Desk-scale lab for diffusion-initialized adversarial restoration", "hypirb"};
  app.require_subcommand(1);

  // data gen
  auto* data = app.add_subcommand("data", "Synthetic datasets");
  data->require_subcommand(1);
  auto* gen = data->add_subcommand("gen", "Sample clean/degraded pairs to a .ckpt file");
  std::string spec, out_path;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  gen->add_option("--spec", spec, "gmm, textures, or a JSON domain file")->required();
  gen->add_option("--n", n, "Sample count")->required();
  gen->add_option("--seed", seed, "RNG seed");
  gen->add_option("--out", out_path, "Output file")->required();

  // pretrain
  auto* pre = app.add_subcommand("pretrain", "Build a pretrained asset (cached)");
  std::string kind, config_path;
  pre->add_option("kind", kind, "diffusion|mse|dae|ae|disc")
      ->required()
      ->check(CLI::IsMember({"diffusion", "mse", "dae", "ae", "disc", "preremoval"}));
  pre->add_option("--config", config_path, "Experiment config")->required()->check(CLI::ExistingFile);

  // finetune
  auto* ft = app.add_subcommand("finetune", "Adversarial fine-tuning run");
  ft->add_option("--config", config_path, "Experiment config")->required()->check(CLI::ExistingFile);
  std::optional<std::size_t> steps, stop_at;
  std::optional<std::string> init_mode, resume, out_dir;
  std::optional<std::uint64_t> train_seed;
  ft->add_option("--steps", steps, "Override train.steps");
  ft->add_option("--init-mode", init_mode, "Override train.init_mode");
  ft->add_option("--seed", train_seed, "Override train.seed (HYPIRB_SEED wins)");
  ft->add_option("--out-dir", out_dir, "Override out_dir");
  ft->add_option("--resume", resume, "Continue from a run checkpoint")->check(CLI::ExistingFile);
  ft->add_option("--stop-at", stop_at, "Pause after this step");

  // eval
  auto* ev = app.add_subcommand("eval", "Evaluate a run checkpoint on its eval split");
  std::string ckpt_path, metric_list = "w2,tv,modes";
  bool ema = false;
  ev->add_option("--checkpoint", ckpt_path)->required()->check(CLI::ExistingFile);
  ev->add_option("--metrics", metric_list, "Comma list of w2, tv, modes");
  ev->add_flag("--ema", ema, "Evaluate the EMA weights");

  // restore
  auto* rs = app.add_subcommand("restore", "Restore observations from a data file");
  std::string input;
  double rho = 0.0;
  std::optional<double> texture;
  std::uint64_t restore_seed = 0;
  rs->add_option("--checkpoint", ckpt_path)->required()->check(CLI::ExistingFile);
  rs->add_option("--input", input, "File with a 'y' tensor")->required()->check(CLI::ExistingFile);
  rs->add_option("--out", out_path, "Output file")->required();
  rs->add_option("--rho", rho, "Observation noise scale");
  rs->add_option("--texture", texture, "Target texture richness");
  rs->add_option("--seed", restore_seed, "Noise seed");

  // theory
  auto* th = app.add_subcommand("theory", "Closed-form calculators");
  th->require_subcommand(1);
  auto* ps = th->add_subcommand("predict-steps", "Iterations to reach the target gap");
  metrics::TheoryConstants tc;
  std::optional<double> eta;
  ps->add_option("--L", tc.L)->required();
  ps->add_option("--mu", tc.mu)->required();
  ps->add_option("--eta", eta, "Step size (default 1/L)");
  ps->add_option("--eps0", tc.eps0)->required();
  ps->add_option("--dtar", tc.delta_tar)->required();
  ps->add_option("--c2", tc.C2)->required();
  auto* lb = th->add_subcommand("lemma-bound", "Initial generator-gradient bound");
  lb->add_option("--lj", tc.L_J)->required();
  lb->add_option("--eps0", tc.eps0)->required();

  // report
  auto* rp = app.add_subcommand("report", "Summarize run directories into a CSV");
  std::string runs_dir;
  rp->add_option("--runs", runs_dir)->required()->check(CLI::ExistingDirectory);
  rp->add_option("--out", out_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) return cmd_data_gen(spec, n, seed, out_path, out);
    if (pre->parsed()) {
      auto cfg = load_experiment(config_path);
      ensure_asset(cfg, kind);
      out << asset_path(cfg, kind) << '\n';
      return 0;
    }
    if (ft->parsed()) {
      json overrides = json::object();
      if (steps) overrides["steps"] = *steps;
      if (init_mode) overrides["init_mode"] = *init_mode;
      if (train_seed) overrides["seed"] = *train_seed;
      auto cfg = config_with_overrides(config_path, overrides, out_dir);
      auto res = run_experiment(cfg, resume, stop_at.value_or(0));
      out << json{{"checkpoint", res.checkpoint},
                  {"step", res.step},
                  {"finished", res.finished},
                  {"stopped_early", res.stopped_early}}
                 .dump()
          << '\n';
      return 0;
    }
    if (ev->parsed()) return cmd_eval(ckpt_path, metric_list, ema, out);
    if (rs->parsed()) return cmd_restore(ckpt_path, input, out_path, rho, texture, restore_seed, out);
    if (ps->parsed()) {
      tc.eta = eta.value_or(1.0 / tc.L);
      out << metrics::predicted_steps(tc) << '\n';
      return 0;
    }
    if (lb->parsed()) {
      out << metrics::lemma_bound(tc.L_J, tc.eps0) << '\n';
      return 0;
    }
    if (rp->parsed()) {
      const Report r = build_report(runs_dir);
      std::ofstream f(out_path, std::ios::binary);
      if (!f) throw std::runtime_error("cannot write " + out_path);
      f << to_csv(r);
      for (const auto& p : r.problems) err << "report: " << p << '\n';
      out << out_path << '\n';
      return 0;
    }
  } catch (const ConfigError& e) {
    err << e.what() << '\n';
    return 2;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace hypirb::harness
