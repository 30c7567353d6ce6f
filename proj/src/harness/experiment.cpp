#include "hypirb/harness/experiment.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "hypirb/adversarial/baselines.hpp"
#include "hypirb/adversarial/trainer.hpp"
#include "hypirb/degradation/preremoval.hpp"
#include "hypirb/harness/checkpoint.hpp"
#include "hypirb/harness/metrics_log.hpp"

namespace hypirb::harness {

namespace fs = std::filesystem;
using nlohmann::json;
using ad::Tensor;

RunLock::RunLock(const std::string& dir) : path_((fs::path(dir) / ".lock").string()) {
  fs::create_directories(dir);
  const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    if (errno == EEXIST) throw LockError("output directory '" + dir + "' is in use (" + path_ + " exists)");
    throw LockError("cannot create " + path_ + ": " + std::strerror(errno));
  }
  const std::string pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] auto n = ::write(fd, pid.data(), pid.size());
  ::close(fd);
}

RunLock::~RunLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

namespace {

std::string cache_dir(const ExperimentConfig& cfg) {
  return cfg.cache_dir.empty() ? (fs::path(cfg.out_dir) / "assets").string() : cfg.cache_dir;
}

json fit_key(const adversarial::FitOptions& o) { return {o.steps, o.batch, o.lr, o.final_lr_frac}; }

double dae_nu(const ExperimentConfig& cfg) {
  if (cfg.pretrain.dae_nu >= 0.0) return cfg.pretrain.dae_nu;
  if (cfg.domain.kind == "textures") return cfg.domain.patch_eta;
  return cfg.domain.point_eta / cfg.domain.point_gain;
}

// Everything an asset depends on, as canonical JSON.
json asset_key(const ExperimentConfig& cfg, const std::string& kind) {
  const auto& p = cfg.pretrain;
  json k = {{"kind", kind}, {"domain", to_json(cfg.domain)}, {"seed", p.seed}};
  const bool textures = cfg.domain.kind == "textures";
  if (kind == "ae") {
    k["fit"] = fit_key(p.ae);
    return k;
  }
  if (textures) k["ae"] = asset_key(cfg, "ae");
  if (kind == "preremoval") {
    const auto& o = p.preremoval_opts;
    k["fit"] = {o.steps, o.batch, o.lr, degradation::to_string(o.target), o.max_recon_error, o.check_samples};
    return k;
  }
  // Anything trained on observations depends on how they are encoded.
  if (textures && p.preremoval && kind != "diffusion") k["obs"] = asset_key(cfg, "preremoval");
  if (kind == "diffusion") {
    k["fit"] = fit_key(p.diffusion);
    k["schedule"] = {cfg.schedule.T, cfg.schedule.beta_start, cfg.schedule.beta_end, cfg.schedule.kind};
    k["cond"] = cfg.train.texture_cond;
  } else if (kind == "mse" || kind == "dae") {
    k["fit"] = fit_key(p.regressor);
    k["t_star"] = injection_time(cfg);
    k["cond"] = cfg.train.texture_cond;
    if (kind == "dae") k["nu"] = dae_nu(cfg);
  } else if (kind == "disc") {
    k["fit"] = fit_key(p.disc);
  } else {
    throw std::invalid_argument("unknown asset kind '" + kind + "'");
  }
  return k;
}

std::string explicit_path(const ExperimentConfig& cfg, const std::string& kind) {
  const auto& a = cfg.assets;
  if (kind == "ae") return a.ae;
  if (kind == "preremoval") return a.preremoval;
  if (kind == "diffusion") return a.diffusion;
  if (kind == "mse") return a.mse;
  if (kind == "dae") return a.dae;
  if (kind == "disc") return a.disc;
  throw std::invalid_argument("unknown asset kind '" + kind + "'");
}

std::uint64_t kind_seed(const ExperimentConfig& cfg, const std::string& kind) {
  std::uint64_t h = 0;
  for (char c : kind) h = h * 131 + static_cast<unsigned char>(c);
  return mix_seed(cfg.pretrain.seed, h);
}

models::Model train_asset(const ExperimentConfig& cfg, const std::string& kind, json& meta) {
  const auto& p = cfg.pretrain;
  const std::uint64_t seed = kind_seed(cfg, kind);
  if (kind == "ae") {
    adversarial::Domain bare(cfg.domain);
    models::Model ae = adversarial::pretrain_domain_autoencoder(bare, p.ae, seed);
    Rng rng(mix_seed(seed, 1));
    auto x = degradation::sample_dataset(bare.dataset(), p.preremoval_opts.check_samples, rng).x;
    meta["recon_error"] = degradation::reconstruction_error(ae, x);
    return ae;
  }
  if (kind == "preremoval") {
    models::Model ae = ensure_asset(cfg, "ae");
    adversarial::Domain bare(cfg.domain);
    degradation::PairSampler pairs = [&](std::size_t n, Rng& r, Tensor& clean, Tensor& degraded) {
      auto d = degradation::sample_dataset(bare.dataset(), n, r);
      clean = d.x;
      degraded = degradation::degrade(d.x, bare.degradation(), r);
    };
    Rng rng(seed);
    return degradation::fit_preremoval_encoder(ae, pairs, p.preremoval_opts, rng);
  }
  const adversarial::Domain domain = make_domain(cfg);
  if (kind == "diffusion") {
    return adversarial::pretrain_diffusion(domain, cfg.train.texture_cond, cfg.schedule.build(), p.diffusion, seed);
  }
  if (kind == "mse" || kind == "dae") {
    const auto mode = adversarial::parse_init_mode(kind);
    const std::size_t t_star = injection_time(cfg);
    auto m = adversarial::pretrain_regressor(domain, mode, cfg.train.texture_cond, t_star, dae_nu(cfg), p.regressor,
                                             seed);
    meta["heldout_mse"] = adversarial::regressor_mse(domain, m, mode, t_star, dae_nu(cfg), 512, mix_seed(seed, 7));
    return m;
  }
  auto res = adversarial::pretrain_disc_classifier(domain, p.disc, seed);
  meta["heldout_accuracy"] = res.heldout_accuracy;
  return res.model;
}

}  // namespace

std::size_t injection_time(const ExperimentConfig& cfg) {
  return cfg.schedule.build().time_for_alpha_bar(cfg.train.inject_alpha_bar);
}

std::string cached_asset_path(const ExperimentConfig& cfg, const std::string& kind) {
  const std::string key = asset_key(cfg, kind).dump();
  return (fs::path(cache_dir(cfg)) / (kind + "-" + bytes_hash(key) + ".ckpt")).string();
}

std::string asset_path(const ExperimentConfig& cfg, const std::string& kind) {
  const std::string given = explicit_path(cfg, kind);
  return given.empty() ? cached_asset_path(cfg, kind) : given;
}

models::Model ensure_asset(const ExperimentConfig& cfg, const std::string& kind) {
  const std::string given = explicit_path(cfg, kind);
  if (!given.empty()) return load_model(given);
  const std::string path = cached_asset_path(cfg, kind);
  if (fs::exists(path)) return load_model(path);
  json meta = {{"key", asset_key(cfg, kind)}};
  models::Model m = train_asset(cfg, kind, meta);
  fs::create_directories(fs::path(path).parent_path());
  save_model(path, m, meta);
  return m;
}

adversarial::Domain make_domain(const ExperimentConfig& cfg) {
  adversarial::Domain d(cfg.domain);
  if (d.latent()) {
    std::optional<models::Model> obs;
    if (cfg.pretrain.preremoval) obs = ensure_asset(cfg, "preremoval");
    d.attach_autoencoder(ensure_asset(cfg, "ae"), obs);
  }
  return d;
}

Prepared prepare(const ExperimentConfig& cfg) {
  Prepared p{make_domain(cfg), cfg.schedule.build(), {}, std::nullopt};
  switch (cfg.train.init_mode) {
    case adversarial::InitMode::kDiffusion: p.assets.diffusion = ensure_asset(cfg, "diffusion"); break;
    case adversarial::InitMode::kMse: p.assets.mse = ensure_asset(cfg, "mse"); break;
    case adversarial::InitMode::kDae: p.assets.dae = ensure_asset(cfg, "dae"); break;
    case adversarial::InitMode::kScratch: break;
  }
  if (cfg.train.disc_init == "pretrained") p.disc = ensure_asset(cfg, "disc");
  return p;
}

ExperimentConfig checkpoint_experiment(const Checkpoint& ckpt) {
  if (!ckpt.meta.contains("experiment")) throw CheckpointError("checkpoint carries no experiment config");
  return parse_experiment(ckpt.meta.at("experiment"));
}

RunResult run_experiment(const ExperimentConfig& cfg, const std::optional<std::string>& resume_from,
                         std::size_t stop_at) {
  RunLock lock(cfg.out_dir);
  const fs::path out(cfg.out_dir);
  {
    std::ofstream f(out / "config.json");
    f << to_json(cfg).dump(2) << '\n';
  }
  Prepared prep = prepare(cfg);
  std::optional<adversarial::Trainer> trainer;
  if (resume_from) {
    trainer.emplace(adversarial::Trainer::resume(load_checkpoint(*resume_from), cfg.train, prep.domain, prep.sched));
  } else {
    trainer.emplace(cfg.train, prep.domain, prep.sched, prep.assets, prep.disc);
  }

  auto save = [&](const std::string& name) {
    Checkpoint c = trainer->checkpoint();
    c.meta["experiment"] = to_json(cfg);
    const std::string path = (out / name).string();
    save_checkpoint(path, c);
    return path;
  };

  MetricsWriter writer((out / "metrics.jsonl").string(), resume_from.has_value());
  trainer->run(
      [&](const MetricsRecord& r) {
        writer.write(r);
        if (cfg.checkpoint_every && r.step > 0 && r.step % cfg.checkpoint_every == 0) {
          save("step-" + std::to_string(r.step) + ".ckpt");
        }
      },
      stop_at);

  RunResult res;
  res.step = trainer->state().step;
  res.stopped_early = trainer->stopped_early();
  res.finished = res.stopped_early || res.step >= cfg.train.steps;
  res.checkpoint = save("last.ckpt");
  if (res.finished) res.checkpoint = save("final.ckpt");
  return res;
}

}  // namespace hypirb::harness
