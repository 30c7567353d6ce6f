#include "hypirb/adversarial/trainer.hpp"

#include <cmath>

#include "hypirb/autodiff/ops.hpp"
#include "hypirb/harness/config.hpp"
#include "hypirb/metrics/jacobian.hpp"
#include "hypirb/metrics/transport.hpp"
#include "hypirb/models/networks.hpp"

namespace hypirb::adversarial {

namespace {

using harness::MetricsRecord;

double mean_of(const Tensor& t) {
  double s = 0.0;
  for (double v : t.data()) s += v;
  return s / static_cast<double>(t.numel());
}

Tensor add_noise(const Tensor& y, double rho, Rng& rng) {
  auto v = y.data();
  std::vector<double> out(v.begin(), v.end());
  for (auto& e : out) e += rho * rng.normal();
  return Tensor::from(y.shape(), std::move(out));
}

void require_finite(const char* what, double v, std::size_t step) {
  if (!std::isfinite(v)) {
    throw DivergenceError(std::string("training diverged at step ") + std::to_string(step) + ": " + what +
                          " is non-finite");
  }
}

GeneratorOptions generator_options(const TrainConfig& cfg, const Domain& domain,
                                   const diffusion::NoiseSchedule& sched) {
  GeneratorOptions o;
  o.mode = cfg.init_mode;
  o.t_star = sched.time_for_alpha_bar(cfg.inject_alpha_bar);
  o.lift = domain.lift();
  o.lora_rank = cfg.lora_rank;
  o.lora_alpha = cfg.lora_alpha;
  o.texture_cond = cfg.texture_cond;
  return o;
}

}  // namespace

Trainer::Trainer(const TrainConfig& cfg, const Domain& domain) : cfg_(cfg), domain_(domain) {
  if (cfg_.batch < 1) throw std::invalid_argument("batch must be >= 1");
  if (cfg_.inject_noise < 0.0) throw std::invalid_argument("inject_noise must be >= 0");
  if (cfg_.disc_init != "scratch" && cfg_.disc_init != "pretrained") {
    throw std::invalid_argument("disc_init must be scratch or pretrained");
  }
  start_ = std::chrono::steady_clock::now();
}

Trainer::Trainer(const TrainConfig& cfg, const Domain& domain, const diffusion::NoiseSchedule& sched,
                 const GeneratorAssets& assets, const std::optional<models::Model>& disc_pretrained)
    : Trainer(cfg, domain) {
  Rng init(mix_seed(cfg.seed, 1));
  const auto arch = domain_.score_arch(cfg.texture_cond);
  state_.gen = init_generator(generator_options(cfg, domain_, sched), arch, assets, sched, init);
  state_.trainable = state_.gen.trainable();

  state_.disc = models::init_model(domain_.disc_arch(), init);
  if (cfg.disc_init == "pretrained") {
    if (!disc_pretrained) throw std::invalid_argument("disc_init=pretrained needs a discriminator checkpoint");
    if (disc_pretrained->arch != state_.disc.arch) {
      throw std::invalid_argument("pretrained discriminator has a different architecture descriptor");
    }
    for (const auto& name : disc_pretrained->params.names()) {
      if (name.rfind("head.", 0) != 0) state_.disc.params.set(name, disc_pretrained->params.at(name).clone(false));
    }
  }
  state_.ema = models::make_ema(state_.trainable, cfg.ema_decay);
  state_.opt_g = models::Adam(state_.trainable, cfg.lr_g);
  state_.opt_d = models::Adam(state_.disc.params, cfg.lr_d);
  state_.rng = Rng(mix_seed(cfg.seed, 2));
  prepare_eval();
}

void Trainer::prepare_eval() {
  eval_ = domain_.eval_split(cfg_.eval_n, cfg_.eval_seed);
  partition_ = domain_.partition(eval_.x);
}

Tensor Trainer::eval_outputs() const {
  ad::NoGradGuard guard;
  return state_.gen.forward(state_.trainable, eval_.y, eval_.cond.defined() ? &eval_.cond : nullptr);
}

void Trainer::evaluate(MetricsRecord& rec) const {
  const Tensor out = eval_outputs();
  rec.w2_eval = metrics::w2_exact(out, eval_.x);
  rec.mode_mass_gap = metrics::mode_mass_gap(out, eval_.x, *partition_);
  if (!domain_.latent()) rec.tv_eval = metrics::tv_hist(out, eval_.x, metrics::support_grid(out, eval_.x));
}

MetricsRecord Trainer::train_step() {
  RunState& s = state_;
  const std::size_t step = s.step + 1;
  Domain::Batch b = domain_.sample(cfg_.batch, s.rng);
  Tensor y = b.y;
  if (cfg_.inject_noise > 0.0) y = add_noise(y, s.rng.uniform(0.0, cfg_.inject_noise), s.rng);
  const Tensor* cond = b.cond.defined() ? &b.cond : nullptr;
  MetricsRecord rec;
  rec.step = step;

  try {
    // Discriminator update on a detached generator sample.
    Tensor fake;
    {
      ad::NoGradGuard guard;
      fake = s.gen.forward(s.trainable, y, cond);
    }
    s.disc.params.set_requires_grad(true);
    auto d_real = models::discriminator_forward(s.disc.arch, s.disc.params, b.x);
    auto d_fake = models::discriminator_forward(s.disc.arch, s.disc.params, fake);
    Tensor loss_d = discriminator_loss(d_real.logit, d_fake.logit);
    require_finite("loss_d", loss_d.item(), step);
    ad::backward(loss_d);
    rec.loss_d = loss_d.item();
    rec.d_logit_real_mean = mean_of(d_real.logit);
    rec.d_logit_fake_mean = mean_of(d_fake.logit);
    rec.grad_norm_d = metrics::grad_norm(s.disc.params);
    s.opt_d.step(s.disc.params);
    s.disc.params.set_requires_grad(false);

    // Generator update through the frozen discriminator.
    s.trainable.set_requires_grad(true);
    Tensor out = s.gen.forward(s.trainable, y, cond);
    auto g_fake = models::discriminator_forward(s.disc.arch, s.disc.params, out);
    models::DiscOutput g_real;
    {
      ad::NoGradGuard guard;
      g_real = models::discriminator_forward(s.disc.arch, s.disc.params, b.x);
    }
    GanLosses L = gan_losses(g_real.logit, g_fake.logit, g_real.features, g_fake.features, out, b.x, cfg_.weights);
    require_finite("loss_g", L.loss_g.item(), step);
    rec.loss_g_adv = L.adv.item();
    rec.loss_g_perc = L.perc.item();
    rec.loss_g_mse = L.mse.item();
    rec.loss_g = L.loss_g.item();
    if (L.loss_g.requires_grad() && s.trainable.size() > 0) {
      ad::backward(L.loss_g);
      for (const auto& name : s.trainable.names()) s.trainable.at(name).mutable_grad();
      rec.grad_norm_g = metrics::grad_norm(s.trainable);
      require_finite("grad_norm_g", *rec.grad_norm_g, step);
      s.opt_g.step(s.trainable);
    } else {
      rec.grad_norm_g = 0.0;
    }
    s.trainable.set_requires_grad(false);
  } catch (const ad::DomainError& e) {
    throw DivergenceError("training diverged at step " + std::to_string(step) + ": " + e.what());
  }
  models::ema_update(s.ema, s.trainable);
  s.step = step;
  return rec;
}

void Trainer::run(const Sink& sink, std::size_t stop_at) {
  auto stamp = [&](MetricsRecord& r) {
    if (cfg_.log_wall_time) {
      r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
    }
  };
  if (state_.step == 0) {
    MetricsRecord r0;
    evaluate(r0);
    stamp(r0);
    if (sink) sink(r0);
    if (cfg_.early_stop_w2 > 0.0 && *r0.w2_eval <= cfg_.early_stop_w2) {
      stopped_early_ = true;
      return;
    }
  }
  while (state_.step < cfg_.steps) {
    if (stop_at && state_.step >= stop_at) return;
    MetricsRecord r = train_step();
    const bool eval_now = (cfg_.eval_every && r.step % cfg_.eval_every == 0) || r.step == cfg_.steps;
    if (eval_now) evaluate(r);
    stamp(r);
    if (sink) sink(r);
    if (eval_now && cfg_.early_stop_w2 > 0.0 && *r.w2_eval <= cfg_.early_stop_w2) {
      stopped_early_ = true;
      return;
    }
  }
}

harness::Checkpoint Trainer::checkpoint() const {
  const RunState& s = state_;
  harness::Checkpoint c;
  c.archs["generator"] = s.gen.arch;
  c.archs["discriminator"] = s.disc.arch;
  c.step = s.step;
  c.rng_state = s.rng.state();
  harness::add_prefixed(c.params, "gen.", s.gen.base);
  harness::add_prefixed(c.params, "train.", s.trainable);
  harness::add_prefixed(c.params, "disc.", s.disc.params);
  harness::add_prefixed(c.params, "ema.", s.ema.shadow);
  harness::add_prefixed(c.params, "adam_g.m.", s.opt_g.m);
  harness::add_prefixed(c.params, "adam_g.v.", s.opt_g.v);
  harness::add_prefixed(c.params, "adam_d.m.", s.opt_d.m);
  harness::add_prefixed(c.params, "adam_d.v.", s.opt_d.v);
  c.meta["train"] = harness::to_json(cfg_);
  c.meta["adam_g_t"] = s.opt_g.t;
  c.meta["adam_d_t"] = s.opt_d.t;
  c.meta["t_star"] = s.gen.opt.t_star;
  c.meta["lift"] = s.gen.opt.lift;
  c.meta["lora_alpha"] = s.gen.lora.alpha;
  nlohmann::json targets = nlohmann::json::array();
  for (const auto& f : s.gen.lora.factors) targets.push_back(f.target);
  c.meta["lora_targets"] = targets;
  c.meta["schedule_betas"] = s.gen.sched.beta;
  return c;
}

Trainer Trainer::resume(const harness::Checkpoint& ckpt, const TrainConfig& cfg, const Domain& domain,
                        const diffusion::NoiseSchedule& sched) {
  Trainer t(cfg, domain);
  RunState& s = t.state_;
  s.gen.arch = ckpt.archs.at("generator").get<models::ArchSpec>();
  s.gen.opt = generator_options(cfg, domain, sched);
  if (ckpt.meta.at("t_star").get<std::size_t>() != s.gen.opt.t_star) {
    throw std::invalid_argument("resume: checkpoint injection time differs from the configuration");
  }
  s.gen.sched = sched;
  s.gen.base = harness::take_prefixed(ckpt.params, "gen.").clone(false);
  s.trainable = harness::take_prefixed(ckpt.params, "train.").clone(false);
  s.gen.lora.alpha = ckpt.meta.at("lora_alpha").get<double>();
  for (const auto& target : ckpt.meta.at("lora_targets")) {
    models::LoRAAdapter::Factor f;
    f.target = target.get<std::string>();
    f.a = s.trainable.at("lora." + f.target + ".a");
    f.b = s.trainable.at("lora." + f.target + ".b");
    f.rank = f.a.dim(1);
    s.gen.lora.factors.push_back(f);
  }
  if (cfg.texture_cond && s.trainable.contains(kCondRow)) s.gen.base.set(kCondRow, s.trainable.at(kCondRow));
  s.disc.arch = ckpt.archs.at("discriminator").get<models::ArchSpec>();
  s.disc.params = harness::take_prefixed(ckpt.params, "disc.").clone(false);
  s.ema = {harness::take_prefixed(ckpt.params, "ema.").clone(false), cfg.ema_decay};
  s.opt_g = models::Adam(s.trainable, cfg.lr_g);
  s.opt_g.m = harness::take_prefixed(ckpt.params, "adam_g.m.").clone(false);
  s.opt_g.v = harness::take_prefixed(ckpt.params, "adam_g.v.").clone(false);
  s.opt_g.t = ckpt.meta.at("adam_g_t").get<std::size_t>();
  s.opt_d = models::Adam(s.disc.params, cfg.lr_d);
  s.opt_d.m = harness::take_prefixed(ckpt.params, "adam_d.m.").clone(false);
  s.opt_d.v = harness::take_prefixed(ckpt.params, "adam_d.v.").clone(false);
  s.opt_d.t = ckpt.meta.at("adam_d_t").get<std::size_t>();
  s.step = ckpt.step;
  s.rng.set_state(ckpt.rng_state);
  t.prepare_eval();
  return t;
}

Tensor restore(const Generator& gen, const models::ParamStore& trainable, const Tensor& y,
               const RestoreControls& controls) {
  if (controls.rho < 0.0) throw std::invalid_argument("restore: rho must be >= 0");
  ad::NoGradGuard guard;
  Tensor input = y;
  if (controls.rho > 0.0) {
    Rng rng(controls.seed);
    input = add_noise(y, controls.rho, rng);
  }
  Tensor cond;
  if (controls.tau) cond = Tensor::full({y.dim(0), 1}, *controls.tau);
  return gen.forward(trainable, input, cond.defined() ? &cond : nullptr);
}

}  // namespace hypirb::adversarial
