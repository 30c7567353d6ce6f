// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hypirb/adversarial/trainer.hpp"
#include "hypirb/autodiff/grad_check.hpp"
#include "hypirb/autodiff/ops.hpp"
#include "hypirb/diffusion/dsm.hpp"
#include "hypirb/diffusion/gmm.hpp"
#include "hypirb/harness/checkpoint.hpp"
#include "hypirb/harness/experiment.hpp"
#include "hypirb/metrics/texture.hpp"
#include "hypirb/metrics/theory.hpp"
#include "hypirb/metrics/transport.hpp"
#include "hypirb/models/networks.hpp"
#include "hypirb/util/alloc.hpp"

namespace fs = std::filesystem;
using namespace hypirb;
using ad::Tensor;
using adversarial::InitMode;
using harness::ExperimentConfig;
using harness::MetricsRecord;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Env {
  std::string cache;
  std::string work;
};

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

std::string join(const std::vector<double>& v, int prec = 3) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + fmt(v[i], prec);
  return s;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Tensor random_tensor(ad::Shape shape, Rng& rng, double lo = -2.0, double hi = 2.0) {
  std::vector<double> v(ad::shape_numel(shape));
  for (auto& e : v) e = rng.uniform(lo, hi);
  return Tensor::from(std::move(shape), std::move(v));
}

// ---------------------------------------------------------------- configs

ExperimentConfig gmm_config(const Env& env) {
  ExperimentConfig cfg;
  cfg.cache_dir = env.cache;
  cfg.train.eval_every = 25;
  return cfg;
}

ExperimentConfig texture_config(const Env& env) {
  ExperimentConfig cfg;
  cfg.cache_dir = env.cache;
  cfg.domain.kind = "textures";
  cfg.domain.use_texture_widths();
  cfg.pretrain.diffusion = {1000, 32, 1e-3, 0.1};
  cfg.pretrain.regressor = {1000, 32, 1e-3, 0.1};
  cfg.train.batch = 32;
  cfg.train.eval_n = 128;
  cfg.train.eval_every = 100;
  return cfg;
}

struct Run {
  std::vector<MetricsRecord> records;
  adversarial::Trainer trainer;
};

Run train(const ExperimentConfig& cfg) {
  auto prep = harness::prepare(cfg);
  adversarial::Trainer t(cfg.train, prep.domain, prep.sched, prep.assets, prep.disc);
  std::vector<MetricsRecord> recs;
  t.run([&](const MetricsRecord& r) { recs.push_back(r); });
  return {std::move(recs), std::move(t)};
}

std::vector<std::pair<double, double>> w2_series(const std::vector<MetricsRecord>& recs) {
  std::vector<std::pair<double, double>> s;
  for (const auto& r : recs) {
    if (r.w2_eval) s.emplace_back(static_cast<double>(r.step), *r.w2_eval);
  }
  return s;
}

double final_gap(const std::vector<MetricsRecord>& recs) {
  for (auto it = recs.rbegin(); it != recs.rend(); ++it) {
    if (it->mode_mass_gap) return *it->mode_mass_gap;
  }
  throw std::runtime_error("run has no evaluation record");
}

// ---------------------------------------------------------------- 1 to 5

Tensor probe_sum(const Tensor& y) {
  std::vector<double> w(y.numel());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = 0.3 + 0.1 * static_cast<double>(i % 7);
  return ad::sum(ad::mul(y, Tensor::from(y.shape(), w)));
}

double worst_of_20(const ad::ScalarFn& f, ad::Shape shape, std::uint64_t seed, double lo = -2.0, double hi = 2.0) {
  Rng rng(seed);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) worst = std::max(worst, ad::grad_check(f, random_tensor(shape, rng, lo, hi)));
  return worst;
}

Outcome autodiff_soundness(const Env&) {
  Rng wr(5);
  const auto w23 = random_tensor({2, 3}, wr);
  const auto k = random_tensor({3, 2, 3, 3}, wr);
  const auto bias = random_tensor({3}, wr);
  const auto img = random_tensor({2, 2, 4, 4}, wr);

  std::vector<std::pair<std::string, double>> errs;
  auto add = [&](const std::string& name, const ad::ScalarFn& f, ad::Shape shape, double lo = -2.0,
                 double hi = 2.0) { errs.emplace_back(name, worst_of_20(f, shape, errs.size() + 1, lo, hi)); };

  add("add", [&](const Tensor& x) { return probe_sum(ad::add(x, w23)); }, {2, 3});
  add("sub", [&](const Tensor& x) { return probe_sum(ad::sub(w23, x)); }, {2, 3});
  add("mul", [&](const Tensor& x) { return probe_sum(ad::mul(x, x)); }, {2, 3});
  add("scale", [](const Tensor& x) { return probe_sum(ad::scale(x, -1.7)); }, {4});
  add("add_scalar", [](const Tensor& x) { return probe_sum(ad::add_scalar(x, 0.4)); }, {4});
  add("matmul", [&](const Tensor& x) { return probe_sum(ad::matmul(x, ad::transpose(w23))); }, {4, 3});
  add("transpose", [](const Tensor& x) { return probe_sum(ad::transpose(x)); }, {2, 5});
  add("bias_add", [&](const Tensor& x) { return probe_sum(ad::bias_add(x, bias)); }, {2, 3, 4});
  add("bias_add.b", [&](const Tensor& b) { return probe_sum(ad::mul(ad::bias_add(w23, b), w23)); }, {3});
  add("conv2d.x", [&](const Tensor& x) { return probe_sum(ad::conv2d(x, k)); }, {2, 2, 4, 5});
  add("conv2d.w", [&](const Tensor& w) { return probe_sum(ad::conv2d(img, w)); }, {3, 2, 3, 3});
  add("relu", [](const Tensor& x) { return probe_sum(ad::relu(x)); }, {6});
  add("tanh", [](const Tensor& x) { return probe_sum(ad::tanh(x)); }, {6});
  add("silu", [](const Tensor& x) { return probe_sum(ad::silu(x)); }, {6});
  add("sigmoid", [](const Tensor& x) { return probe_sum(ad::sigmoid(x)); }, {6});
  add("softplus", [](const Tensor& x) { return probe_sum(ad::softplus(x)); }, {6});
  add("exp", [](const Tensor& x) { return probe_sum(ad::exp(x)); }, {6});
  add("log", [](const Tensor& x) { return probe_sum(ad::log(x)); }, {6}, 0.2, 3.0);
  add("sum", [](const Tensor& x) { return ad::sum(ad::mul(x, x)); }, {3, 2});
  add("mean", [](const Tensor& x) { return ad::mean(ad::mul(x, x)); }, {3, 2});
  add("mean_last", [](const Tensor& x) { return probe_sum(ad::mean_last(ad::mul(x, x))); }, {2, 3, 4});
  add("reshape", [](const Tensor& x) { return probe_sum(ad::reshape(ad::mul(x, x), {3, 2})); }, {2, 3});
  add("concat", [&](const Tensor& x) { return probe_sum(ad::concat({w23, x}, 1)); }, {2, 2});
  add("mse", [&](const Tensor& x) { return ad::mse(x, w23); }, {2, 3});

  // Composed networks: gradient with respect to one weight tensor, at 20
  // random weight draws each.
  auto network = [&](const std::string& label, models::ArchSpec arch, const std::string& param,
                     const std::function<Tensor(const models::ArchSpec&, const models::ParamStore&)>& head) {
    Rng rng(errs.size() + 100);
    auto m = models::init_model(arch, rng);
    const std::string name = param.empty() ? m.params.names().front() : param;
    const auto shape = m.params.at(name).shape();
    add(label, [&](const Tensor& w) {
      models::ParamStore p = m.params;
      p.set(name, w);
      return head(arch, p);
    }, shape, -0.5, 0.5);
  };
  models::ArchSpec mlp;
  mlp.kind = "score_mlp";
  mlp.data_dim = 2;
  mlp.hidden = 8;
  mlp.depth = 2;
  mlp.time_dim = 4;
  mlp.time_steps = 10;
  Rng xr(31);
  const auto xp = random_tensor({3, 2}, xr);
  network("score_mlp", mlp, "h1.w", [&](const models::ArchSpec& a, const models::ParamStore& p) {
    return probe_sum(models::score_net_forward(a, p, xp, {1, 4, 7}));
  });
  models::ArchSpec conv;
  conv.kind = "score_conv";
  conv.channels = 1;
  conv.size = 5;
  conv.hidden = 3;
  conv.depth = 1;
  conv.time_dim = 4;
  conv.time_steps = 10;
  const auto xi = random_tensor({2, 1, 5, 5}, xr);
  network("score_conv", conv, "in.w", [&](const models::ArchSpec& a, const models::ParamStore& p) {
    return probe_sum(models::score_net_forward(a, p, xi, {2, 6}));
  });
  models::ArchSpec disc = conv;
  disc.kind = "disc_conv";
  disc.time_dim = 0;
  disc.time_steps = 0;
  network("disc_conv", disc, "", [&](const models::ArchSpec& a, const models::ParamStore& p) {
    auto out = models::discriminator_forward(a, p, xi);
    return ad::add(probe_sum(out.logit), probe_sum(out.features));
  });

  double worst = 0.0;
  std::string worst_name;
  for (const auto& [name, e] : errs) {
    if (e >= worst) {
      worst = e;
      worst_name = name;
    }
  }
  return {worst < 1e-6, std::to_string(errs.size()) + " checks x 20 points, max rel err " + fmt(worst, 3) + " (" +
                            worst_name + ")"};
}

Outcome one_step_identity(const Env&) {
  const auto sched = diffusion::make_schedule(200, 1e-4, 0.04);
  Rng rng(11);
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    const std::size_t t = rng.index(sched.T);
    const double ab = sched.alpha_bar[t];
    const auto xt = random_tensor({4, 2}, rng, -3.0, 3.0);
    const auto score = ad::scale(xt, -1.0);  // analytic score of N(0, I), at every t
    const auto x0 = diffusion::restore_from_score(xt, score, ab);
    for (std::size_t j = 0; j < xt.numel(); ++j) worst = std::max(worst, std::abs(x0.at(j) - std::sqrt(ab) * xt.at(j)));
  }
  return {worst <= 1e-12, "max |x0_hat - sqrt(ab) x_t| = " + fmt(worst, 3)};
}

Outcome score_learning(const Env&) {
  const auto sched = diffusion::make_schedule(200, 1e-4, 0.04);
  models::ArchSpec arch;
  arch.kind = "score_mlp";
  arch.data_dim = 2;
  arch.hidden = 128;
  arch.depth = 3;
  arch.time_steps = sched.T;
  Rng rng(0);
  auto model = models::init_model(arch, rng);
  diffusion::BatchSampler sampler = [](std::size_t n, Rng& r, Tensor& x0, Tensor&) {
    x0 = Tensor::from({n, 2}, r.normals(2 * n));
  };
  diffusion::DsmOptions opt;
  opt.steps = 5000;
  diffusion::train_dsm(model, sampler, sched, opt, rng);

  const auto score = diffusion::network_score(arch, model.params, sched);
  const std::vector<std::size_t> mid{40, 60, 80, 100, 120, 140, 160};
  const double err = diffusion::score_error(score, diffusion::standard_normal_gmm(2), sched, mid, 512, 7);

  std::vector<double> grid;
  for (int i = -10; i <= 10; ++i) {
    for (int j = -10; j <= 10; ++j) {
      const double a = 0.2 * i, b = 0.2 * j;
      if (a * a + b * b <= 4.0) {
        grid.push_back(a);
        grid.push_back(b);
      }
    }
  }
  const std::size_t n = grid.size() / 2;
  const auto g = Tensor::from({n, 2}, grid);
  double sq = 0.0;
  for (std::size_t t : mid) {
    const auto s = score(g, t);
    for (std::size_t k = 0; k < g.numel(); ++k) sq += (s.at(k) + g.at(k)) * (s.at(k) + g.at(k));
  }
  const double grid_mse = sq / static_cast<double>(g.numel() * mid.size());
  return {err < 0.25 && grid_mse < 0.05,
          "score_error " + fmt(err) + " (< 0.25), grid MSE to -x " + fmt(grid_mse) + " (< 0.05)"};
}

Outcome ot_estimator(const Env&) {
  std::vector<double> reps;
  Rng rng(21);
  for (int r = 0; r < 5; ++r) {
    auto a = rng.normals(256), b = rng.normals(256);
    for (auto& v : b) v += 2.0;
    reps.push_back(metrics::w2_exact(Tensor::from({256, 1}, a), Tensor::from({256, 1}, b)));
  }
  const double med = median(reps);
  const auto A = random_tensor({64, 2}, rng);
  const double self = metrics::w2_exact(A, A);
  bool sorted_equal = true;
  for (int r = 0; r < 5; ++r) {
    auto a = rng.normals(100), b = rng.normals(100);
    const double exact = metrics::w2_exact(Tensor::from({100, 1}, a), Tensor::from({100, 1}, b));
    sorted_equal = sorted_equal && exact == metrics::w2_sorted_1d(a, b);
  }
  return {std::abs(med - 2.0) <= 0.15 && self == 0.0 && sorted_equal,
          "median W2 " + fmt(med) + " (2 +- 0.15), W2(A,A) = " + fmt(self) +
              ", 1-D equals sorted coupling: " + (sorted_equal ? "yes" : "no")};
}

Outcome theory_calculator(const Env&) {
  metrics::TheoryConstants tc;
  tc.L = 300;
  tc.mu = 0.06;
  tc.eta = 1.0 / 300;
  tc.eps0 = 5e-3;
  tc.delta_tar = 1e-5;
  tc.C2 = 2;
  const double steps = metrics::predicted_steps(tc);
  return {steps >= 7.9e3 && steps <= 8.2e3, "predicted steps " + fmt(steps, 6) + " (in [7.9e3, 8.2e3])"};
}

// ---------------------------------------------------------------- 6 to 10

double median_early_grad(ExperimentConfig cfg, InitMode mode, std::uint64_t seed) {
  cfg.train.init_mode = mode;
  cfg.train.seed = seed;
  cfg.train.eval_every = 1000;
  auto prep = harness::prepare(cfg);
  adversarial::Trainer t(cfg.train, prep.domain, prep.sched, prep.assets, prep.disc);
  std::vector<double> g;
  for (int s = 0; s < 50; ++s) g.push_back(*t.train_step().grad_norm_g);
  return median(g);
}

Outcome gradient_ordering(const Env& env) {
  auto cfg = gmm_config(env);
  auto ratios = [&](double alpha_bar) {
    cfg.train.inject_alpha_bar = alpha_bar;
    std::vector<double> r;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      r.push_back(median_early_grad(cfg, InitMode::kDiffusion, seed) / median_early_grad(cfg, InitMode::kScratch, seed));
    }
    return r;
  };
  const auto r = ratios(cfg.train.inject_alpha_bar);
  const auto ok = std::count_if(r.begin(), r.end(), [](double v) { return v <= 1.0 / 3.0; });
  const auto r8 = ratios(0.8);
  return {ok >= 4, "diffusion/scratch median grad norm, steps 1-50: " + join(r) + " (" + std::to_string(ok) +
                       "/5 <= 1/3); at alpha_bar(t*) = 0.8: " + join(r8)};
}

struct GmmRuns {
  std::vector<Run> diffusion;  // 3k steps each, seeds 0..4
  std::vector<Run> scratch;
};

const GmmRuns& gmm_runs(const Env& env) {
  static std::optional<GmmRuns> runs;
  if (runs) return *runs;
  runs.emplace();
  auto cfg = gmm_config(env);
  cfg.train.steps = 3000;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    cfg.train.seed = seed;
    cfg.train.init_mode = InitMode::kDiffusion;
    runs->diffusion.push_back(train(cfg));
    cfg.train.init_mode = InitMode::kScratch;
    runs->scratch.push_back(train(cfg));
  }
  return *runs;
}

Outcome mode_coverage(const Env& env) {
  const auto& runs = gmm_runs(env);
  std::vector<double> diff, scr;
  for (const auto& r : runs.diffusion) diff.push_back(final_gap(r.records));
  for (const auto& r : runs.scratch) scr.push_back(final_gap(r.records));
  const auto ok = std::count_if(diff.begin(), diff.end(), [](double v) { return v <= 0.06; });
  return {ok >= 4, "mode-mass gap after 3k steps, diffusion: " + join(diff) + " (" + std::to_string(ok) +
                       "/5 <= 0.06); scratch: " + join(scr)};
}

std::size_t steps_to(const std::vector<MetricsRecord>& recs, double threshold, std::size_t cap) {
  for (const auto& [step, w2] : w2_series(recs)) {
    if (w2 <= threshold) return static_cast<std::size_t>(step);
  }
  return cap;
}

Outcome convergence_speedup(const Env& env) {
  constexpr std::size_t kCap = 20000;
  auto cfg = gmm_config(env);
  cfg.train.steps = kCap;
  cfg.train.early_stop_w2 = 0.1;
  std::vector<double> diff, scr;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    cfg.train.seed = seed;
    cfg.train.init_mode = InitMode::kDiffusion;
    diff.push_back(static_cast<double>(steps_to(train(cfg).records, 0.1, kCap)));
    cfg.train.init_mode = InitMode::kScratch;
    scr.push_back(static_cast<double>(steps_to(train(cfg).records, 0.1, kCap)));
  }
  const double md = median(diff), ms = median(scr);
  return {md <= 0.3 * ms, "steps to eval W2 <= 0.1, diffusion: " + join(diff, 6) + " (median " + fmt(md, 6) +
                              "); scratch: " + join(scr, 6) + " (median " + fmt(ms, 6) + "); ratio " +
                              fmt(md / ms, 3)};
}

Outcome geometric_decay(const Env& env) {
  const auto& run = gmm_runs(env).diffusion.front();
  std::vector<double> xs, ys;
  for (const auto& [step, w2] : w2_series(run.records)) {
    if (step > 500) break;
    xs.push_back(step);
    ys.push_back(std::log(w2));
  }
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  const double slope = sxy / sxx;
  const double r2 = syy > 0.0 ? sxy * sxy / (sxx * syy) : 0.0;
  return {slope < 0.0 && r2 >= 0.6, "log W2 vs step over steps 0-500 (" + std::to_string(xs.size()) +
                                        " evals): slope " + fmt(slope, 3) + ", R^2 " + fmt(r2, 3) + " (>= 0.6)"};
}

Outcome lora_sweep(const Env& env) {
  auto cfg = gmm_config(env);
  cfg.train.steps = 1000;
  cfg.train.eval_every = 1000;
  const std::vector<std::size_t> ranks{2, 4, 8, 16};
  std::vector<double> med;
  for (std::size_t rank : ranks) {
    cfg.train.lora_rank = rank;
    std::vector<double> w;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      cfg.train.seed = seed;
      w.push_back(w2_series(train(cfg).records).back().second);
    }
    med.push_back(median(w));
  }
  bool monotone = true;
  for (std::size_t i = 1; i < med.size(); ++i) monotone = monotone && med[i] <= med[i - 1] + 0.02;

  // Rank 0: the effective generator weights stay bit-identical to the asset.
  cfg.train.lora_rank = 0;
  cfg.train.steps = 50;
  cfg.train.seed = 0;
  auto run = train(cfg);
  const auto& gen = run.trainer.state().gen;
  const auto eff = gen.effective(run.trainer.state().trainable);
  const auto asset = harness::ensure_asset(cfg, "diffusion");
  bool unchanged = run.trainer.state().trainable.size() == 0;
  for (const auto& name : asset.params.names()) {
    unchanged = unchanged && harness::tensor_hash(eff.at(name)) == harness::tensor_hash(asset.params.at(name));
  }
  return {monotone && unchanged, "median final W2 by rank {2,4,8,16}: " + join(med) +
                                     " (non-increasing within 0.02: " + (monotone ? "yes" : "no") +
                                     "); rank 0 leaves weights unchanged: " + (unchanged ? "yes" : "no")};
}

// ---------------------------------------------------------------- 11 to 13

double image_mse(const adversarial::Trainer& t) {
  const auto out = t.domain().decode(t.eval_outputs());
  return ad::mse(out, t.eval_batch().clean_image).item();
}

Outcome preremoval_ablation(const Env& env) {
  auto cfg = texture_config(env);
  cfg.train.steps = 300;
  std::vector<double> with, without;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    cfg.train.seed = seed;
    cfg.pretrain.preremoval = false;
    without.push_back(image_mse(train(cfg).trainer));
    cfg.pretrain.preremoval = true;
    with.push_back(image_mse(train(cfg).trainer));
  }
  const double mw = median(with), mo = median(without);
  return {mw <= mo, "restoration MSE with pre-removal: " + join(with) + " (median " + fmt(mw) + "); without: " +
                        join(without) + " (median " + fmt(mo) + ")"};
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = 0.5 * static_cast<double>(i + j);
      i = j + 1;
    }
    return r;
  };
  const auto ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  return saa > 0.0 && sbb > 0.0 ? sab / std::sqrt(saa * sbb) : 0.0;
}

Tensor first_rows(const Tensor& t, std::size_t n) {
  std::vector<double> v(t.data().begin(), t.data().begin() + static_cast<std::ptrdiff_t>(n * (t.numel() / t.dim(0))));
  auto shape = t.shape();
  shape[0] = n;
  return Tensor::from(shape, std::move(v));
}

Outcome controls(const Env& env) {
  auto cfg = texture_config(env);
  cfg.train.texture_cond = true;
  cfg.train.steps = 1000;
  auto run = train(cfg);
  const auto& t = run.trainer;
  const auto& tex = t.domain().dataset().textures;
  const auto& gen = t.state().gen;
  const auto& trainable = t.state().trainable;

  // Texture control on one fixed observation, and on the eval batch.
  const auto y1 = first_rows(t.eval_batch().y, 1);
  const std::vector<double> levels{0.3, 0.525, 0.75, 0.975, 1.2};
  std::vector<double> single, batch;
  for (double lvl : levels) {
    adversarial::RestoreControls c{0.0, tex.standardize(lvl), 0};
    single.push_back(metrics::texture_richness_batch(t.domain().decode(adversarial::restore(gen, trainable, y1, c)))[0]);
    const auto r = metrics::texture_richness_batch(t.domain().decode(adversarial::restore(gen, trainable, t.eval_batch().y, c)));
    batch.push_back(std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(r.size()));
  }
  const double rho_s = spearman(levels, single);

  // Diversity: per-pixel spread across 8 noise draws, averaged over 16 inputs.
  const auto ys = first_rows(t.eval_batch().y, 16);
  const std::vector<double> rhos{0.0, 0.25, 0.5, 1.0};
  std::vector<double> diversity;
  for (double rho : rhos) {
    std::vector<Tensor> outs;
    for (std::uint64_t s = 0; s < 8; ++s) {
      outs.push_back(t.domain().decode(adversarial::restore(gen, trainable, ys, {rho, tex.standardize(0.75), s + 1})));
    }
    double spread = 0.0;
    const double k = static_cast<double>(outs.size());
    for (std::size_t i = 0; i < outs[0].numel(); ++i) {
      // Offsets from the first draw, so identical draws give exactly 0.
      double m = 0.0, sq = 0.0;
      for (const auto& o : outs) {
        const double d = o.at(i) - outs[0].at(i);
        m += d;
        sq += d * d;
      }
      m /= k;
      spread += std::sqrt(std::max(0.0, sq / k - m * m));
    }
    diversity.push_back(spread / static_cast<double>(outs[0].numel()));
  }
  bool strictly = true;
  for (std::size_t i = 1; i < diversity.size(); ++i) strictly = strictly && diversity[i] > diversity[i - 1];

  const auto a = adversarial::restore(gen, trainable, ys, {0.0, tex.standardize(0.75), 1});
  const auto b = adversarial::restore(gen, trainable, ys, {0.0, tex.standardize(0.75), 2});
  bool deterministic = true;
  for (std::size_t i = 0; i < a.numel(); ++i) deterministic = deterministic && a.at(i) == b.at(i);

  return {rho_s >= 0.9 && strictly && deterministic,
          "tau -> richness Spearman " + fmt(rho_s, 3) + " on one y (" + join(single) + "; eval-batch means " +
              join(batch) + "); diversity at rho {0,0.25,0.5,1}: " + join(diversity) + " (strictly increasing: " +
              (strictly ? "yes" : "no") + "); rho = 0 deterministic: " + (deterministic ? "yes" : "no")};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome infrastructure(const Env& env) {
  const fs::path root = fs::path(env.work) / "infra";
  fs::remove_all(root);
  fs::create_directories(root);
  auto cfg = gmm_config(env);
  cfg.train.steps = 300;
  cfg.train.eval_every = 50;
  cfg.train.inject_noise = 0.3;

  // Checkpoint round trip through a trained run state.
  auto run = train(cfg);
  const auto ck = run.trainer.checkpoint();
  harness::save_checkpoint((root / "a.ckpt").string(), ck);
  const auto back = harness::load_checkpoint((root / "a.ckpt").string());
  harness::save_checkpoint((root / "b.ckpt").string(), back);
  bool exact = slurp(root / "a.ckpt") == slurp(root / "b.ckpt") && back.rng_state == ck.rng_state &&
               back.params.names() == ck.params.names();
  for (const auto& name : ck.params.names()) {
    const auto x = ck.params.at(name).data(), y = back.params.at(name).data();
    exact = exact && std::equal(x.begin(), x.end(), y.begin(), y.end(), [](double p, double q) {
              return std::memcmp(&p, &q, sizeof(double)) == 0;
            });
  }

  // Resume: split at step 150 versus uninterrupted, through the run harness.
  auto full = cfg;
  full.out_dir = (root / "full").string();
  harness::run_experiment(full);
  auto split = cfg;
  split.out_dir = (root / "split").string();
  harness::run_experiment(split, std::nullopt, 150);
  harness::run_experiment(split, (root / "split" / "last.ckpt").string());
  const bool resumed = slurp(root / "full" / "metrics.jsonl") == slurp(root / "split" / "metrics.jsonl");

  // Same config and seed twice.
  auto again = cfg;
  again.out_dir = (root / "again").string();
  harness::run_experiment(again);
  const bool same = slurp(root / "full" / "metrics.jsonl") == slurp(root / "again" / "metrics.jsonl") &&
                    !slurp(root / "full" / "metrics.jsonl").empty();
  fs::remove_all(root);
  return {exact && resumed && same, std::string("checkpoint round trip bit-exact: ") + (exact ? "yes" : "no") +
                                        "; resumed log identical: " + (resumed ? "yes" : "no") +
                                        "; rerun log identical: " + (same ? "yes" : "no")};
}

}  // namespace

int main(int argc, char** argv) {
  tune_allocator();
  CLI::App app{"Acceptance criteria"};
  Env env;
  env.cache = "acceptance-cache";
  env.work = (fs::temp_directory_path() / "hypirb-acceptance").string();
  std::vector<int> only;
  app.add_option("--cache", env.cache, "Asset cache directory");
  app.add_option("--work", env.work, "Scratch directory for run outputs");
  app.add_option("--only", only, "Criteria to run (default: all)")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome(const Env&)>>> criteria{
      {"autodiff soundness", autodiff_soundness},
      {"analytic one-step identity", one_step_identity},
      {"score learning", score_learning},
      {"OT estimator", ot_estimator},
      {"theory calculator", theory_calculator},
      {"initial-gradient ordering", gradient_ordering},
      {"mode coverage", mode_coverage},
      {"convergence speedup", convergence_speedup},
      {"geometric early decay", geometric_decay},
      {"LoRA sweep", lora_sweep},
      {"pre-removal ablation", preremoval_ablation},
      {"controls", controls},
      {"infrastructure", infrastructure},
  };
  fs::create_directories(env.cache);
  fs::create_directories(env.work);
  const std::set<int> selected(only.begin(), only.end());
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second(env);
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failed;
    std::cout << "criterion " << std::setw(2) << id << " " << (o.pass ? "PASS" : "FAIL") << "  " << criteria[i].first
              << ": " << o.detail << " [" << fmt(secs, 3) << " s]" << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
