#include "hypirb/models/networks.hpp"

#include <cmath>

#include "hypirb/autodiff/ops.hpp"

namespace hypirb::models {

namespace {

Tensor normal_tensor(ad::Shape shape, double std, Rng& rng) {
  std::vector<double> v(ad::shape_numel(shape));
  for (auto& e : v) e = std * rng.normal();
  return Tensor::from(std::move(shape), std::move(v));
}

void add_dense(ParamStore& p, const std::string& name, std::size_t in, std::size_t out, Rng& rng) {
  p.add(name + ".w", normal_tensor({in, out}, std::sqrt(1.0 / static_cast<double>(in)), rng));
  p.add(name + ".b", Tensor::zeros({out}));
}

void add_conv(ParamStore& p, const std::string& name, std::size_t in, std::size_t out, Rng& rng) {
  p.add(name + ".w", normal_tensor({out, in, 3, 3}, std::sqrt(1.0 / static_cast<double>(9 * in)), rng));
  p.add(name + ".b", Tensor::zeros({out}));
}

Tensor dense(const ParamStore& p, const std::string& name, const Tensor& x) {
  return ad::bias_add(ad::matmul(x, p.at(name + ".w")), p.at(name + ".b"));
}

Tensor conv(const ParamStore& p, const std::string& name, const Tensor& x) {
  return ad::bias_add(ad::conv2d(x, p.at(name + ".w")), p.at(name + ".b"));
}

std::string hidden_name(std::size_t i) { return "h" + std::to_string(i); }

std::vector<std::size_t> expand_times(const std::vector<std::size_t>& t, std::size_t n, const ArchSpec& arch) {
  if (t.size() != 1 && t.size() != n) {
    throw ad::ShapeError("score_net_forward: " + std::to_string(t.size()) + " times for batch of " +
                         std::to_string(n));
  }
  for (auto v : t) {
    if (v >= arch.time_steps) {
      throw std::out_of_range("score_net_forward: t=" + std::to_string(v) + " outside [0," +
                              std::to_string(arch.time_steps) + ")");
    }
  }
  return t.size() == n ? t : std::vector<std::size_t>(n, t[0]);
}

}  // namespace

void check_batch(const ArchSpec& arch, const Tensor& x, const char* who) {
  const auto want = arch.sample_shape();
  const auto& s = x.shape();
  bool ok = s.size() == want.size() + 1;
  for (std::size_t i = 0; ok && i < want.size(); ++i) ok = s[i + 1] == want[i];
  if (!ok) {
    throw ad::ShapeError(std::string(who) + ": input " + ad::shape_str(s) + " does not match [N," +
                         ad::shape_str(want).substr(1));
  }
}

Model init_model(const ArchSpec& arch, Rng& rng) {
  if (arch.hidden == 0 || arch.depth == 0) throw std::invalid_argument("init_model: hidden and depth must be >= 1");
  Model m{arch, {}};
  auto& p = m.params;
  const std::size_t h = arch.hidden;
  if (arch.kind == "score_mlp") {
    const std::size_t in = arch.data_dim + arch.time_dim;
    p.add("in.w", normal_tensor({in, h}, std::sqrt(1.0 / static_cast<double>(in)), rng));
    if (arch.cond_dim) p.add("in.wc", Tensor::zeros({arch.cond_dim, h}));
    p.add("in.b", Tensor::zeros({h}));
    for (std::size_t i = 1; i < arch.depth; ++i) add_dense(p, hidden_name(i), h, h, rng);
    add_dense(p, "out", h, arch.data_dim, rng);
  } else if (arch.kind == "score_conv") {
    add_conv(p, "in", arch.channels, h, rng);
    p.add("in.wt", normal_tensor({arch.time_dim, h}, std::sqrt(1.0 / static_cast<double>(arch.time_dim)), rng));
    if (arch.cond_dim) p.add("in.wc", Tensor::zeros({arch.cond_dim, h}));
    for (std::size_t i = 1; i < arch.depth; ++i) add_conv(p, hidden_name(i), h, h, rng);
    add_conv(p, "out", h, arch.channels, rng);
  } else if (arch.kind == "disc_mlp") {
    add_dense(p, hidden_name(0), arch.data_dim, h, rng);
    for (std::size_t i = 1; i < arch.depth; ++i) add_dense(p, hidden_name(i), h, h, rng);
    add_dense(p, "head", h, 1, rng);
  } else if (arch.kind == "disc_conv") {
    add_conv(p, hidden_name(0), arch.channels, h, rng);
    for (std::size_t i = 1; i < arch.depth; ++i) add_conv(p, hidden_name(i), h, h, rng);
    add_dense(p, "head", h, 1, rng);
  } else if (arch.kind == "autoencoder") {
    add_conv(p, "enc.a", arch.channels, h, rng);
    add_conv(p, "enc.b", h, arch.channels, rng);
    add_conv(p, "dec.a", arch.channels, h, rng);
    add_conv(p, "dec.b", h, arch.channels, rng);
  } else {
    throw std::invalid_argument("init_model: unknown architecture kind '" + arch.kind + "'");
  }
  return m;
}

Tensor time_embedding(const std::vector<std::size_t>& t, std::size_t dim) {
  const std::size_t half = dim / 2;
  std::vector<double> v(t.size() * dim, 0.0);
  for (std::size_t n = 0; n < t.size(); ++n) {
    for (std::size_t j = 0; j < half; ++j) {
      const double freq = std::exp(-std::log(1000.0) * static_cast<double>(j) / static_cast<double>(half));
      const double a = static_cast<double>(t[n]) * freq;
      v[n * dim + j] = std::sin(a);
      v[n * dim + half + j] = std::cos(a);
    }
  }
  return Tensor::from({t.size(), dim}, std::move(v));
}

Tensor score_net_forward(const ArchSpec& arch, const ParamStore& p, const Tensor& x,
                         const std::vector<std::size_t>& t, const Tensor* cond) {
  if (!arch.is_score()) throw std::invalid_argument("score_net_forward: descriptor kind is " + arch.kind);
  check_batch(arch, x, "score_net_forward");
  const std::size_t n = x.dim(0);
  const auto times = expand_times(t, n, arch);
  if (cond) {
    if (arch.cond_dim == 0) throw ad::ShapeError("score_net_forward: descriptor has no conditioning input");
    if (cond->shape() != ad::Shape{n, arch.cond_dim}) {
      throw ad::ShapeError("score_net_forward: cond " + ad::shape_str(cond->shape()) + " expected [" +
                           std::to_string(n) + "," + std::to_string(arch.cond_dim) + "]");
    }
  }
  const Tensor temb = time_embedding(times, arch.time_dim);

  if (arch.kind == "score_mlp") {
    Tensor a = ad::matmul(ad::concat({x, temb}, 1), p.at("in.w"));
    if (cond) a = ad::add(a, ad::matmul(*cond, p.at("in.wc")));
    Tensor h = ad::silu(ad::bias_add(a, p.at("in.b")));
    for (std::size_t i = 1; i < arch.depth; ++i) h = ad::silu(dense(p, hidden_name(i), h));
    return dense(p, "out", h);
  }

  Tensor a = conv(p, "in", x);
  a = ad::bias_add(a, ad::matmul(temb, p.at("in.wt")));
  if (cond) a = ad::bias_add(a, ad::matmul(*cond, p.at("in.wc")));
  Tensor h = ad::silu(a);
  for (std::size_t i = 1; i < arch.depth; ++i) h = ad::silu(conv(p, hidden_name(i), h));
  return conv(p, "out", h);
}

DiscOutput discriminator_forward(const ArchSpec& arch, const ParamStore& p, const Tensor& x) {
  if (arch.kind != "disc_mlp" && arch.kind != "disc_conv") {
    throw std::invalid_argument("discriminator_forward: descriptor kind is " + arch.kind);
  }
  check_batch(arch, x, "discriminator_forward");
  const std::size_t n = x.dim(0);
  Tensor h = x;
  Tensor features;
  if (arch.kind == "disc_mlp") {
    for (std::size_t i = 0; i < arch.depth; ++i) h = ad::silu(dense(p, hidden_name(i), h));
    features = h;
  } else {
    for (std::size_t i = 0; i < arch.depth; ++i) h = ad::silu(conv(p, hidden_name(i), h));
    features = ad::mean_last(ad::reshape(h, {n, arch.hidden, arch.size * arch.size}));
  }
  Tensor logit = ad::reshape(dense(p, "head", features), {n});
  return {logit, features};
}

Tensor ae_encode(const ArchSpec& arch, const ParamStore& p, const Tensor& x) {
  if (arch.kind != "autoencoder") throw std::invalid_argument("ae_encode: descriptor kind is " + arch.kind);
  check_batch(arch, x, "ae_encode");
  return ad::add(x, conv(p, "enc.b", ad::silu(conv(p, "enc.a", x))));
}

Tensor ae_decode(const ArchSpec& arch, const ParamStore& p, const Tensor& z) {
  if (arch.kind != "autoencoder") throw std::invalid_argument("ae_decode: descriptor kind is " + arch.kind);
  check_batch(arch, z, "ae_decode");
  return ad::add(z, conv(p, "dec.b", ad::silu(conv(p, "dec.a", z))));
}

AEOutput autoencoder_forward(const ArchSpec& arch, const ParamStore& p, const Tensor& x) {
  Tensor z = ae_encode(arch, p, x);
  return {z, ae_decode(arch, p, z)};
}

}  // namespace hypirb::models
