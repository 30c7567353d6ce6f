#include "hypirb/autodiff/ops.hpp"

#include <algorithm>
#include <cmath>

#include "kernels.hpp"

namespace hypirb::ad {

namespace {

using Backward = std::function<void(Node&)>;

void require(bool ok, const char* op, const std::string& detail) {
  if (!ok) throw ShapeError(std::string(op) + ": " + detail);
}

void check_finite(const char* op, const std::vector<double>& values) {
  for (double v : values) {
    if (!std::isfinite(v)) throw DomainError(std::string(op) + ": produced a non-finite value");
  }
}

Tensor record(const char* op, Shape shape, std::vector<double> values, std::vector<Tensor> inputs,
              Backward backward) {
  check_finite(op, values);
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->data = std::move(values);
  bool needs = false;
  if (grad_mode_enabled()) {
    for (const auto& t : inputs) needs = needs || t.requires_grad();
  }
  if (needs) {
    node->requires_grad = true;
    auto entry = std::make_unique<TapeEntry>();
    entry->op = op;
    entry->inputs.reserve(inputs.size());
    for (const auto& t : inputs) entry->inputs.push_back(t.node());
    entry->backward = std::move(backward);
    node->entry = std::move(entry);
  }
  return Tensor(std::move(node));
}

Node& in(Node& out, std::size_t i) { return *out.entry->inputs[i]; }

void same_shape(const char* op, const Tensor& a, const Tensor& b) {
  require(a.shape() == b.shape(), op, "shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

template <typename F, typename D>
Tensor unary(const char* op, const Tensor& x, F f, D dfdx) {
  auto xs = x.data();
  std::vector<double> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = f(xs[i]);
  return record(op, x.shape(), std::move(out), {x}, [dfdx](Node& o) {
    Node& xn = in(o, 0);
    if (!xn.requires_grad) return;
    auto& g = xn.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * dfdx(xn.data[i], o.data[i]);
  });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  same_shape("add", a, b);
  auto as = a.data(), bs = b.data();
  std::vector<double> out(as.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = as[i] + bs[i];
  return record("add", a.shape(), std::move(out), {a, b}, [](Node& o) {
    for (std::size_t k = 0; k < 2; ++k) {
      Node& n = in(o, k);
      if (!n.requires_grad) continue;
      auto& g = n.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  same_shape("sub", a, b);
  auto as = a.data(), bs = b.data();
  std::vector<double> out(as.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = as[i] - bs[i];
  return record("sub", a.shape(), std::move(out), {a, b}, [](Node& o) {
    if (in(o, 0).requires_grad) {
      auto& g = in(o, 0).ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
    }
    if (in(o, 1).requires_grad) {
      auto& g = in(o, 1).ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= o.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  same_shape("mul", a, b);
  auto as = a.data(), bs = b.data();
  std::vector<double> out(as.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = as[i] * bs[i];
  return record("mul", a.shape(), std::move(out), {a, b}, [](Node& o) {
    Node& an = in(o, 0);
    Node& bn = in(o, 1);
    if (an.requires_grad) {
      auto& g = an.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * bn.data[i];
    }
    if (bn.requires_grad) {
      auto& g = bn.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * an.data[i];
    }
  });
}

Tensor scale(const Tensor& x, double s) {
  return unary("scale", x, [s](double v) { return s * v; }, [s](double, double) { return s; });
}

Tensor add_scalar(const Tensor& x, double c) {
  return unary("add_scalar", x, [c](double v) { return v + c; }, [](double, double) { return 1.0; });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require(a.rank() == 2 && b.rank() == 2, "matmul",
          "expects 2-D operands, got " + shape_str(a.shape()) + " and " + shape_str(b.shape()));
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  require(b.dim(0) == k, "matmul", "inner dims differ: " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  std::vector<double> out(m * n, 0.0);
  kernels::gemm_nn(m, n, k, a.data().data(), b.data().data(), out.data());
  return record("matmul", {m, n}, std::move(out), {a, b}, [m, n, k](Node& o) {
    Node& an = in(o, 0);
    Node& bn = in(o, 1);
    if (an.requires_grad) {
      // dA = dC * B^T
      std::vector<double> bt(n * k);
      kernels::transpose(k, n, bn.data.data(), bt.data());
      kernels::gemm_nn(m, k, n, o.grad.data(), bt.data(), an.ensure_grad().data());
    }
    if (bn.requires_grad) {
      // dB = A^T * dC
      kernels::gemm_tn(k, n, m, an.data.data(), o.grad.data(), bn.ensure_grad().data());
    }
  });
}

Tensor transpose(const Tensor& a) {
  require(a.rank() == 2, "transpose", "expects a 2-D operand, got " + shape_str(a.shape()));
  const std::size_t m = a.dim(0), n = a.dim(1);
  std::vector<double> out(m * n);
  kernels::transpose(m, n, a.data().data(), out.data());
  return record("transpose", {n, m}, std::move(out), {a}, [m, n](Node& o) {
    Node& an = in(o, 0);
    if (!an.requires_grad) return;
    std::vector<double> gt(m * n);
    kernels::transpose(n, m, o.grad.data(), gt.data());
    auto& g = an.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += gt[i];
  });
}

Tensor bias_add(const Tensor& x, const Tensor& b) {
  require(x.rank() >= 2, "bias_add", "input must have a leading batch and channel axis, got " + shape_str(x.shape()));
  const std::size_t batch = x.dim(0), channels = x.dim(1);
  const std::size_t inner = x.numel() / (batch * channels);
  const bool per_sample = b.rank() == 2;
  require((b.rank() == 1 && b.dim(0) == channels) || (per_sample && b.dim(0) == batch && b.dim(1) == channels),
          "bias_add", "bias " + shape_str(b.shape()) + " does not fit input " + shape_str(x.shape()));
  auto xs = x.data(), bs = b.data();
  std::vector<double> out(xs.begin(), xs.end());
  for (std::size_t nidx = 0; nidx < batch; ++nidx) {
    for (std::size_t c = 0; c < channels; ++c) {
      const double bv = bs[per_sample ? nidx * channels + c : c];
      double* row = out.data() + (nidx * channels + c) * inner;
      for (std::size_t i = 0; i < inner; ++i) row[i] += bv;
    }
  }
  return record("bias_add", x.shape(), std::move(out), {x, b}, [batch, channels, inner, per_sample](Node& o) {
    Node& xn = in(o, 0);
    Node& bn = in(o, 1);
    if (xn.requires_grad) {
      auto& g = xn.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
    }
    if (bn.requires_grad) {
      auto& g = bn.ensure_grad();
      for (std::size_t nidx = 0; nidx < batch; ++nidx) {
        for (std::size_t c = 0; c < channels; ++c) {
          const double* row = o.grad.data() + (nidx * channels + c) * inner;
          double acc = 0.0;
          for (std::size_t i = 0; i < inner; ++i) acc += row[i];
          g[per_sample ? nidx * channels + c : c] += acc;
        }
      }
    }
  });
}

namespace {

struct ConvGeom {
  std::size_t n, c, h, w, o, kh, kw, ph, pw;
  std::size_t ckk() const { return c * kh * kw; }
  std::size_t hw() const { return h * w; }
};

// col[(ci*kh + ky)*kw + kx, y*w + x] = img[ci, y + ky - ph, x + kx - pw] (zero outside)
void im2col(const ConvGeom& g, const double* img, double* col) {
  for (std::size_t ci = 0; ci < g.c; ++ci) {
    for (std::size_t ky = 0; ky < g.kh; ++ky) {
      for (std::size_t kx = 0; kx < g.kw; ++kx) {
        double* row = col + ((ci * g.kh + ky) * g.kw + kx) * g.hw();
        for (std::size_t y = 0; y < g.h; ++y) {
          const long sy = static_cast<long>(y + ky) - static_cast<long>(g.ph);
          double* dst = row + y * g.w;
          if (sy < 0 || sy >= static_cast<long>(g.h)) {
            std::fill(dst, dst + g.w, 0.0);
            continue;
          }
          const double* src = img + (ci * g.h + static_cast<std::size_t>(sy)) * g.w;
          for (std::size_t x = 0; x < g.w; ++x) {
            const long sx = static_cast<long>(x + kx) - static_cast<long>(g.pw);
            dst[x] = (sx < 0 || sx >= static_cast<long>(g.w)) ? 0.0 : src[sx];
          }
        }
      }
    }
  }
}

void col2im_add(const ConvGeom& g, const double* col, double* img) {
  for (std::size_t ci = 0; ci < g.c; ++ci) {
    for (std::size_t ky = 0; ky < g.kh; ++ky) {
      for (std::size_t kx = 0; kx < g.kw; ++kx) {
        const double* row = col + ((ci * g.kh + ky) * g.kw + kx) * g.hw();
        for (std::size_t y = 0; y < g.h; ++y) {
          const long sy = static_cast<long>(y + ky) - static_cast<long>(g.ph);
          if (sy < 0 || sy >= static_cast<long>(g.h)) continue;
          double* dst = img + (ci * g.h + static_cast<std::size_t>(sy)) * g.w;
          const double* src = row + y * g.w;
          for (std::size_t x = 0; x < g.w; ++x) {
            const long sx = static_cast<long>(x + kx) - static_cast<long>(g.pw);
            if (sx >= 0 && sx < static_cast<long>(g.w)) dst[sx] += src[x];
          }
        }
      }
    }
  }
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& w) {
  require(x.rank() == 4, "conv2d", "input must be [N,C,H,W], got " + shape_str(x.shape()));
  require(w.rank() == 4, "conv2d", "kernel must be [O,C,kh,kw], got " + shape_str(w.shape()));
  require(w.dim(1) == x.dim(1), "conv2d",
          "kernel channels " + std::to_string(w.dim(1)) + " != input channels " + std::to_string(x.dim(1)));
  require(w.dim(2) % 2 == 1 && w.dim(3) % 2 == 1, "conv2d", "kernel extent must be odd, got " + shape_str(w.shape()));
  ConvGeom g{x.dim(0), x.dim(1), x.dim(2), x.dim(3), w.dim(0), w.dim(2), w.dim(3), w.dim(2) / 2, w.dim(3) / 2};
  std::vector<double> out(g.n * g.o * g.hw(), 0.0);
  std::vector<double> col(g.ckk() * g.hw());
  const double* xs = x.data().data();
  const double* ws = w.data().data();
  for (std::size_t s = 0; s < g.n; ++s) {
    im2col(g, xs + s * g.c * g.hw(), col.data());
    kernels::gemm_nn(g.o, g.hw(), g.ckk(), ws, col.data(), out.data() + s * g.o * g.hw());
  }
  return record("conv2d", {g.n, g.o, g.h, g.w}, std::move(out), {x, w}, [g](Node& o) {
    Node& xn = in(o, 0);
    Node& wn = in(o, 1);
    std::vector<double> col(g.ckk() * g.hw());
    std::vector<double> colt(g.hw() * g.ckk());
    std::vector<double> dcol(g.ckk() * g.hw());
    for (std::size_t s = 0; s < g.n; ++s) {
      const double* dout = o.grad.data() + s * g.o * g.hw();
      if (wn.requires_grad) {
        im2col(g, xn.data.data() + s * g.c * g.hw(), col.data());
        kernels::transpose(g.ckk(), g.hw(), col.data(), colt.data());
        // dW[o, ckk] += dout[o, hw] * col^T[hw, ckk]
        kernels::gemm_nn(g.o, g.ckk(), g.hw(), dout, colt.data(), wn.ensure_grad().data());
      }
      if (xn.requires_grad) {
        std::fill(dcol.begin(), dcol.end(), 0.0);
        // dcol[ckk, hw] = W^T[ckk, o] * dout[o, hw]
        kernels::gemm_tn(g.ckk(), g.hw(), g.o, wn.data.data(), dout, dcol.data());
        col2im_add(g, dcol.data(), xn.ensure_grad().data() + s * g.c * g.hw());
      }
    }
  });
}

Tensor relu(const Tensor& x) {
  return unary("relu", x, [](double v) { return v > 0.0 ? v : 0.0; },
               [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor tanh(const Tensor& x) {
  return unary("tanh", x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

namespace {
double stable_sigmoid(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}
}  // namespace

Tensor silu(const Tensor& x) {
  return unary("silu", x, [](double v) { return v * stable_sigmoid(v); },
               [](double v, double) {
                 const double s = stable_sigmoid(v);
                 return s * (1.0 + v * (1.0 - s));
               });
}

Tensor sigmoid(const Tensor& x) {
  return unary("sigmoid", x, stable_sigmoid, [](double, double y) { return y * (1.0 - y); });
}

Tensor softplus(const Tensor& x) {
  return unary("softplus", x, [](double v) { return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v))); },
               [](double v, double) { return stable_sigmoid(v); });
}

Tensor exp(const Tensor& x) {
  return unary("exp", x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& x) {
  for (double v : x.data()) {
    if (!(v > 0.0)) throw DomainError("log: argument must be positive, got " + std::to_string(v));
  }
  return unary("log", x, [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Tensor sum(const Tensor& x) {
  double acc = 0.0;
  for (double v : x.data()) acc += v;
  return record("sum", {1}, {acc}, {x}, [](Node& o) {
    Node& xn = in(o, 0);
    if (!xn.requires_grad) return;
    auto& g = xn.ensure_grad();
    for (auto& v : g) v += o.grad[0];
  });
}

Tensor mean(const Tensor& x) {
  const double n = static_cast<double>(x.numel());
  double acc = 0.0;
  for (double v : x.data()) acc += v;
  return record("mean", {1}, {acc / n}, {x}, [n](Node& o) {
    Node& xn = in(o, 0);
    if (!xn.requires_grad) return;
    auto& g = xn.ensure_grad();
    const double d = o.grad[0] / n;
    for (auto& v : g) v += d;
  });
}

Tensor mean_last(const Tensor& x) {
  require(x.rank() >= 2, "mean_last", "needs at least 2 axes, got " + shape_str(x.shape()));
  const std::size_t len = x.shape().back();
  const std::size_t rows = x.numel() / len;
  Shape out_shape(x.shape().begin(), x.shape().end() - 1);
  auto xs = x.data();
  std::vector<double> out(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (std::size_t i = 0; i < len; ++i) acc += xs[r * len + i];
    out[r] = acc / static_cast<double>(len);
  }
  return record("mean_last", std::move(out_shape), std::move(out), {x}, [rows, len](Node& o) {
    Node& xn = in(o, 0);
    if (!xn.requires_grad) return;
    auto& g = xn.ensure_grad();
    for (std::size_t r = 0; r < rows; ++r) {
      const double d = o.grad[r] / static_cast<double>(len);
      for (std::size_t i = 0; i < len; ++i) g[r * len + i] += d;
    }
  });
}

Tensor reshape(const Tensor& x, Shape shape) {
  for (auto d : shape) require(d > 0, "reshape", "dims must be positive, got " + shape_str(shape));
  require(shape_numel(shape) == x.numel(), "reshape",
          "cannot view " + shape_str(x.shape()) + " as " + shape_str(shape));
  auto xs = x.data();
  return record("reshape", std::move(shape), std::vector<double>(xs.begin(), xs.end()), {x}, [](Node& o) {
    Node& xn = in(o, 0);
    if (!xn.requires_grad) return;
    auto& g = xn.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
  });
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  require(!parts.empty(), "concat", "needs at least one input");
  const Shape& first = parts.front().shape();
  require(axis < first.size(), "concat", "axis " + std::to_string(axis) + " out of range for " + shape_str(first));
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= first[i];
  for (std::size_t i = axis + 1; i < first.size(); ++i) inner *= first[i];
  std::vector<std::size_t> extents;
  std::size_t total = 0;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    bool ok = s.size() == first.size();
    for (std::size_t i = 0; ok && i < s.size(); ++i) ok = (i == axis) || s[i] == first[i];
    require(ok, "concat", "incompatible shapes " + shape_str(first) + " and " + shape_str(s) + " on axis " +
                              std::to_string(axis));
    extents.push_back(s[axis]);
    total += s[axis];
  }
  Shape out_shape = first;
  out_shape[axis] = total;
  std::vector<double> out(outer * total * inner);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    auto ps = parts[k].data();
    const std::size_t chunk = extents[k] * inner;
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy(ps.begin() + o * chunk, ps.begin() + (o + 1) * chunk, out.begin() + o * total * inner + offset);
    }
    offset += chunk;
  }
  return record("concat", std::move(out_shape), std::move(out), parts, [outer, inner, total, extents](Node& o) {
    std::size_t off = 0;
    for (std::size_t k = 0; k < extents.size(); ++k) {
      Node& pn = in(o, k);
      const std::size_t chunk = extents[k] * inner;
      if (pn.requires_grad) {
        auto& g = pn.ensure_grad();
        for (std::size_t r = 0; r < outer; ++r) {
          const double* src = o.grad.data() + r * total * inner + off;
          double* dst = g.data() + r * chunk;
          for (std::size_t i = 0; i < chunk; ++i) dst[i] += src[i];
        }
      }
      off += chunk;
    }
  });
}

Tensor mse(const Tensor& a, const Tensor& b) {
  same_shape("mse", a, b);
  auto as = a.data(), bs = b.data();
  const double n = static_cast<double>(as.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < as.size(); ++i) {
    const double d = as[i] - bs[i];
    acc += d * d;
  }
  return record("mse", {1}, {acc / n}, {a, b}, [n](Node& o) {
    Node& an = in(o, 0);
    Node& bn = in(o, 1);
    const double s = 2.0 * o.grad[0] / n;
    if (an.requires_grad) {
      auto& g = an.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += s * (an.data[i] - bn.data[i]);
    }
    if (bn.requires_grad) {
      auto& g = bn.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= s * (an.data[i] - bn.data[i]);
    }
  });
}

}  // namespace hypirb::ad
