// Copyright 2026 The AUNet-mini Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "aunet/ops.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

#include "aunet/bilinear.h"

namespace aunet {

namespace {

[[noreturn]] void shape_error(const std::string& op, const std::string& what) {
  throw std::invalid_argument(fmt::format("{}: {}", op, what));
}

void check_bias(const std::string& op, const Shape& bias, int cout) {
  if (bias.n != cout || bias.c != 1 || bias.h != 1 || bias.w != 1) {
    shape_error(op, fmt::format("bias must be [{},1,1,1], got {}", cout, bias.str()));
  }
}

}  // namespace

Real sigmoid_value(Real x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const Real e = std::exp(x);
  return e / (1.0 + e);
}

Var pointwise_conv(Graph& g, Var x, Var w, std::optional<Var> bias) {
  const Tensor& xv = g.value(x);
  const Tensor& wv = g.value(w);
  const Shape xs = xv.shape();
  const Shape ws = wv.shape();
  if (ws.h != 1 || ws.w != 1) {
    shape_error("pointwise_conv", fmt::format("weight must be [Cout,Cin,1,1], got {}", ws.str()));
  }
  if (ws.c != xs.c) {
    shape_error("pointwise_conv",
                fmt::format("weight input channels {} != input channels {}", ws.c, xs.c));
  }
  const int cout = ws.n;
  if (bias) check_bias("pointwise_conv", g.value(*bias).shape(), cout);
  const std::size_t plane = xs.plane();

  Tensor out(Shape{xs.n, cout, xs.h, xs.w});
  for (int n = 0; n < xs.n; ++n) {
    for (int co = 0; co < cout; ++co) {
      Real* o = out.plane(n, co);
      const Real b = bias ? g.value(*bias)[co] : 0.0;
      std::fill(o, o + plane, b);
      for (int ci = 0; ci < xs.c; ++ci) {
        const Real k = wv(co, ci, 0, 0);
        if (k == 0) continue;
        const Real* in = xv.plane(n, ci);
        for (std::size_t p = 0; p < plane; ++p) o[p] += k * in[p];
      }
    }
  }

  std::vector<Var> inputs{x, w};
  if (bias) inputs.push_back(*bias);
  return g.record(std::move(out), inputs, [x, w, bias, xs, cout, plane](Graph& g, const Tensor& go) {
    const Tensor& xv = g.value(x);
    const Tensor& wv = g.value(w);
    if (g.requires_grad(x)) {
      Tensor& dx = g.grad_buffer(x);
      for (int n = 0; n < xs.n; ++n)
        for (int co = 0; co < cout; ++co) {
          const Real* gp = go.plane(n, co);
          for (int ci = 0; ci < xs.c; ++ci) {
            const Real k = wv(co, ci, 0, 0);
            Real* d = dx.plane(n, ci);
            for (std::size_t p = 0; p < plane; ++p) d[p] += k * gp[p];
          }
        }
    }
    if (g.requires_grad(w)) {
      Tensor& dw = g.grad_buffer(w);
      for (int n = 0; n < xs.n; ++n)
        for (int co = 0; co < cout; ++co) {
          const Real* gp = go.plane(n, co);
          for (int ci = 0; ci < xs.c; ++ci) {
            const Real* in = xv.plane(n, ci);
            Real acc = 0;
            for (std::size_t p = 0; p < plane; ++p) acc += gp[p] * in[p];
            dw(co, ci, 0, 0) += acc;
          }
        }
    }
    if (bias && g.requires_grad(*bias)) {
      Tensor& db = g.grad_buffer(*bias);
      for (int n = 0; n < xs.n; ++n)
        for (int co = 0; co < cout; ++co) {
          const Real* gp = go.plane(n, co);
          Real acc = 0;
          for (std::size_t p = 0; p < plane; ++p) acc += gp[p];
          db[co] += acc;
        }
    }
  });
}

namespace {

// Output columns ow with 0 <= ow*stride + kw - 1 < width.
std::pair<int, int> valid_columns(int kw, int stride, int width, int out_w) {
  int lo = 0;
  while (lo < out_w && lo * stride + kw - 1 < 0) ++lo;
  int hi = out_w;
  while (hi > lo && (hi - 1) * stride + kw - 1 >= width) --hi;
  return {lo, hi};
}

}  // namespace

Var conv3x3(Graph& g, Var x, Var w, std::optional<Var> bias, int stride) {
  if (stride != 1 && stride != 2) {
    shape_error("conv3x3", fmt::format("stride must be 1 or 2, got {}", stride));
  }
  const Tensor& xv = g.value(x);
  const Tensor& wv = g.value(w);
  const Shape xs = xv.shape();
  const Shape ws = wv.shape();
  if (ws.h != 3 || ws.w != 3) {
    shape_error("conv3x3", fmt::format("weight must be [Cout,Cin,3,3], got {}", ws.str()));
  }
  if (ws.c != xs.c) {
    shape_error("conv3x3", fmt::format("weight input channels {} != input channels {}", ws.c, xs.c));
  }
  const int cout = ws.n;
  if (bias) check_bias("conv3x3", g.value(*bias).shape(), cout);
  const int oh_n = (xs.h - 1) / stride + 1;
  const int ow_n = (xs.w - 1) / stride + 1;

  Tensor out(Shape{xs.n, cout, oh_n, ow_n});
  for (int n = 0; n < xs.n; ++n) {
    for (int co = 0; co < cout; ++co) {
      Real* o = out.plane(n, co);
      if (bias) std::fill(o, o + out.shape().plane(), g.value(*bias)[co]);
      for (int ci = 0; ci < xs.c; ++ci) {
        const Real* in = xv.plane(n, ci);
        for (int kh = 0; kh < 3; ++kh) {
          for (int kw = 0; kw < 3; ++kw) {
            const Real k = wv(co, ci, kh, kw);
            if (k == 0) continue;
            const auto [lo, hi] = valid_columns(kw, stride, xs.w, ow_n);
            for (int oh = 0; oh < oh_n; ++oh) {
              const int ih = oh * stride + kh - 1;
              if (ih < 0 || ih >= xs.h) continue;
              const Real* row = in + static_cast<std::size_t>(ih) * xs.w + (kw - 1);
              Real* orow = o + static_cast<std::size_t>(oh) * ow_n;
              if (stride == 1) {
                for (int ow = lo; ow < hi; ++ow) orow[ow] += k * row[ow];
              } else {
                for (int ow = lo; ow < hi; ++ow) orow[ow] += k * row[2 * ow];
              }
            }
          }
        }
      }
    }
  }

  std::vector<Var> inputs{x, w};
  if (bias) inputs.push_back(*bias);
  return g.record(std::move(out), inputs, [=](Graph& g, const Tensor& go) {
    const Tensor& xv = g.value(x);
    const Tensor& wv = g.value(w);
    const bool want_x = g.requires_grad(x);
    const bool want_w = g.requires_grad(w);
    Tensor* dx = want_x ? &g.grad_buffer(x) : nullptr;
    Tensor* dw = want_w ? &g.grad_buffer(w) : nullptr;
    for (int n = 0; n < xs.n; ++n) {
      for (int co = 0; co < cout; ++co) {
        const Real* gp = go.plane(n, co);
        for (int ci = 0; ci < xs.c; ++ci) {
          const Real* in = xv.plane(n, ci);
          Real* din = want_x ? dx->plane(n, ci) : nullptr;
          for (int kh = 0; kh < 3; ++kh) {
            for (int kw = 0; kw < 3; ++kw) {
              const Real k = wv(co, ci, kh, kw);
              const auto [lo, hi] = valid_columns(kw, stride, xs.w, ow_n);
              Real acc = 0;
              for (int oh = 0; oh < oh_n; ++oh) {
                const int ih = oh * stride + kh - 1;
                if (ih < 0 || ih >= xs.h) continue;
                const std::size_t off = static_cast<std::size_t>(ih) * xs.w + (kw - 1);
                const Real* grow = gp + static_cast<std::size_t>(oh) * ow_n;
                const Real* row = in + off;
                if (want_w) {
                  for (int ow = lo; ow < hi; ++ow) acc += grow[ow] * row[ow * stride];
                }
                if (want_x && k != 0) {
                  Real* drow = din + off;
                  for (int ow = lo; ow < hi; ++ow) drow[ow * stride] += k * grow[ow];
                }
              }
              if (want_w) (*dw)(co, ci, kh, kw) += acc;
            }
          }
        }
      }
    }
    if (bias && g.requires_grad(*bias)) {
      Tensor& db = g.grad_buffer(*bias);
      const std::size_t plane = go.shape().plane();
      for (int n = 0; n < xs.n; ++n)
        for (int co = 0; co < cout; ++co) {
          const Real* gp = go.plane(n, co);
          Real acc = 0;
          for (std::size_t p = 0; p < plane; ++p) acc += gp[p];
          db[co] += acc;
        }
    }
  });
}

Var group_norm(Graph& g, Var x, int groups, Var gamma, Var beta, Real eps) {
  const Tensor& xv = g.value(x);
  const Shape xs = xv.shape();
  if (groups < 1 || xs.c % groups != 0) {
    shape_error("group_norm",
                fmt::format("channels {} not divisible by groups {}", xs.c, groups));
  }
  check_bias("group_norm gamma", g.value(gamma).shape(), xs.c);
  check_bias("group_norm beta", g.value(beta).shape(), xs.c);
  const Tensor& gv = g.value(gamma);
  const Tensor& bv = g.value(beta);
  const int cpg = xs.c / groups;
  const std::size_t plane = xs.plane();
  const std::size_t count = plane * cpg;

  Tensor normalized(xs);
  std::vector<Real> rstd(static_cast<std::size_t>(xs.n) * groups);
  Tensor out(xs);
  for (int n = 0; n < xs.n; ++n) {
    for (int gi = 0; gi < groups; ++gi) {
      const Real* begin = xv.plane(n, gi * cpg);
      Real mean = 0;
      for (std::size_t i = 0; i < count; ++i) mean += begin[i];
      mean /= count;
      Real var = 0;
      for (std::size_t i = 0; i < count; ++i) {
        const Real d = begin[i] - mean;
        var += d * d;
      }
      var /= count;
      const Real r = 1.0 / std::sqrt(var + eps);
      rstd[static_cast<std::size_t>(n) * groups + gi] = r;
      for (int c = gi * cpg; c < (gi + 1) * cpg; ++c) {
        const Real* in = xv.plane(n, c);
        Real* xh = normalized.plane(n, c);
        Real* o = out.plane(n, c);
        for (std::size_t p = 0; p < plane; ++p) {
          xh[p] = (in[p] - mean) * r;
          o[p] = gv[c] * xh[p] + bv[c];
        }
      }
    }
  }

  return g.record(std::move(out), {x, gamma, beta},
                  [=, normalized = std::move(normalized), rstd = std::move(rstd)](
                      Graph& g, const Tensor& go) {
    const Tensor& gv = g.value(gamma);
    if (g.requires_grad(gamma) || g.requires_grad(beta)) {
      Tensor* dg = g.requires_grad(gamma) ? &g.grad_buffer(gamma) : nullptr;
      Tensor* db = g.requires_grad(beta) ? &g.grad_buffer(beta) : nullptr;
      for (int n = 0; n < xs.n; ++n)
        for (int c = 0; c < xs.c; ++c) {
          const Real* gp = go.plane(n, c);
          const Real* xh = normalized.plane(n, c);
          Real sg = 0, sgx = 0;
          for (std::size_t p = 0; p < plane; ++p) {
            sg += gp[p];
            sgx += gp[p] * xh[p];
          }
          if (dg) (*dg)[c] += sgx;
          if (db) (*db)[c] += sg;
        }
    }
    if (!g.requires_grad(x)) return;
    Tensor& dx = g.grad_buffer(x);
    for (int n = 0; n < xs.n; ++n) {
      for (int gi = 0; gi < groups; ++gi) {
        Real mean_d = 0, mean_dx = 0;
        for (int c = gi * cpg; c < (gi + 1) * cpg; ++c) {
          const Real* gp = go.plane(n, c);
          const Real* xh = normalized.plane(n, c);
          for (std::size_t p = 0; p < plane; ++p) {
            const Real d = gp[p] * gv[c];
            mean_d += d;
            mean_dx += d * xh[p];
          }
        }
        mean_d /= count;
        mean_dx /= count;
        const Real r = rstd[static_cast<std::size_t>(n) * groups + gi];
        for (int c = gi * cpg; c < (gi + 1) * cpg; ++c) {
          const Real* gp = go.plane(n, c);
          const Real* xh = normalized.plane(n, c);
          Real* d = dx.plane(n, c);
          for (std::size_t p = 0; p < plane; ++p) {
            d[p] += r * (gp[p] * gv[c] - mean_d - xh[p] * mean_dx);
          }
        }
      }
    }
  });
}

Var global_avg_pool(Graph& g, Var x) {
  const Tensor& xv = g.value(x);
  const Shape xs = xv.shape();
  const std::size_t plane = xs.plane();
  Tensor out(Shape{xs.n, xs.c, 1, 1});
  for (int n = 0; n < xs.n; ++n)
    for (int c = 0; c < xs.c; ++c) {
      const Real* in = xv.plane(n, c);
      Real acc = 0;
      for (std::size_t p = 0; p < plane; ++p) acc += in[p];
      out(n, c, 0, 0) = acc / plane;
    }
  return g.record(std::move(out), {x}, [x, xs, plane](Graph& g, const Tensor& go) {
    Tensor& dx = g.grad_buffer(x);
    for (int n = 0; n < xs.n; ++n)
      for (int c = 0; c < xs.c; ++c) {
        const Real share = go(n, c, 0, 0) / plane;
        Real* d = dx.plane(n, c);
        for (std::size_t p = 0; p < plane; ++p) d[p] += share;
      }
  });
}

Var activation(Graph& g, Var x, Activation kind) {
  const Tensor& xv = g.value(x);
  Tensor out(xv.shape());
  if (kind == Activation::kRelu) {
    for (std::size_t i = 0; i < xv.size(); ++i) out[i] = xv[i] > 0 ? xv[i] : 0.0;
    return g.record(std::move(out), {x}, [x](Graph& g, const Tensor& go) {
      const Tensor& xv = g.value(x);
      Tensor& dx = g.grad_buffer(x);
      for (std::size_t i = 0; i < xv.size(); ++i) {
        if (xv[i] > 0) dx[i] += go[i];
      }
    });
  }
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = sigmoid_value(xv[i]);
  Tensor saved = out;
  return g.record(std::move(out), {x}, [x, saved = std::move(saved)](Graph& g, const Tensor& go) {
    Tensor& dx = g.grad_buffer(x);
    for (std::size_t i = 0; i < saved.size(); ++i) {
      dx[i] += go[i] * saved[i] * (1.0 - saved[i]);
    }
  });
}

namespace {

enum class Broadcast { kNone, kSpatial, kChannel };

Broadcast broadcast_kind(const Shape& a, const Shape& b) {
  if (a == b) return Broadcast::kNone;
  if (b.n == a.n && b.c == 1 && b.h == a.h && b.w == a.w) return Broadcast::kSpatial;
  if (b.n == a.n && b.c == a.c && b.h == 1 && b.w == 1) return Broadcast::kChannel;
  shape_error("elementwise",
              fmt::format("cannot broadcast {} onto {}", b.str(), a.str()));
}

// Offset into b for element (n, c, p) of a.
inline std::size_t b_offset(Broadcast kind, const Shape& a, int n, int c, std::size_t p) {
  switch (kind) {
    case Broadcast::kNone:
      return (static_cast<std::size_t>(n) * a.c + c) * a.plane() + p;
    case Broadcast::kSpatial:
      return static_cast<std::size_t>(n) * a.plane() + p;
    case Broadcast::kChannel:
      return static_cast<std::size_t>(n) * a.c + c;
  }
  return 0;
}

}  // namespace

Var elementwise(Graph& g, Var a, Var b, Elementwise kind) {
  const Tensor& av = g.value(a);
  const Tensor& bv = g.value(b);
  const Shape as = av.shape();
  const Broadcast bc = broadcast_kind(as, bv.shape());
  const std::size_t plane = as.plane();
  Tensor out(as);
  for (int n = 0; n < as.n; ++n)
    for (int c = 0; c < as.c; ++c) {
      const std::size_t base = (static_cast<std::size_t>(n) * as.c + c) * plane;
      for (std::size_t p = 0; p < plane; ++p) {
        const Real y = bv[b_offset(bc, as, n, c, p)];
        out[base + p] = kind == Elementwise::kMul ? av[base + p] * y : av[base + p] + y;
      }
    }
  return g.record(std::move(out), {a, b}, [=](Graph& g, const Tensor& go) {
    const Tensor& av = g.value(a);
    const Tensor& bv = g.value(b);
    Tensor* da = g.requires_grad(a) ? &g.grad_buffer(a) : nullptr;
    Tensor* db = g.requires_grad(b) ? &g.grad_buffer(b) : nullptr;
    for (int n = 0; n < as.n; ++n)
      for (int c = 0; c < as.c; ++c) {
        const std::size_t base = (static_cast<std::size_t>(n) * as.c + c) * plane;
        for (std::size_t p = 0; p < plane; ++p) {
          const std::size_t bo = b_offset(bc, as, n, c, p);
          const Real gr = go[base + p];
          if (kind == Elementwise::kMul) {
            if (da) (*da)[base + p] += gr * bv[bo];
            if (db) (*db)[bo] += gr * av[base + p];
          } else {
            if (da) (*da)[base + p] += gr;
            if (db) (*db)[bo] += gr;
          }
        }
      }
  });
}

Var affine(Graph& g, Var x, Real scale, Real shift) {
  const Tensor& xv = g.value(x);
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = scale * xv[i] + shift;
  return g.record(std::move(out), {x}, [x, scale](Graph& g, const Tensor& go) {
    Tensor& dx = g.grad_buffer(x);
    for (std::size_t i = 0; i < go.size(); ++i) dx[i] += scale * go[i];
  });
}

namespace {

std::vector<AxisTap> resize_taps(int in, int out) {
  std::vector<AxisTap> taps(out);
  for (int i = 0; i < out; ++i) taps[i] = axis_tap(resize_source_coord(i, in, out), in);
  return taps;
}

}  // namespace

Tensor bilinear_resize_forward(const Tensor& xv, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1) {
    shape_error("bilinear_resize", fmt::format("output size {}x{} must be positive", out_h, out_w));
  }
  const Shape xs = xv.shape();
  const auto ty = resize_taps(xs.h, out_h);
  const auto tx = resize_taps(xs.w, out_w);
  Tensor out(Shape{xs.n, xs.c, out_h, out_w});
  for (int n = 0; n < xs.n; ++n)
    for (int c = 0; c < xs.c; ++c) {
      const Real* in = xv.plane(n, c);
      Real* o = out.plane(n, c);
      for (int i = 0; i < out_h; ++i) {
        const AxisTap& y = ty[i];
        const Real* r0 = in + static_cast<std::size_t>(y.lo) * xs.w;
        const Real* r1 = in + static_cast<std::size_t>(y.hi) * xs.w;
        for (int j = 0; j < out_w; ++j) {
          const AxisTap& x = tx[j];
          const Real top = r0[x.lo] * (1 - x.frac) + r0[x.hi] * x.frac;
          const Real bottom = r1[x.lo] * (1 - x.frac) + r1[x.hi] * x.frac;
          o[static_cast<std::size_t>(i) * out_w + j] = top * (1 - y.frac) + bottom * y.frac;
        }
      }
    }
  return out;
}

Var bilinear_resize(Graph& g, Var x, int out_h, int out_w) {
  const Shape xs = g.shape(x);
  if (xs.h == out_h && xs.w == out_w) {
    return affine(g, x, 1.0, 0.0);
  }
  Tensor out = bilinear_resize_forward(g.value(x), out_h, out_w);
  return g.record(std::move(out), {x}, [x, xs, out_h, out_w](Graph& g, const Tensor& go) {
    const auto ty = resize_taps(xs.h, out_h);
    const auto tx = resize_taps(xs.w, out_w);
    Tensor& dx = g.grad_buffer(x);
    for (int n = 0; n < xs.n; ++n)
      for (int c = 0; c < xs.c; ++c) {
        Real* d = dx.plane(n, c);
        const Real* gp = go.plane(n, c);
        for (int i = 0; i < out_h; ++i) {
          const AxisTap& y = ty[i];
          Real* r0 = d + static_cast<std::size_t>(y.lo) * xs.w;
          Real* r1 = d + static_cast<std::size_t>(y.hi) * xs.w;
          for (int j = 0; j < out_w; ++j) {
            const AxisTap& xt = tx[j];
            const Real v = gp[static_cast<std::size_t>(i) * out_w + j];
            r0[xt.lo] += v * (1 - y.frac) * (1 - xt.frac);
            r0[xt.hi] += v * (1 - y.frac) * xt.frac;
            r1[xt.lo] += v * y.frac * (1 - xt.frac);
            r1[xt.hi] += v * y.frac * xt.frac;
          }
        }
      }
  });
}

Var bce_with_logits(Graph& g, Var logits, const Tensor& targets) {
  const Tensor& xv = g.value(logits);
  if (targets.shape() != xv.shape()) {
    shape_error("bce_with_logits", fmt::format("targets {} do not match logits {}",
                                               targets.shape().str(), xv.shape().str()));
  }
  const std::size_t count = xv.size();
  Real loss = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const Real x = xv[i];
    loss += std::max(x, 0.0) - x * targets[i] + std::log1p(std::exp(-std::abs(x)));
  }
  Tensor out(Shape{}, loss / count);
  return g.record(std::move(out), {logits}, [logits, targets, count](Graph& g, const Tensor& go) {
    const Tensor& xv = g.value(logits);
    Tensor& dx = g.grad_buffer(logits);
    const Real scale = go[0] / count;
    for (std::size_t i = 0; i < count; ++i) {
      dx[i] += scale * (sigmoid_value(xv[i]) - targets[i]);
    }
  });
}

Var softmax_cross_entropy(Graph& g, Var logits, std::span<const int> labels,
                          int ignore_label) {
  const Tensor& xv = g.value(logits);
  const Shape xs = xv.shape();
  const std::size_t plane = xs.plane();
  if (labels.size() != static_cast<std::size_t>(xs.n) * plane) {
    shape_error("softmax_cross_entropy",
                fmt::format("expected {} labels for logits {}, got {}",
                            static_cast<std::size_t>(xs.n) * plane, xs.str(), labels.size()));
  }
  // Softmax probabilities, kept for the backward rule.
  Tensor probs(xs);
  Real loss = 0;
  std::size_t valid = 0;
  for (int n = 0; n < xs.n; ++n) {
    for (std::size_t p = 0; p < plane; ++p) {
      const int label = labels[static_cast<std::size_t>(n) * plane + p];
      Real mx = -std::numeric_limits<Real>::infinity();
      for (int c = 0; c < xs.c; ++c) mx = std::max(mx, xv.plane(n, c)[p]);
      Real z = 0;
      for (int c = 0; c < xs.c; ++c) {
        const Real e = std::exp(xv.plane(n, c)[p] - mx);
        probs.plane(n, c)[p] = e;
        z += e;
      }
      for (int c = 0; c < xs.c; ++c) probs.plane(n, c)[p] /= z;
      if (label == ignore_label) continue;
      if (label < 0 || label >= xs.c) {
        shape_error("softmax_cross_entropy",
                    fmt::format("label {} outside [0, {})", label, xs.c));
      }
      loss += std::log(z) + mx - xv.plane(n, label)[p];
      ++valid;
    }
  }
  Tensor out(Shape{}, valid ? loss / valid : 0.0);
  std::vector<int> saved(labels.begin(), labels.end());
  return g.record(std::move(out), {logits},
                  [=, probs = std::move(probs), saved = std::move(saved)](Graph& g, const Tensor& go) {
    if (valid == 0) return;
    Tensor& dx = g.grad_buffer(logits);
    const Real scale = go[0] / valid;
    for (int n = 0; n < xs.n; ++n)
      for (std::size_t p = 0; p < plane; ++p) {
        const int label = saved[static_cast<std::size_t>(n) * plane + p];
        if (label == ignore_label) continue;
        for (int c = 0; c < xs.c; ++c) {
          const Real target = c == label ? 1.0 : 0.0;
          dx.plane(n, c)[p] += scale * (probs.plane(n, c)[p] - target);
        }
      }
  });
}

Var weighted_sum(Graph& g, std::span<const Var> scalars, std::span<const Real> weights) {
  if (scalars.size() != weights.size()) {
    shape_error("weighted_sum", fmt::format("{} scalars but {} weights",
                                            scalars.size(), weights.size()));
  }
  Real total = 0;
  for (std::size_t i = 0; i < scalars.size(); ++i) {
    if (g.value(scalars[i]).size() != 1) {
      shape_error("weighted_sum", fmt::format("input {} is not a scalar", i));
    }
    total += weights[i] * g.value(scalars[i])[0];
  }
  std::vector<Var> inputs(scalars.begin(), scalars.end());
  std::vector<Real> w(weights.begin(), weights.end());
  return g.record(Tensor(Shape{}, total), inputs, [inputs, w](Graph& g, const Tensor& go) {
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      if (g.requires_grad(inputs[i])) g.grad_buffer(inputs[i])[0] += w[i] * go[0];
    }
  });
}

}  // namespace aunet
