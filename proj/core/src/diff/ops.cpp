#include "advtex/diff/ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <tuple>

#include "gemm.hpp"

namespace advtex::diff {

namespace {

void same_tape(Var a, Var b) {
  if (&a.tape() != &b.tape()) throw std::invalid_argument("operands live on different tapes");
}

void same_shape(const char* op, Var a, Var b) {
  same_tape(a, b);
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
}

void accumulate(Tensor& dst, const Tensor& src, double s = 1.0) {
  double* d = dst.data();
  const double* x = src.data();
  for (std::size_t i = 0; i < dst.size(); ++i) d[i] += s * x[i];
}

template <class F>
Tensor map(const Tensor& a, F f) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

template <class F>
Tensor zip(const Tensor& a, const Tensor& b, F f) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
  return out;
}

}  // namespace

Var add(Var a, Var b) {
  same_shape("add", a, b);
  return a.tape().record(zip(a.value(), b.value(), [](double x, double y) { return x + y; }), {a.id(), b.id()},
                         [](const Tensor& g, std::span<Tensor* const> in) {
                           if (in[0]) accumulate(*in[0], g);
                           if (in[1]) accumulate(*in[1], g);
                         });
}

Var sub(Var a, Var b) {
  same_shape("sub", a, b);
  return a.tape().record(zip(a.value(), b.value(), [](double x, double y) { return x - y; }), {a.id(), b.id()},
                         [](const Tensor& g, std::span<Tensor* const> in) {
                           if (in[0]) accumulate(*in[0], g);
                           if (in[1]) accumulate(*in[1], g, -1.0);
                         });
}

Var mul(Var a, Var b) {
  same_shape("mul", a, b);
  Tape* t = &a.tape();
  const std::size_t ia = a.id(), ib = b.id();
  return t->record(zip(a.value(), b.value(), [](double x, double y) { return x * y; }), {ia, ib},
                   [t, ia, ib](const Tensor& g, std::span<Tensor* const> in) {
                     const Tensor& av = t->value(ia);
                     const Tensor& bv = t->value(ib);
                     if (in[0]) {
                       for (std::size_t i = 0; i < g.size(); ++i) (*in[0])[i] += g[i] * bv[i];
                     }
                     if (in[1]) {
                       for (std::size_t i = 0; i < g.size(); ++i) (*in[1])[i] += g[i] * av[i];
                     }
                   });
}

Var div(Var a, Var b) {
  same_shape("div", a, b);
  Tape* t = &a.tape();
  const std::size_t ia = a.id(), ib = b.id();
  return t->record(zip(a.value(), b.value(), [](double x, double y) { return x / y; }), {ia, ib},
                   [t, ia, ib](const Tensor& g, std::span<Tensor* const> in) {
                     const Tensor& av = t->value(ia);
                     const Tensor& bv = t->value(ib);
                     if (in[0]) {
                       for (std::size_t i = 0; i < g.size(); ++i) (*in[0])[i] += g[i] / bv[i];
                     }
                     if (in[1]) {
                       for (std::size_t i = 0; i < g.size(); ++i) (*in[1])[i] -= g[i] * av[i] / (bv[i] * bv[i]);
                     }
                   });
}

Var scale(Var a, double c) {
  return a.tape().record(map(a.value(), [c](double x) { return c * x; }), {a.id()},
                         [c](const Tensor& g, std::span<Tensor* const> in) {
                           if (in[0]) accumulate(*in[0], g, c);
                         });
}

Var relu(Var a) {
  Tape* t = &a.tape();
  const std::size_t ia = a.id();
  return t->record(map(a.value(), [](double x) { return x > 0.0 ? x : 0.0; }), {ia},
                   [t, ia](const Tensor& g, std::span<Tensor* const> in) {
                     if (!in[0]) return;
                     const Tensor& av = t->value(ia);
                     for (std::size_t i = 0; i < g.size(); ++i) {
                       if (av[i] > 0.0) (*in[0])[i] += g[i];
                     }
                   });
}

Var clip(Var a, double lo, double hi) {
  if (!(lo <= hi)) throw std::invalid_argument("clip: lo must not exceed hi");
  Tape* t = &a.tape();
  const std::size_t ia = a.id();
  return t->record(map(a.value(), [lo, hi](double x) { return std::clamp(x, lo, hi); }), {ia},
                   [t, ia, lo, hi](const Tensor& g, std::span<Tensor* const> in) {
                     if (!in[0]) return;
                     const Tensor& av = t->value(ia);
                     for (std::size_t i = 0; i < g.size(); ++i) {
                       if (av[i] > lo && av[i] < hi) (*in[0])[i] += g[i];
                     }
                   });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  return a.tape().record(Tensor::scalar(s), {a.id()}, [](const Tensor& g, std::span<Tensor* const> in) {
    if (!in[0]) return;
    const double gv = g[0];
    for (double& v : in[0]->values()) v += gv;
  });
}

Var mean(Var a) {
  const std::size_t n = a.value().size();
  if (n == 0) throw ShapeError("mean of empty tensor");
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  const double inv = 1.0 / static_cast<double>(n);
  return a.tape().record(Tensor::scalar(s * inv), {a.id()}, [inv](const Tensor& g, std::span<Tensor* const> in) {
    if (!in[0]) return;
    const double gv = g[0] * inv;
    for (double& v : in[0]->values()) v += gv;
  });
}

Var l2norm(Var a) {
  double s = 0.0;
  for (double v : a.value().values()) s += v * v;
  const double norm = std::sqrt(s);
  Tape* t = &a.tape();
  const std::size_t ia = a.id();
  return t->record(Tensor::scalar(norm), {ia}, [t, ia, norm](const Tensor& g, std::span<Tensor* const> in) {
    if (!in[0] || norm == 0.0) return;
    const Tensor& av = t->value(ia);
    const double k = g[0] / norm;
    for (std::size_t i = 0; i < av.size(); ++i) (*in[0])[i] += k * av[i];
  });
}

Var dot(Var a, Var b) {
  same_tape(a, b);
  if (a.value().size() != b.value().size()) {
    throw ShapeError("dot: size mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  double s = 0.0;
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < av.size(); ++i) s += av[i] * bv[i];
  Tape* t = &a.tape();
  const std::size_t ia = a.id(), ib = b.id();
  return t->record(Tensor::scalar(s), {ia, ib}, [t, ia, ib](const Tensor& g, std::span<Tensor* const> in) {
    const double gv = g[0];
    if (in[0]) accumulate(*in[0], t->value(ib), gv);
    if (in[1]) accumulate(*in[1], t->value(ia), gv);
  });
}

Var matmul(Var a, Var b) {
  same_tape(a, b);
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.size() != 2 || sb.size() != 2 || sa[1] != sb[0]) {
    throw ShapeError("matmul: incompatible shapes " + shape_str(sa) + " x " + shape_str(sb));
  }
  const std::size_t m = sa[0], k = sa[1], n = sb[1];
  Tensor out({m, n});
  detail::gemm_nn(m, n, k, a.value().data(), b.value().data(), out.data());
  Tape* t = &a.tape();
  const std::size_t ia = a.id(), ib = b.id();
  return t->record(std::move(out), {ia, ib}, [t, ia, ib, m, n, k](const Tensor& g, std::span<Tensor* const> in) {
    // dA = G B^T, dB = A^T G
    if (in[0]) detail::gemm_nt(m, k, n, g.data(), t->value(ib).data(), in[0]->data());
    if (in[1]) detail::gemm_tn(k, n, m, t->value(ia).data(), g.data(), in[1]->data());
  });
}

Var reshape(Var a, Shape shape) {
  Tensor out = a.value().reshaped(std::move(shape));
  return a.tape().record(std::move(out), {a.id()}, [](const Tensor& g, std::span<Tensor* const> in) {
    if (in[0]) accumulate(*in[0], g);
  });
}

Var hwc_to_chw(Var a) {
  const Shape& s = a.shape();
  if (s.size() != 3) throw ShapeError("hwc_to_chw expects rank 3, got " + shape_str(s));
  const std::size_t h = s[0], w = s[1], c = s[2];
  Tensor out({c, h, w});
  const Tensor& av = a.value();
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t ch = 0; ch < c; ++ch) out[(ch * h + y) * w + x] = av[(y * w + x) * c + ch];
  return a.tape().record(std::move(out), {a.id()}, [h, w, c](const Tensor& g, std::span<Tensor* const> in) {
    if (!in[0]) return;
    Tensor& d = *in[0];
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x)
        for (std::size_t ch = 0; ch < c; ++ch) d[(y * w + x) * c + ch] += g[(ch * h + y) * w + x];
  });
}

Var conv2d(Var x, Var w, Var b, std::size_t stride) {
  same_tape(x, w);
  same_tape(x, b);
  const Shape& sx = x.shape();
  const Shape& sw = w.shape();
  if (sx.size() != 3 || sw.size() != 4 || sw[1] != sx[0] || sw[2] != sw[3] || b.shape() != Shape{sw[0]}) {
    throw ShapeError("conv2d: incompatible shapes x=" + shape_str(sx) + " w=" + shape_str(sw) +
                     " b=" + shape_str(b.shape()));
  }
  if (stride == 0) throw std::invalid_argument("conv2d: stride must be positive");
  const std::size_t c = sx[0], h = sx[1], wd = sx[2];
  const std::size_t o = sw[0], k = sw[2];
  if (h < k || wd < k) throw ShapeError("conv2d: kernel larger than input " + shape_str(sx));
  const std::size_t ho = (h - k) / stride + 1, wo = (wd - k) / stride + 1;
  const std::size_t rows = c * k * k, cols_n = ho * wo;

  auto cols = std::make_shared<std::vector<double>>(rows * cols_n);
  const double* xv = x.value().data();
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t ki = 0; ki < k; ++ki)
      for (std::size_t kj = 0; kj < k; ++kj) {
        double* dst = cols->data() + ((ch * k + ki) * k + kj) * cols_n;
        for (std::size_t oy = 0; oy < ho; ++oy) {
          const double* src = xv + (ch * h + oy * stride + ki) * wd + kj;
          for (std::size_t ox = 0; ox < wo; ++ox) dst[oy * wo + ox] = src[ox * stride];
        }
      }

  Tensor out({o, ho, wo});
  const double* bv = b.value().data();
  for (std::size_t oc = 0; oc < o; ++oc) std::fill_n(out.data() + oc * cols_n, cols_n, bv[oc]);
  detail::gemm_nn(o, cols_n, rows, w.value().data(), cols->data(), out.data());

  Tape* t = &x.tape();
  const std::size_t iw = w.id();
  return t->record(std::move(out), {x.id(), w.id(), b.id()},
                   [t, iw, cols, c, h, wd, o, k, stride, ho, wo, rows, cols_n](const Tensor& g,
                                                                             std::span<Tensor* const> in) {
                     if (in[1]) detail::gemm_nt(o, rows, cols_n, g.data(), cols->data(), in[1]->data());
                     if (in[2]) {
                       for (std::size_t oc = 0; oc < o; ++oc) {
                         double s = 0.0;
                         const double* gr = g.data() + oc * cols_n;
                         for (std::size_t p = 0; p < cols_n; ++p) s += gr[p];
                         (*in[2])[oc] += s;
                       }
                     }
                     if (in[0]) {
                       std::vector<double> gcols(rows * cols_n, 0.0);
                       detail::gemm_tn(rows, cols_n, o, t->value(iw).data(), g.data(), gcols.data());
                       double* gx = in[0]->data();
                       for (std::size_t ch = 0; ch < c; ++ch)
                         for (std::size_t ki = 0; ki < k; ++ki)
                           for (std::size_t kj = 0; kj < k; ++kj) {
                             const double* src = gcols.data() + ((ch * k + ki) * k + kj) * cols_n;
                             for (std::size_t oy = 0; oy < ho; ++oy) {
                               double* dst = gx + (ch * h + oy * stride + ki) * wd + kj;
                               for (std::size_t ox = 0; ox < wo; ++ox) dst[ox * stride] += src[oy * wo + ox];
                             }
                           }
                     }
                   });
}

Var maxpool2d(Var x, std::size_t kernel, std::size_t stride) {
  const Shape& sx = x.shape();
  if (sx.size() != 3) throw ShapeError("maxpool2d expects [C,H,W], got " + shape_str(sx));
  if (kernel == 0 || stride == 0) throw std::invalid_argument("maxpool2d: kernel and stride must be positive");
  const std::size_t c = sx[0], h = sx[1], w = sx[2];
  if (h < kernel || w < kernel) throw ShapeError("maxpool2d: window larger than input " + shape_str(sx));
  const std::size_t ho = (h - kernel) / stride + 1, wo = (w - kernel) / stride + 1;
  Tensor out({c, ho, wo});
  auto argmax = std::make_shared<std::vector<std::size_t>>(c * ho * wo);
  const Tensor& xv = x.value();
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t oy = 0; oy < ho; ++oy)
      for (std::size_t ox = 0; ox < wo; ++ox) {
        std::size_t best = (ch * h + oy * stride) * w + ox * stride;
        for (std::size_t ki = 0; ki < kernel; ++ki)
          for (std::size_t kj = 0; kj < kernel; ++kj) {
            const std::size_t idx = (ch * h + oy * stride + ki) * w + ox * stride + kj;
            if (xv[idx] > xv[best]) best = idx;
          }
        const std::size_t o = (ch * ho + oy) * wo + ox;
        out[o] = xv[best];
        (*argmax)[o] = best;
      }
  return x.tape().record(std::move(out), {x.id()}, [argmax](const Tensor& g, std::span<Tensor* const> in) {
    if (!in[0]) return;
    for (std::size_t i = 0; i < g.size(); ++i) (*in[0])[(*argmax)[i]] += g[i];
  });
}

Var gather(Var src, GatherTaps taps) {
  if (shape_numel(taps.out_shape) != taps.rows()) {
    throw ShapeError("gather: " + std::to_string(taps.rows()) + " rows for output shape " +
                     shape_str(taps.out_shape));
  }
  const Tensor& sv = src.value();
  for (std::uint32_t i : taps.index) {
    if (i >= sv.size()) throw ShapeError("gather: tap index out of range for source " + shape_str(sv.shape()));
  }
  Tensor out(taps.out_shape);
  for (std::size_t r = 0; r < taps.rows(); ++r) {
    double s = 0.0;
    for (std::size_t j = taps.offsets[r]; j < taps.offsets[r + 1]; ++j) s += taps.coef[j] * sv[taps.index[j]];
    out[r] = s;
  }
  auto shared = std::make_shared<const GatherTaps>(std::move(taps));
  return src.tape().record(std::move(out), {src.id()}, [shared](const Tensor& g, std::span<Tensor* const> in) {
    if (!in[0]) return;
    const GatherTaps& tp = *shared;
    for (std::size_t r = 0; r < tp.rows(); ++r) {
      const double gv = g[r];
      if (gv == 0.0) continue;
      for (std::size_t j = tp.offsets[r]; j < tp.offsets[r + 1]; ++j) (*in[0])[tp.index[j]] += tp.coef[j] * gv;
    }
  });
}

Var upsample_bilinear(Var x, std::size_t out_h, std::size_t out_w) {
  const Shape& sx = x.shape();
  if (sx.size() != 3) throw ShapeError("upsample_bilinear expects [C,h,w], got " + shape_str(sx));
  if (out_h == 0 || out_w == 0) throw ShapeError("upsample_bilinear: empty output");
  const std::size_t c = sx[0], h = sx[1], w = sx[2];
  auto axis = [](std::size_t out, std::size_t in, std::size_t i) {
    double s = (static_cast<double>(i) + 0.5) * static_cast<double>(in) / static_cast<double>(out) - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(in - 1));
    const auto i0 = static_cast<std::size_t>(std::floor(s));
    const std::size_t i1 = std::min(i0 + 1, in - 1);
    return std::tuple{i0, i1, s - static_cast<double>(i0)};
  };
  GatherTaps taps;
  taps.out_shape = {c, out_h, out_w};
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < out_h; ++y) {
      const auto [y0, y1, fy] = axis(out_h, h, y);
      for (std::size_t xo = 0; xo < out_w; ++xo) {
        const auto [x0, x1, fx] = axis(out_w, w, xo);
        const auto base = static_cast<std::uint32_t>(ch * h * w);
        taps.add_tap(base + static_cast<std::uint32_t>(y0 * w + x0), (1 - fy) * (1 - fx));
        taps.add_tap(base + static_cast<std::uint32_t>(y0 * w + x1), (1 - fy) * fx);
        taps.add_tap(base + static_cast<std::uint32_t>(y1 * w + x0), fy * (1 - fx));
        taps.add_tap(base + static_cast<std::uint32_t>(y1 * w + x1), fy * fx);
        taps.end_row();
      }
    }
  return gather(x, std::move(taps));
}

Var scalar_function(Var x, double value, Tensor dvalue_dx) {
  if (dvalue_dx.size() != x.value().size()) {
    throw ShapeError("scalar_function: gradient shape " + shape_str(dvalue_dx.shape()) + " does not match input " +
                     shape_str(x.shape()));
  }
  if (!dvalue_dx.all_finite()) throw NumericError("scalar_function: non-finite gradient");
  auto grad = std::make_shared<const Tensor>(std::move(dvalue_dx));
  return x.tape().record(Tensor::scalar(value), {x.id()}, [grad](const Tensor& g, std::span<Tensor* const> in) {
    if (in[0]) accumulate(*in[0], *grad, g[0]);
  });
}

}  // namespace advtex::diff
