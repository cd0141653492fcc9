#include "tensor/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "common/error.hpp"

namespace focusfuse::FOCUSFUSE_PRECISION::ops {
namespace {

using RowMat = Eigen::Matrix<real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;
using StridedMap = Eigen::Map<RowMat, 0, Eigen::OuterStride<>>;
using ConstStridedMap = Eigen::Map<const RowMat, 0, Eigen::OuterStride<>>;

// Upper bound on im2col scratch, in floats. Convolutions over large images
// are processed in bands of output rows so the scratch never exceeds this.
constexpr int64_t kColBudget = int64_t{1} << 22;

// Smallest/largest real strictly inside (0, 1).
constexpr real kUnitLow = std::numeric_limits<real>::min();
constexpr real kUnitHigh = real(1) - std::numeric_limits<real>::epsilon() / 2;

struct ConvGeom {
  int64_t n, c_in, h, w;
  int64_t c_out, k, stride, pad, dil;
  int64_t ho, wo;
  int64_t patch() const { return c_in * k * k; }
  bool pointwise() const { return k == 1 && stride == 1 && pad == 0; }
  int64_t band_rows() const {
    const int64_t per_row = patch() * wo;
    return std::clamp<int64_t>(kColBudget / std::max<int64_t>(per_row, 1), 1, ho);
  }
};

void im2col(const real* x, const ConvGeom& g, int64_t oy0, int64_t oy1, real* col) {
  const int64_t cols = (oy1 - oy0) * g.wo;
  for (int64_t ci = 0; ci < g.c_in; ++ci) {
    for (int64_t ky = 0; ky < g.k; ++ky) {
      for (int64_t kx = 0; kx < g.k; ++kx) {
        real* row = col + ((ci * g.k + ky) * g.k + kx) * cols;
        const int64_t x_off = kx * g.dil - g.pad;
        for (int64_t oy = oy0; oy < oy1; ++oy) {
          real* dst = row + (oy - oy0) * g.wo;
          const int64_t iy = oy * g.stride - g.pad + ky * g.dil;
          if (iy < 0 || iy >= g.h) {
            std::fill(dst, dst + g.wo, 0.0f);
            continue;
          }
          const real* src = x + (ci * g.h + iy) * g.w;
          if (g.stride == 1) {
            const int64_t lo = std::clamp<int64_t>(-x_off, 0, g.wo);
            const int64_t hi = std::clamp<int64_t>(g.w - x_off, lo, g.wo);
            std::fill(dst, dst + lo, 0.0f);
            std::memcpy(dst + lo, src + lo + x_off, sizeof(real) * static_cast<size_t>(hi - lo));
            std::fill(dst + hi, dst + g.wo, 0.0f);
          } else {
            for (int64_t ox = 0; ox < g.wo; ++ox) {
              const int64_t ix = ox * g.stride + x_off;
              dst[ox] = (ix >= 0 && ix < g.w) ? src[ix] : 0.0f;
            }
          }
        }
      }
    }
  }
}

void col2im_add(const real* col, const ConvGeom& g, int64_t oy0, int64_t oy1, real* dx) {
  const int64_t cols = (oy1 - oy0) * g.wo;
  for (int64_t ci = 0; ci < g.c_in; ++ci) {
    for (int64_t ky = 0; ky < g.k; ++ky) {
      for (int64_t kx = 0; kx < g.k; ++kx) {
        const real* row = col + ((ci * g.k + ky) * g.k + kx) * cols;
        const int64_t x_off = kx * g.dil - g.pad;
        for (int64_t oy = oy0; oy < oy1; ++oy) {
          const int64_t iy = oy * g.stride - g.pad + ky * g.dil;
          if (iy < 0 || iy >= g.h) continue;
          const real* src = row + (oy - oy0) * g.wo;
          real* dst = dx + (ci * g.h + iy) * g.w;
          for (int64_t ox = 0; ox < g.wo; ++ox) {
            const int64_t ix = ox * g.stride + x_off;
            if (ix >= 0 && ix < g.w) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape().str() + " vs " +
                     b.shape().str());
  }
}

// Applies `fn(value) -> (out, local_derivative)` element-wise and records a
// backward that multiplies the upstream gradient by the saved derivative.
template <typename Fn>
Tensor unary_op(const Tensor& x, const char* name, Fn fn) {
  Tensor out(x.shape());
  const bool record = Tape::should_record({&x});
  std::vector<real> deriv(record ? static_cast<size_t>(x.numel()) : 0);
  auto xv = x.data();
  auto ov = out.data();
  for (size_t i = 0; i < xv.size(); ++i) {
    real d;
    ov[i] = fn(xv[i], d);
    if (record) deriv[i] = d;
  }
  if (record) {
    Tape::active()->record(name, {x}, out,
                           [x, deriv = std::move(deriv)](const Tensor& o) mutable {
                             auto g = o.grad();
                             auto gx = x.grad_buffer();
                             for (size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * deriv[i];
                           });
  }
  return out;
}

real clamp_unit(real v) { return std::clamp(v, kUnitLow, kUnitHigh); }

void check_window(const Tensor& x, int window, int stride, const char* op) {
  if (window < 1 || stride < 1) {
    throw ShapeError(std::string(op) + ": window and stride must be >= 1");
  }
  if (window > x.shape().h || window > x.shape().w) {
    throw ShapeError(std::string(op) + ": window " + std::to_string(window) +
                     " larger than input " + x.shape().str());
  }
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, int stride, int padding,
              int dilation) {
  const Shape xs = x.shape();
  const Shape ws = weight.shape();
  if (ws.h != ws.w) throw ShapeError("conv2d: kernel must be square, got " + ws.str());
  if (stride < 1 || padding < 0 || dilation < 1) {
    throw ShapeError("conv2d: stride >= 1, padding >= 0, dilation >= 1 required");
  }
  if (xs.c != ws.c) {
    throw ShapeError("conv2d: input has " + std::to_string(xs.c) + " channels, weight " +
                     ws.str() + " expects " + std::to_string(ws.c));
  }
  if (!bias.empty() && bias.numel() != ws.n) {
    throw ShapeError("conv2d: bias must have " + std::to_string(ws.n) + " elements");
  }
  ConvGeom g{xs.n, xs.c, xs.h, xs.w, ws.n, ws.h, stride, padding, dilation, 0, 0};
  g.ho = window_output_size(xs.h, g.k, stride, padding, dilation);
  g.wo = window_output_size(xs.w, g.k, stride, padding, dilation);
  if (g.ho <= 0 || g.wo <= 0) {
    throw ShapeError("conv2d: non-positive output size for input " + xs.str() + " kernel " +
                     ws.str());
  }

  Tensor out(Shape{g.n, g.c_out, g.ho, g.wo});
  const int64_t out_plane = g.ho * g.wo;
  const ConstMatMap wmat(weight.ptr(), g.c_out, g.patch());
  std::vector<real> col;

  for (int64_t n = 0; n < g.n; ++n) {
    const real* xn = x.ptr() + n * g.c_in * g.h * g.w;
    real* yn = out.ptr() + n * g.c_out * out_plane;
    if (g.pointwise()) {
      MatMap(yn, g.c_out, out_plane).noalias() = wmat * ConstMatMap(xn, g.c_in, out_plane);
    } else {
      const int64_t band = g.band_rows();
      col.resize(static_cast<size_t>(g.patch() * band * g.wo));
      for (int64_t oy0 = 0; oy0 < g.ho; oy0 += band) {
        const int64_t oy1 = std::min(g.ho, oy0 + band);
        const int64_t cols = (oy1 - oy0) * g.wo;
        im2col(xn, g, oy0, oy1, col.data());
        StridedMap(yn + oy0 * g.wo, g.c_out, cols, Eigen::OuterStride<>(out_plane)).noalias() =
            wmat * ConstMatMap(col.data(), g.patch(), cols);
      }
    }
    if (!bias.empty()) {
      for (int64_t c = 0; c < g.c_out; ++c) {
        const real b = bias.data()[static_cast<size_t>(c)];
        real* p = yn + c * out_plane;
        for (int64_t i = 0; i < out_plane; ++i) p[i] += b;
      }
    }
  }

  if (Tape::should_record({&x, &weight, &bias})) {
    Tape::active()->record(
        "conv2d", {x, weight, bias}, out, [x, weight, bias, g](const Tensor& o) mutable {
          const int64_t out_plane = g.ho * g.wo;
          const bool need_dx = x.requires_grad();
          const bool need_dw = weight.requires_grad();
          const bool need_db = !bias.empty() && bias.requires_grad();
          const ConstMatMap wmat(weight.ptr(), g.c_out, g.patch());
          real* dw_ptr = need_dw ? weight.grad_buffer().data() : nullptr;
          real* dx_ptr = need_dx ? x.grad_buffer().data() : nullptr;
          real* db_ptr = need_db ? bias.grad_buffer().data() : nullptr;
          std::vector<real> col;
          std::vector<real> dcol;
          for (int64_t n = 0; n < g.n; ++n) {
            const real* xn = x.ptr() + n * g.c_in * g.h * g.w;
            const real* gn = o.grad().data() + n * g.c_out * out_plane;
            if (need_db) {
              for (int64_t c = 0; c < g.c_out; ++c) {
                const real* p = gn + c * out_plane;
                real acc = 0.0f;
                for (int64_t i = 0; i < out_plane; ++i) acc += p[i];
                db_ptr[c] += acc;
              }
            }
            if (g.pointwise()) {
              const ConstMatMap gy(gn, g.c_out, out_plane);
              if (need_dw) {
                MatMap(dw_ptr, g.c_out, g.c_in).noalias() +=
                    gy * ConstMatMap(xn, g.c_in, out_plane).transpose();
              }
              if (need_dx) {
                MatMap(dx_ptr + n * g.c_in * out_plane, g.c_in, out_plane).noalias() +=
                    wmat.transpose() * gy;
              }
              continue;
            }
            const int64_t band = g.band_rows();
            for (int64_t oy0 = 0; oy0 < g.ho; oy0 += band) {
              const int64_t oy1 = std::min(g.ho, oy0 + band);
              const int64_t cols = (oy1 - oy0) * g.wo;
              const ConstStridedMap gy(gn + oy0 * g.wo, g.c_out, cols,
                                       Eigen::OuterStride<>(out_plane));
              if (need_dw) {
                col.resize(static_cast<size_t>(g.patch() * cols));
                im2col(xn, g, oy0, oy1, col.data());
                MatMap(dw_ptr, g.c_out, g.patch()).noalias() +=
                    gy * ConstMatMap(col.data(), g.patch(), cols).transpose();
              }
              if (need_dx) {
                dcol.resize(static_cast<size_t>(g.patch() * cols));
                MatMap(dcol.data(), g.patch(), cols).noalias() = wmat.transpose() * gy;
                col2im_add(dcol.data(), g, oy0, oy1, dx_ptr + n * g.c_in * g.h * g.w);
              }
            }
          }
        });
  }
  return out;
}

Tensor avg_pool2d(const Tensor& x, int window, int stride) {
  check_window(x, window, stride, "avg_pool2d");
  const Shape s = x.shape();
  const int64_t ho = window_output_size(s.h, window, stride, 0);
  const int64_t wo = window_output_size(s.w, window, stride, 0);
  Tensor out(Shape{s.n, s.c, ho, wo});
  const real inv = 1.0f / static_cast<real>(window * window);
  for (int64_t p = 0; p < s.n * s.c; ++p) {
    const real* src = x.ptr() + p * s.h * s.w;
    real* dst = out.ptr() + p * ho * wo;
    for (int64_t oy = 0; oy < ho; ++oy) {
      for (int64_t ox = 0; ox < wo; ++ox) {
        real acc = 0.0f;
        for (int ky = 0; ky < window; ++ky) {
          const real* r = src + (oy * stride + ky) * s.w + ox * stride;
          for (int kx = 0; kx < window; ++kx) acc += r[kx];
        }
        dst[oy * wo + ox] = acc * inv;
      }
    }
  }
  if (Tape::should_record({&x})) {
    Tape::active()->record("avg_pool2d", {x}, out,
                           [x, window, stride, ho, wo, inv](const Tensor& o) mutable {
                             const Shape s = x.shape();
                             auto gx = x.grad_buffer();
                             auto g = o.grad();
                             for (int64_t p = 0; p < s.n * s.c; ++p) {
                               real* dst = gx.data() + p * s.h * s.w;
                               const real* src = g.data() + p * ho * wo;
                               for (int64_t oy = 0; oy < ho; ++oy) {
                                 for (int64_t ox = 0; ox < wo; ++ox) {
                                   const real v = src[oy * wo + ox] * inv;
                                   for (int ky = 0; ky < window; ++ky) {
                                     real* r = dst + (oy * stride + ky) * s.w + ox * stride;
                                     for (int kx = 0; kx < window; ++kx) r[kx] += v;
                                   }
                                 }
                               }
                             }
                           });
  }
  return out;
}

Tensor max_pool2d(const Tensor& x, int window, int stride) {
  check_window(x, window, stride, "max_pool2d");
  const Shape s = x.shape();
  const int64_t ho = window_output_size(s.h, window, stride, 0);
  const int64_t wo = window_output_size(s.w, window, stride, 0);
  Tensor out(Shape{s.n, s.c, ho, wo});
  const bool record = Tape::should_record({&x});
  std::vector<int64_t> argmax(record ? static_cast<size_t>(out.numel()) : 0);
  for (int64_t p = 0; p < s.n * s.c; ++p) {
    const real* src = x.ptr() + p * s.h * s.w;
    real* dst = out.ptr() + p * ho * wo;
    for (int64_t oy = 0; oy < ho; ++oy) {
      for (int64_t ox = 0; ox < wo; ++ox) {
        int64_t best = (oy * stride) * s.w + ox * stride;
        for (int ky = 0; ky < window; ++ky) {
          for (int kx = 0; kx < window; ++kx) {
            const int64_t idx = (oy * stride + ky) * s.w + ox * stride + kx;
            if (src[idx] > src[best]) best = idx;  // strict: first maximum wins
          }
        }
        dst[oy * wo + ox] = src[best];
        if (record) argmax[static_cast<size_t>(p * ho * wo + oy * wo + ox)] = p * s.h * s.w + best;
      }
    }
  }
  if (record) {
    Tape::active()->record("max_pool2d", {x}, out,
                           [x, argmax = std::move(argmax)](const Tensor& o) mutable {
                             auto gx = x.grad_buffer();
                             auto g = o.grad();
                             for (size_t i = 0; i < g.size(); ++i) {
                               gx[static_cast<size_t>(argmax[i])] += g[i];
                             }
                           });
  }
  return out;
}

namespace {

struct Lerp {
  int64_t lo, hi;
  real frac;  // weight of `hi`
};

std::vector<Lerp> upsample_axis(int64_t in) {
  std::vector<Lerp> table(static_cast<size_t>(2 * in));
  for (int64_t o = 0; o < 2 * in; ++o) {
    double src = (static_cast<double>(o) + 0.5) / 2.0 - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in - 1));
    const auto lo = static_cast<int64_t>(std::floor(src));
    const int64_t hi = std::min(lo + 1, in - 1);
    table[static_cast<size_t>(o)] = Lerp{lo, hi, static_cast<real>(src - static_cast<double>(lo))};
  }
  return table;
}

}  // namespace

Tensor upsample_bilinear_x2(const Tensor& x) {
  const Shape s = x.shape();
  if (s.h < 1 || s.w < 1) throw ShapeError("upsample_bilinear_x2: empty input " + s.str());
  const auto ty = upsample_axis(s.h);
  const auto tx = upsample_axis(s.w);
  const int64_t ho = 2 * s.h;
  const int64_t wo = 2 * s.w;
  Tensor out(Shape{s.n, s.c, ho, wo});
  for (int64_t p = 0; p < s.n * s.c; ++p) {
    const real* src = x.ptr() + p * s.h * s.w;
    real* dst = out.ptr() + p * ho * wo;
    for (int64_t oy = 0; oy < ho; ++oy) {
      const Lerp& ly = ty[static_cast<size_t>(oy)];
      const real* r0 = src + ly.lo * s.w;
      const real* r1 = src + ly.hi * s.w;
      for (int64_t ox = 0; ox < wo; ++ox) {
        const Lerp& lx = tx[static_cast<size_t>(ox)];
        const real top = r0[lx.lo] + lx.frac * (r0[lx.hi] - r0[lx.lo]);
        const real bot = r1[lx.lo] + lx.frac * (r1[lx.hi] - r1[lx.lo]);
        dst[oy * wo + ox] = top + ly.frac * (bot - top);
      }
    }
  }
  if (Tape::should_record({&x})) {
    Tape::active()->record("upsample_bilinear_x2", {x}, out, [x, ty, tx](const Tensor& o) mutable {
      const Shape s = x.shape();
      const int64_t ho = 2 * s.h;
      const int64_t wo = 2 * s.w;
      auto gx = x.grad_buffer();
      auto g = o.grad();
      for (int64_t p = 0; p < s.n * s.c; ++p) {
        real* dst = gx.data() + p * s.h * s.w;
        const real* src = g.data() + p * ho * wo;
        for (int64_t oy = 0; oy < ho; ++oy) {
          const Lerp& ly = ty[static_cast<size_t>(oy)];
          real* r0 = dst + ly.lo * s.w;
          real* r1 = dst + ly.hi * s.w;
          for (int64_t ox = 0; ox < wo; ++ox) {
            const Lerp& lx = tx[static_cast<size_t>(ox)];
            const real v = src[oy * wo + ox];
            const real vt = v * (1.0f - ly.frac);
            const real vb = v * ly.frac;
            r0[lx.lo] += vt * (1.0f - lx.frac);
            r0[lx.hi] += vt * lx.frac;
            r1[lx.lo] += vb * (1.0f - lx.frac);
            r1[lx.hi] += vb * lx.frac;
          }
        }
      }
    });
  }
  return out;
}

Tensor concat_channels(std::span<const Tensor> xs) {
  if (xs.empty()) throw ShapeError("concat_channels: no inputs");
  const Shape first = xs.front().shape();
  int64_t channels = 0;
  for (const Tensor& t : xs) {
    const Shape s = t.shape();
    if (s.n != first.n || s.h != first.h || s.w != first.w) {
      throw ShapeError("concat_channels: spatial/batch mismatch " + first.str() + " vs " + s.str());
    }
    channels += s.c;
  }
  const int64_t plane = first.h * first.w;
  Tensor out(Shape{first.n, channels, first.h, first.w});
  for (int64_t n = 0; n < first.n; ++n) {
    real* dst = out.ptr() + n * channels * plane;
    for (const Tensor& t : xs) {
      const int64_t chunk = t.shape().c * plane;
      std::memcpy(dst, t.ptr() + n * chunk, sizeof(real) * static_cast<size_t>(chunk));
      dst += chunk;
    }
  }
  if (Tape::should_record(xs)) {
    std::vector<Tensor> inputs(xs.begin(), xs.end());
    Tape::active()->record("concat_channels", inputs, out,
                           [inputs, channels, plane](const Tensor& o) mutable {
                             const int64_t batch = o.shape().n;
                             int64_t offset = 0;
                             for (Tensor& t : inputs) {
                               const int64_t chunk = t.shape().c * plane;
                               if (t.requires_grad()) {
                                 auto gx = t.grad_buffer();
                                 for (int64_t n = 0; n < batch; ++n) {
                                   const real* src = o.grad().data() + n * channels * plane + offset;
                                   real* dst = gx.data() + n * chunk;
                                   for (int64_t i = 0; i < chunk; ++i) dst[i] += src[i];
                                 }
                               }
                               offset += chunk;
                             }
                           });
  }
  return out;
}

Tensor prelu(const Tensor& x, const Tensor& a) {
  const Shape s = x.shape();
  if (a.numel() != s.c) {
    throw ShapeError("prelu: expected " + std::to_string(s.c) + " slopes, got " +
                     std::to_string(a.numel()));
  }
  Tensor out(s);
  const int64_t plane = s.h * s.w;
  for (int64_t n = 0; n < s.n; ++n) {
    for (int64_t c = 0; c < s.c; ++c) {
      const real slope = a.data()[static_cast<size_t>(c)];
      const real* src = x.ptr() + (n * s.c + c) * plane;
      real* dst = out.ptr() + (n * s.c + c) * plane;
      for (int64_t i = 0; i < plane; ++i) dst[i] = src[i] >= 0.0f ? src[i] : slope * src[i];
    }
  }
  if (Tape::should_record({&x, &a})) {
    Tape::active()->record("prelu", {x, a}, out, [x, a](const Tensor& o) mutable {
      const Shape s = x.shape();
      const int64_t plane = s.h * s.w;
      real* gx = x.requires_grad() ? x.grad_buffer().data() : nullptr;
      real* ga = a.requires_grad() ? a.grad_buffer().data() : nullptr;
      for (int64_t n = 0; n < s.n; ++n) {
        for (int64_t c = 0; c < s.c; ++c) {
          const real slope = a.data()[static_cast<size_t>(c)];
          const int64_t base = (n * s.c + c) * plane;
          const real* src = x.ptr() + base;
          const real* g = o.grad().data() + base;
          real acc = 0.0f;
          for (int64_t i = 0; i < plane; ++i) {
            const bool pos = src[i] >= 0.0f;
            if (gx != nullptr) gx[base + i] += pos ? g[i] : slope * g[i];
            if (!pos) acc += g[i] * src[i];
          }
          if (ga != nullptr) ga[c] += acc;
        }
      }
    });
  }
  return out;
}

Tensor leaky_relu(const Tensor& x, real slope) {
  return unary_op(x, "leaky_relu", [slope](real v, real& d) {
    d = v >= 0.0f ? 1.0f : slope;
    return v >= 0.0f ? v : slope * v;
  });
}

Tensor sigmoid(const Tensor& x) {
  return unary_op(x, "sigmoid", [](real v, real& d) {
    const real y = 1.0f / (1.0f + std::exp(-v));
    d = y * (1.0f - y);
    return clamp_unit(y);
  });
}

Tensor tanh_unit(const Tensor& x) {
  // (tanh(v) + 1) / 2 == 1 / (1 + exp(-2v)); the logistic form keeps
  // precision near 0 where tanh saturates to -1.
  return unary_op(x, "tanh_unit", [](real v, real& d) {
    const real y = 1.0f / (1.0f + std::exp(-2.0f * v));
    d = 2.0f * y * (1.0f - y);
    return clamp_unit(y);
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor out(a.shape());
  for (int64_t i = 0; i < a.numel(); ++i) out.ptr()[i] = a.ptr()[i] + b.ptr()[i];
  if (Tape::should_record({&a, &b})) {
    Tape::active()->record("add", {a, b}, out, [a, b](const Tensor& o) mutable {
      auto g = o.grad();
      if (a.requires_grad()) {
        auto ga = a.grad_buffer();
        for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (b.requires_grad()) {
        auto gb = b.grad_buffer();
        for (size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
      }
    });
  }
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  Tensor out(a.shape());
  for (int64_t i = 0; i < a.numel(); ++i) out.ptr()[i] = a.ptr()[i] - b.ptr()[i];
  if (Tape::should_record({&a, &b})) {
    Tape::active()->record("sub", {a, b}, out, [a, b](const Tensor& o) mutable {
      auto g = o.grad();
      if (a.requires_grad()) {
        auto ga = a.grad_buffer();
        for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (b.requires_grad()) {
        auto gb = b.grad_buffer();
        for (size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
      }
    });
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  Tensor out(a.shape());
  for (int64_t i = 0; i < a.numel(); ++i) out.ptr()[i] = a.ptr()[i] * b.ptr()[i];
  if (Tape::should_record({&a, &b})) {
    Tape::active()->record("mul", {a, b}, out, [a, b](const Tensor& o) mutable {
      auto g = o.grad();
      if (a.requires_grad()) {
        auto ga = a.grad_buffer();
        for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * b.data()[i];
      }
      if (b.requires_grad()) {
        auto gb = b.grad_buffer();
        for (size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * a.data()[i];
      }
    });
  }
  return out;
}

Tensor scale(const Tensor& x, real factor) {
  return unary_op(x, "scale", [factor](real v, real& d) {
    d = factor;
    return v * factor;
  });
}

Tensor sum(const Tensor& x) {
  double acc = 0.0;
  for (real v : x.data()) acc += v;
  Tensor out = Tensor::scalar(static_cast<real>(acc));
  if (Tape::should_record({&x})) {
    Tape::active()->record("sum", {x}, out, [x](const Tensor& o) mutable {
      const real g = o.grad()[0];
      for (real& v : x.grad_buffer()) v += g;
    });
  }
  return out;
}

Tensor mean(const Tensor& x) {
  if (x.empty()) throw ShapeError("mean: empty tensor");
  double acc = 0.0;
  for (real v : x.data()) acc += v;
  const double count = static_cast<double>(x.numel());
  Tensor out = Tensor::scalar(static_cast<real>(acc / count));
  if (Tape::should_record({&x})) {
    Tape::active()->record("mean", {x}, out, [x, count](const Tensor& o) mutable {
      const auto g = static_cast<real>(o.grad()[0] / count);
      for (real& v : x.grad_buffer()) v += g;
    });
  }
  return out;
}

Tensor softmax_channels(const Tensor& logits) {
  const Shape s = logits.shape();
  Tensor out(s);
  const int64_t plane = s.h * s.w;
  for (int64_t n = 0; n < s.n; ++n) {
    const real* src = logits.ptr() + n * s.c * plane;
    real* dst = out.ptr() + n * s.c * plane;
    for (int64_t i = 0; i < plane; ++i) {
      real peak = src[i];
      for (int64_t c = 1; c < s.c; ++c) peak = std::max(peak, src[c * plane + i]);
      double total = 0.0;
      for (int64_t c = 0; c < s.c; ++c) total += std::exp(static_cast<double>(src[c * plane + i] - peak));
      for (int64_t c = 0; c < s.c; ++c) {
        dst[c * plane + i] =
            static_cast<real>(std::exp(static_cast<double>(src[c * plane + i] - peak)) / total);
      }
    }
  }
  return out;
}

}  // namespace focusfuse::FOCUSFUSE_PRECISION::ops
