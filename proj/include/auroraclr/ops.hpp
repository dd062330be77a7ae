// Copyright 2026 The auroraclr Authors.
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

#pragma once

/// \file ops.hpp
/// Differentiable operations on Tensor. Every function computes its forward
/// value eagerly and, when an input requires a gradient, records a backward
/// rule on the current tape.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "auroraclr/errors.hpp"
#include "auroraclr/tensor.hpp"

namespace auroraclr {

namespace kernels {

// C[m x n] (+)= A[m x k] * B[k x n], row-major.
inline void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
                    double* c, bool accumulate) {
  if (!accumulate) std::fill(c, c + m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      if (av == 0.0) continue;
      const double* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C[m x n] (+)= A[m x k] * B[n x k]^T.
inline void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
                    double* c, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = b + j * k;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
      c[i * n + j] = accumulate ? c[i * n + j] + s : s;
    }
  }
}

// C[m x n] (+)= A[k x m]^T * B[k x n].
inline void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
                    double* c, bool accumulate) {
  if (!accumulate) std::fill(c, c + m * n, 0.0);
  for (std::size_t p = 0; p < k; ++p) {
    const double* arow = a + p * m;
    const double* brow = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double av = arow[i];
      if (av == 0.0) continue;
      double* crow = c + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

struct ConvGeometry {
  std::size_t channels, height, width, kh, kw, stride, padding, out_h, out_w;
};

// Unfolds one image [C x H x W] into columns [C*kh*kw x out_h*out_w].
inline void im2col(const ConvGeometry& g, const double* image, double* cols) {
  const std::size_t plane = g.out_h * g.out_w;
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t ki = 0; ki < g.kh; ++ki) {
      for (std::size_t kj = 0; kj < g.kw; ++kj) {
        double* row = cols + ((c * g.kh + ki) * g.kw + kj) * plane;
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ki) -
                          static_cast<std::ptrdiff_t>(g.padding);
          double* out = row + oy * g.out_w;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.height)) {
            std::fill(out, out + g.out_w, 0.0);
            continue;
          }
          const double* src = image + (c * g.height + static_cast<std::size_t>(iy)) * g.width;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * g.stride + kj) -
                            static_cast<std::ptrdiff_t>(g.padding);
            out[ox] = (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.width))
                          ? 0.0
                          : src[static_cast<std::size_t>(ix)];
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatters column gradients back onto the image.
inline void col2im_add(const ConvGeometry& g, const double* cols, double* image) {
  const std::size_t plane = g.out_h * g.out_w;
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t ki = 0; ki < g.kh; ++ki) {
      for (std::size_t kj = 0; kj < g.kw; ++kj) {
        const double* row = cols + ((c * g.kh + ki) * g.kw + kj) * plane;
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ki) -
                          static_cast<std::ptrdiff_t>(g.padding);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.height)) continue;
          double* dst = image + (c * g.height + static_cast<std::size_t>(iy)) * g.width;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * g.stride + kj) -
                            static_cast<std::ptrdiff_t>(g.padding);
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.width)) continue;
            dst[static_cast<std::size_t>(ix)] += row[oy * g.out_w + ox];
          }
        }
      }
    }
  }
}

}  // namespace kernels

namespace detail {

inline void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) +
                         ", got shape " + shape_str(t.shape()));
  }
}

enum class BinaryKind { kAdd, kSub, kMul, kDiv };

inline Tensor binary(const Tensor& a, const Tensor& b, BinaryKind kind, const char* name) {
  const bool a_scalar = a.numel() == 1 && b.numel() != 1;
  const bool b_scalar = b.numel() == 1 && a.numel() != 1;
  const bool both_single = a.numel() == 1 && b.numel() == 1;
  if (!a_scalar && !b_scalar && !both_single && a.shape() != b.shape()) {
    throw DimensionError(std::string(name) + ": shapes " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()) + " differ and neither is a scalar");
  }
  const Shape out_shape = a_scalar ? b.shape() : a.shape();
  const std::size_t n = shape_numel(out_shape);
  const auto av = a.data();
  const auto bv = b.data();
  auto at_a = [&](std::size_t i) { return a_scalar ? av[0] : av[i]; };
  auto at_b = [&](std::size_t i) { return b_scalar ? bv[0] : bv[i]; };
  if (kind == BinaryKind::kDiv) {
    for (std::size_t i = 0; i < bv.size(); ++i) {
      if (bv[i] == 0.0) throw DomainError("div: division by zero");
    }
  }
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    switch (kind) {
      case BinaryKind::kAdd: out[i] = at_a(i) + at_b(i); break;
      case BinaryKind::kSub: out[i] = at_a(i) - at_b(i); break;
      case BinaryKind::kMul: out[i] = at_a(i) * at_b(i); break;
      case BinaryKind::kDiv: out[i] = at_a(i) / at_b(i); break;
    }
  }
  auto ai = a.impl();
  auto bi = b.impl();
  return make_result(out_shape, std::move(out), {&a, &b},
                     [ai, bi, kind, a_scalar, b_scalar, n](std::span<const double> g) {
                       auto* ga = grad_sink(ai);
                       auto* gb = grad_sink(bi);
                       const auto& av = ai->data;
                       const auto& bv = bi->data;
                       for (std::size_t i = 0; i < n; ++i) {
                         const double x = a_scalar ? av[0] : av[i];
                         const double y = b_scalar ? bv[0] : bv[i];
                         double da = 0.0, db = 0.0;
                         switch (kind) {
                           case BinaryKind::kAdd: da = g[i]; db = g[i]; break;
                           case BinaryKind::kSub: da = g[i]; db = -g[i]; break;
                           case BinaryKind::kMul: da = g[i] * y; db = g[i] * x; break;
                           case BinaryKind::kDiv: da = g[i] / y; db = -g[i] * x / (y * y); break;
                         }
                         if (ga) (*ga)[a_scalar ? 0 : i] += da;
                         if (gb) (*gb)[b_scalar ? 0 : i] += db;
                       }
                     });
}

template <typename Forward, typename Derivative>
Tensor unary(const Tensor& x, Forward f, Derivative df) {
  const auto xv = x.data();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = f(xv[i]);
  auto xi = x.impl();
  return make_result(x.shape(), std::move(out), {&x}, [xi, df](std::span<const double> g) {
    auto* gx = grad_sink(xi);
    for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += g[i] * df(xi->data[i]);
  });
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise

inline Tensor add(const Tensor& a, const Tensor& b) {
  return detail::binary(a, b, detail::BinaryKind::kAdd, "add");
}
inline Tensor sub(const Tensor& a, const Tensor& b) {
  return detail::binary(a, b, detail::BinaryKind::kSub, "sub");
}
inline Tensor mul(const Tensor& a, const Tensor& b) {
  return detail::binary(a, b, detail::BinaryKind::kMul, "mul");
}
inline Tensor div(const Tensor& a, const Tensor& b) {
  return detail::binary(a, b, detail::BinaryKind::kDiv, "div");
}

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator/(const Tensor& a, const Tensor& b) { return div(a, b); }
inline Tensor operator+(const Tensor& a, double s) { return add(a, Tensor::scalar(s)); }
inline Tensor operator-(const Tensor& a, double s) { return sub(a, Tensor::scalar(s)); }
inline Tensor operator*(const Tensor& a, double s) { return mul(a, Tensor::scalar(s)); }
inline Tensor operator/(const Tensor& a, double s) { return div(a, Tensor::scalar(s)); }
inline Tensor operator*(double s, const Tensor& a) { return mul(Tensor::scalar(s), a); }

inline Tensor neg(const Tensor& x) {
  return detail::unary(x, [](double v) { return -v; }, [](double) { return -1.0; });
}
inline Tensor operator-(const Tensor& x) { return neg(x); }

inline Tensor exp(const Tensor& x) {
  return detail::unary(x, [](double v) { return std::exp(v); },
                       [](double v) { return std::exp(v); });
}

inline Tensor log(const Tensor& x) {
  for (double v : x.data()) {
    if (!(v > 0.0)) throw DomainError("log: non-positive input " + std::to_string(v));
  }
  return detail::unary(x, [](double v) { return std::log(v); }, [](double v) { return 1.0 / v; });
}

// Subgradient at exactly zero is 0.
inline Tensor relu(const Tensor& x) {
  return detail::unary(x, [](double v) { return v > 0.0 ? v : 0.0; },
                       [](double v) { return v > 0.0 ? 1.0 : 0.0; });
}

// ---------------------------------------------------------------------------
// Shape

inline Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw DimensionError("reshape: cannot view " + shape_str(x.shape()) + " as " +
                         shape_str(shape));
  }
  std::vector<double> out(x.data().begin(), x.data().end());
  auto xi = x.impl();
  return detail::make_result(std::move(shape), std::move(out), {&x},
                             [xi](std::span<const double> g) {
                               auto* gx = detail::grad_sink(xi);
                               for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += g[i];
                             });
}

inline Tensor transpose(const Tensor& x) {
  detail::require_rank(x, 2, "transpose");
  const std::size_t m = x.dim(0), n = x.dim(1);
  std::vector<double> out(m * n);
  const auto xv = x.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = xv[i * n + j];
  auto xi = x.impl();
  return detail::make_result({n, m}, std::move(out), {&x}, [xi, m, n](std::span<const double> g) {
    auto* gx = detail::grad_sink(xi);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) (*gx)[i * n + j] += g[j * m + i];
  });
}

// ---------------------------------------------------------------------------
// Linear algebra

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw DimensionError("matmul: incompatible shapes " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()));
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<double> out(m * n);
  kernels::gemm_nn(m, n, k, a.data().data(), b.data().data(), out.data(), false);
  auto ai = a.impl();
  auto bi = b.impl();
  return detail::make_result({m, n}, std::move(out), {&a, &b},
                             [ai, bi, m, k, n](std::span<const double> g) {
                               if (auto* ga = detail::grad_sink(ai)) {
                                 // dA = dC * B^T
                                 kernels::gemm_nt(m, k, n, g.data(), bi->data.data(), ga->data(),
                                                  true);
                               }
                               if (auto* gb = detail::grad_sink(bi)) {
                                 // dB = A^T * dC
                                 kernels::gemm_tn(k, n, m, ai->data.data(), g.data(), gb->data(),
                                                  true);
                               }
                             });
}

// Cross-correlation of input [B x Cin x H x W] with kernel [Cout x Cin x kh x kw],
// zero padding on all four sides.
inline Tensor conv2d(const Tensor& input, const Tensor& kernel, std::size_t stride,
                     std::size_t padding) {
  detail::require_rank(input, 4, "conv2d input");
  detail::require_rank(kernel, 4, "conv2d kernel");
  if (stride == 0) throw DimensionError("conv2d: stride must be positive");
  const std::size_t batch = input.dim(0), cin = input.dim(1), h = input.dim(2), w = input.dim(3);
  const std::size_t cout = kernel.dim(0), kh = kernel.dim(2), kw = kernel.dim(3);
  if (kernel.dim(1) != cin) {
    throw DimensionError("conv2d: input " + shape_str(input.shape()) + " has " +
                         std::to_string(cin) + " channels but kernel " +
                         shape_str(kernel.shape()) + " expects " + std::to_string(kernel.dim(1)));
  }
  if (kh > h + 2 * padding || kw > w + 2 * padding) {
    throw DimensionError("conv2d: kernel " + shape_str(kernel.shape()) +
                         " larger than padded input " + shape_str(input.shape()) +
                         " with padding " + std::to_string(padding));
  }
  const kernels::ConvGeometry geo{cin,    h,       w,
                                  kh,     kw,      stride,
                                  padding, (h + 2 * padding - kh) / stride + 1,
                                  (w + 2 * padding - kw) / stride + 1};
  const std::size_t plane = geo.out_h * geo.out_w;
  const std::size_t ck = cin * kh * kw;
  std::vector<double> out(batch * cout * plane);
  std::vector<double> cols(ck * plane);
  const double* x = input.data().data();
  const double* kdata = kernel.data().data();
  for (std::size_t b = 0; b < batch; ++b) {
    kernels::im2col(geo, x + b * cin * h * w, cols.data());
    kernels::gemm_nn(cout, plane, ck, kdata, cols.data(), out.data() + b * cout * plane, false);
  }
  auto xi = input.impl();
  auto ki = kernel.impl();
  return detail::make_result(
      {batch, cout, geo.out_h, geo.out_w}, std::move(out), {&input, &kernel},
      [xi, ki, geo, batch, cout, plane, ck](std::span<const double> g) {
        auto* gx = detail::grad_sink(xi);
        auto* gk = detail::grad_sink(ki);
        std::vector<double> cols(ck * plane);
        const std::size_t image = geo.channels * geo.height * geo.width;
        for (std::size_t b = 0; b < batch; ++b) {
          const double* gb = g.data() + b * cout * plane;
          if (gk) {
            kernels::im2col(geo, xi->data.data() + b * image, cols.data());
            kernels::gemm_nt(cout, ck, plane, gb, cols.data(), gk->data(), true);
          }
          if (gx) {
            kernels::gemm_tn(ck, plane, cout, ki->data.data(), gb, cols.data(), false);
            kernels::col2im_add(geo, cols.data(), gx->data() + b * image);
          }
        }
      });
}

// ---------------------------------------------------------------------------
// Reductions and pooling

inline Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v;
  auto xi = x.impl();
  return detail::make_result({}, {s}, {&x}, [xi](std::span<const double> g) {
    auto* gx = detail::grad_sink(xi);
    for (double& v : *gx) v += g[0];
  });
}

inline Tensor mean(const Tensor& x) {
  if (x.numel() == 0) throw DimensionError("mean of empty tensor");
  return sum(x) / static_cast<double>(x.numel());
}

// Sum along one axis; the axis is removed from the result shape.
inline Tensor sum(const Tensor& x, std::size_t axis) {
  if (axis >= x.rank()) {
    throw DimensionError("sum: axis " + std::to_string(axis) + " invalid for shape " +
                         shape_str(x.shape()));
  }
  const Shape& s = x.shape();
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
  const std::size_t len = s[axis];
  Shape out_shape;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (i != axis) out_shape.push_back(s[i]);
  std::vector<double> out(outer * inner, 0.0);
  const auto xv = x.data();
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t l = 0; l < len; ++l)
      for (std::size_t i = 0; i < inner; ++i) out[o * inner + i] += xv[(o * len + l) * inner + i];
  auto xi = x.impl();
  return detail::make_result(std::move(out_shape), std::move(out), {&x},
                             [xi, outer, len, inner](std::span<const double> g) {
                               auto* gx = detail::grad_sink(xi);
                               for (std::size_t o = 0; o < outer; ++o)
                                 for (std::size_t l = 0; l < len; ++l)
                                   for (std::size_t i = 0; i < inner; ++i)
                                     (*gx)[(o * len + l) * inner + i] += g[o * inner + i];
                             });
}

inline Tensor mean(const Tensor& x, std::size_t axis) {
  const std::size_t len = x.dim(axis);
  return sum(x, axis) / static_cast<double>(len);
}

// Max pooling over [B x C x H x W]; padded positions never win. The argmax of
// each window is kept for the backward pass (first maximum on ties).
inline Tensor max_pool2d(const Tensor& x, std::size_t kernel, std::size_t stride,
                         std::size_t padding = 0) {
  detail::require_rank(x, 4, "max_pool2d");
  const std::size_t b = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (kernel == 0 || stride == 0 || kernel > h + 2 * padding || kernel > w + 2 * padding ||
      padding >= kernel) {
    throw DimensionError("max_pool2d: invalid window for input " + shape_str(x.shape()));
  }
  const std::size_t oh = (h + 2 * padding - kernel) / stride + 1;
  const std::size_t ow = (w + 2 * padding - kernel) / stride + 1;
  std::vector<double> out(b * c * oh * ow);
  std::vector<std::size_t> argmax(out.size());
  const auto xv = x.data();
  for (std::size_t p = 0; p < b * c; ++p) {
    const std::size_t base = p * h * w;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        double best = -std::numeric_limits<double>::infinity();
        std::size_t best_idx = base;
        for (std::size_t ky = 0; ky < kernel; ++ky) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * stride + ky) -
                          static_cast<std::ptrdiff_t>(padding);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
          for (std::size_t kx = 0; kx < kernel; ++kx) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * stride + kx) -
                            static_cast<std::ptrdiff_t>(padding);
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
            const std::size_t idx = base + static_cast<std::size_t>(iy) * w +
                                    static_cast<std::size_t>(ix);
            if (xv[idx] > best) {
              best = xv[idx];
              best_idx = idx;
            }
          }
        }
        const std::size_t o = (p * oh + oy) * ow + ox;
        out[o] = best;
        argmax[o] = best_idx;
      }
    }
  }
  auto xi = x.impl();
  return detail::make_result({b, c, oh, ow}, std::move(out), {&x},
                             [xi, argmax = std::move(argmax)](std::span<const double> g) {
                               auto* gx = detail::grad_sink(xi);
                               for (std::size_t o = 0; o < g.size(); ++o) (*gx)[argmax[o]] += g[o];
                             });
}

// [B x C x H x W] -> [B x C], mean over the spatial plane.
inline Tensor global_avg_pool(const Tensor& x) {
  detail::require_rank(x, 4, "global_avg_pool");
  const std::size_t b = x.dim(0), c = x.dim(1), plane = x.dim(2) * x.dim(3);
  std::vector<double> out(b * c, 0.0);
  const auto xv = x.data();
  for (std::size_t p = 0; p < b * c; ++p) {
    double s = 0.0;
    for (std::size_t i = 0; i < plane; ++i) s += xv[p * plane + i];
    out[p] = s / static_cast<double>(plane);
  }
  auto xi = x.impl();
  return detail::make_result({b, c}, std::move(out), {&x}, [xi, plane](std::span<const double> g) {
    auto* gx = detail::grad_sink(xi);
    const double inv = 1.0 / static_cast<double>(plane);
    for (std::size_t p = 0; p < g.size(); ++p)
      for (std::size_t i = 0; i < plane; ++i) (*gx)[p * plane + i] += g[p] * inv;
  });
}

// ---------------------------------------------------------------------------
// Normalization

struct BatchStatistics {
  std::vector<double> mean;
  std::vector<double> variance;  // biased (divides by the element count)
  std::size_t count = 0;         // elements per channel
};

// Per-channel batch normalization of [B x C x H x W] using the statistics of
// this batch. `stats`, when given, receives the batch mean and variance.
inline Tensor batch_norm_train(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                               double eps, BatchStatistics* stats = nullptr) {
  detail::require_rank(x, 4, "batch_norm");
  const std::size_t b = x.dim(0), c = x.dim(1), plane = x.dim(2) * x.dim(3);
  if (gamma.numel() != c || beta.numel() != c) {
    throw DimensionError("batch_norm: affine parameters do not match " + std::to_string(c) +
                         " channels");
  }
  const std::size_t count = b * plane;
  const auto xv = x.data();
  std::vector<double> mu(c, 0.0), var(c, 0.0), inv_std(c);
  for (std::size_t n = 0; n < b; ++n)
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t i = 0; i < plane; ++i) mu[ch] += xv[(n * c + ch) * plane + i];
  for (auto& m : mu) m /= static_cast<double>(count);
  for (std::size_t n = 0; n < b; ++n)
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t i = 0; i < plane; ++i) {
        const double d = xv[(n * c + ch) * plane + i] - mu[ch];
        var[ch] += d * d;
      }
  for (auto& v : var) v /= static_cast<double>(count);
  for (std::size_t ch = 0; ch < c; ++ch) inv_std[ch] = 1.0 / std::sqrt(var[ch] + eps);

  std::vector<double> xhat(x.numel()), out(x.numel());
  const auto gv = gamma.data();
  const auto bv = beta.data();
  for (std::size_t n = 0; n < b; ++n)
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t i = 0; i < plane; ++i) {
        const std::size_t idx = (n * c + ch) * plane + i;
        xhat[idx] = (xv[idx] - mu[ch]) * inv_std[ch];
        out[idx] = gv[ch] * xhat[idx] + bv[ch];
      }
  if (stats) *stats = BatchStatistics{mu, var, count};

  auto xi = x.impl();
  auto gi = gamma.impl();
  auto bi = beta.impl();
  return detail::make_result(
      x.shape(), std::move(out), {&x, &gamma, &beta},
      [xi, gi, bi, b, c, plane, count, xhat = std::move(xhat),
       inv_std = std::move(inv_std)](std::span<const double> g) {
        std::vector<double> sum_g(c, 0.0), sum_gx(c, 0.0);
        for (std::size_t n = 0; n < b; ++n)
          for (std::size_t ch = 0; ch < c; ++ch)
            for (std::size_t i = 0; i < plane; ++i) {
              const std::size_t idx = (n * c + ch) * plane + i;
              sum_g[ch] += g[idx];
              sum_gx[ch] += g[idx] * xhat[idx];
            }
        if (auto* gg = detail::grad_sink(gi))
          for (std::size_t ch = 0; ch < c; ++ch) (*gg)[ch] += sum_gx[ch];
        if (auto* gb = detail::grad_sink(bi))
          for (std::size_t ch = 0; ch < c; ++ch) (*gb)[ch] += sum_g[ch];
        if (auto* gx = detail::grad_sink(xi)) {
          const double inv_count = 1.0 / static_cast<double>(count);
          for (std::size_t n = 0; n < b; ++n)
            for (std::size_t ch = 0; ch < c; ++ch) {
              const double scale = gi->data[ch] * inv_std[ch];
              const double mg = sum_g[ch] * inv_count;
              const double mgx = sum_gx[ch] * inv_count;
              for (std::size_t i = 0; i < plane; ++i) {
                const std::size_t idx = (n * c + ch) * plane + i;
                (*gx)[idx] += scale * (g[idx] - mg - xhat[idx] * mgx);
              }
            }
        }
      });
}

// Inference-mode batch normalization with fixed running statistics; each
// sample is transformed independently of the rest of the batch.
inline Tensor batch_norm_eval(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                              std::span<const double> running_mean,
                              std::span<const double> running_var, double eps) {
  detail::require_rank(x, 4, "batch_norm");
  const std::size_t b = x.dim(0), c = x.dim(1), plane = x.dim(2) * x.dim(3);
  if (gamma.numel() != c || beta.numel() != c || running_mean.size() != c ||
      running_var.size() != c) {
    throw DimensionError("batch_norm: parameters do not match " + std::to_string(c) +
                         " channels");
  }
  std::vector<double> inv_std(c), xhat(x.numel()), out(x.numel());
  for (std::size_t ch = 0; ch < c; ++ch) inv_std[ch] = 1.0 / std::sqrt(running_var[ch] + eps);
  const auto xv = x.data();
  const auto gv = gamma.data();
  const auto bv = beta.data();
  for (std::size_t n = 0; n < b; ++n)
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t i = 0; i < plane; ++i) {
        const std::size_t idx = (n * c + ch) * plane + i;
        xhat[idx] = (xv[idx] - running_mean[ch]) * inv_std[ch];
        out[idx] = gv[ch] * xhat[idx] + bv[ch];
      }
  auto xi = x.impl();
  auto gi = gamma.impl();
  auto bi = beta.impl();
  return detail::make_result(
      x.shape(), std::move(out), {&x, &gamma, &beta},
      [xi, gi, bi, b, c, plane, xhat = std::move(xhat),
       inv_std = std::move(inv_std)](std::span<const double> g) {
        auto* gx = detail::grad_sink(xi);
        auto* gg = detail::grad_sink(gi);
        auto* gb = detail::grad_sink(bi);
        for (std::size_t n = 0; n < b; ++n)
          for (std::size_t ch = 0; ch < c; ++ch)
            for (std::size_t i = 0; i < plane; ++i) {
              const std::size_t idx = (n * c + ch) * plane + i;
              if (gx) (*gx)[idx] += g[idx] * gi->data[ch] * inv_std[ch];
              if (gg) (*gg)[ch] += g[idx] * xhat[idx];
              if (gb) (*gb)[ch] += g[idx];
            }
      });
}

inline constexpr double kMinRowNorm = 1e-12;

// Divides each row of [n x d] by its Euclidean norm.
inline Tensor l2_normalize_rows(const Tensor& x) {
  detail::require_rank(x, 2, "l2_normalize_rows");
  const std::size_t n = x.dim(0), d = x.dim(1);
  const auto xv = x.data();
  std::vector<double> norms(n), out(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) s += xv[i * d + j] * xv[i * d + j];
    norms[i] = std::sqrt(s);
    if (!(norms[i] >= kMinRowNorm)) {
      throw DegenerateEmbeddingError("row " + std::to_string(i) + " has norm " +
                                     std::to_string(norms[i]) + ", cannot normalize");
    }
    for (std::size_t j = 0; j < d; ++j) out[i * d + j] = xv[i * d + j] / norms[i];
  }
  auto xi = x.impl();
  std::vector<double> y = out;
  return detail::make_result(
      x.shape(), std::move(out), {&x},
      [xi, n, d, norms = std::move(norms), y = std::move(y)](std::span<const double> g) {
        auto* gx = detail::grad_sink(xi);
        for (std::size_t i = 0; i < n; ++i) {
          double dot = 0.0;
          for (std::size_t j = 0; j < d; ++j) dot += y[i * d + j] * g[i * d + j];
          for (std::size_t j = 0; j < d; ++j)
            (*gx)[i * d + j] += (g[i * d + j] - y[i * d + j] * dot) / norms[i];
        }
      });
}

// ---------------------------------------------------------------------------
// Row-wise selection for softmax-style losses

// For [n x m] input returns [n] with out[i] = x[i, columns[i]].
inline Tensor gather_columns(const Tensor& x, std::span<const std::size_t> columns) {
  detail::require_rank(x, 2, "gather_columns");
  const std::size_t n = x.dim(0), m = x.dim(1);
  if (columns.size() != n) throw DimensionError("gather_columns: one column index per row required");
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (columns[i] >= m) throw DimensionError("gather_columns: column index out of range");
    out[i] = x.data()[i * m + columns[i]];
  }
  auto xi = x.impl();
  std::vector<std::size_t> cols(columns.begin(), columns.end());
  return detail::make_result({n}, std::move(out), {&x},
                             [xi, m, cols = std::move(cols)](std::span<const double> g) {
                               auto* gx = detail::grad_sink(xi);
                               for (std::size_t i = 0; i < cols.size(); ++i)
                                 (*gx)[i * m + cols[i]] += g[i];
                             });
}

// For [n x m] input and an n*m keep-mask returns [n] with
// out[i] = log(sum over kept j of exp(x[i, j])). The row maximum over kept
// entries is subtracted before exponentiation.
inline Tensor masked_logsumexp_rows(const Tensor& x, std::span<const std::uint8_t> keep) {
  detail::require_rank(x, 2, "masked_logsumexp_rows");
  const std::size_t n = x.dim(0), m = x.dim(1);
  if (keep.size() != n * m) throw DimensionError("masked_logsumexp_rows: mask size mismatch");
  const auto xv = x.data();
  std::vector<double> out(n), softmax(n * m, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m; ++j)
      if (keep[i * m + j]) mx = std::max(mx, xv[i * m + j]);
    if (!std::isfinite(mx)) throw ContractError("masked_logsumexp_rows: row with no kept entries");
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j)
      if (keep[i * m + j]) {
        softmax[i * m + j] = std::exp(xv[i * m + j] - mx);
        s += softmax[i * m + j];
      }
    for (std::size_t j = 0; j < m; ++j) softmax[i * m + j] /= s;
    out[i] = mx + std::log(s);
  }
  auto xi = x.impl();
  return detail::make_result({n}, std::move(out), {&x},
                             [xi, m, softmax = std::move(softmax)](std::span<const double> g) {
                               auto* gx = detail::grad_sink(xi);
                               for (std::size_t i = 0; i < g.size(); ++i)
                                 for (std::size_t j = 0; j < m; ++j)
                                   (*gx)[i * m + j] += g[i] * softmax[i * m + j];
                             });
}

}  // namespace auroraclr
