/* Copyright 2026 The swunet Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License. */

#include "swunet/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

namespace swunet {
namespace {

struct ConvGeometry {
  int in_c, in_h, in_w;
  int out_c, kh, kw;
  int stride;
  int out_h, out_w;
  int pad_top, pad_left;

  int k() const { return in_c * kh * kw; }
  bool pointwise() const {
    return kh == 1 && kw == 1 && stride == 1 && pad_top == 0 && pad_left == 0;
  }
};

ConvGeometry conv_geometry(const Shape& x, const Shape& w, int stride,
                           Padding padding) {
  if (stride < 1) {
    throw ArgumentError("conv2d stride must be positive, got " +
                        std::to_string(stride));
  }
  if (w.c != x.c) {
    throw ShapeError("conv2d weights expect " + std::to_string(w.c) +
                     " input channels, input has " + std::to_string(x.c));
  }
  ConvGeometry g{x.c, x.h, x.w, w.n, w.h, w.w, stride, 0, 0, 0, 0};
  if (padding == Padding::kSame) {
    g.out_h = (x.h + stride - 1) / stride;
    g.out_w = (x.w + stride - 1) / stride;
    g.pad_top = std::max((g.out_h - 1) * stride + w.h - x.h, 0) / 2;
    g.pad_left = std::max((g.out_w - 1) * stride + w.w - x.w, 0) / 2;
  } else {
    if (x.h < w.h || x.w < w.w) {
      throw ShapeError("conv2d valid padding: kernel larger than input");
    }
    g.out_h = (x.h - w.h) / stride + 1;
    g.out_w = (x.w - w.w) / stride + 1;
  }
  return g;
}

// Output rows processed per im2col chunk; bounds the scratch buffer.
int chunk_rows(const ConvGeometry& g) {
  const std::size_t target = std::size_t{1} << 19;
  const std::size_t per_row = static_cast<std::size_t>(g.k()) * g.out_w;
  return static_cast<int>(std::clamp<std::size_t>(target / std::max<std::size_t>(per_row, 1), 1,
                                                  static_cast<std::size_t>(g.out_h)));
}

// col[k][p] for output rows [oy0, oy1) of image plane block `x` (c,h,w).
template <typename T>
void im2col(const T* x, const ConvGeometry& g, int oy0, int oy1, T* col) {
  const int rows = oy1 - oy0;
  const std::size_t ld = static_cast<std::size_t>(rows) * g.out_w;
  for (int c = 0; c < g.in_c; ++c) {
    const T* xc = x + static_cast<std::size_t>(c) * g.in_h * g.in_w;
    for (int ky = 0; ky < g.kh; ++ky) {
      for (int kx = 0; kx < g.kw; ++kx) {
        T* dst = col + ((static_cast<std::size_t>(c) * g.kh + ky) * g.kw + kx) * ld;
        for (int oy = oy0; oy < oy1; ++oy) {
          T* row = dst + static_cast<std::size_t>(oy - oy0) * g.out_w;
          const int iy = oy * g.stride - g.pad_top + ky;
          if (iy < 0 || iy >= g.in_h) {
            std::fill(row, row + g.out_w, T(0));
            continue;
          }
          const T* src = xc + static_cast<std::size_t>(iy) * g.in_w;
          for (int ox = 0; ox < g.out_w; ++ox) {
            const int ix = ox * g.stride - g.pad_left + kx;
            row[ox] = (ix >= 0 && ix < g.in_w) ? src[ix] : T(0);
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* col, const ConvGeometry& g, int oy0, int oy1, T* dx) {
  const int rows = oy1 - oy0;
  const std::size_t ld = static_cast<std::size_t>(rows) * g.out_w;
  for (int c = 0; c < g.in_c; ++c) {
    T* xc = dx + static_cast<std::size_t>(c) * g.in_h * g.in_w;
    for (int ky = 0; ky < g.kh; ++ky) {
      for (int kx = 0; kx < g.kw; ++kx) {
        const T* src = col + ((static_cast<std::size_t>(c) * g.kh + ky) * g.kw + kx) * ld;
        for (int oy = oy0; oy < oy1; ++oy) {
          const int iy = oy * g.stride - g.pad_top + ky;
          if (iy < 0 || iy >= g.in_h) continue;
          const T* row = src + static_cast<std::size_t>(oy - oy0) * g.out_w;
          T* dst = xc + static_cast<std::size_t>(iy) * g.in_w;
          for (int ox = 0; ox < g.out_w; ++ox) {
            const int ix = ox * g.stride - g.pad_left + kx;
            if (ix >= 0 && ix < g.in_w) dst[ix] += row[ox];
          }
        }
      }
    }
  }
}

// out[o][p] += sum_k w[o][k] * col[k][p]
template <typename T>
void gemm_acc(int out_c, int k_dim, std::size_t p_len, const T* w,
              const T* col, std::size_t ldc, T* out, std::size_t ldo) {
  int o = 0;
  for (; o + 4 <= out_c; o += 4) {
    T* o0 = out + static_cast<std::size_t>(o) * ldo;
    T* o1 = o0 + ldo;
    T* o2 = o1 + ldo;
    T* o3 = o2 + ldo;
    for (int k = 0; k < k_dim; ++k) {
      const T w0 = w[static_cast<std::size_t>(o) * k_dim + k];
      const T w1 = w[static_cast<std::size_t>(o + 1) * k_dim + k];
      const T w2 = w[static_cast<std::size_t>(o + 2) * k_dim + k];
      const T w3 = w[static_cast<std::size_t>(o + 3) * k_dim + k];
      const T* c = col + static_cast<std::size_t>(k) * ldc;
      for (std::size_t p = 0; p < p_len; ++p) {
        const T v = c[p];
        o0[p] += w0 * v;
        o1[p] += w1 * v;
        o2[p] += w2 * v;
        o3[p] += w3 * v;
      }
    }
  }
  for (; o < out_c; ++o) {
    T* o0 = out + static_cast<std::size_t>(o) * ldo;
    for (int k = 0; k < k_dim; ++k) {
      const T w0 = w[static_cast<std::size_t>(o) * k_dim + k];
      const T* c = col + static_cast<std::size_t>(k) * ldc;
      for (std::size_t p = 0; p < p_len; ++p) o0[p] += w0 * c[p];
    }
  }
}

// Fixed eight-lane reduction; the lane split keeps the order deterministic.
template <typename T>
T dot(const T* a, const T* b, std::size_t len) {
  T acc[8] = {};
  std::size_t p = 0;
  for (; p + 8 <= len; p += 8) {
    for (int j = 0; j < 8; ++j) acc[j] += a[p + j] * b[p + j];
  }
  for (; p < len; ++p) acc[0] += a[p] * b[p];
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) +
         ((acc[4] + acc[5]) + (acc[6] + acc[7]));
}

template <typename T>
T total(const T* a, std::size_t len) {
  T acc[8] = {};
  std::size_t p = 0;
  for (; p + 8 <= len; p += 8) {
    for (int j = 0; j < 8; ++j) acc[j] += a[p + j];
  }
  for (; p < len; ++p) acc[0] += a[p];
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) +
         ((acc[4] + acc[5]) + (acc[6] + acc[7]));
}

// dcol[k][p] = sum_o w[o][k] * dout[o][p]
template <typename T>
void gemm_t_acc(int out_c, int k_dim, std::size_t p_len, const T* w,
                const T* dout, std::size_t ldo, T* dcol, std::size_t ldc) {
  for (int k = 0; k < k_dim; ++k) {
    T* d = dcol + static_cast<std::size_t>(k) * ldc;
    for (int o = 0; o < out_c; ++o) {
      const T wv = w[static_cast<std::size_t>(o) * k_dim + k];
      const T* g = dout + static_cast<std::size_t>(o) * ldo;
      for (std::size_t p = 0; p < p_len; ++p) d[p] += wv * g[p];
    }
  }
}

template <typename T>
Tensor<T> conv_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>* b,
                       const ConvGeometry& g) {
  Tensor<T> out(x.n(), g.out_c, g.out_h, g.out_w);
  const std::size_t out_plane = static_cast<std::size_t>(g.out_h) * g.out_w;
  std::vector<T> col;
  const int rows = chunk_rows(g);
  for (int n = 0; n < x.n(); ++n) {
    T* on = out.plane(n, 0);
    if (b) {
      for (int o = 0; o < g.out_c; ++o) {
        std::fill(on + o * out_plane, on + (o + 1) * out_plane, (*b)[o]);
      }
    }
    const T* xn = x.plane(n, 0);
    if (g.pointwise()) {
      gemm_acc(g.out_c, g.k(), out_plane, w.raw(), xn, out_plane, on, out_plane);
      continue;
    }
    for (int oy0 = 0; oy0 < g.out_h; oy0 += rows) {
      const int oy1 = std::min(oy0 + rows, g.out_h);
      const std::size_t p_len = static_cast<std::size_t>(oy1 - oy0) * g.out_w;
      col.resize(static_cast<std::size_t>(g.k()) * p_len);
      im2col(xn, g, oy0, oy1, col.data());
      gemm_acc(g.out_c, g.k(), p_len, w.raw(), col.data(), p_len,
               on + static_cast<std::size_t>(oy0) * g.out_w, out_plane);
    }
  }
  return out;
}

template <typename T>
void conv_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& dout,
                   const ConvGeometry& g, Tensor<T>* dx, Tensor<T>* dw,
                   Tensor<T>* db) {
  const std::size_t out_plane = static_cast<std::size_t>(g.out_h) * g.out_w;
  const int k_dim = g.k();
  if (db) {
    for (int o = 0; o < g.out_c; ++o) {
      T acc = 0;
      for (int n = 0; n < x.n(); ++n) acc += total(dout.plane(n, o), out_plane);
      (*db)[o] += acc;
    }
  }
  std::vector<T> col, dcol;
  const int rows = chunk_rows(g);
  for (int n = 0; n < x.n(); ++n) {
    const T* xn = x.plane(n, 0);
    const T* gn = dout.plane(n, 0);
    if (g.pointwise()) {
      if (dw) {
        for (int o = 0; o < g.out_c; ++o) {
          for (int k = 0; k < k_dim; ++k) {
            (*dw)[static_cast<std::size_t>(o) * k_dim + k] +=
                dot(gn + o * out_plane, xn + k * out_plane, out_plane);
          }
        }
      }
      if (dx) {
        gemm_t_acc(g.out_c, k_dim, out_plane, w.raw(), gn, out_plane,
                   dx->plane(n, 0), out_plane);
      }
      continue;
    }
    for (int oy0 = 0; oy0 < g.out_h; oy0 += rows) {
      const int oy1 = std::min(oy0 + rows, g.out_h);
      const std::size_t p_len = static_cast<std::size_t>(oy1 - oy0) * g.out_w;
      const T* gchunk = gn + static_cast<std::size_t>(oy0) * g.out_w;
      if (dw) {
        col.resize(static_cast<std::size_t>(k_dim) * p_len);
        im2col(xn, g, oy0, oy1, col.data());
        for (int o = 0; o < g.out_c; ++o) {
          for (int k = 0; k < k_dim; ++k) {
            (*dw)[static_cast<std::size_t>(o) * k_dim + k] +=
                dot(gchunk + o * out_plane, col.data() + k * p_len, p_len);
          }
        }
      }
      if (dx) {
        dcol.assign(static_cast<std::size_t>(k_dim) * p_len, T(0));
        gemm_t_acc(g.out_c, k_dim, p_len, w.raw(), gchunk, out_plane,
                   dcol.data(), p_len);
        col2im_add(dcol.data(), g, oy0, oy1, dx->plane(n, 0));
      }
    }
  }
}

void require_same_shape(const Shape& a, const Shape& b, const char* op) {
  if (!(a == b)) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.str() + " vs " +
                     b.str());
  }
}

}  // namespace

template <typename T>
Var<T> conv2d(Tape<T>& tape, const Var<T>& input, const Var<T>& weights,
              const Var<T>& bias, int stride, Padding padding) {
  const ConvGeometry g =
      conv_geometry(input->value.shape(), weights->value.shape(), stride, padding);
  if (bias && bias->value.size() != static_cast<std::size_t>(g.out_c)) {
    throw ShapeError("conv2d bias length " + std::to_string(bias->value.size()) +
                     " != output channels " + std::to_string(g.out_c));
  }
  Tensor<T> out =
      conv_forward(input->value, weights->value, bias ? &bias->value : nullptr, g);
  return tape.record(std::move(out), {input, weights, bias},
                     [input, weights, bias, g](Node<T>& self) {
                       Tensor<T>* dx = input->requires_grad ? &input->grad_buffer() : nullptr;
                       Tensor<T>* dw = weights->requires_grad ? &weights->grad_buffer() : nullptr;
                       Tensor<T>* db = (bias && bias->requires_grad) ? &bias->grad_buffer() : nullptr;
                       conv_backward(input->value, weights->value, self.grad, g, dx, dw, db);
                     });
}

template <typename T>
Var<T> relu(Tape<T>& tape, const Var<T>& x) {
  Tensor<T> out(x->value.shape());
  auto src = x->value.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] > T(0) ? src[i] : T(0);
  return tape.record(std::move(out), {x}, [x](Node<T>& self) {
    auto& gx = x->grad_buffer();
    auto in = x->value.data();
    auto g = self.grad.data();
    auto d = gx.data();
    for (std::size_t i = 0; i < in.size(); ++i) {
      if (in[i] > T(0)) d[i] += g[i];
    }
  });
}

template <typename T>
Var<T> sigmoid(Tape<T>& tape, const Var<T>& x) {
  Tensor<T> out(x->value.shape());
  auto src = x->value.data();
  auto dst = out.data();
  const T lo = std::numeric_limits<T>::min();
  const T hi = T(1) - std::numeric_limits<T>::epsilon() / 2;
  for (std::size_t i = 0; i < src.size(); ++i) {
    const T v = src[i];
    T y;
    if (v >= T(0)) {
      y = T(1) / (T(1) + std::exp(-v));
    } else {
      const T e = std::exp(v);
      y = e / (T(1) + e);
    }
    dst[i] = std::clamp(y, lo, hi);
  }
  Tensor<T> y_copy = out;
  return tape.record(std::move(out), {x}, [x, y = std::move(y_copy)](Node<T>& self) {
    auto d = x->grad_buffer().data();
    auto g = self.grad.data();
    auto yv = y.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i] * yv[i] * (T(1) - yv[i]);
  });
}

template <typename T>
Var<T> softmax_channels(Tape<T>& tape, const Var<T>& x) {
  const Shape s = x->value.shape();
  if (s.c < 2) throw ShapeError("softmax_channels needs at least 2 channels");
  Tensor<T> out(s);
  const std::size_t plane = s.plane();
  std::vector<T> e(s.c);
  for (int n = 0; n < s.n; ++n) {
    const T* xn = x->value.plane(n, 0);
    T* yn = out.plane(n, 0);
    for (std::size_t p = 0; p < plane; ++p) {
      T m = xn[p];
      for (int c = 1; c < s.c; ++c) m = std::max(m, xn[c * plane + p]);
      T z = 0;
      for (int c = 0; c < s.c; ++c) {
        e[c] = std::exp(xn[c * plane + p] - m);
        z += e[c];
      }
      for (int c = 0; c < s.c; ++c) yn[c * plane + p] = e[c] / z;
    }
  }
  Tensor<T> y_copy = out;
  return tape.record(std::move(out), {x}, [x, y = std::move(y_copy)](Node<T>& self) {
    const Shape s = y.shape();
    const std::size_t plane = s.plane();
    auto& gx = x->grad_buffer();
    for (int n = 0; n < s.n; ++n) {
      const T* yn = y.plane(n, 0);
      const T* gn = self.grad.plane(n, 0);
      T* dn = gx.plane(n, 0);
      for (std::size_t p = 0; p < plane; ++p) {
        T dotv = 0;
        for (int c = 0; c < s.c; ++c) dotv += gn[c * plane + p] * yn[c * plane + p];
        for (int c = 0; c < s.c; ++c) {
          dn[c * plane + p] += yn[c * plane + p] * (gn[c * plane + p] - dotv);
        }
      }
    }
  });
}

template <typename T>
Var<T> batchnorm(Tape<T>& tape, const Var<T>& x, const Var<T>& gamma,
                 const Var<T>& beta, const BatchNormState<T>& state, Mode mode) {
  const Shape s = x->value.shape();
  const std::size_t ch = static_cast<std::size_t>(s.c);
  if (gamma->value.size() != ch || beta->value.size() != ch) {
    throw ShapeError("batchnorm: gamma/beta length does not match " +
                     std::to_string(s.c) + " channels");
  }
  if (!state.running_mean || !state.running_var ||
      state.running_mean->size() != ch || state.running_var->size() != ch) {
    throw ShapeError("batchnorm: running statistics do not match channels");
  }
  const std::size_t plane = s.plane();
  const double count = static_cast<double>(s.n) * plane;
  std::vector<T> mean(ch), inv_std(ch);
  if (mode == Mode::kTrain) {
    for (int c = 0; c < s.c; ++c) {
      double acc = 0;
      for (int n = 0; n < s.n; ++n) {
        const T* p = x->value.plane(n, c);
        for (std::size_t i = 0; i < plane; ++i) acc += p[i];
      }
      const double mu = acc / count;
      double var = 0;
      for (int n = 0; n < s.n; ++n) {
        const T* p = x->value.plane(n, c);
        for (std::size_t i = 0; i < plane; ++i) {
          const double d = p[i] - mu;
          var += d * d;
        }
      }
      var /= count;
      mean[c] = static_cast<T>(mu);
      inv_std[c] = static_cast<T>(1.0 / std::sqrt(var + state.epsilon));
      T& rm = (*state.running_mean)[c];
      T& rv = (*state.running_var)[c];
      rm = static_cast<T>(state.momentum * rm + (1.0 - state.momentum) * mu);
      rv = static_cast<T>(state.momentum * rv + (1.0 - state.momentum) * var);
    }
  } else {
    for (int c = 0; c < s.c; ++c) {
      mean[c] = (*state.running_mean)[c];
      inv_std[c] = static_cast<T>(
          1.0 / std::sqrt(static_cast<double>((*state.running_var)[c]) + state.epsilon));
    }
  }
  Tensor<T> xhat(s);
  Tensor<T> out(s);
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const T* p = x->value.plane(n, c);
      T* h = xhat.plane(n, c);
      T* o = out.plane(n, c);
      const T gm = gamma->value[c], bt = beta->value[c];
      for (std::size_t i = 0; i < plane; ++i) {
        h[i] = (p[i] - mean[c]) * inv_std[c];
        o[i] = gm * h[i] + bt;
      }
    }
  }
  return tape.record(
      std::move(out), {x, gamma, beta},
      [x, gamma, beta, mode, xhat = std::move(xhat), inv_std](Node<T>& self) {
        const Shape s = xhat.shape();
        const std::size_t plane = s.plane();
        const T m = static_cast<T>(static_cast<double>(s.n) * plane);
        for (int c = 0; c < s.c; ++c) {
          T sum_g = 0, sum_gh = 0;
          for (int n = 0; n < s.n; ++n) {
            sum_g += total(self.grad.plane(n, c), plane);
            sum_gh += dot(self.grad.plane(n, c), xhat.plane(n, c), plane);
          }
          if (gamma->requires_grad) gamma->grad_buffer()[c] += sum_gh;
          if (beta->requires_grad) beta->grad_buffer()[c] += sum_g;
          if (!x->requires_grad) continue;
          const T gm = gamma->value[c];
          auto& gx = x->grad_buffer();
          for (int n = 0; n < s.n; ++n) {
            const T* g = self.grad.plane(n, c);
            const T* h = xhat.plane(n, c);
            T* d = gx.plane(n, c);
            if (mode == Mode::kTrain) {
              const T k = gm * inv_std[c] / m;
              for (std::size_t i = 0; i < plane; ++i) {
                d[i] += k * (m * g[i] - sum_g - h[i] * sum_gh);
              }
            } else {
              const T k = gm * inv_std[c];
              for (std::size_t i = 0; i < plane; ++i) d[i] += k * g[i];
            }
          }
        }
      });
}

template <typename T>
Var<T> maxpool2(Tape<T>& tape, const Var<T>& x) {
  const Shape s = x->value.shape();
  if (s.h % 2 != 0 || s.w % 2 != 0) {
    throw ShapeError("maxpool2 needs even spatial size, got " + s.str());
  }
  const Shape os{s.n, s.c, s.h / 2, s.w / 2};
  Tensor<T> out(os);
  std::vector<std::uint32_t> argmax(os.numel());
  std::size_t k = 0;
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const T* p = x->value.plane(n, c);
      const std::size_t base = x->value.index(n, c, 0, 0);
      for (int y = 0; y < os.h; ++y) {
        for (int xx = 0; xx < os.w; ++xx, ++k) {
          const std::size_t i0 = static_cast<std::size_t>(2 * y) * s.w + 2 * xx;
          const std::size_t cand[4] = {i0, i0 + 1, i0 + s.w, i0 + s.w + 1};
          std::size_t best = cand[0];
          for (int j = 1; j < 4; ++j) {
            if (p[cand[j]] > p[best]) best = cand[j];
          }
          out[k] = p[best];
          argmax[k] = static_cast<std::uint32_t>(base + best);
        }
      }
    }
  }
  return tape.record(std::move(out), {x}, [x, argmax = std::move(argmax)](Node<T>& self) {
    auto d = x->grad_buffer().data();
    auto g = self.grad.data();
    for (std::size_t i = 0; i < g.size(); ++i) d[argmax[i]] += g[i];
  });
}

template <typename T>
Var<T> upsample2(Tape<T>& tape, const Var<T>& x) {
  const Shape s = x->value.shape();
  const Shape os{s.n, s.c, s.h * 2, s.w * 2};
  Tensor<T> out(os);
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const T* p = x->value.plane(n, c);
      T* o = out.plane(n, c);
      for (int y = 0; y < os.h; ++y) {
        const T* src = p + static_cast<std::size_t>(y / 2) * s.w;
        T* dst = o + static_cast<std::size_t>(y) * os.w;
        for (int xx = 0; xx < os.w; ++xx) dst[xx] = src[xx / 2];
      }
    }
  }
  return tape.record(std::move(out), {x}, [x](Node<T>& self) {
    const Shape s = x->value.shape();
    auto& gx = x->grad_buffer();
    for (int n = 0; n < s.n; ++n) {
      for (int c = 0; c < s.c; ++c) {
        const T* g = self.grad.plane(n, c);
        T* d = gx.plane(n, c);
        const std::size_t ow = static_cast<std::size_t>(s.w) * 2;
        for (int y = 0; y < s.h; ++y) {
          const T* r0 = g + static_cast<std::size_t>(2 * y) * ow;
          const T* r1 = r0 + ow;
          for (int xx = 0; xx < s.w; ++xx) {
            d[static_cast<std::size_t>(y) * s.w + xx] +=
                (r0[2 * xx] + r0[2 * xx + 1]) + (r1[2 * xx] + r1[2 * xx + 1]);
          }
        }
      }
    }
  });
}

template <typename T>
Var<T> concat_channels(Tape<T>& tape, const Var<T>& a, const Var<T>& b) {
  const Shape sa = a->value.shape(), sb = b->value.shape();
  if (sa.n != sb.n || sa.h != sb.h || sa.w != sb.w) {
    throw ShapeError("concat_channels: " + sa.str() + " and " + sb.str() +
                     " differ outside the channel axis");
  }
  Tensor<T> out(sa.n, sa.c + sb.c, sa.h, sa.w);
  const std::size_t na = static_cast<std::size_t>(sa.c) * sa.plane();
  const std::size_t nb = static_cast<std::size_t>(sb.c) * sb.plane();
  for (int n = 0; n < sa.n; ++n) {
    std::copy_n(a->value.plane(n, 0), na, out.plane(n, 0));
    std::copy_n(b->value.plane(n, 0), nb, out.plane(n, sa.c));
  }
  return tape.record(std::move(out), {a, b}, [a, b, na, nb](Node<T>& self) {
    const int ca = a->value.c();
    for (int n = 0; n < a->value.n(); ++n) {
      if (a->requires_grad) {
        const T* g = self.grad.plane(n, 0);
        T* d = a->grad_buffer().plane(n, 0);
        for (std::size_t i = 0; i < na; ++i) d[i] += g[i];
      }
      if (b->requires_grad) {
        const T* g = self.grad.plane(n, ca);
        T* d = b->grad_buffer().plane(n, 0);
        for (std::size_t i = 0; i < nb; ++i) d[i] += g[i];
      }
    }
  });
}

template <typename T>
Var<T> add(Tape<T>& tape, const Var<T>& a, const Var<T>& b) {
  require_same_shape(a->value.shape(), b->value.shape(), "add");
  Tensor<T> out(a->value.shape());
  auto pa = a->value.data(), pb = b->value.data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = pa[i] + pb[i];
  return tape.record(std::move(out), {a, b}, [a, b](Node<T>& self) {
    accumulate_grad(a, self.grad);
    accumulate_grad(b, self.grad);
  });
}

template <typename T>
Var<T> mul(Tape<T>& tape, const Var<T>& a, const Var<T>& b) {
  const Shape sa = a->value.shape(), sb = b->value.shape();
  const bool broadcast = sb.c == 1 && sa.c != 1;
  if (broadcast) {
    if (sa.n != sb.n || sa.h != sb.h || sa.w != sb.w) {
      throw ShapeError("mul: cannot broadcast " + sb.str() + " onto " + sa.str());
    }
  } else {
    require_same_shape(sa, sb, "mul");
  }
  Tensor<T> out(sa);
  const std::size_t plane = sa.plane();
  for (int n = 0; n < sa.n; ++n) {
    for (int c = 0; c < sa.c; ++c) {
      const T* x = a->value.plane(n, c);
      const T* y = b->value.plane(n, broadcast ? 0 : c);
      T* o = out.plane(n, c);
      for (std::size_t i = 0; i < plane; ++i) o[i] = x[i] * y[i];
    }
  }
  return tape.record(std::move(out), {a, b}, [a, b, broadcast](Node<T>& self) {
    const Shape sa = a->value.shape();
    const std::size_t plane = sa.plane();
    for (int n = 0; n < sa.n; ++n) {
      for (int c = 0; c < sa.c; ++c) {
        const int cb = broadcast ? 0 : c;
        const T* g = self.grad.plane(n, c);
        const T* x = a->value.plane(n, c);
        const T* y = b->value.plane(n, cb);
        if (a->requires_grad) {
          T* d = a->grad_buffer().plane(n, c);
          for (std::size_t i = 0; i < plane; ++i) d[i] += g[i] * y[i];
        }
        if (b->requires_grad) {
          T* d = b->grad_buffer().plane(n, cb);
          for (std::size_t i = 0; i < plane; ++i) d[i] += g[i] * x[i];
        }
      }
    }
  });
}

template <typename T>
Var<T> scale(Tape<T>& tape, const Var<T>& x, T factor) {
  Tensor<T> out(x->value.shape());
  auto s = x->value.data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = s[i] * factor;
  return tape.record(std::move(out), {x}, [x, factor](Node<T>& self) {
    auto d = x->grad_buffer().data();
    auto g = self.grad.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i] * factor;
  });
}

template <typename T>
Var<T> sum(Tape<T>& tape, const Var<T>& x) {
  auto s = x->value.data();
  const T v = total(s.data(), s.size());
  return tape.record(Tensor<T>::scalar(v), {x}, [x](Node<T>& self) {
    const T g = self.grad[0];
    auto d = x->grad_buffer().data();
    for (auto& e : d) e += g;
  });
}

template <typename T>
Var<T> slice_channels(Tape<T>& tape, const Var<T>& x, int begin, int end) {
  const Shape s = x->value.shape();
  if (begin < 0 || end > s.c || begin >= end) {
    throw ArgumentError("slice_channels: invalid range [" + std::to_string(begin) +
                        "," + std::to_string(end) + ") for " + s.str());
  }
  Tensor<T> out(s.n, end - begin, s.h, s.w);
  const std::size_t len = static_cast<std::size_t>(end - begin) * s.plane();
  for (int n = 0; n < s.n; ++n) std::copy_n(x->value.plane(n, begin), len, out.plane(n, 0));
  return tape.record(std::move(out), {x}, [x, begin, len](Node<T>& self) {
    auto& gx = x->grad_buffer();
    for (int n = 0; n < x->value.n(); ++n) {
      const T* g = self.grad.plane(n, 0);
      T* d = gx.plane(n, begin);
      for (std::size_t i = 0; i < len; ++i) d[i] += g[i];
    }
  });
}

#define SWUNET_INSTANTIATE_OPS(T)                                                  \
  template Var<T> conv2d(Tape<T>&, const Var<T>&, const Var<T>&, const Var<T>&,  \
                         int, Padding);                                          \
  template Var<T> relu(Tape<T>&, const Var<T>&);                                 \
  template Var<T> sigmoid(Tape<T>&, const Var<T>&);                              \
  template Var<T> softmax_channels(Tape<T>&, const Var<T>&);                     \
  template Var<T> batchnorm(Tape<T>&, const Var<T>&, const Var<T>&,              \
                            const Var<T>&, const BatchNormState<T>&, Mode);      \
  template Var<T> maxpool2(Tape<T>&, const Var<T>&);                             \
  template Var<T> upsample2(Tape<T>&, const Var<T>&);                            \
  template Var<T> concat_channels(Tape<T>&, const Var<T>&, const Var<T>&);       \
  template Var<T> add(Tape<T>&, const Var<T>&, const Var<T>&);                   \
  template Var<T> mul(Tape<T>&, const Var<T>&, const Var<T>&);                   \
  template Var<T> scale(Tape<T>&, const Var<T>&, T);                             \
  template Var<T> sum(Tape<T>&, const Var<T>&);                                  \
  template Var<T> slice_channels(Tape<T>&, const Var<T>&, int, int);

SWUNET_INSTANTIATE_OPS(float)
SWUNET_INSTANTIATE_OPS(double)

}  // namespace swunet
