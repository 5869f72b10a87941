#pragma once
// Layer primitives, templated on the scalar so training runs in float and
// gradient checks in double. Convolutions are im2col + one Eigen GEMM per
// sample; backward recomputes the column matrix instead of caching it.
// Everything is single-threaded and runs in a fixed order, so results are
// bit-reproducible for a given scalar type.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "tse/errors.hpp"
#include "tse/nn/buf.hpp"
#include "tse/rng.hpp"

namespace tse::nn {

template <typename S>
using RowMat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename S>
using MapM = Eigen::Map<RowMat<S>>;
template <typename S>
using CMapM = Eigen::Map<const RowMat<S>>;
template <typename S>
using MapMS = Eigen::Map<RowMat<S>, 0, Eigen::OuterStride<>>;
template <typename S>
using CMapMS = Eigen::Map<const RowMat<S>, 0, Eigen::OuterStride<>>;

template <typename S>
struct ParamTensor {
  std::string name;
  std::vector<int> shape;
  std::vector<S> w, g;
  bool trainable = true;

  void init(std::string n, std::vector<int> s, bool train = true) {
    name = std::move(n);
    shape = std::move(s);
    size_t c = 1;
    for (int d : shape) c *= static_cast<size_t>(d);
    w.assign(c, S(0));
    g.assign(c, S(0));
    trainable = train;
  }
  size_t size() const { return w.size(); }
};

template <typename S>
void glorot_uniform(ParamTensor<S>& p, size_t fan_in, size_t fan_out, Rng& rng) {
  double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (auto& v : p.w) v = static_cast<S>(rng.uniform(-limit, limit));
}

// ---- im2col helpers (same padding, stride 1, odd kernel) --------------------

// One input plane (H x W) expanded into k*k rows of length H*W.
template <typename S>
void im2col_plane(const S* plane, int H, int W, int k, S* out) {
  const int pad = k / 2;
  for (int kh = 0; kh < k; ++kh) {
    for (int kw = 0; kw < k; ++kw) {
      for (int oh = 0; oh < H; ++oh) {
        int ih = oh + kh - pad;
        if (ih < 0 || ih >= H) {
          std::fill(out, out + W, S(0));
          out += W;
          continue;
        }
        const S* src = plane + static_cast<size_t>(ih) * W;
        int shift = kw - pad;  // iw = ow + shift
        int lo = std::max(0, -shift), hi = std::min(W, W - shift);
        for (int ow = 0; ow < lo; ++ow) out[ow] = S(0);
        for (int ow = lo; ow < hi; ++ow) out[ow] = src[ow + shift];
        for (int ow = hi; ow < W; ++ow) out[ow] = S(0);
        out += W;
      }
    }
  }
}

// Transpose-scatter of im2col_plane: accumulates k*k gradient rows back.
template <typename S>
void col2im_plane_add(const S* col, int H, int W, int k, S* dplane) {
  const int pad = k / 2;
  for (int kh = 0; kh < k; ++kh) {
    for (int kw = 0; kw < k; ++kw) {
      for (int oh = 0; oh < H; ++oh) {
        int ih = oh + kh - pad;
        if (ih < 0 || ih >= H) {
          col += W;
          continue;
        }
        S* dst = dplane + static_cast<size_t>(ih) * W;
        int shift = kw - pad;
        int lo = std::max(0, -shift), hi = std::min(W, W - shift);
        for (int ow = lo; ow < hi; ++ow) dst[ow + shift] += col[ow];
        col += W;
      }
    }
  }
}

// ---- 2D convolution ---------------------------------------------------------

template <typename S>
struct Conv2d {
  int c_in = 0, c_out = 0, k = 3;
  ParamTensor<S> w, b;  // w: (c_out, c_in*k*k)
  Buf<S> x_, y, dx;
  std::vector<S> col_;

  void init(const std::string& name, int ci, int co, int kk) {
    if (kk % 2 == 0) throw ValidationError("conv kernel size must be odd");
    c_in = ci;
    c_out = co;
    k = kk;
    w.init(name + ".w", {co, ci, kk, kk});
    b.init(name + ".b", {co});
  }
  void glorot(Rng& rng) {
    glorot_uniform(w, static_cast<size_t>(c_in) * k * k, static_cast<size_t>(c_out) * k * k,
                   rng);
  }
  std::vector<ParamTensor<S>*> params() { return {&w, &b}; }

  Buf<S>& forward(const Buf<S>& x, bool keep) {
    const int N = x.shape[1], H = x.shape[2], W = x.shape[3];
    const size_t HW = static_cast<size_t>(H) * W;
    y.resize({c_out, N, H, W});
    CMapM<S> wm(w.w.data(), c_out, static_cast<size_t>(c_in) * k * k);
    if (k == 1) {
      // 1x1: the activation matrix is its own column matrix.
      CMapM<S> xm(x.data(), c_in, static_cast<size_t>(N) * HW);
      MapM<S> ym(y.data(), c_out, static_cast<size_t>(N) * HW);
      ym.noalias() = wm * xm;
    } else {
      const size_t ck = static_cast<size_t>(c_in) * k * k;
      col_.resize(ck * HW);
      for (int n = 0; n < N; ++n) {
        for (int c = 0; c < c_in; ++c)
          im2col_plane(x.data() + (static_cast<size_t>(c) * N + n) * HW, H, W, k,
                       col_.data() + static_cast<size_t>(c) * k * k * HW);
        CMapM<S> cm(col_.data(), ck, HW);
        MapMS<S> ym(y.data() + n * HW, c_out, HW, Eigen::OuterStride<>(N * HW));
        ym.noalias() = wm * cm;
      }
    }
    for (int c = 0; c < c_out; ++c) {
      S* p = y.data() + static_cast<size_t>(c) * N * HW;
      const S bias = b.w[c];
      for (size_t i = 0; i < static_cast<size_t>(N) * HW; ++i) p[i] += bias;
    }
    if (keep) x_ = x;
    return y;
  }

  Buf<S>& backward(const Buf<S>& dy) {
    const int N = x_.shape[1], H = x_.shape[2], W = x_.shape[3];
    const size_t HW = static_cast<size_t>(H) * W;
    dx.resize(x_.shape);
    MapM<S> dwm(w.g.data(), c_out, static_cast<size_t>(c_in) * k * k);
    CMapM<S> wm(w.w.data(), c_out, static_cast<size_t>(c_in) * k * k);
    if (k == 1) {
      CMapM<S> xm(x_.data(), c_in, static_cast<size_t>(N) * HW);
      CMapM<S> dym(dy.data(), c_out, static_cast<size_t>(N) * HW);
      MapM<S> dxm(dx.data(), c_in, static_cast<size_t>(N) * HW);
      dwm.noalias() += dym * xm.transpose();
      dxm.noalias() = wm.transpose() * dym;
    } else {
      const size_t ck = static_cast<size_t>(c_in) * k * k;
      col_.resize(ck * HW);
      std::vector<S> dcol(ck * HW);
      for (int n = 0; n < N; ++n) {
        for (int c = 0; c < c_in; ++c)
          im2col_plane(x_.data() + (static_cast<size_t>(c) * N + n) * HW, H, W, k,
                       col_.data() + static_cast<size_t>(c) * k * k * HW);
        CMapM<S> cm(col_.data(), ck, HW);
        CMapMS<S> dym(dy.data() + n * HW, c_out, HW, Eigen::OuterStride<>(N * HW));
        dwm.noalias() += dym * cm.transpose();
        MapM<S> dcm(dcol.data(), ck, HW);
        dcm.noalias() = wm.transpose() * dym;
        for (int c = 0; c < c_in; ++c)
          col2im_plane_add(dcol.data() + static_cast<size_t>(c) * k * k * HW, H, W, k,
                           dx.data() + (static_cast<size_t>(c) * N + n) * HW);
      }
    }
    for (int c = 0; c < c_out; ++c) {
      const S* p = dy.data() + static_cast<size_t>(c) * N * HW;
      S acc = 0;
      for (size_t i = 0; i < static_cast<size_t>(N) * HW; ++i) acc += p[i];
      b.g[c] += acc;
    }
    return dx;
  }
};

// ---- 3D stem convolution (kernel k x k x 2, same padding in all axes) -------
// Activations: (C, D=2, N, H, W). Depth-same padding appends one zero slice,
// so output depth stays 2: od=0 sees input depths {0,1}, od=1 sees {1, pad}.

template <typename S>
struct Conv3dStem {
  int c_in = 0, c_out = 0, k = 5;
  ParamTensor<S> w, b;  // w: (c_out, c_in, 2, k, k)
  Buf<S> x_, y, dx;
  std::vector<S> col_;

  void init(const std::string& name, int ci, int co, int kk) {
    if (kk % 2 == 0) throw ValidationError("conv kernel size must be odd");
    c_in = ci;
    c_out = co;
    k = kk;
    w.init(name + ".w", {co, ci, 2, kk, kk});
    b.init(name + ".b", {co});
  }
  void glorot(Rng& rng) {
    glorot_uniform(w, static_cast<size_t>(c_in) * 2 * k * k,
                   static_cast<size_t>(c_out) * 2 * k * k, rng);
  }
  std::vector<ParamTensor<S>*> params() { return {&w, &b}; }

  Buf<S>& forward(const Buf<S>& x, bool keep) {
    const int N = x.shape[2], H = x.shape[3], W = x.shape[4];
    const size_t HW = static_cast<size_t>(H) * W;
    const size_t kk2 = static_cast<size_t>(k) * k;
    const size_t ck = static_cast<size_t>(c_in) * 2 * kk2;
    y.resize({c_out, 2, N, H, W});
    col_.resize(ck * HW);
    CMapM<S> wm(w.w.data(), c_out, ck);
    for (int n = 0; n < N; ++n) {
      for (int od = 0; od < 2; ++od) {
        for (int c = 0; c < c_in; ++c) {
          for (int kd = 0; kd < 2; ++kd) {
            S* block = col_.data() + (static_cast<size_t>(c) * 2 + kd) * kk2 * HW;
            int d = od + kd;
            if (d < 2)
              im2col_plane(x.data() + ((static_cast<size_t>(c) * 2 + d) * N + n) * HW, H, W,
                           k, block);
            else
              std::fill(block, block + kk2 * HW, S(0));
          }
        }
        CMapM<S> cm(col_.data(), ck, HW);
        MapMS<S> ym(y.data() + (static_cast<size_t>(od) * N + n) * HW, c_out, HW,
                    Eigen::OuterStride<>(2 * static_cast<Eigen::Index>(N) * HW));
        ym.noalias() = wm * cm;
      }
    }
    for (int c = 0; c < c_out; ++c) {
      S* p = y.data() + static_cast<size_t>(c) * 2 * N * HW;
      const S bias = b.w[c];
      for (size_t i = 0; i < 2 * static_cast<size_t>(N) * HW; ++i) p[i] += bias;
    }
    if (keep) x_ = x;
    return y;
  }

  Buf<S>& backward(const Buf<S>& dy) {
    const int N = x_.shape[2], H = x_.shape[3], W = x_.shape[4];
    const size_t HW = static_cast<size_t>(H) * W;
    const size_t kk2 = static_cast<size_t>(k) * k;
    const size_t ck = static_cast<size_t>(c_in) * 2 * kk2;
    dx.resize(x_.shape);
    col_.resize(ck * HW);
    std::vector<S> dcol(ck * HW);
    CMapM<S> wm(w.w.data(), c_out, ck);
    MapM<S> dwm(w.g.data(), c_out, ck);
    for (int n = 0; n < N; ++n) {
      for (int od = 0; od < 2; ++od) {
        for (int c = 0; c < c_in; ++c) {
          for (int kd = 0; kd < 2; ++kd) {
            S* block = col_.data() + (static_cast<size_t>(c) * 2 + kd) * kk2 * HW;
            int d = od + kd;
            if (d < 2)
              im2col_plane(x_.data() + ((static_cast<size_t>(c) * 2 + d) * N + n) * HW, H,
                           W, k, block);
            else
              std::fill(block, block + kk2 * HW, S(0));
          }
        }
        CMapM<S> cm(col_.data(), ck, HW);
        CMapMS<S> dym(dy.data() + (static_cast<size_t>(od) * N + n) * HW, c_out, HW,
                      Eigen::OuterStride<>(2 * static_cast<Eigen::Index>(N) * HW));
        dwm.noalias() += dym * cm.transpose();
        MapM<S> dcm(dcol.data(), ck, HW);
        dcm.noalias() = wm.transpose() * dym;
        for (int c = 0; c < c_in; ++c) {
          for (int kd = 0; kd < 2; ++kd) {
            int d = od + kd;
            if (d >= 2) continue;
            col2im_plane_add(dcol.data() + (static_cast<size_t>(c) * 2 + kd) * kk2 * HW, H,
                             W, k,
                             dx.data() + ((static_cast<size_t>(c) * 2 + d) * N + n) * HW);
          }
        }
      }
    }
    for (int c = 0; c < c_out; ++c) {
      const S* p = dy.data() + static_cast<size_t>(c) * 2 * N * HW;
      S acc = 0;
      for (size_t i = 0; i < 2 * static_cast<size_t>(N) * HW; ++i) acc += p[i];
      b.g[c] += acc;
    }
    return dx;
  }
};

// ---- elementwise / structural layers ---------------------------------------

template <typename S>
struct ReLU {
  Buf<S> y, dx;

  Buf<S>& forward(const Buf<S>& x) {
    y.resize(x.shape);
    for (size_t i = 0; i < x.numel(); ++i) y.a[i] = x.a[i] > 0 ? x.a[i] : S(0);
    return y;
  }
  Buf<S>& backward(const Buf<S>& dy) {
    dx.resize(y.shape);
    for (size_t i = 0; i < y.numel(); ++i) dx.a[i] = y.a[i] > 0 ? dy.a[i] : S(0);
    return dx;
  }
};

// Batch normalization over all axes except the leading channel axis.
// Works unchanged for (C,N,H,W) and the stem's (C,2,N,H,W).
template <typename S>
struct BatchNorm {
  int c = 0;
  ParamTensor<S> gamma, beta, run_mean, run_var;
  S eps = S(1e-3);
  S momentum = S(0.99);
  std::vector<S> xhat_, inv_std_;
  Buf<S> y, dx;

  void init(const std::string& name, int channels) {
    c = channels;
    gamma.init(name + ".gamma", {channels});
    beta.init(name + ".beta", {channels});
    run_mean.init(name + ".run_mean", {channels}, false);
    run_var.init(name + ".run_var", {channels}, false);
    std::fill(gamma.w.begin(), gamma.w.end(), S(1));
    std::fill(run_var.w.begin(), run_var.w.end(), S(1));
  }
  std::vector<ParamTensor<S>*> params() { return {&gamma, &beta, &run_mean, &run_var}; }

  Buf<S>& forward(const Buf<S>& x, bool train) {
    y.resize(x.shape);
    const size_t m = x.numel() / c;
    if (train) {
      xhat_.resize(x.numel());
      inv_std_.resize(c);
    }
    for (int ch = 0; ch < c; ++ch) {
      const S* p = x.data() + ch * m;
      S* q = y.data() + ch * m;
      S mean, inv;
      if (train) {
        S s = 0;
        for (size_t i = 0; i < m; ++i) s += p[i];
        mean = s / static_cast<S>(m);
        S v = 0;
        for (size_t i = 0; i < m; ++i) {
          S d = p[i] - mean;
          v += d * d;
        }
        v /= static_cast<S>(m);
        inv = S(1) / std::sqrt(v + eps);
        run_mean.w[ch] = momentum * run_mean.w[ch] + (S(1) - momentum) * mean;
        run_var.w[ch] = momentum * run_var.w[ch] + (S(1) - momentum) * v;
        inv_std_[ch] = inv;
        S* xh = xhat_.data() + ch * m;
        for (size_t i = 0; i < m; ++i) {
          xh[i] = (p[i] - mean) * inv;
          q[i] = gamma.w[ch] * xh[i] + beta.w[ch];
        }
      } else {
        mean = run_mean.w[ch];
        inv = S(1) / std::sqrt(run_var.w[ch] + eps);
        const S g = gamma.w[ch], b = beta.w[ch];
        for (size_t i = 0; i < m; ++i) q[i] = g * (p[i] - mean) * inv + b;
      }
    }
    return y;
  }

  Buf<S>& backward(const Buf<S>& dy) {
    dx.resize(y.shape);
    const size_t m = y.numel() / c;
    for (int ch = 0; ch < c; ++ch) {
      const S* dyp = dy.data() + ch * m;
      const S* xh = xhat_.data() + ch * m;
      S* dxp = dx.data() + ch * m;
      S sum_dy = 0, sum_dyxh = 0;
      for (size_t i = 0; i < m; ++i) {
        sum_dy += dyp[i];
        sum_dyxh += dyp[i] * xh[i];
      }
      gamma.g[ch] += sum_dyxh;
      beta.g[ch] += sum_dy;
      const S g = gamma.w[ch], inv = inv_std_[ch];
      const S mean_dy = sum_dy / static_cast<S>(m);
      const S mean_dyxh = sum_dyxh / static_cast<S>(m);
      for (size_t i = 0; i < m; ++i)
        dxp[i] = g * inv * (dyp[i] - mean_dy - xh[i] * mean_dyxh);
    }
    return dx;
  }
};

// Max over the stem's depth-2 axis: (C,2,N,H,W) -> (C,N,H,W).
template <typename S>
struct DepthMax {
  std::vector<uint8_t> pick_;
  Buf<S> y, dx;

  Buf<S>& forward(const Buf<S>& x) {
    const int C = x.shape[0], N = x.shape[2], H = x.shape[3], W = x.shape[4];
    const size_t plane = static_cast<size_t>(N) * H * W;
    y.resize({C, N, H, W});
    pick_.resize(y.numel());
    for (int c = 0; c < C; ++c) {
      const S* d0 = x.data() + static_cast<size_t>(c) * 2 * plane;
      const S* d1 = d0 + plane;
      S* q = y.data() + static_cast<size_t>(c) * plane;
      uint8_t* pk = pick_.data() + static_cast<size_t>(c) * plane;
      for (size_t i = 0; i < plane; ++i) {
        if (d1[i] > d0[i]) {
          q[i] = d1[i];
          pk[i] = 1;
        } else {
          q[i] = d0[i];
          pk[i] = 0;
        }
      }
    }
    return y;
  }
  Buf<S>& backward(const Buf<S>& dy) {
    const int C = y.shape[0];
    const size_t plane = y.numel() / C;
    dx.resize({C, 2, y.shape[1], y.shape[2], y.shape[3]});
    for (int c = 0; c < C; ++c) {
      const S* dyp = dy.data() + static_cast<size_t>(c) * plane;
      const uint8_t* pk = pick_.data() + static_cast<size_t>(c) * plane;
      S* d0 = dx.data() + static_cast<size_t>(c) * 2 * plane;
      S* d1 = d0 + plane;
      for (size_t i = 0; i < plane; ++i) (pk[i] ? d1 : d0)[i] = dyp[i];
    }
    return dx;
  }
};

// 2x2 max pooling, stride 2.
template <typename S>
struct MaxPool2 {
  std::vector<uint8_t> pick_;  // 0..3: which corner of the 2x2 window won
  Buf<S> y, dx;

  Buf<S>& forward(const Buf<S>& x) {
    const int C = x.shape[0], N = x.shape[1], H = x.shape[2], W = x.shape[3];
    if (H % 2 || W % 2) throw ValidationError("max-pool input size must be even");
    const int Ho = H / 2, Wo = W / 2;
    y.resize({C, N, Ho, Wo});
    pick_.resize(y.numel());
    size_t o = 0;
    for (int c = 0; c < C; ++c) {
      for (int n = 0; n < N; ++n) {
        const S* plane = x.data() + (static_cast<size_t>(c) * N + n) * H * W;
        for (int oh = 0; oh < Ho; ++oh) {
          const S* r0 = plane + static_cast<size_t>(2 * oh) * W;
          const S* r1 = r0 + W;
          for (int ow = 0; ow < Wo; ++ow, ++o) {
            S v = r0[2 * ow];
            uint8_t pk = 0;
            if (r0[2 * ow + 1] > v) { v = r0[2 * ow + 1]; pk = 1; }
            if (r1[2 * ow] > v) { v = r1[2 * ow]; pk = 2; }
            if (r1[2 * ow + 1] > v) { v = r1[2 * ow + 1]; pk = 3; }
            y.a[o] = v;
            pick_[o] = pk;
          }
        }
      }
    }
    return y;
  }
  Buf<S>& backward(const Buf<S>& dy) {
    const int C = y.shape[0], N = y.shape[1], Ho = y.shape[2], Wo = y.shape[3];
    dx.resize({C, N, Ho * 2, Wo * 2});
    const int W = Wo * 2;
    size_t o = 0;
    for (int c = 0; c < C; ++c) {
      for (int n = 0; n < N; ++n) {
        S* plane = dx.data() + (static_cast<size_t>(c) * N + n) * (4ull * Ho * Wo);
        for (int oh = 0; oh < Ho; ++oh) {
          for (int ow = 0; ow < Wo; ++ow, ++o) {
            int ih = 2 * oh + (pick_[o] >> 1);
            int iw = 2 * ow + (pick_[o] & 1);
            plane[static_cast<size_t>(ih) * W + iw] = dy.a[o];
          }
        }
      }
    }
    return dx;
  }
};

// x2 upsampling with half-pixel-center bilinear weights.
template <typename S>
struct UpBilinear2 {
  Buf<S> y, dx;
  std::vector<int> i0_, j0_;
  std::vector<S> wi_, wj_;  // weight of the i0/j0 tap

  void prep(int H, int W) {
    i0_.resize(2 * H);
    wi_.resize(2 * H);
    for (int o = 0; o < 2 * H; ++o) {
      double src = (o + 0.5) / 2.0 - 0.5;
      int lo = static_cast<int>(std::floor(src));
      double frac = src - lo;
      if (lo < 0) { lo = 0; frac = 0; }
      if (lo >= H - 1) { lo = H - 1; frac = 0; }
      i0_[o] = lo;
      wi_[o] = static_cast<S>(1.0 - frac);
    }
    j0_.resize(2 * W);
    wj_.resize(2 * W);
    for (int o = 0; o < 2 * W; ++o) {
      double src = (o + 0.5) / 2.0 - 0.5;
      int lo = static_cast<int>(std::floor(src));
      double frac = src - lo;
      if (lo < 0) { lo = 0; frac = 0; }
      if (lo >= W - 1) { lo = W - 1; frac = 0; }
      j0_[o] = lo;
      wj_[o] = static_cast<S>(1.0 - frac);
    }
  }

  Buf<S>& forward(const Buf<S>& x) {
    const int C = x.shape[0], N = x.shape[1], H = x.shape[2], W = x.shape[3];
    prep(H, W);
    y.resize({C, N, 2 * H, 2 * W});
    for (int c = 0; c < C; ++c) {
      for (int n = 0; n < N; ++n) {
        const S* in = x.data() + (static_cast<size_t>(c) * N + n) * H * W;
        S* out = y.data() + (static_cast<size_t>(c) * N + n) * 4ull * H * W;
        for (int oh = 0; oh < 2 * H; ++oh) {
          int ia = i0_[oh], ib = std::min(ia + 1, H - 1);
          S wa = wi_[oh], wb = S(1) - wa;
          const S* ra = in + static_cast<size_t>(ia) * W;
          const S* rb = in + static_cast<size_t>(ib) * W;
          S* orow = out + static_cast<size_t>(oh) * 2 * W;
          for (int ow = 0; ow < 2 * W; ++ow) {
            int ja = j0_[ow], jb = std::min(ja + 1, W - 1);
            S wc = wj_[ow], wd = S(1) - wc;
            orow[ow] = wa * (wc * ra[ja] + wd * ra[jb]) + wb * (wc * rb[ja] + wd * rb[jb]);
          }
        }
      }
    }
    return y;
  }
  Buf<S>& backward(const Buf<S>& dy) {
    const int C = y.shape[0], N = y.shape[1], H = y.shape[2] / 2, W = y.shape[3] / 2;
    dx.resize({C, N, H, W});
    for (int c = 0; c < C; ++c) {
      for (int n = 0; n < N; ++n) {
        S* din = dx.data() + (static_cast<size_t>(c) * N + n) * H * W;
        const S* dout = dy.data() + (static_cast<size_t>(c) * N + n) * 4ull * H * W;
        for (int oh = 0; oh < 2 * H; ++oh) {
          int ia = i0_[oh], ib = std::min(ia + 1, H - 1);
          S wa = wi_[oh], wb = S(1) - wa;
          const S* orow = dout + static_cast<size_t>(oh) * 2 * W;
          for (int ow = 0; ow < 2 * W; ++ow) {
            int ja = j0_[ow], jb = std::min(ja + 1, W - 1);
            S wc = wj_[ow], wd = S(1) - wc;
            const S g = orow[ow];
            din[static_cast<size_t>(ia) * W + ja] += wa * wc * g;
            din[static_cast<size_t>(ia) * W + jb] += wa * wd * g;
            din[static_cast<size_t>(ib) * W + ja] += wb * wc * g;
            din[static_cast<size_t>(ib) * W + jb] += wb * wd * g;
          }
        }
      }
    }
    return dx;
  }
};

// x2 nearest-neighbor upsampling (CNN6 decoder).
template <typename S>
struct UpNearest2 {
  Buf<S> y, dx;

  Buf<S>& forward(const Buf<S>& x) {
    const int C = x.shape[0], N = x.shape[1], H = x.shape[2], W = x.shape[3];
    y.resize({C, N, 2 * H, 2 * W});
    for (size_t cn = 0; cn < static_cast<size_t>(C) * N; ++cn) {
      const S* in = x.data() + cn * H * W;
      S* out = y.data() + cn * 4ull * H * W;
      for (int oh = 0; oh < 2 * H; ++oh) {
        const S* row = in + static_cast<size_t>(oh / 2) * W;
        S* orow = out + static_cast<size_t>(oh) * 2 * W;
        for (int ow = 0; ow < 2 * W; ++ow) orow[ow] = row[ow / 2];
      }
    }
    return y;
  }
  Buf<S>& backward(const Buf<S>& dy) {
    const int C = y.shape[0], N = y.shape[1], H = y.shape[2] / 2, W = y.shape[3] / 2;
    dx.resize({C, N, H, W});
    for (size_t cn = 0; cn < static_cast<size_t>(C) * N; ++cn) {
      S* din = dx.data() + cn * H * W;
      const S* dout = dy.data() + cn * 4ull * H * W;
      for (int oh = 0; oh < 2 * H; ++oh) {
        const S* orow = dout + static_cast<size_t>(oh) * 2 * W;
        S* row = din + static_cast<size_t>(oh / 2) * W;
        for (int ow = 0; ow < 2 * W; ++ow) row[ow / 2] += orow[ow];
      }
    }
    return dx;
  }
};

// Channel concatenation helpers; channel planes are contiguous blocks.
template <typename S>
void concat_channels(const Buf<S>& a, const Buf<S>& b, Buf<S>& out) {
  out.resize({a.shape[0] + b.shape[0], a.shape[1], a.shape[2], a.shape[3]});
  std::copy(a.a.begin(), a.a.end(), out.a.begin());
  std::copy(b.a.begin(), b.a.end(), out.a.begin() + a.numel());
}

template <typename S>
void split_channels(const Buf<S>& dout, int c_a, Buf<S>& da, Buf<S>& db) {
  const int C = dout.shape[0];
  da.resize({c_a, dout.shape[1], dout.shape[2], dout.shape[3]});
  db.resize({C - c_a, dout.shape[1], dout.shape[2], dout.shape[3]});
  std::copy(dout.a.begin(), dout.a.begin() + da.numel(), da.a.begin());
  std::copy(dout.a.begin() + da.numel(), dout.a.end(), db.a.begin());
}

}  // namespace tse::nn
