#pragma once
// The two trainable estimators, hand-wired over the layer primitives.
//
// TraNet: 3D conv stem over the (speed, occupancy) depth-2 volume, depth
// max-pool, a 4-stage 2D encoder with doubling filter counts, a bilinear
// upsample + skip-concat decoder that stops at the output patch size, four
// extra convs, and a linear 1x1 head.  Widths scale with desc.scale.
//
// CNN6: the fixed six-conv encoder-decoder baseline with nearest-neighbor
// upsampling and one upsampling stage less than poolings.

#include <memory>
#include <string>
#include <vector>

#include "tse/nn/layers.hpp"

namespace tse::nn {

struct NetDesc {
  std::string net = "tranet";  // "tranet" | "cnn6"
  std::string preset = "toy";  // "toy" | "paper" | "custom"
  int K_T = 64, K_X = 64;      // input patch cells
  int L_T = 32, L_X = 32;      // output patch cells
  int scale = 1;               // width multiplier (tranet)
  int kernel2d = 3;            // 2D conv kernel (tranet)
  int stem_convs = 2;          // 3D stem depth (tranet)
};

inline NetDesc tranet_toy() { return NetDesc{}; }

inline NetDesc tranet_paper() {
  NetDesc d;
  d.preset = "paper";
  d.scale = 3;
  d.kernel2d = 5;
  d.stem_convs = 3;
  return d;
}

inline NetDesc cnn6_desc() {
  NetDesc d;
  d.net = "cnn6";
  d.preset = "toy";
  return d;
}

template <typename S>
struct Net {
  virtual ~Net() = default;
  virtual const NetDesc& desc() const = 0;
  virtual std::vector<ParamTensor<S>*> params() = 0;
  virtual void glorot_init(uint64_t seed) = 0;
  // input: (2, N, K_T, K_X) — speed plane then occupancy plane per sample.
  // returns (1, N, L_T, L_X).
  virtual Buf<S>& forward(const Buf<S>& input, bool train) = 0;
  virtual void backward(const Buf<S>& dout) = 0;

  void zero_grads() {
    for (auto* p : params())
      if (p->trainable) std::fill(p->g.begin(), p->g.end(), S(0));
  }
  size_t param_count(bool trainable_only = true) {
    size_t n = 0;
    for (auto* p : params())
      if (!trainable_only || p->trainable) n += p->size();
    return n;
  }
};

template <typename S>
class TraNet : public Net<S> {
 public:
  explicit TraNet(const NetDesc& d) : d_(d) {
    if (d.net != "tranet") throw ValidationError("net desc is not a tranet");
    if (d.scale < 1 || d.stem_convs < 1) throw ValidationError("bad tranet widths");
    if (d.K_T % 16 || d.K_X % 16)
      throw ValidationError("tranet input size must be divisible by 16 (4 pooling stages)");
    int rt = d.K_T / d.L_T, rx = d.K_X / d.L_X;
    if (rt != rx || rt < 1 || (rt & (rt - 1)) || rt > 8 || d.L_T * rt != d.K_T ||
        d.L_X * rx != d.K_X)
      throw ValidationError("tranet output size must be input / 2^j, j in 0..3");
    j_end_ = 0;
    while ((1 << j_end_) < rt) ++j_end_;
    n_dec_ = 4 - j_end_;

    const int fs = 8 * d.scale;
    const int fe[4] = {16 * d.scale, 32 * d.scale, 64 * d.scale, 128 * d.scale};
    stem_.resize(d.stem_convs);
    stem_relu_.resize(d.stem_convs);
    for (int i = 0; i < d.stem_convs; ++i)
      stem_[i].init("stem" + std::to_string(i), i == 0 ? 1 : fs, fs, 5);
    stem_bn_.init("stem_bn", fs);
    enc_.resize(4);
    enc_relu_.resize(4);
    enc_bn_.resize(4);
    pool_.resize(4);
    for (int s = 0; s < 4; ++s) {
      enc_[s].init("enc" + std::to_string(s), s == 0 ? fs : fe[s - 1], fe[s], d.kernel2d);
      enc_bn_[s].init("enc_bn" + std::to_string(s), fe[s]);
    }
    up_.resize(n_dec_);
    dec_.resize(n_dec_);
    dec_relu_.resize(n_dec_);
    dec_bn_.resize(n_dec_);
    cat_.resize(n_dec_);
    int prev = fe[3];
    for (int t = 0; t < n_dec_; ++t) {
      int s = 3 - t;                              // encoder stage concatenated
      int out_w = s >= 1 ? fe[s - 1] : fs;        // mirror the encoder widths
      dec_[t].init("dec" + std::to_string(t), prev + fe[s], out_w, d.kernel2d);
      dec_bn_[t].init("dec_bn" + std::to_string(t), out_w);
      prev = out_w;
    }
    extra_.resize(4);
    extra_relu_.resize(4);
    for (int e = 0; e < 4; ++e) {
      extra_[e].init("extra" + std::to_string(e), prev, prev, d.kernel2d);
    }
    head_.init("head", prev, 1, 1);
  }

  const NetDesc& desc() const override { return d_; }

  std::vector<ParamTensor<S>*> params() override {
    std::vector<ParamTensor<S>*> out;
    auto push = [&](std::vector<ParamTensor<S>*> v) {
      out.insert(out.end(), v.begin(), v.end());
    };
    for (auto& l : stem_) push(l.params());
    push(stem_bn_.params());
    for (int s = 0; s < 4; ++s) {
      push(enc_[s].params());
      push(enc_bn_[s].params());
    }
    for (int t = 0; t < n_dec_; ++t) {
      push(dec_[t].params());
      push(dec_bn_[t].params());
    }
    for (auto& l : extra_) push(l.params());
    push(head_.params());
    return out;
  }

  void glorot_init(uint64_t seed) override {
    Rng rng(Rng::derive(seed, 0x6c0));
    for (auto& l : stem_) l.glorot(rng);
    for (auto& l : enc_) l.glorot(rng);
    for (auto& l : dec_) l.glorot(rng);
    for (auto& l : extra_) l.glorot(rng);
    head_.glorot(rng);
  }

  Buf<S>& forward(const Buf<S>& input, bool train) override {
    if (input.shape.size() != 4 || input.shape[0] != 2 || input.shape[2] != d_.K_T ||
        input.shape[3] != d_.K_X)
      throw ValidationError("tranet: input must be (2, N, K_T, K_X)");
    const int N = input.shape[1];
    x5_.shape = {1, 2, N, d_.K_T, d_.K_X};
    x5_.a = input.a;
    const Buf<S>* cur = &x5_;
    for (size_t i = 0; i < stem_.size(); ++i) {
      cur = &stem_[i].forward(*cur, train);
      cur = &stem_relu_[i].forward(*cur);
    }
    cur = &stem_bn_.forward(*cur, train);
    cur = &dmax_.forward(*cur);
    for (int s = 0; s < 4; ++s) {
      cur = &enc_[s].forward(*cur, train);
      cur = &enc_relu_[s].forward(*cur);
      cur = &enc_bn_[s].forward(*cur, train);  // skip source
      cur = &pool_[s].forward(*cur);
    }
    for (int t = 0; t < n_dec_; ++t) {
      int s = 3 - t;
      cur = &up_[t].forward(*cur);
      concat_channels(*cur, enc_bn_[s].y, cat_[t]);
      cur = &dec_[t].forward(cat_[t], train);
      cur = &dec_relu_[t].forward(*cur);
      cur = &dec_bn_[t].forward(*cur, train);
    }
    for (int e = 0; e < 4; ++e) {
      cur = &extra_[e].forward(*cur, train);
      cur = &extra_relu_[e].forward(*cur);
    }
    return head_.forward(*cur, train);
  }

  void backward(const Buf<S>& dout) override {
    Buf<S>* g = &head_.backward(dout);
    for (int e = 3; e >= 0; --e) {
      g = &extra_relu_[e].backward(*g);
      g = &extra_[e].backward(*g);
    }
    std::vector<Buf<S>> dskip(4);
    for (int t = n_dec_ - 1; t >= 0; --t) {
      int s = 3 - t;
      g = &dec_bn_[t].backward(*g);
      g = &dec_relu_[t].backward(*g);
      g = &dec_[t].backward(*g);
      split_channels(*g, up_[t].y.shape[0], dup_, dskip[s]);
      g = &up_[t].backward(dup_);
    }
    for (int s = 3; s >= 0; --s) {
      g = &pool_[s].backward(*g);
      if (s >= j_end_) {  // this stage fed a skip connection
        for (size_t i = 0; i < g->numel(); ++i) g->a[i] += dskip[s].a[i];
      }
      g = &enc_bn_[s].backward(*g);
      g = &enc_relu_[s].backward(*g);
      g = &enc_[s].backward(*g);
    }
    g = &dmax_.backward(*g);
    g = &stem_bn_.backward(*g);
    for (int i = static_cast<int>(stem_.size()) - 1; i >= 0; --i) {
      g = &stem_relu_[i].backward(*g);
      stem_[i].backward(*g);
    }
  }

 private:
  NetDesc d_;
  int j_end_ = 1, n_dec_ = 3;
  Buf<S> x5_, dup_;
  std::vector<Conv3dStem<S>> stem_;
  std::vector<ReLU<S>> stem_relu_;
  BatchNorm<S> stem_bn_;
  DepthMax<S> dmax_;
  std::vector<Conv2d<S>> enc_;
  std::vector<ReLU<S>> enc_relu_;
  std::vector<BatchNorm<S>> enc_bn_;
  std::vector<MaxPool2<S>> pool_;
  std::vector<UpBilinear2<S>> up_;
  std::vector<Conv2d<S>> dec_;
  std::vector<ReLU<S>> dec_relu_;
  std::vector<BatchNorm<S>> dec_bn_;
  std::vector<Buf<S>> cat_;
  std::vector<Conv2d<S>> extra_;
  std::vector<ReLU<S>> extra_relu_;
  Conv2d<S> head_;
};

template <typename S>
class Cnn6 : public Net<S> {
 public:
  explicit Cnn6(const NetDesc& d) : d_(d) {
    if (d.net != "cnn6") throw ValidationError("net desc is not a cnn6");
    if (d.K_T % 8 || d.K_X % 8 || d.L_T * 2 != d.K_T || d.L_X * 2 != d.K_X)
      throw ValidationError("cnn6 needs input divisible by 8 and output = input/2");
    c1_.init("c1", 2, 8, 5);
    c2_.init("c2", 8, 32, 5);
    c3_.init("c3", 32, 64, 5);
    d1_.init("d1", 64, 64, 3);
    d2_.init("d2", 64, 32, 3);
    d3_.init("d3", 32, 8, 5);
    head_.init("head", 8, 1, 1);
  }

  const NetDesc& desc() const override { return d_; }

  std::vector<ParamTensor<S>*> params() override {
    std::vector<ParamTensor<S>*> out;
    for (Conv2d<S>* c : {&c1_, &c2_, &c3_, &d1_, &d2_, &d3_, &head_})
      for (auto* p : c->params()) out.push_back(p);
    return out;
  }

  void glorot_init(uint64_t seed) override {
    Rng rng(Rng::derive(seed, 0xc6));
    for (Conv2d<S>* c : {&c1_, &c2_, &c3_, &d1_, &d2_, &d3_, &head_}) c->glorot(rng);
  }

  Buf<S>& forward(const Buf<S>& input, bool train) override {
    if (input.shape.size() != 4 || input.shape[0] != 2 || input.shape[2] != d_.K_T ||
        input.shape[3] != d_.K_X)
      throw ValidationError("cnn6: input must be (2, N, K_T, K_X)");
    const Buf<S>* cur = &input;
    cur = &r1_.forward(c1_.forward(*cur, train));
    cur = &p1_.forward(*cur);
    cur = &r2_.forward(c2_.forward(*cur, train));
    cur = &p2_.forward(*cur);
    cur = &r3_.forward(c3_.forward(*cur, train));
    cur = &p3_.forward(*cur);
    cur = &u1_.forward(*cur);
    cur = &r4_.forward(d1_.forward(*cur, train));
    cur = &u2_.forward(*cur);
    cur = &r5_.forward(d2_.forward(*cur, train));
    cur = &r6_.forward(d3_.forward(*cur, train));
    return head_.forward(*cur, train);
  }

  void backward(const Buf<S>& dout) override {
    Buf<S>* g = &head_.backward(dout);
    g = &d3_.backward(r6_.backward(*g));
    g = &d2_.backward(r5_.backward(*g));
    g = &u2_.backward(*g);
    g = &d1_.backward(r4_.backward(*g));
    g = &u1_.backward(*g);
    g = &p3_.backward(*g);
    g = &c3_.backward(r3_.backward(*g));
    g = &p2_.backward(*g);
    g = &c2_.backward(r2_.backward(*g));
    g = &p1_.backward(*g);
    c1_.backward(r1_.backward(*g));
  }

 private:
  NetDesc d_;
  Conv2d<S> c1_, c2_, c3_, d1_, d2_, d3_, head_;
  ReLU<S> r1_, r2_, r3_, r4_, r5_, r6_;
  MaxPool2<S> p1_, p2_, p3_;
  UpNearest2<S> u1_, u2_;
};

template <typename S>
std::unique_ptr<Net<S>> build_net(const NetDesc& d) {
  if (d.net == "tranet") return std::make_unique<TraNet<S>>(d);
  if (d.net == "cnn6") return std::make_unique<Cnn6<S>>(d);
  throw ValidationError("unknown net '" + d.net + "'");
}

}  // namespace tse::nn
