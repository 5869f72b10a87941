#pragma once
// Adam optimizer and the training loop shared by both networks.
//
// The dataset is abstracted as a fill callback: the trainer hands it a list of
// sample indices plus a pre-sized, zeroed input buffer, and the callback
// writes the (speed, occupancy) planes and the per-sample target lists.  That
// keeps this header free of any synthesis/gridding dependencies.

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "tse/nn/loss.hpp"
#include "tse/nn/models.hpp"

namespace tse::nn {

struct TrainConfig {
  int epochs = 50;
  int batch = 32;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-7;
  double val_frac = 0.1;  // tail of the sample list held out for selection
  uint64_t rng_seed = 1;
};

template <typename S>
class Adam {
 public:
  void init(const std::vector<ParamTensor<S>*>& ps, const TrainConfig& cfg) {
    cfg_ = cfg;
    step_ = 0;
    m_.clear();
    v_.clear();
    for (auto* p : ps) {
      m_.emplace_back(p->trainable ? p->size() : 0, S(0));
      v_.emplace_back(p->trainable ? p->size() : 0, S(0));
    }
  }

  void apply(const std::vector<ParamTensor<S>*>& ps) {
    ++step_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, step_);
    const double bc2 = 1.0 - std::pow(cfg_.beta2, step_);
    for (size_t k = 0; k < ps.size(); ++k) {
      ParamTensor<S>* p = ps[k];
      if (!p->trainable) continue;
      for (size_t i = 0; i < p->size(); ++i) {
        double g = p->g[i];
        double m = cfg_.beta1 * m_[k][i] + (1.0 - cfg_.beta1) * g;
        double v = cfg_.beta2 * v_[k][i] + (1.0 - cfg_.beta2) * g * g;
        m_[k][i] = static_cast<S>(m);
        v_[k][i] = static_cast<S>(v);
        p->w[i] -= static_cast<S>(cfg_.lr * (m / bc1) / (std::sqrt(v / bc2) + cfg_.adam_eps));
      }
    }
  }

 private:
  TrainConfig cfg_;
  long step_ = 0;
  std::vector<std::vector<S>> m_, v_;
};

struct EpochStats {
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainResult {
  std::vector<EpochStats> history;
  int best_epoch = -1;       // 0-based epoch whose weights were kept
  double best_val = 0.0;
};

// Writes sample data for the given indices into input (pre-sized
// (2, n, K_T, K_X), zeroed) and targets (resized to n, cleared).
template <typename S>
using FillBatchFn =
    std::function<void(const std::vector<int>&, Buf<S>&, std::vector<TargetList>&)>;

template <typename S>
double evaluate(Net<S>& net, const FillBatchFn<S>& fill, const std::vector<int>& idx,
                int batch) {
  const NetDesc& d = net.desc();
  Buf<S> input;
  std::vector<TargetList> targets;
  double num = 0.0;
  long den = 0;
  for (size_t at = 0; at < idx.size(); at += batch) {
    size_t n = std::min<size_t>(batch, idx.size() - at);
    std::vector<int> bidx(idx.begin() + at, idx.begin() + at + n);
    input.resize({2, static_cast<int>(n), d.K_T, d.K_X});
    input.zero();
    targets.assign(n, {});
    fill(bidx, input, targets);
    Buf<S>& y = net.forward(input, false);
    LossValue lv = masked_imae_loss<S>(y, targets, nullptr);
    if (!std::isfinite(lv.loss)) throw NumericError("evaluation loss is not finite");
    num += lv.loss * lv.n_used;
    den += lv.n_used;
  }
  return den ? num / den : 0.0;
}

template <typename S>
TrainResult train(Net<S>& net, const FillBatchFn<S>& fill, int n_samples,
                  const TrainConfig& cfg,
                  const std::function<void(int, const EpochStats&)>& on_epoch = {}) {
  if (n_samples < 1) throw ValidationError("training needs at least one sample");
  if (cfg.epochs < 1 || cfg.batch < 1) throw ValidationError("bad train config");
  const NetDesc& d = net.desc();
  int n_val = static_cast<int>(std::lround(n_samples * cfg.val_frac));
  n_val = std::min(n_val, n_samples - 1);
  const int n_train = n_samples - n_val;
  std::vector<int> train_idx(n_train), val_idx(n_val);
  for (int i = 0; i < n_train; ++i) train_idx[i] = i;
  for (int i = 0; i < n_val; ++i) val_idx[i] = n_train + i;

  auto ps = net.params();
  Adam<S> opt;
  opt.init(ps, cfg);

  TrainResult res;
  std::vector<std::vector<S>> best_w;
  Buf<S> input, dout;
  std::vector<TargetList> targets;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng rng(Rng::derive(cfg.rng_seed, 1000 + static_cast<uint64_t>(epoch)));
    rng.shuffle(train_idx);
    double num = 0.0;
    long den = 0;
    for (int at = 0; at < n_train; at += cfg.batch) {
      int n = std::min(cfg.batch, n_train - at);
      std::vector<int> bidx(train_idx.begin() + at, train_idx.begin() + at + n);
      input.resize({2, n, d.K_T, d.K_X});
      input.zero();
      targets.assign(n, {});
      fill(bidx, input, targets);
      Buf<S>& y = net.forward(input, true);
      LossValue lv = masked_imae_loss<S>(y, targets, &dout);
      if (!std::isfinite(lv.loss))
        throw NumericError("training loss diverged at epoch " + std::to_string(epoch) +
                           ", batch offset " + std::to_string(at));
      if (lv.n_used == 0) continue;  // nothing to learn from this batch
      net.zero_grads();
      net.backward(dout);
      opt.apply(ps);
      num += lv.loss * lv.n_used;
      den += lv.n_used;
    }
    EpochStats st;
    st.train_loss = den ? num / den : 0.0;
    st.val_loss = n_val ? evaluate(net, fill, val_idx, cfg.batch) : st.train_loss;
    res.history.push_back(st);
    if (res.best_epoch < 0 || st.val_loss < res.best_val) {
      res.best_epoch = epoch;
      res.best_val = st.val_loss;
      best_w.clear();
      for (auto* p : ps) best_w.push_back(p->w);  // running stats included
    }
    if (on_epoch) on_epoch(epoch, st);
  }
  for (size_t k = 0; k < ps.size(); ++k) ps[k]->w = best_w[k];
  return res;
}

}  // namespace tse::nn
