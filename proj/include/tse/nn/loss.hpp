#pragma once
// Masked inverse-speed MAE on normalized network outputs.
//
// The network predicts normalized speeds; a target is a sparse list of probed
// cells inside the output window with their reference speeds in km/h.  The
// loss of one sample is the mean over its target cells of
// |1/clamp(v_pred) - 1/clamp(v_ref)| in h/km, and the batch loss averages the
// samples that have at least one target cell.

#include <cmath>
#include <vector>

#include "tse/grid.hpp"
#include "tse/nn/buf.hpp"

namespace tse::nn {

struct TargetCell {
  int r = 0, c = 0;   // row (time), col (space) inside the output window
  double v_kmh = 0.0;
};
using TargetList = std::vector<TargetCell>;

struct LossValue {
  double loss = 0.0;  // h/km; 0 when no sample had targets
  int n_used = 0;     // samples that contributed
};

// y: (1, N, L_T, L_X).  dout (optional) gets d loss / d y, same shape.
template <typename S>
LossValue masked_imae_loss(const Buf<S>& y, const std::vector<TargetList>& targets,
                           Buf<S>* dout) {
  const int N = y.shape[1], LT = y.shape[2], LX = y.shape[3];
  if (static_cast<int>(targets.size()) != N)
    throw ValidationError("loss: one target list per sample required");
  if (dout) {
    dout->resize(y.shape);
    dout->zero();
  }
  int n_used = 0;
  for (const auto& tl : targets)
    if (!tl.empty()) ++n_used;
  LossValue out;
  out.n_used = n_used;
  if (n_used == 0) return out;

  double total = 0.0;
  for (int n = 0; n < N; ++n) {
    const TargetList& tl = targets[n];
    if (tl.empty()) continue;
    double acc = 0.0;
    const double cell_w = 1.0 / (static_cast<double>(tl.size()) * n_used);
    for (const TargetCell& t : tl) {
      if (t.r < 0 || t.r >= LT || t.c < 0 || t.c >= LX)
        throw ValidationError("loss: target cell outside the output window");
      size_t idx = (static_cast<size_t>(n) * LT + t.r) * LX + t.c;
      double raw = static_cast<double>(y.a[idx]) * kVvarKmh + kVshiftKmh;
      double cv = clamp_speed(raw);
      double g = 1.0 / clamp_speed(t.v_kmh);
      double diff = 1.0 / cv - g;
      acc += std::abs(diff);
      if (dout && raw > kVminKmh && raw < kVmaxKmh) {
        double sign = diff > 0 ? 1.0 : (diff < 0 ? -1.0 : 0.0);
        // d|1/v - g|/d p = -sign / v^2 * dv/dp, dv/dp = 100
        dout->a[idx] += static_cast<S>(-sign / (cv * cv) * 100.0 * cell_w);
      }
    }
    total += acc / static_cast<double>(tl.size());
  }
  out.loss = total / n_used;
  return out;
}

}  // namespace tse::nn
