#pragma once
// Training-sample generation: random scenario, random trace split, random
// patch location.  Input cells come from the drawn traces, target cells from
// the held-out remainder, so the target is never visible in the input.
//
// Samples are stored packed-sparse (occupied cells only); the dense
// (speed, occupancy) planes are materialized per batch.

#include <string>
#include <vector>

#include "tse/grid.hpp"
#include "tse/nn/train.hpp"
#include "tse/patches.hpp"
#include "tse/rng.hpp"

namespace tse {

/// Per-trace cell speeds of one scenario, bucketed by time row for fast
/// window scans.
struct GriddedScenario {
  std::string name;
  GridSpec spec;
  struct Rec {
    int trace = 0;
    int j = 0;
    float v_kmh = 0.0f;
  };
  std::vector<std::vector<Rec>> rows;  // [time row], sorted by (j, trace)
  int n_traces = 0;
};

GriddedScenario grid_scenario(std::string name, const GridSpec& spec,
                              const std::vector<Trajectory>& traces);

struct Sample {
  int scenario = 0;  // index into the scenario list handed to augment()
  double p = 0.0;    // input trace ratio actually drawn
  int i0 = 0, j0 = 0;  // output-window origin in scenario cells
  struct InCell {
    int r = 0, c = 0;  // position inside the K_T x K_X input window
    float v_norm = 0.0f;
  };
  std::vector<InCell> input;
  std::vector<nn::TargetCell> target;  // positions inside the L_T x L_X window
};

struct AugmentConfig {
  PatchLayout layout;
  double p_min = 0.1;
  double p_max = 0.9;
  uint64_t rng_seed = 1;
};

/// Draws exactly n samples. Scenarios with fewer than 2 traces or a domain
/// smaller than the output window are skipped with a warning on stderr.
std::vector<Sample> augment(const std::vector<GriddedScenario>& scenarios, int n,
                            const AugmentConfig& cfg);

/// Writes one sample's planes into batch slot n of input (2, N, K_T, K_X):
/// channel 0 normalized speed, channel 1 occupancy.
template <typename S>
void write_sample_input(const Sample& s, int n, nn::Buf<S>& input) {
  const int N = input.shape[1], KT = input.shape[2], KX = input.shape[3];
  for (const Sample::InCell& c : s.input) {
    size_t base = (static_cast<size_t>(n) * KT + c.r) * KX + c.c;
    input.a[base] = static_cast<S>(c.v_norm);
    input.a[static_cast<size_t>(N) * KT * KX + base] = S(1);
  }
}

template <typename S>
nn::FillBatchFn<S> make_fill_fn(const std::vector<Sample>& samples) {
  return [&samples](const std::vector<int>& idx, nn::Buf<S>& input,
                    std::vector<nn::TargetList>& targets) {
    for (size_t n = 0; n < idx.size(); ++n) {
      const Sample& s = samples[idx[n]];
      write_sample_input(s, static_cast<int>(n), input);
      targets[n] = s.target;
    }
  };
}

/// Dense reconstruction with a trained network: decompose into patches,
/// forward in batches, stitch the output tiles.
template <typename S>
SpeedField infer_field(nn::Net<S>& net, const SparseSpeedField& field,
                       const PatchLayout& layout, int batch = 32) {
  const nn::NetDesc& d = net.desc();
  if (d.K_T != layout.K_T || d.K_X != layout.K_X || d.L_T != layout.L_T ||
      d.L_X != layout.L_X)
    throw ValidationError("network patch size does not match the requested layout");
  std::vector<Patch> patches = decompose(field, layout);
  std::vector<PatchOutput> outs;
  outs.reserve(patches.size());
  nn::Buf<S> input;
  for (size_t at = 0; at < patches.size(); at += batch) {
    size_t n = std::min<size_t>(batch, patches.size() - at);
    input.resize({2, static_cast<int>(n), layout.K_T, layout.K_X});
    for (size_t k = 0; k < n; ++k) {
      const Patch& p = patches[at + k];
      for (int r = 0; r < layout.K_T; ++r)
        for (int c = 0; c < layout.K_X; ++c) {
          if (!p.occupancy.at(r, c)) continue;
          size_t base = ((k * layout.K_T) + r) * layout.K_X + c;
          input.a[base] = static_cast<S>(p.speeds.at(r, c));
          input.a[n * static_cast<size_t>(layout.K_T) * layout.K_X + base] = S(1);
        }
    }
    nn::Buf<S>& y = net.forward(input, false);
    for (size_t k = 0; k < n; ++k) {
      PatchOutput po;
      po.i0 = patches[at + k].i0;
      po.j0 = patches[at + k].j0;
      po.values = Mat(layout.L_T, layout.L_X);
      for (int r = 0; r < layout.L_T; ++r)
        for (int c = 0; c < layout.L_X; ++c)
          po.values.at(r, c) =
              static_cast<double>(y.a[((k * layout.L_T) + r) * layout.L_X + c]);
      outs.push_back(std::move(po));
    }
  }
  return stitch(outs, field.spec);
}

}  // namespace tse
