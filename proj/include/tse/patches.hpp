#pragma once
// Overlapping-patch tiling for dense inference.  The domain is padded with
// empty cells so that every L_T x L_X output tile sits centered inside a
// K_T x K_X input window; output tiles partition the original domain and are
// stitched back without blending.

#include <vector>

#include "tse/types.hpp"

namespace tse {

struct PatchLayout {
  int K_T = 64, K_X = 64;  // input window cells
  int L_T = 32, L_X = 32;  // output window cells

  void validate() const;
  int margin_t() const { return (K_T - L_T) / 2; }
  int margin_x() const { return (K_X - L_X) / 2; }
  // Tile counts when covering an n_t x n_x domain.
  int tiles_t(int n_t) const { return (n_t + L_T - 1) / L_T; }
  int tiles_x(int n_x) const { return (n_x + L_X - 1) / L_X; }
};

struct Patch {
  // Input-window origin in padded-domain coordinates; numerically equal to
  // the output-window origin in original-domain coordinates.
  int i0 = 0, j0 = 0;
  Mat speeds;          // K_T x K_X, normalized; 0 where empty
  MaskMat occupancy;   // K_T x K_X, 1 where a measurement exists
};

struct PatchOutput {
  int i0 = 0, j0 = 0;  // output-window origin in original-domain cells
  Mat values;          // L_T x L_X, normalized speeds
};

std::vector<Patch> decompose(const SparseSpeedField& field, const PatchLayout& layout);

// The center L x L window of an input patch, unchanged — the identity
// "estimator" used by round-trip tests.
PatchOutput center_window(const Patch& patch, const PatchLayout& layout);

// Denormalizes, clamps to [kVminKmh, kVmaxKmh], and writes each tile into
// place.  Every domain cell must be covered exactly once.
SpeedField stitch(const std::vector<PatchOutput>& outputs, const GridSpec& spec);

}  // namespace tse
