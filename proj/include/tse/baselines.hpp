#pragma once
// Classical reconstruction baselines: isotropic exponential smoothing, the
// adaptive smoothing method (ASM) on inverse speeds, and a simplified
// phase-based smoother (psm_lite).

#include "tse/flatcfg.hpp"
#include "tse/types.hpp"

namespace tse {

struct IsoParams {
  double tau_s = 150;
  double sigma_m = 300;

  void validate() const;
};

struct AsmParams {
  double c_cong_kmh = -15;
  double c_free_kmh = 80;
  double sigma_m = 300;
  double tau_s = 150;
  double v_thres_kmh = 60;  // where the congested weight crosses 0.5
  double dv_kmh = 20;       // transition width of the weight

  void validate() const;
};

struct PsmParams {
  double v_c_kmh = 60;        // below: congested (synchronized or moving jam)
  double jam_v_kmh = 30;      // below: moving-jam candidate
  double c_cong_kmh = -15;    // jam characteristic speed
  // Alignment test for jam candidates: congested neighbors within the time
  // window whose offset from the c_cong characteristic is small.
  double align_window_s = 900;
  double align_tol_m = 300;
  int align_min_count = 3;
  // Phase regions: convex hulls of same-phase points, dilated by these radii.
  double dilate_t_s = 300;
  double dilate_x_m = 400;
  // Per-phase kernels (inverse-speed smoothing).
  double free_tau_s = 150, free_sigma_m = 300, free_c_kmh = 80;
  double sync_tau_s = 120, sync_sigma_m = 200;  // near-isotropic, space-local
  double jam_tau_s = 150, jam_sigma_m = 300;    // skewed along c_cong

  void validate() const;
};

SpeedField isotropic(const SparseSpeedField& field, const IsoParams& p);
SpeedField asm_reconstruct(const SparseSpeedField& field, const AsmParams& p);
SpeedField psm_lite(const SparseSpeedField& field, const PsmParams& p);

// Single anisotropic pass: smooths the given per-entry values (speeds or
// inverse speeds) with Phi_c(t,x) = exp(-|x|/sigma - |t - x/c|/tau), kernel
// truncated at 5 decay lengths.  slope_s_per_m = 1/c in s/m; 0 = isotropic.
// Cells outside every datum's truncated support keep `fallback`.
Mat kernel_smooth(const GridSpec& spec, const std::vector<SparseEntry>& data,
                  const std::vector<double>& values, double tau_s, double sigma_m,
                  double slope_s_per_m, double fallback);

// Per-datum phase labels, exposed for tests.
enum class Phase : uint8_t { Free = 0, Synchronized = 1, MovingJam = 2 };
std::vector<Phase> classify_phases(const SparseSpeedField& field, const PsmParams& p);

IsoParams iso_params_from(const FlatCfg& cfg);
AsmParams asm_params_from(const FlatCfg& cfg);
PsmParams psm_params_from(const FlatCfg& cfg);

}  // namespace tse
