#pragma once
// Synthetic congestion scenarios: ground-truth speed fields composed from
// congestion primitives, and probe vehicles sampled through them.

#include <string>
#include <vector>

#include "tse/rng.hpp"
#include "tse/types.hpp"

namespace tse {

struct CongestionPrimitive {
  enum class Kind { MovingJam, StationaryBand, MegaJam };
  Kind kind = Kind::MovingJam;

  // moving_jam: a band of width width_m around the line
  // x = x_anchor + c * (t - t_anchor), active for lifetime_s from the anchor.
  double t_anchor_s = 0;
  double x_anchor_m = 0;
  double c_kmh = -15;
  double width_m = 500;
  double lifetime_s = 3600;

  // stationary_band / mega_jam: a space-time box.
  double x_from_m = 0, x_to_m = 0;
  double t_from_s = 0, t_to_s = 0;

  double v_in_kmh = 10;     // interior speed
  double soft_x_m = 200;    // linear ramp length at spatial edges
  double soft_t_s = 180;    // linear ramp length at temporal edges

  void validate() const;
  // Membership in [0,1]: 1 in the core, linear falloff over the soft edges.
  double membership(double t_s, double x_m) const;
};

const char* kind_name(CongestionPrimitive::Kind k);
CongestionPrimitive::Kind kind_from_name(const std::string& name);

struct Scenario {
  std::string name;
  GridSpec spec;
  double free_speed_kmh = 120;
  std::vector<CongestionPrimitive> primitives;
  uint64_t rng_seed = 0;

  void validate() const;
};

struct ProbeConfig {
  double entry_rate_vph = 600;      // vehicles per hour entering at x0
  double interval_min_s = 5;        // per-vehicle sampling interval range
  double interval_max_s = 20;
  double speed_noise_std = 0.05;    // multiplicative noise on segment durations
  uint64_t rng_seed = 0;

  void validate() const;
};

// Pointwise minimum over primitives at each cell center, free_speed elsewhere,
// clamped to [kVminKmh, kVmaxKmh].
SpeedField render_ground_truth(const Scenario& scn);

// Vehicles enter at x0 at exponentially spaced times and integrate
// dx/dt = v(t,x) through the field (cell-constant lookup, steps <= 1 s).
// Positions are exact; noise re-times the samples by scaling segment
// durations, so implied speeds are perturbed but monotonicity is preserved.
std::vector<Trajectory> sample_probes(const SpeedField& field, const ProbeConfig& cfg);

// Deterministic library of n randomized scenarios cycling through congestion
// archetypes so that every primitive kind stays well represented.
std::vector<Scenario> scenario_library(int n, uint64_t seed);

// Flat key=value scenario files (one `primitive = kind k=v ...` line each).
std::string scenario_to_text(const Scenario& scn);
Scenario scenario_from_text(const std::string& text, const std::string& origin);
void write_scenario(const std::string& path, const Scenario& scn);
Scenario read_scenario(const std::string& path);

}  // namespace tse
