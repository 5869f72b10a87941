#pragma once

#include <algorithm>
#include <vector>

#include "tse/types.hpp"

namespace tse {

/// Per-cell share of a trajectory: accumulated in-cell distance and travel time.
struct CellSpan {
  int i = 0;
  int j = 0;
  double distance_m = 0.0;
  double time_s = 0.0;
};

/// Per-trace cell speed record, input to harmonic aggregation.
struct CellRecord {
  int i = 0;
  int j = 0;
  double v_kmh = 0.0;
};

/// Split a trajectory at every cell border it crosses, assuming constant speed
/// between consecutive samples, and accumulate per-cell (distance, time).
/// Cells with zero accumulated time are omitted. Sorted by (i, j).
std::vector<CellSpan> rasterize_trajectory(const Trajectory& traj, const GridSpec& spec);

/// Cell speeds of one trace: v = dist/time, floored at 3 km/h so that stopped
/// vehicles still contribute a congestion reading.
std::vector<CellRecord> trace_cell_speeds(const Trajectory& traj, const GridSpec& spec);

/// Harmonic-mean aggregation of per-trace cell speeds into a sparse field.
SparseSpeedField aggregate(const std::vector<CellRecord>& records, const GridSpec& spec);

/// Rasterize and aggregate a whole set of traces.
SparseSpeedField grid_traces(const std::vector<Trajectory>& trajs, const GridSpec& spec);

OccupancyMatrix occupancy(const SparseSpeedField& field);

inline double clamp_speed(double v_kmh) {
  return std::clamp(v_kmh, kVminKmh, kVmaxKmh);
}

// (v - 65) / 100 after clamping into [3, 130]; empty cells use fill value 0.
inline double normalize_speed(double v_kmh) {
  return (clamp_speed(v_kmh) - kVshiftKmh) / kVvarKmh;
}

inline double denormalize_speed(double v_norm) {
  return clamp_speed(v_norm * kVvarKmh + kVshiftKmh);
}

}  // namespace tse
