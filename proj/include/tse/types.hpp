#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "tse/errors.hpp"

namespace tse {

// Units are fixed across the whole toolkit: seconds, meters, km/h.
constexpr double kVminKmh = 3.0;
constexpr double kVmaxKmh = 130.0;
constexpr double kVshiftKmh = 65.0;
constexpr double kVvarKmh = 100.0;
constexpr double kMpsToKmh = 3.6;

struct TrajectoryPoint {
  double t = 0.0;  // seconds since domain start
  double x = 0.0;  // meters along the road, increasing in driving direction
};

/// One probe vehicle's trace, already projected to 1-D road coordinates.
struct Trajectory {
  std::string id;
  std::vector<TrajectoryPoint> points;

  // >= 2 points, t strictly increasing, x non-decreasing, all finite.
  void validate() const;
};

/// Uniform space-time discretization. Cells are half-open:
/// [t0 + i*dt, t0 + (i+1)*dt) x [x0 + j*dx, x0 + (j+1)*dx).
struct GridSpec {
  double t0_s = 0.0;
  double duration_s = 0.0;
  double x0_m = 0.0;
  double length_m = 0.0;
  double dt_s = 60.0;
  double dx_m = 100.0;
  int n_t = 0;
  int n_x = 0;

  static GridSpec make(double t0_s, double duration_s, double x0_m, double length_m,
                       double dt_s = 60.0, double dx_m = 100.0);

  // Grid extent; n_t*dt may exceed duration when duration is not a multiple of dt.
  double t_end() const { return t0_s + n_t * dt_s; }
  double x_end() const { return x0_m + n_x * dx_m; }

  int time_index(double t) const { return static_cast<int>(std::floor((t - t0_s) / dt_s)); }
  int space_index(double x) const { return static_cast<int>(std::floor((x - x0_m) / dx_m)); }
  double cell_center_t(int i) const { return t0_s + (i + 0.5) * dt_s; }
  double cell_center_x(int j) const { return x0_m + (j + 0.5) * dx_m; }
  bool contains_cell(int i, int j) const { return i >= 0 && i < n_t && j >= 0 && j < n_x; }

  bool operator==(const GridSpec&) const = default;
};

/// Dense row-major matrix, rows = time cells, cols = space cells.
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(int r, int c, double fill = 0.0) : rows(r), cols(c), a(static_cast<size_t>(r) * c, fill) {}
  double& at(int i, int j) { return a[static_cast<size_t>(i) * cols + j]; }
  double at(int i, int j) const { return a[static_cast<size_t>(i) * cols + j]; }
};

struct MaskMat {
  int rows = 0;
  int cols = 0;
  std::vector<uint8_t> a;

  MaskMat() = default;
  MaskMat(int r, int c, uint8_t fill = 0) : rows(r), cols(c), a(static_cast<size_t>(r) * c, fill) {}
  uint8_t& at(int i, int j) { return a[static_cast<size_t>(i) * cols + j]; }
  uint8_t at(int i, int j) const { return a[static_cast<size_t>(i) * cols + j]; }
};

struct SparseEntry {
  int i = 0;  // time index
  int j = 0;  // space index
  double v_kmh = 0.0;
};

/// Sparse measured cell speeds; at most one entry per cell, sorted by (i, j).
struct SparseSpeedField {
  GridSpec spec;
  std::vector<SparseEntry> entries;

  void validate() const;
};

/// Full estimated field, km/h, bounded to [3, 130] after estimation.
struct SpeedField {
  GridSpec spec;
  Mat v;
};

/// Binary indicator of measured cells.
struct OccupancyMatrix {
  GridSpec spec;
  MaskMat psi;
};

}  // namespace tse
