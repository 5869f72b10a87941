#pragma once

#include <string>
#include <vector>

#include "tse/types.hpp"

namespace tse {

// Trajectory CSV: header "trace_id,t_s,x_m", rows sorted by (trace_id, t_s).
void write_trajectories_csv(const std::string& path, const std::vector<Trajectory>& trajs);
std::vector<Trajectory> read_trajectories_csv(const std::string& path);

// Sparse field CSV: header "i,j,v_kmh".
void write_sparse_csv(const std::string& path, const SparseSpeedField& field);
std::vector<SparseEntry> read_sparse_csv(const std::string& path);

// Full field binary: 16-byte header (magic "TSF1", n_T, n_X as u32 LE, 4 reserved
// bytes), then n_T*n_X float32 LE, row-major with time as the row index.
void write_field_tsf(const std::string& path, const SpeedField& field);
SpeedField read_field_tsf(const std::string& path, const GridSpec& spec);

// Header-only read, for when the grid spec is reconstructed elsewhere.
void read_tsf_dims(const std::string& path, int& n_t, int& n_x);

// Heatmap (binary PPM): time on the horizontal axis, space vertical with x
// increasing upward, low speeds in warm colors.
void write_heatmap_ppm(const std::string& path, const SpeedField& field, int px_per_cell = 3);

std::string format_double(double v);

}  // namespace tse
