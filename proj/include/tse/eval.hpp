#pragma once
// Accuracy scoring against held-out probe cells, method-difference maps, and
// the data-density sweep.

#include <functional>
#include <string>
#include <vector>

#include "tse/types.hpp"

namespace tse {

/// Cell-wise reference speeds aggregated from held-out traces.
struct GroundTruthSet {
  GridSpec spec;
  std::vector<SparseEntry> cells;
};

GroundTruthSet ground_truth_from_traces(const std::vector<Trajectory>& traces,
                                        const GridSpec& spec);

/// Mean absolute inverse-speed error in h/km over the reference cells.
double imae(const SpeedField& est, const GroundTruthSet& gt);

/// Per-cell |1/v1 - 1/v_gt| - |1/v2 - 1/v_gt|; positive where the second
/// (reference) method is more accurate.
struct DeltaCell {
  int i = 0, j = 0;
  double delta = 0.0;  // h/km
};
struct DeltaMap {
  GridSpec spec;
  std::vector<DeltaCell> cells;
};

DeltaMap imae_delta_map(const SpeedField& v1, const SpeedField& v2,
                        const GroundTruthSet& gt);

struct SweepMethod {
  std::string name;
  std::function<SpeedField(const SparseSpeedField&)> reconstruct;
};

struct SweepRun {
  std::string method;
  double p = 0.0;
  int iteration = 0;
  double imae = 0.0;
};

struct SweepSummaryRow {
  std::string method;
  double p = 0.0;
  double mean = 0.0;
  double stddev = 0.0;
  int n = 0;
};

struct SweepResult {
  std::vector<SweepRun> runs;
  std::vector<SweepSummaryRow> summary;
};

/// For each p and iteration: split the traces by p, grid the reconstruction
/// split once, hand the identical sparse field to every method, and score
/// against the held-out split. Iterations whose split would leave either side
/// empty are skipped with a warning.
SweepResult density_sweep(const std::vector<Trajectory>& traces, const GridSpec& spec,
                          const std::vector<SweepMethod>& methods,
                          const std::vector<double>& p_list, int iterations,
                          uint64_t seed);

void write_sweep_runs_csv(const std::string& path, const std::vector<SweepRun>& runs);
void write_sweep_summary_csv(const std::string& path,
                             const std::vector<SweepSummaryRow>& rows);

}  // namespace tse
