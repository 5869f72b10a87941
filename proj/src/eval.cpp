#include "tse/eval.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <map>

#include "tse/grid.hpp"
#include "tse/io.hpp"
#include "tse/rng.hpp"

namespace tse {

GroundTruthSet ground_truth_from_traces(const std::vector<Trajectory>& traces,
                                        const GridSpec& spec) {
  GroundTruthSet gt;
  gt.spec = spec;
  gt.cells = grid_traces(traces, spec).entries;
  return gt;
}

double imae(const SpeedField& est, const GroundTruthSet& gt) {
  if (gt.cells.empty()) throw ValidationError("imae: empty reference set");
  if (!(est.spec == gt.spec)) throw ValidationError("imae: grid specs differ");
  double acc = 0.0;
  for (const SparseEntry& c : gt.cells) {
    if (!gt.spec.contains_cell(c.i, c.j) || c.v_kmh <= 0.0)
      throw ValidationError("imae: invalid reference cell");
    acc += std::abs(1.0 / est.v.at(c.i, c.j) - 1.0 / c.v_kmh);
  }
  return acc / static_cast<double>(gt.cells.size());
}

DeltaMap imae_delta_map(const SpeedField& v1, const SpeedField& v2,
                        const GroundTruthSet& gt) {
  if (!(v1.spec == v2.spec) || !(v1.spec == gt.spec))
    throw ValidationError("imae_delta_map: grid specs differ");
  DeltaMap dm;
  dm.spec = gt.spec;
  dm.cells.reserve(gt.cells.size());
  for (const SparseEntry& c : gt.cells) {
    double g = 1.0 / c.v_kmh;
    double e1 = std::abs(1.0 / v1.v.at(c.i, c.j) - g);
    double e2 = std::abs(1.0 / v2.v.at(c.i, c.j) - g);
    dm.cells.push_back({c.i, c.j, e1 - e2});
  }
  return dm;
}

SweepResult density_sweep(const std::vector<Trajectory>& traces, const GridSpec& spec,
                          const std::vector<SweepMethod>& methods,
                          const std::vector<double>& p_list, int iterations,
                          uint64_t seed) {
  if (traces.size() < 2)
    throw ValidationError("density_sweep: need at least 2 traces");
  if (methods.empty() || p_list.empty() || iterations < 1)
    throw ValidationError("density_sweep: empty method/p list or no iterations");
  for (double p : p_list)
    if (!(p > 0.0 && p < 1.0))
      throw ValidationError("density_sweep: p must lie inside (0, 1)");

  const int n = static_cast<int>(traces.size());
  SweepResult res;
  for (size_t pi = 0; pi < p_list.size(); ++pi) {
    const double p = p_list[pi];
    for (int it = 0; it < iterations; ++it) {
      Rng rng(Rng::derive(seed, 0xd0000000ULL + pi * 1000003ULL +
                                    static_cast<uint64_t>(it)));
      std::vector<int> perm(n);
      for (int k = 0; k < n; ++k) perm[k] = k;
      rng.shuffle(perm);
      int n_rec = static_cast<int>(std::lround(p * n));
      if (n_rec < 1 || n_rec >= n) {
        std::cerr << "warning: density_sweep: split p=" << p << " leaves a side empty ("
                  << n << " traces), skipping iteration " << it << "\n";
        continue;
      }
      std::vector<Trajectory> rec, held;
      rec.reserve(n_rec);
      held.reserve(n - n_rec);
      for (int k = 0; k < n; ++k)
        (k < n_rec ? rec : held).push_back(traces[perm[k]]);
      SparseSpeedField input = grid_traces(rec, spec);
      GroundTruthSet gt = ground_truth_from_traces(held, spec);
      if (gt.cells.empty()) {
        std::cerr << "warning: density_sweep: held-out split produced no cells, "
                     "skipping iteration "
                  << it << "\n";
        continue;
      }
      for (const SweepMethod& m : methods) {
        SpeedField est = m.reconstruct(input);
        res.runs.push_back({m.name, p, it, imae(est, gt)});
      }
    }
  }

  std::map<std::pair<std::string, double>, std::vector<double>> groups;
  for (const SweepRun& r : res.runs) groups[{r.method, r.p}].push_back(r.imae);
  for (const auto& [key, vals] : groups) {
    SweepSummaryRow row;
    row.method = key.first;
    row.p = key.second;
    row.n = static_cast<int>(vals.size());
    double mean = 0.0;
    for (double v : vals) mean += v;
    mean /= row.n;
    double var = 0.0;
    for (double v : vals) var += (v - mean) * (v - mean);
    row.mean = mean;
    row.stddev = row.n > 1 ? std::sqrt(var / (row.n - 1)) : 0.0;
    res.summary.push_back(row);
  }
  return res;
}

void write_sweep_runs_csv(const std::string& path, const std::vector<SweepRun>& runs) {
  std::ofstream f(path);
  if (!f) throw ValidationError("cannot write '" + path + "'");
  f << "method,p,iteration,imae\n";
  for (const SweepRun& r : runs)
    f << r.method << ',' << format_double(r.p) << ',' << r.iteration << ','
      << format_double(r.imae) << '\n';
  if (!f) throw ValidationError("write failed for '" + path + "'");
}

void write_sweep_summary_csv(const std::string& path,
                             const std::vector<SweepSummaryRow>& rows) {
  std::ofstream f(path);
  if (!f) throw ValidationError("cannot write '" + path + "'");
  f << "method,p,mean,std,n\n";
  for (const SweepSummaryRow& r : rows)
    f << r.method << ',' << format_double(r.p) << ',' << format_double(r.mean) << ','
      << format_double(r.stddev) << ',' << r.n << '\n';
  if (!f) throw ValidationError("write failed for '" + path + "'");
}

}  // namespace tse
