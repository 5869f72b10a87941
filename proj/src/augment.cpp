#include "tse/augment.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

namespace tse {

GriddedScenario grid_scenario(std::string name, const GridSpec& spec,
                              const std::vector<Trajectory>& traces) {
  GriddedScenario sc;
  sc.name = std::move(name);
  sc.spec = spec;
  sc.n_traces = static_cast<int>(traces.size());
  sc.rows.resize(spec.n_t);
  for (int k = 0; k < sc.n_traces; ++k) {
    for (const CellRecord& r : trace_cell_speeds(traces[k], spec))
      sc.rows[r.i].push_back({k, r.j, static_cast<float>(r.v_kmh)});
  }
  for (auto& row : sc.rows)
    std::sort(row.begin(), row.end(), [](const GriddedScenario::Rec& a,
                                         const GriddedScenario::Rec& b) {
      return a.j != b.j ? a.j < b.j : a.trace < b.trace;
    });
  return sc;
}

std::vector<Sample> augment(const std::vector<GriddedScenario>& scenarios, int n,
                            const AugmentConfig& cfg) {
  cfg.layout.validate();
  if (n < 0) throw ValidationError("augment: negative sample count");
  if (!(cfg.p_min > 0.0 && cfg.p_min <= cfg.p_max && cfg.p_max < 1.0))
    throw ValidationError("augment: p range must lie inside (0, 1)");
  const int LT = cfg.layout.L_T, LX = cfg.layout.L_X;
  const int mt = cfg.layout.margin_t(), mx = cfg.layout.margin_x();

  std::vector<int> usable;
  for (size_t k = 0; k < scenarios.size(); ++k) {
    const GriddedScenario& sc = scenarios[k];
    if (sc.n_traces < 2) {
      std::cerr << "warning: augment: skipping scenario '" << sc.name
                << "' with fewer than 2 traces\n";
      continue;
    }
    if (sc.spec.n_t < LT || sc.spec.n_x < LX) {
      std::cerr << "warning: augment: skipping scenario '" << sc.name
                << "' smaller than the output window\n";
      continue;
    }
    usable.push_back(static_cast<int>(k));
  }
  if (usable.empty() && n > 0)
    throw ValidationError("augment: no usable scenario");

  std::vector<Sample> out;
  out.reserve(n);
  std::vector<int> perm;
  std::vector<uint8_t> is_in;
  for (int s = 0; s < n; ++s) {
    Rng rng(Rng::derive(cfg.rng_seed, 0xa5000000ULL + static_cast<uint64_t>(s)));
    Sample smp;
    smp.scenario = usable[rng.uniform_int(static_cast<int>(usable.size()))];
    const GriddedScenario& sc = scenarios[smp.scenario];
    smp.p = rng.uniform(cfg.p_min, cfg.p_max);
    perm.resize(sc.n_traces);
    for (int k = 0; k < sc.n_traces; ++k) perm[k] = k;
    rng.shuffle(perm);
    int n_in = static_cast<int>(std::lround(smp.p * sc.n_traces));
    is_in.assign(sc.n_traces, 0);
    for (int k = 0; k < n_in; ++k) is_in[perm[k]] = 1;
    smp.i0 = rng.uniform_int(sc.spec.n_t - LT + 1);
    smp.j0 = rng.uniform_int(sc.spec.n_x - LX + 1);

    const int jlo = smp.j0 - mx, jhi = jlo + cfg.layout.K_X;
    for (int rw = 0; rw < cfg.layout.K_T; ++rw) {
      int si = smp.i0 - mt + rw;
      if (si < 0 || si >= sc.spec.n_t) continue;
      const auto& row = sc.rows[si];
      auto it = std::lower_bound(
          row.begin(), row.end(), jlo,
          [](const GriddedScenario::Rec& r, int j) { return r.j < j; });
      while (it != row.end() && it->j < jhi) {
        int j = it->j;
        double inv_in = 0.0, inv_out = 0.0;
        int c_in = 0, c_out = 0;
        for (; it != row.end() && it->j == j; ++it) {
          if (is_in[it->trace]) {
            inv_in += 1.0 / it->v_kmh;
            ++c_in;
          } else {
            inv_out += 1.0 / it->v_kmh;
            ++c_out;
          }
        }
        if (c_in)
          smp.input.push_back(
              {rw, j - jlo, static_cast<float>(normalize_speed(c_in / inv_in))});
        if (c_out && si >= smp.i0 && si < smp.i0 + LT && j >= smp.j0 && j < smp.j0 + LX)
          smp.target.push_back({si - smp.i0, j - smp.j0, c_out / inv_out});
      }
    }
    out.push_back(std::move(smp));
  }
  return out;
}

}  // namespace tse
