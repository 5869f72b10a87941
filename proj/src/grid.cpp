#include "tse/grid.hpp"

#include <cmath>
#include <map>
#include <unordered_map>

namespace tse {

void Trajectory::validate() const {
  if (points.size() < 2)
    throw ValidationError("trajectory '" + id + "': needs at least 2 points");
  for (size_t k = 0; k < points.size(); ++k) {
    if (!std::isfinite(points[k].t) || !std::isfinite(points[k].x))
      throw ValidationError("trajectory '" + id + "': non-finite sample");
    if (k > 0) {
      if (points[k].t <= points[k - 1].t)
        throw ValidationError("trajectory '" + id + "': timestamps not strictly increasing");
      if (points[k].x < points[k - 1].x)
        throw ValidationError("trajectory '" + id + "': position decreases");
    }
  }
}

GridSpec GridSpec::make(double t0_s, double duration_s, double x0_m, double length_m,
                        double dt_s, double dx_m) {
  if (dt_s <= 0 || dx_m <= 0) throw ValidationError("grid: dt and dx must be positive");
  if (duration_s <= 0 || length_m <= 0)
    throw ValidationError("grid: duration and length must be positive");
  GridSpec g;
  g.t0_s = t0_s;
  g.duration_s = duration_s;
  g.x0_m = x0_m;
  g.length_m = length_m;
  g.dt_s = dt_s;
  g.dx_m = dx_m;
  g.n_t = static_cast<int>(std::ceil(duration_s / dt_s - 1e-12));
  g.n_x = static_cast<int>(std::ceil(length_m / dx_m - 1e-12));
  if (g.n_t < 1 || g.n_x < 1) throw ValidationError("grid: empty grid");
  return g;
}

void SparseSpeedField::validate() const {
  for (size_t k = 0; k < entries.size(); ++k) {
    const auto& e = entries[k];
    if (!spec.contains_cell(e.i, e.j))
      throw ValidationError("sparse field: entry outside grid");
    if (!(e.v_kmh > 0.0)) throw ValidationError("sparse field: non-positive speed");
    if (k > 0) {
      const auto& p = entries[k - 1];
      if (p.i > e.i || (p.i == e.i && p.j >= e.j))
        throw ValidationError("sparse field: entries not sorted unique by (i,j)");
    }
  }
}

namespace {

// Grid-line crossing parameters of the segment a->b along one axis.
void collect_crossings(double a, double b, double origin, double step, std::vector<double>& s_out) {
  if (b == a) return;
  int k_lo = static_cast<int>(std::floor((std::min(a, b) - origin) / step)) + 1;
  int k_hi = static_cast<int>(std::floor((std::max(a, b) - origin) / step));
  for (int k = k_lo; k <= k_hi; ++k) {
    double line = origin + k * step;
    double s = (line - a) / (b - a);
    if (s > 0.0 && s < 1.0) s_out.push_back(s);
  }
}

}  // namespace

std::vector<CellSpan> rasterize_trajectory(const Trajectory& traj, const GridSpec& spec) {
  traj.validate();

  std::map<std::pair<int, int>, std::pair<double, double>> acc;  // (i,j) -> (dist, time)
  std::vector<double> s;
  for (size_t k = 0; k + 1 < traj.points.size(); ++k) {
    const auto& a = traj.points[k];
    const auto& b = traj.points[k + 1];
    s.clear();
    s.push_back(0.0);
    collect_crossings(a.t, b.t, spec.t0_s, spec.dt_s, s);
    collect_crossings(a.x, b.x, spec.x0_m, spec.dx_m, s);
    s.push_back(1.0);
    std::sort(s.begin(), s.end());

    double dt_seg = b.t - a.t;
    double dx_seg = b.x - a.x;
    for (size_t m = 0; m + 1 < s.size(); ++m) {
      double s0 = s[m], s1 = s[m + 1];
      if (s1 - s0 < 1e-12) continue;
      double sm = 0.5 * (s0 + s1);
      int i = spec.time_index(a.t + sm * dt_seg);
      int j = spec.space_index(a.x + sm * dx_seg);
      if (!spec.contains_cell(i, j)) continue;
      auto& slot = acc[{i, j}];
      slot.first += (s1 - s0) * dx_seg;
      slot.second += (s1 - s0) * dt_seg;
    }
  }

  std::vector<CellSpan> out;
  out.reserve(acc.size());
  for (const auto& [cell, dist_time] : acc) {
    if (dist_time.second <= 0.0) continue;
    out.push_back({cell.first, cell.second, dist_time.first, dist_time.second});
  }
  return out;
}

std::vector<CellRecord> trace_cell_speeds(const Trajectory& traj, const GridSpec& spec) {
  std::vector<CellRecord> out;
  for (const auto& span : rasterize_trajectory(traj, spec)) {
    double v = kMpsToKmh * span.distance_m / span.time_s;
    out.push_back({span.i, span.j, std::max(v, kVminKmh)});
  }
  return out;
}

SparseSpeedField aggregate(const std::vector<CellRecord>& records, const GridSpec& spec) {
  std::map<std::pair<int, int>, std::pair<double, int>> acc;  // (i,j) -> (sum 1/v, n)
  for (const auto& r : records) {
    if (!(r.v_kmh > 0.0)) throw ValidationError("aggregate: non-positive speed record");
    if (!spec.contains_cell(r.i, r.j)) throw ValidationError("aggregate: record outside grid");
    auto& slot = acc[{r.i, r.j}];
    slot.first += 1.0 / r.v_kmh;
    slot.second += 1;
  }
  SparseSpeedField field;
  field.spec = spec;
  field.entries.reserve(acc.size());
  for (const auto& [cell, inv_n] : acc)
    field.entries.push_back({cell.first, cell.second, inv_n.second / inv_n.first});
  return field;
}

SparseSpeedField grid_traces(const std::vector<Trajectory>& trajs, const GridSpec& spec) {
  std::vector<CellRecord> records;
  for (const auto& t : trajs) {
    auto r = trace_cell_speeds(t, spec);
    records.insert(records.end(), r.begin(), r.end());
  }
  return aggregate(records, spec);
}

OccupancyMatrix occupancy(const SparseSpeedField& field) {
  OccupancyMatrix occ;
  occ.spec = field.spec;
  occ.psi = MaskMat(field.spec.n_t, field.spec.n_x, 0);
  for (const auto& e : field.entries) occ.psi.at(e.i, e.j) = 1;
  return occ;
}

}  // namespace tse
