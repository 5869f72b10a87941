#include "tse/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "tse/grid.hpp"

namespace tse {

void IsoParams::validate() const {
  if (!(tau_s > 0) || !(sigma_m > 0))
    throw ValidationError("isotropic params: tau and sigma must be > 0");
}

void AsmParams::validate() const {
  if (!(c_cong_kmh < 0) || !(c_free_kmh > 0))
    throw ValidationError("asm params: need c_cong < 0 < c_free");
  if (!(sigma_m > 0) || !(tau_s > 0) || !(dv_kmh > 0))
    throw ValidationError("asm params: sigma, tau, dV must be > 0");
}

void PsmParams::validate() const {
  if (!(v_c_kmh > kVminKmh) || !(v_c_kmh < kVmaxKmh))
    throw ValidationError("psm params: congestion threshold must lie in (3,130)");
  if (!(jam_v_kmh > 0) || jam_v_kmh > v_c_kmh)
    throw ValidationError("psm params: jam threshold must lie in (0, v_c]");
  if (!(c_cong_kmh < 0)) throw ValidationError("psm params: c_cong must be < 0");
  if (!(align_window_s > 0) || !(align_tol_m > 0) || align_min_count < 1)
    throw ValidationError("psm params: bad alignment test settings");
  if (!(dilate_t_s > 0) || !(dilate_x_m > 0))
    throw ValidationError("psm params: dilation radii must be > 0");
  if (!(free_tau_s > 0) || !(free_sigma_m > 0) || !(sync_tau_s > 0) ||
      !(sync_sigma_m > 0) || !(jam_tau_s > 0) || !(jam_sigma_m > 0))
    throw ValidationError("psm params: kernel scales must be > 0");
}

Mat kernel_smooth(const GridSpec& spec, const std::vector<SparseEntry>& data,
                  const std::vector<double>& values, double tau_s, double sigma_m,
                  double slope_s_per_m, double fallback) {
  Mat num(spec.n_t, spec.n_x), den(spec.n_t, spec.n_x);
  const double reach_x = 5.0 * sigma_m;
  const double reach_t = 5.0 * tau_s;

  for (size_t d = 0; d < data.size(); ++d) {
    const double td = spec.cell_center_t(data[d].i);
    const double xd = spec.cell_center_x(data[d].j);
    const double val = values[d];
    int j_lo = std::max(0, spec.space_index(xd - reach_x));
    int j_hi = std::min(spec.n_x - 1, spec.space_index(xd + reach_x));
    for (int j = j_lo; j <= j_hi; ++j) {
      const double dx = spec.cell_center_x(j) - xd;
      if (std::abs(dx) > reach_x) continue;
      // |t - td - dx*slope| <= 5*tau defines the time window for this column.
      const double t_mid = td + dx * slope_s_per_m;
      int i_lo = std::max(0, spec.time_index(t_mid - reach_t));
      int i_hi = std::min(spec.n_t - 1, spec.time_index(t_mid + reach_t));
      for (int i = i_lo; i <= i_hi; ++i) {
        const double u = spec.cell_center_t(i) - t_mid;
        if (std::abs(u) > reach_t) continue;
        const double w = std::exp(-std::abs(dx) / sigma_m - std::abs(u) / tau_s);
        num.at(i, j) += w * val;
        den.at(i, j) += w;
      }
    }
  }

  Mat out(spec.n_t, spec.n_x);
  for (int i = 0; i < spec.n_t; ++i) {
    for (int j = 0; j < spec.n_x; ++j) {
      if (den.at(i, j) > 0) {
        out.at(i, j) = num.at(i, j) / den.at(i, j);
        continue;
      }
      // Outside every datum's truncated support: evaluate the untruncated
      // kernel sum so truncation stays a pure optimization.
      double n2 = 0, d2 = 0;
      const double tq = spec.cell_center_t(i), xq = spec.cell_center_x(j);
      for (size_t d = 0; d < data.size(); ++d) {
        const double dx = xq - spec.cell_center_x(data[d].j);
        const double u = tq - spec.cell_center_t(data[d].i) - dx * slope_s_per_m;
        const double w = std::exp(-std::abs(dx) / sigma_m - std::abs(u) / tau_s);
        n2 += w * values[d];
        d2 += w;
      }
      out.at(i, j) = d2 > 0 ? n2 / d2 : fallback;
    }
  }
  return out;
}

SpeedField isotropic(const SparseSpeedField& field, const IsoParams& p) {
  p.validate();
  field.validate();
  if (field.entries.empty()) throw ValidationError("isotropic: no measurements");
  std::vector<double> vals(field.entries.size());
  double mean = 0;
  for (size_t d = 0; d < field.entries.size(); ++d) {
    vals[d] = field.entries[d].v_kmh;
    mean += vals[d];
  }
  mean /= vals.size();
  SpeedField out;
  out.spec = field.spec;
  out.v = kernel_smooth(field.spec, field.entries, vals, p.tau_s, p.sigma_m, 0.0, mean);
  for (auto& v : out.v.a) v = clamp_speed(v);
  return out;
}

namespace {

// One anisotropic inverse-speed pass, inverted back to km/h.
Mat inverse_speed_pass(const SparseSpeedField& field, double tau_s, double sigma_m,
                       double c_kmh) {
  std::vector<double> inv(field.entries.size());
  double mean = 0;
  for (size_t d = 0; d < field.entries.size(); ++d) {
    if (field.entries[d].v_kmh <= 0)
      throw ValidationError("inverse-speed smoothing: non-positive speed entry");
    inv[d] = 1.0 / field.entries[d].v_kmh;
    mean += inv[d];
  }
  mean /= inv.size();
  double slope = c_kmh != 0 ? kMpsToKmh / c_kmh : 0.0;  // s/m along x/c
  Mat sm = kernel_smooth(field.spec, field.entries, inv, tau_s, sigma_m, slope, mean);
  for (auto& v : sm.a) v = 1.0 / v;
  return sm;
}

}  // namespace

SpeedField asm_reconstruct(const SparseSpeedField& field, const AsmParams& p) {
  p.validate();
  field.validate();
  if (field.entries.empty()) throw ValidationError("asm: no measurements");
  Mat v_cong = inverse_speed_pass(field, p.tau_s, p.sigma_m, p.c_cong_kmh);
  Mat v_free = inverse_speed_pass(field, p.tau_s, p.sigma_m, p.c_free_kmh);
  SpeedField out;
  out.spec = field.spec;
  out.v = Mat(field.spec.n_t, field.spec.n_x);
  for (size_t k = 0; k < out.v.a.size(); ++k) {
    double lo = std::min(v_cong.a[k], v_free.a[k]);
    double w = 0.5 * (1.0 + std::tanh((p.v_thres_kmh - lo) / p.dv_kmh));
    out.v.a[k] = clamp_speed(w * v_cong.a[k] + (1.0 - w) * v_free.a[k]);
  }
  return out;
}

std::vector<Phase> classify_phases(const SparseSpeedField& field, const PsmParams& p) {
  const auto& e = field.entries;
  std::vector<Phase> phase(e.size(), Phase::Free);
  // Congested entries bucketed by time row for the neighbor scan.
  std::vector<std::vector<size_t>> by_row(field.spec.n_t);
  for (size_t d = 0; d < e.size(); ++d)
    if (e[d].v_kmh < p.v_c_kmh) by_row[e[d].i].push_back(d);

  const double c_ms = p.c_cong_kmh / kMpsToKmh;
  const int row_reach = static_cast<int>(std::ceil(p.align_window_s / field.spec.dt_s)) + 1;
  for (size_t d = 0; d < e.size(); ++d) {
    if (e[d].v_kmh >= p.v_c_kmh) continue;  // free
    if (e[d].v_kmh >= p.jam_v_kmh) {
      phase[d] = Phase::Synchronized;
      continue;
    }
    // Jam candidate: require enough congested neighbors on the c_cong
    // characteristic through this point.
    const double td = field.spec.cell_center_t(e[d].i);
    const double xd = field.spec.cell_center_x(e[d].j);
    int aligned = 0;
    int r_lo = std::max(0, e[d].i - row_reach);
    int r_hi = std::min(field.spec.n_t - 1, e[d].i + row_reach);
    for (int r = r_lo; r <= r_hi && aligned < p.align_min_count; ++r) {
      for (size_t other : by_row[r]) {
        if (other == d) continue;
        double dt = field.spec.cell_center_t(e[other].i) - td;
        if (std::abs(dt) > p.align_window_s) continue;
        double off = (field.spec.cell_center_x(e[other].j) - xd) - c_ms * dt;
        if (std::abs(off) <= p.align_tol_m && ++aligned >= p.align_min_count) break;
      }
    }
    phase[d] = aligned >= p.align_min_count ? Phase::MovingJam : Phase::Synchronized;
  }
  return phase;
}

namespace {

struct Pt {
  double u, w;
};

double cross(const Pt& o, const Pt& a, const Pt& b) {
  return (a.u - o.u) * (b.w - o.w) - (a.w - o.w) * (b.u - o.u);
}

// Monotone chain; returns the hull CCW without repeated endpoint.
std::vector<Pt> convex_hull(std::vector<Pt> pts) {
  std::sort(pts.begin(), pts.end(), [](const Pt& a, const Pt& b) {
    return a.u != b.u ? a.u < b.u : a.w < b.w;
  });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const Pt& a, const Pt& b) { return a.u == b.u && a.w == b.w; }),
            pts.end());
  if (pts.size() <= 2) return pts;
  std::vector<Pt> h(2 * pts.size());
  size_t k = 0;
  for (size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
    h[k++] = pts[i];
  }
  size_t lower = k + 1;
  for (size_t i = pts.size() - 1; i-- > 0;) {
    while (k >= lower && cross(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
    h[k++] = pts[i];
  }
  h.resize(k - 1);
  return h;
}

double seg_dist(const Pt& q, const Pt& a, const Pt& b) {
  double du = b.u - a.u, dw = b.w - a.w;
  double len2 = du * du + dw * dw;
  double t = len2 > 0 ? std::clamp(((q.u - a.u) * du + (q.w - a.w) * dw) / len2, 0.0, 1.0) : 0.0;
  double eu = q.u - (a.u + t * du), ew = q.w - (a.w + t * dw);
  return std::sqrt(eu * eu + ew * ew);
}

// Distance from q to the hull region (0 inside).
double hull_dist(const Pt& q, const std::vector<Pt>& hull) {
  if (hull.empty()) return 1e30;
  if (hull.size() == 1) return seg_dist(q, hull[0], hull[0]);
  if (hull.size() == 2) return seg_dist(q, hull[0], hull[1]);
  bool inside = true;
  double best = 1e30;
  for (size_t i = 0; i < hull.size(); ++i) {
    const Pt& a = hull[i];
    const Pt& b = hull[(i + 1) % hull.size()];
    if (cross(a, b, q) < 0) inside = false;
    best = std::min(best, seg_dist(q, a, b));
  }
  return inside ? 0.0 : best;
}

}  // namespace

SpeedField psm_lite(const SparseSpeedField& field, const PsmParams& p) {
  p.validate();
  field.validate();
  if (field.entries.empty()) throw ValidationError("psm: no measurements");
  const GridSpec& spec = field.spec;
  std::vector<Phase> phase = classify_phases(field, p);

  SparseSpeedField per_phase[3];
  for (int ph = 0; ph < 3; ++ph) per_phase[ph].spec = spec;
  for (size_t d = 0; d < field.entries.size(); ++d)
    per_phase[static_cast<int>(phase[d])].entries.push_back(field.entries[d]);

  // Per-phase inverse-speed smoothing over the full grid; blended below by
  // membership so out-of-region values never carry weight.
  Mat est[3];
  bool have[3];
  for (int ph = 0; ph < 3; ++ph) {
    have[ph] = !per_phase[ph].entries.empty();
    if (!have[ph]) continue;
    switch (static_cast<Phase>(ph)) {
      case Phase::Free:
        est[ph] = inverse_speed_pass(per_phase[ph], p.free_tau_s, p.free_sigma_m, p.free_c_kmh);
        break;
      case Phase::Synchronized:
        est[ph] = inverse_speed_pass(per_phase[ph], p.sync_tau_s, p.sync_sigma_m, 0.0);
        break;
      case Phase::MovingJam:
        est[ph] = inverse_speed_pass(per_phase[ph], p.jam_tau_s, p.jam_sigma_m, p.c_cong_kmh);
        break;
    }
  }

  // Dilated convex hulls of the congested phases, in dilation-scaled coords.
  std::vector<Pt> hull_sync, hull_jam;
  {
    std::vector<Pt> pts_sync, pts_jam;
    for (size_t d = 0; d < field.entries.size(); ++d) {
      Pt q{spec.cell_center_t(field.entries[d].i) / p.dilate_t_s,
           spec.cell_center_x(field.entries[d].j) / p.dilate_x_m};
      if (phase[d] == Phase::Synchronized) pts_sync.push_back(q);
      else if (phase[d] == Phase::MovingJam) pts_jam.push_back(q);
    }
    hull_sync = convex_hull(std::move(pts_sync));
    hull_jam = convex_hull(std::move(pts_jam));
  }

  SpeedField out;
  out.spec = spec;
  out.v = Mat(spec.n_t, spec.n_x);
  constexpr double kEps = 1e-9;  // keeps the blend defined wherever no region reaches
  for (int i = 0; i < spec.n_t; ++i) {
    for (int j = 0; j < spec.n_x; ++j) {
      Pt q{spec.cell_center_t(i) / p.dilate_t_s, spec.cell_center_x(j) / p.dilate_x_m};
      double m_sync = have[1] ? std::clamp(1.0 - hull_dist(q, hull_sync), 0.0, 1.0) : 0.0;
      double m_jam = have[2] ? std::clamp(1.0 - hull_dist(q, hull_jam), 0.0, 1.0) : 0.0;
      double m_free = have[0] ? 1.0 - std::max(m_sync, m_jam) : 0.0;
      double wsum = 0, acc = 0;
      if (have[0]) { double w = m_free + kEps; acc += w * est[0].at(i, j); wsum += w; }
      if (have[1]) { double w = m_sync + kEps; acc += w * est[1].at(i, j); wsum += w; }
      if (have[2]) { double w = m_jam + kEps; acc += w * est[2].at(i, j); wsum += w; }
      out.v.at(i, j) = clamp_speed(acc / wsum);
    }
  }
  return out;
}

IsoParams iso_params_from(const FlatCfg& cfg) {
  IsoParams p;
  p.tau_s = cfg.get_double_or("tau_s", p.tau_s);
  p.sigma_m = cfg.get_double_or("sigma_m", p.sigma_m);
  p.validate();
  return p;
}

AsmParams asm_params_from(const FlatCfg& cfg) {
  AsmParams p;
  p.c_cong_kmh = cfg.get_double_or("c_cong_kmh", p.c_cong_kmh);
  p.c_free_kmh = cfg.get_double_or("c_free_kmh", p.c_free_kmh);
  p.sigma_m = cfg.get_double_or("sigma_m", p.sigma_m);
  p.tau_s = cfg.get_double_or("tau_s", p.tau_s);
  p.v_thres_kmh = cfg.get_double_or("v_thres_kmh", p.v_thres_kmh);
  p.dv_kmh = cfg.get_double_or("dv_kmh", p.dv_kmh);
  p.validate();
  return p;
}

PsmParams psm_params_from(const FlatCfg& cfg) {
  PsmParams p;
  p.v_c_kmh = cfg.get_double_or("v_c_kmh", p.v_c_kmh);
  p.jam_v_kmh = cfg.get_double_or("jam_v_kmh", p.jam_v_kmh);
  p.c_cong_kmh = cfg.get_double_or("c_cong_kmh", p.c_cong_kmh);
  p.align_window_s = cfg.get_double_or("align_window_s", p.align_window_s);
  p.align_tol_m = cfg.get_double_or("align_tol_m", p.align_tol_m);
  p.align_min_count = cfg.get_int_or("align_min_count", p.align_min_count);
  p.dilate_t_s = cfg.get_double_or("dilate_t_s", p.dilate_t_s);
  p.dilate_x_m = cfg.get_double_or("dilate_x_m", p.dilate_x_m);
  p.free_tau_s = cfg.get_double_or("free_tau_s", p.free_tau_s);
  p.free_sigma_m = cfg.get_double_or("free_sigma_m", p.free_sigma_m);
  p.free_c_kmh = cfg.get_double_or("free_c_kmh", p.free_c_kmh);
  p.sync_tau_s = cfg.get_double_or("sync_tau_s", p.sync_tau_s);
  p.sync_sigma_m = cfg.get_double_or("sync_sigma_m", p.sync_sigma_m);
  p.jam_tau_s = cfg.get_double_or("jam_tau_s", p.jam_tau_s);
  p.jam_sigma_m = cfg.get_double_or("jam_sigma_m", p.jam_sigma_m);
  p.validate();
  return p;
}

}  // namespace tse
