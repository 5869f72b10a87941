#include "tse/synth.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "tse/flatcfg.hpp"
#include "tse/grid.hpp"
#include "tse/io.hpp"

namespace tse {

namespace {

// 1 inside [lo, hi], linear falloff to 0 over `soft` beyond each end.
double box_ramp(double u, double lo, double hi, double soft) {
  if (u >= lo && u <= hi) return 1.0;
  if (soft <= 0.0) return 0.0;
  double d = (u < lo) ? lo - u : u - hi;
  return std::max(0.0, 1.0 - d / soft);
}

}  // namespace

const char* kind_name(CongestionPrimitive::Kind k) {
  switch (k) {
    case CongestionPrimitive::Kind::MovingJam: return "moving_jam";
    case CongestionPrimitive::Kind::StationaryBand: return "stationary_band";
    case CongestionPrimitive::Kind::MegaJam: return "mega_jam";
  }
  return "?";
}

CongestionPrimitive::Kind kind_from_name(const std::string& name) {
  if (name == "moving_jam") return CongestionPrimitive::Kind::MovingJam;
  if (name == "stationary_band") return CongestionPrimitive::Kind::StationaryBand;
  if (name == "mega_jam") return CongestionPrimitive::Kind::MegaJam;
  throw ValidationError("unknown primitive kind '" + name + "'");
}

void CongestionPrimitive::validate() const {
  if (v_in_kmh < kVminKmh || v_in_kmh > kVmaxKmh)
    throw ValidationError("primitive: interior speed outside [3,130] km/h");
  if (soft_x_m < 0 || soft_t_s < 0)
    throw ValidationError("primitive: negative edge softness");
  if (kind == Kind::MovingJam) {
    if (width_m <= 0) throw ValidationError("moving_jam: band width must be > 0");
    if (lifetime_s <= 0) throw ValidationError("moving_jam: lifetime must be > 0");
  } else {
    if (x_to_m <= x_from_m) throw ValidationError("primitive: empty space interval");
    if (t_to_s <= t_from_s) throw ValidationError("primitive: empty time interval");
  }
}

double CongestionPrimitive::membership(double t_s, double x_m) const {
  if (kind == Kind::MovingJam) {
    double mt = box_ramp(t_s, t_anchor_s, t_anchor_s + lifetime_s, soft_t_s);
    if (mt <= 0.0) return 0.0;
    double xc = x_anchor_m + c_kmh / kMpsToKmh * (t_s - t_anchor_s);
    double mx = box_ramp(x_m, xc - 0.5 * width_m, xc + 0.5 * width_m, soft_x_m);
    return mt * mx;
  }
  double mt = box_ramp(t_s, t_from_s, t_to_s, soft_t_s);
  if (mt <= 0.0) return 0.0;
  return mt * box_ramp(x_m, x_from_m, x_to_m, soft_x_m);
}

void Scenario::validate() const {
  if (spec.n_t < 1 || spec.n_x < 1) throw ValidationError("scenario: empty grid");
  if (free_speed_kmh < kVminKmh || free_speed_kmh > kVmaxKmh)
    throw ValidationError("scenario: free speed outside [3,130] km/h");
  for (const auto& p : primitives) p.validate();
}

void ProbeConfig::validate() const {
  if (!(entry_rate_vph > 0)) throw ValidationError("probe config: entry rate must be > 0");
  if (interval_min_s < 1 || interval_max_s > 60 || interval_min_s > interval_max_s)
    throw ValidationError("probe config: sampling interval range must lie within [1,60] s");
  if (speed_noise_std < 0) throw ValidationError("probe config: negative noise std");
}

SpeedField render_ground_truth(const Scenario& scn) {
  scn.validate();
  SpeedField field;
  field.spec = scn.spec;
  field.v = Mat(scn.spec.n_t, scn.spec.n_x);
  for (int i = 0; i < scn.spec.n_t; ++i) {
    double t = scn.spec.cell_center_t(i);
    for (int j = 0; j < scn.spec.n_x; ++j) {
      double x = scn.spec.cell_center_x(j);
      double v = scn.free_speed_kmh;
      for (const auto& p : scn.primitives) {
        double m = p.membership(t, x);
        if (m > 0.0)
          v = std::min(v, scn.free_speed_kmh - m * (scn.free_speed_kmh - p.v_in_kmh));
      }
      field.v.at(i, j) = clamp_speed(v);
    }
  }
  return field;
}

std::vector<Trajectory> sample_probes(const SpeedField& field, const ProbeConfig& cfg) {
  cfg.validate();
  const GridSpec& spec = field.spec;
  if (spec.n_t < 1 || spec.n_x < 1) throw ValidationError("sample_probes: empty field");
  const double t_end = spec.t_end(), x_end = spec.x_end();

  auto cell_speed = [&](double t, double x) {
    int i = std::clamp(spec.time_index(t), 0, spec.n_t - 1);
    int j = std::clamp(spec.space_index(x), 0, spec.n_x - 1);
    return field.v.at(i, j);
  };

  Rng entry_rng(Rng::derive(cfg.rng_seed, 0));
  const double rate_per_s = cfg.entry_rate_vph / 3600.0;
  std::vector<Trajectory> out;
  double t_entry = spec.t0_s;
  for (uint64_t k = 0;; ++k) {
    t_entry += entry_rng.exponential(rate_per_s);
    if (t_entry >= t_end) break;
    Rng rng(Rng::derive(cfg.rng_seed, k + 1));
    double interval = rng.uniform(cfg.interval_min_s, cfg.interval_max_s);

    double t = t_entry, x = spec.x0_m;
    std::vector<TrajectoryPoint> pts{{t, x}};
    double next_sample = t + interval;
    bool done = false;
    while (!done) {
      double target = std::min(next_sample, t_end);
      bool exited = false;
      while (t < target - 1e-12) {
        double step = std::min(1.0, target - t);
        double v_ms = cell_speed(t, x) / kMpsToKmh;
        double dx = v_ms * step;
        if (x + dx >= x_end) {  // crossed the downstream boundary mid-step
          t += (x_end - x) / v_ms;
          x = x_end;
          exited = true;
          break;
        }
        t += step;
        x += dx;
      }
      if (!exited && target >= t_end - 1e-12) {
        t = t_end;
        exited = true;
      }
      if (exited) done = true;
      if (t > pts.back().t + 1e-9) pts.push_back({t, x});
      next_sample += interval;
    }
    if (pts.size() < 2) continue;

    if (cfg.speed_noise_std > 0) {
      // Re-time the samples: scale each segment duration, keep positions.
      double prev_orig = pts[0].t;
      double acc = pts[0].t;
      for (size_t s = 1; s < pts.size(); ++s) {
        double d = pts[s].t - prev_orig;
        prev_orig = pts[s].t;
        double f = std::max(0.05, 1.0 + cfg.speed_noise_std * rng.normal());
        acc += d * f;
        pts[s].t = acc;
      }
    }

    char id[16];
    std::snprintf(id, sizeof id, "v%05llu", static_cast<unsigned long long>(out.size()));
    out.push_back({id, std::move(pts)});
  }
  return out;
}

namespace {

CongestionPrimitive make_jam(Rng& rng, double t_a, double x_a) {
  CongestionPrimitive p;
  p.kind = CongestionPrimitive::Kind::MovingJam;
  p.t_anchor_s = t_a;
  p.x_anchor_m = x_a;
  p.c_kmh = rng.uniform(-20, -10);
  p.width_m = rng.uniform(300, 900);
  p.lifetime_s = rng.uniform(1800, 5400);
  p.v_in_kmh = rng.uniform(5, 25);
  p.soft_x_m = rng.uniform(100, 300);
  p.soft_t_s = rng.uniform(60, 240);
  return p;
}

CongestionPrimitive make_box(Rng& rng, CongestionPrimitive::Kind kind, double T, double X) {
  CongestionPrimitive p;
  p.kind = kind;
  bool mega = kind == CongestionPrimitive::Kind::MegaJam;
  double xc = rng.uniform(0.3, 0.7) * X;
  double half = mega ? rng.uniform(1000, 3000) : rng.uniform(500, 1500);
  p.x_from_m = std::max(0.0, xc - half);
  p.x_to_m = std::min(X, xc + half);
  double ts = rng.uniform(0.1, 0.4) * T;
  double dur = rng.uniform(mega ? 0.3 : 0.25, mega ? 0.6 : 0.5) * T;
  p.t_from_s = ts;
  p.t_to_s = std::min(T, ts + dur);
  p.v_in_kmh = mega ? rng.uniform(4, 15) : rng.uniform(35, 60);
  p.soft_x_m = rng.uniform(200, 400);
  p.soft_t_s = rng.uniform(180, 420);
  return p;
}

}  // namespace

std::vector<Scenario> scenario_library(int n, uint64_t seed) {
  if (n < 1) throw ValidationError("scenario_library: n must be >= 1");
  // Archetype cycle; the leading compound scenario carries all three kinds so
  // the kind mix stays broad even for small libraries.
  enum Arch { Compound, JamTrain, Bottleneck, Mega, Light };
  static const Arch cycle[10] = {Compound, JamTrain, Bottleneck, Mega,      JamTrain,
                                 Bottleneck, Mega,   Light,      JamTrain, Bottleneck};

  std::vector<Scenario> out;
  out.reserve(n);
  for (int k = 0; k < n; ++k) {
    Rng rng(Rng::derive(seed, 0x5CE00000ull + static_cast<uint64_t>(k)));
    Scenario scn;
    char name[16];
    std::snprintf(name, sizeof name, "scn%03d", k);
    scn.name = name;
    scn.rng_seed = Rng::derive(seed, 0xA0000000ull + static_cast<uint64_t>(k));
    double T = (180 + 60 * rng.uniform_int(3)) * 60.0;   // 3, 4 or 5 hours
    double X = (80 + 20 * rng.uniform_int(3)) * 100.0;   // 8, 10 or 12 km
    scn.spec = GridSpec::make(0, T, 0, X);
    scn.free_speed_kmh = rng.uniform(105, 125);

    auto add_jams_in_box = [&](const CongestionPrimitive& box, int count) {
      for (int m = 0; m < count; ++m) {
        double t_a = rng.uniform(box.t_from_s, 0.5 * (box.t_from_s + box.t_to_s));
        double x_a = rng.uniform(box.x_from_m, box.x_to_m);
        scn.primitives.push_back(make_jam(rng, t_a, x_a));
      }
    };

    switch (cycle[k % 10]) {
      case Compound: {
        auto mega = make_box(rng, CongestionPrimitive::Kind::MegaJam, T, X);
        scn.primitives.push_back(mega);
        // Synchronized inflow just upstream of the mega-jam.
        CongestionPrimitive band;
        band.kind = CongestionPrimitive::Kind::StationaryBand;
        band.x_from_m = std::max(0.0, mega.x_from_m - rng.uniform(1500, 3000));
        band.x_to_m = mega.x_from_m + 200;
        band.t_from_s = mega.t_from_s;
        band.t_to_s = mega.t_to_s;
        band.v_in_kmh = rng.uniform(40, 60);
        band.soft_x_m = rng.uniform(200, 400);
        band.soft_t_s = rng.uniform(180, 420);
        scn.primitives.push_back(band);
        add_jams_in_box(mega, 2);
        break;
      }
      case JamTrain: {
        int nj = 2 + rng.uniform_int(4);
        for (int m = 0; m < nj; ++m)
          scn.primitives.push_back(
              make_jam(rng, rng.uniform(0.05, 0.6) * T, rng.uniform(0.4, 0.95) * X));
        break;
      }
      case Bottleneck: {
        auto band = make_box(rng, CongestionPrimitive::Kind::StationaryBand, T, X);
        scn.primitives.push_back(band);
        add_jams_in_box(band, 1 + rng.uniform_int(3));
        break;
      }
      case Mega: {
        auto mega = make_box(rng, CongestionPrimitive::Kind::MegaJam, T, X);
        scn.primitives.push_back(mega);
        if (rng.uniform() < 0.5)
          scn.primitives.push_back(
              make_jam(rng, std::max(0.0, mega.t_from_s - 1800), mega.x_to_m));
        break;
      }
      case Light: {
        auto p = make_jam(rng, rng.uniform(0.1, 0.6) * T, rng.uniform(0.4, 0.9) * X);
        p.v_in_kmh = rng.uniform(15, 30);
        p.lifetime_s = rng.uniform(1200, 2400);
        scn.primitives.push_back(p);
        break;
      }
    }
    scn.validate();
    out.push_back(std::move(scn));
  }
  return out;
}

std::string scenario_to_text(const Scenario& scn) {
  std::ostringstream os;
  os << "name = " << scn.name << "\n";
  os << "seed = " << scn.rng_seed << "\n";
  os << "t0_s = " << format_double(scn.spec.t0_s) << "\n";
  os << "duration_s = " << format_double(scn.spec.duration_s) << "\n";
  os << "x0_m = " << format_double(scn.spec.x0_m) << "\n";
  os << "length_m = " << format_double(scn.spec.length_m) << "\n";
  os << "dt_s = " << format_double(scn.spec.dt_s) << "\n";
  os << "dx_m = " << format_double(scn.spec.dx_m) << "\n";
  os << "free_speed_kmh = " << format_double(scn.free_speed_kmh) << "\n";
  for (const auto& p : scn.primitives) {
    os << "primitive = " << kind_name(p.kind);
    if (p.kind == CongestionPrimitive::Kind::MovingJam) {
      os << " t_anchor_s=" << format_double(p.t_anchor_s)
         << " x_anchor_m=" << format_double(p.x_anchor_m)
         << " c_kmh=" << format_double(p.c_kmh)
         << " width_m=" << format_double(p.width_m)
         << " lifetime_s=" << format_double(p.lifetime_s);
    } else {
      os << " x_from_m=" << format_double(p.x_from_m)
         << " x_to_m=" << format_double(p.x_to_m)
         << " t_from_s=" << format_double(p.t_from_s)
         << " t_to_s=" << format_double(p.t_to_s);
    }
    os << " v_in_kmh=" << format_double(p.v_in_kmh)
       << " soft_x_m=" << format_double(p.soft_x_m)
       << " soft_t_s=" << format_double(p.soft_t_s) << "\n";
  }
  return os.str();
}

namespace {

CongestionPrimitive parse_primitive(const std::string& line, const std::string& origin) {
  std::istringstream ss(line);
  std::string kind;
  if (!(ss >> kind)) throw ValidationError(origin + ": empty primitive line");
  CongestionPrimitive p;
  p.kind = kind_from_name(kind);
  std::string tok;
  while (ss >> tok) {
    size_t eq = tok.find('=');
    if (eq == std::string::npos)
      throw ValidationError(origin + ": expected key=value in primitive, got '" + tok + "'");
    std::string key = tok.substr(0, eq);
    std::string val = tok.substr(eq + 1);
    double v = 0;
    auto res = std::from_chars(val.data(), val.data() + val.size(), v);
    if (res.ec != std::errc() || res.ptr != val.data() + val.size())
      throw ValidationError(origin + ": bad number '" + val + "' for primitive key " + key);
    if (key == "t_anchor_s") p.t_anchor_s = v;
    else if (key == "x_anchor_m") p.x_anchor_m = v;
    else if (key == "c_kmh") p.c_kmh = v;
    else if (key == "width_m") p.width_m = v;
    else if (key == "lifetime_s") p.lifetime_s = v;
    else if (key == "x_from_m") p.x_from_m = v;
    else if (key == "x_to_m") p.x_to_m = v;
    else if (key == "t_from_s") p.t_from_s = v;
    else if (key == "t_to_s") p.t_to_s = v;
    else if (key == "v_in_kmh") p.v_in_kmh = v;
    else if (key == "soft_x_m") p.soft_x_m = v;
    else if (key == "soft_t_s") p.soft_t_s = v;
    else throw ValidationError(origin + ": unknown primitive key '" + key + "'");
  }
  p.validate();
  return p;
}

}  // namespace

Scenario scenario_from_text(const std::string& text, const std::string& origin) {
  FlatCfg cfg = parse_flatcfg(text, origin);
  Scenario scn;
  scn.name = cfg.get_or("name", "");
  if (cfg.has("seed")) {
    const std::string& s = cfg.get("seed");
    uint64_t v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
      throw ValidationError(origin + ": bad seed '" + s + "'");
    scn.rng_seed = v;
  }
  scn.spec = GridSpec::make(cfg.get_double_or("t0_s", 0), cfg.get_double("duration_s"),
                            cfg.get_double_or("x0_m", 0), cfg.get_double("length_m"),
                            cfg.get_double_or("dt_s", 60), cfg.get_double_or("dx_m", 100));
  scn.free_speed_kmh = cfg.get_double_or("free_speed_kmh", 120);
  for (const auto& line : cfg.get_all("primitive"))
    scn.primitives.push_back(parse_primitive(line, origin));
  scn.validate();
  return scn;
}

void write_scenario(const std::string& path, const Scenario& scn) {
  std::ofstream f(path);
  if (!f) throw ValidationError("cannot open for writing: " + path);
  f << scenario_to_text(scn);
  if (!f) throw ValidationError("write failed: " + path);
}

Scenario read_scenario(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError("cannot open for reading: " + path);
  std::stringstream buf;
  buf << f.rdbuf();
  return scenario_from_text(buf.str(), path);
}

}  // namespace tse
