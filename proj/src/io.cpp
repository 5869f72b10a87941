#include "tse/io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include "tse/grid.hpp"

static_assert(std::endian::native == std::endian::little,
              "field files are defined little-endian; big-endian hosts unsupported");

namespace tse {

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

std::ifstream open_in(const std::string& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream f(path, mode);
  if (!f) throw ValidationError("cannot open for reading: " + path);
  return f;
}

std::ofstream open_out(const std::string& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream f(path, mode);
  if (!f) throw ValidationError("cannot open for writing: " + path);
  return f;
}

double parse_double(const std::string& s, const std::string& ctx) {
  double v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ValidationError("bad number '" + s + "' in " + ctx);
  return v;
}

int parse_int(const std::string& s, const std::string& ctx) {
  int v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ValidationError("bad integer '" + s + "' in " + ctx);
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

}  // namespace

void write_trajectories_csv(const std::string& path, const std::vector<Trajectory>& trajs) {
  auto f = open_out(path);
  f << "trace_id,t_s,x_m\n";
  for (const auto& tr : trajs)
    for (const auto& p : tr.points)
      f << tr.id << ',' << format_double(p.t) << ',' << format_double(p.x) << '\n';
  if (!f) throw ValidationError("write failed: " + path);
}

std::vector<Trajectory> read_trajectories_csv(const std::string& path) {
  auto f = open_in(path);
  std::string line;
  if (!std::getline(f, line)) throw ValidationError(path + ": empty file");
  if (line.size() && line.back() == '\r') line.pop_back();
  if (line != "trace_id,t_s,x_m")
    throw ValidationError(path + ": expected header trace_id,t_s,x_m");

  std::vector<Trajectory> trajs;
  size_t lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.size() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cols = split_csv_line(line);
    if (cols.size() != 3)
      throw ValidationError(path + ":" + std::to_string(lineno) + ": expected 3 columns");
    const std::string& id = cols[0];
    if (trajs.empty() || trajs.back().id != id) {
      for (const auto& prev : trajs)
        if (prev.id == id)
          throw ValidationError(path + ": rows not sorted by trace_id ('" + id + "' reappears)");
      trajs.push_back({id, {}});
    }
    trajs.back().points.push_back(
        {parse_double(cols[1], path), parse_double(cols[2], path)});
  }
  for (const auto& tr : trajs) tr.validate();
  return trajs;
}

void write_sparse_csv(const std::string& path, const SparseSpeedField& field) {
  auto f = open_out(path);
  f << "i,j,v_kmh\n";
  for (const auto& e : field.entries)
    f << e.i << ',' << e.j << ',' << format_double(e.v_kmh) << '\n';
  if (!f) throw ValidationError("write failed: " + path);
}

std::vector<SparseEntry> read_sparse_csv(const std::string& path) {
  auto f = open_in(path);
  std::string line;
  if (!std::getline(f, line)) throw ValidationError(path + ": empty file");
  if (line.size() && line.back() == '\r') line.pop_back();
  if (line != "i,j,v_kmh") throw ValidationError(path + ": expected header i,j,v_kmh");
  std::vector<SparseEntry> entries;
  size_t lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.size() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cols = split_csv_line(line);
    if (cols.size() != 3)
      throw ValidationError(path + ":" + std::to_string(lineno) + ": expected 3 columns");
    entries.push_back({parse_int(cols[0], path), parse_int(cols[1], path),
                       parse_double(cols[2], path)});
  }
  return entries;
}

void write_field_tsf(const std::string& path, const SpeedField& field) {
  auto f = open_out(path, std::ios::binary);
  const char magic[4] = {'T', 'S', 'F', '1'};
  uint32_t nt = static_cast<uint32_t>(field.spec.n_t);
  uint32_t nx = static_cast<uint32_t>(field.spec.n_x);
  uint32_t reserved = 0;
  f.write(magic, 4);
  f.write(reinterpret_cast<const char*>(&nt), 4);
  f.write(reinterpret_cast<const char*>(&nx), 4);
  f.write(reinterpret_cast<const char*>(&reserved), 4);
  std::vector<float> row(field.spec.n_x);
  for (int i = 0; i < field.spec.n_t; ++i) {
    for (int j = 0; j < field.spec.n_x; ++j) row[j] = static_cast<float>(field.v.at(i, j));
    f.write(reinterpret_cast<const char*>(row.data()), row.size() * sizeof(float));
  }
  if (!f) throw ValidationError("write failed: " + path);
}

void read_tsf_dims(const std::string& path, int& n_t, int& n_x) {
  auto f = open_in(path, std::ios::binary);
  char magic[4];
  uint32_t nt = 0, nx = 0, reserved = 0;
  f.read(magic, 4);
  f.read(reinterpret_cast<char*>(&nt), 4);
  f.read(reinterpret_cast<char*>(&nx), 4);
  f.read(reinterpret_cast<char*>(&reserved), 4);
  if (!f || std::memcmp(magic, "TSF1", 4) != 0)
    throw ValidationError(path + ": not a TSF1 field file");
  n_t = static_cast<int>(nt);
  n_x = static_cast<int>(nx);
}

SpeedField read_field_tsf(const std::string& path, const GridSpec& spec) {
  int nt = 0, nx = 0;
  read_tsf_dims(path, nt, nx);
  if (nt != spec.n_t || nx != spec.n_x)
    throw ValidationError(path + ": field dimensions do not match the grid spec");
  auto f = open_in(path, std::ios::binary);
  f.seekg(16);
  SpeedField field;
  field.spec = spec;
  field.v = Mat(nt, nx);
  std::vector<float> row(nx);
  for (int i = 0; i < nt; ++i) {
    f.read(reinterpret_cast<char*>(row.data()), row.size() * sizeof(float));
    if (!f) throw ValidationError(path + ": truncated field file");
    for (int j = 0; j < nx; ++j) {
      if (!std::isfinite(row[j])) throw ValidationError(path + ": non-finite field value");
      field.v.at(i, j) = row[j];
    }
  }
  return field;
}

namespace {

// Warm red at jam speeds through yellow to green in free flow.
void speed_rgb(double v_kmh, uint8_t rgb[3]) {
  double t = (std::clamp(v_kmh, kVminKmh, kVmaxKmh) - kVminKmh) / (kVmaxKmh - kVminKmh);
  double r, g;
  if (t < 0.5) {
    r = 1.0;
    g = 2.0 * t;
  } else {
    r = 2.0 * (1.0 - t);
    g = 1.0;
  }
  rgb[0] = static_cast<uint8_t>(235 * r + 10);
  rgb[1] = static_cast<uint8_t>(200 * g + 10);
  rgb[2] = 30;
}

}  // namespace

void write_heatmap_ppm(const std::string& path, const SpeedField& field, int px_per_cell) {
  if (px_per_cell < 1) px_per_cell = 1;
  int w = field.spec.n_t * px_per_cell;
  int h = field.spec.n_x * px_per_cell;
  auto f = open_out(path, std::ios::binary);
  f << "P6\n" << w << " " << h << "\n255\n";
  std::vector<uint8_t> rowbuf(static_cast<size_t>(w) * 3);
  for (int py = 0; py < h; ++py) {
    int j = field.spec.n_x - 1 - py / px_per_cell;  // x grows upward in the image
    for (int px = 0; px < w; ++px) {
      int i = px / px_per_cell;
      speed_rgb(field.v.at(i, j), &rowbuf[static_cast<size_t>(px) * 3]);
    }
    f.write(reinterpret_cast<const char*>(rowbuf.data()), rowbuf.size());
  }
  if (!f) throw ValidationError("write failed: " + path);
}

}  // namespace tse
