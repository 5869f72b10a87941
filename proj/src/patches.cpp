#include "tse/patches.hpp"

#include <string>

#include "tse/grid.hpp"

namespace tse {

void PatchLayout::validate() const {
  if (L_T < 1 || L_X < 1) throw ValidationError("patch layout: output size must be >= 1");
  if (K_T < L_T || K_X < L_X)
    throw ValidationError("patch layout: input window smaller than output window");
  if ((K_T - L_T) % 2 != 0 || (K_X - L_X) % 2 != 0)
    throw ValidationError("patch layout: K - L must be even for a symmetric margin");
}

std::vector<Patch> decompose(const SparseSpeedField& field, const PatchLayout& layout) {
  layout.validate();
  field.validate();
  const GridSpec& spec = field.spec;
  if (spec.n_t < 1 || spec.n_x < 1)
    throw ValidationError("decompose: empty domain");

  // Dense lookup of the sparse measurements.
  Mat vnorm(spec.n_t, spec.n_x);
  MaskMat occ(spec.n_t, spec.n_x);
  for (const auto& e : field.entries) {
    vnorm.at(e.i, e.j) = normalize_speed(e.v_kmh);
    occ.at(e.i, e.j) = 1;
  }

  const int mt = layout.margin_t(), mx = layout.margin_x();
  const int nt_tiles = layout.tiles_t(spec.n_t), nx_tiles = layout.tiles_x(spec.n_x);
  std::vector<Patch> patches;
  patches.reserve(static_cast<size_t>(nt_tiles) * nx_tiles);
  for (int a = 0; a < nt_tiles; ++a) {
    for (int b = 0; b < nx_tiles; ++b) {
      Patch p;
      p.i0 = a * layout.L_T;
      p.j0 = b * layout.L_X;
      p.speeds = Mat(layout.K_T, layout.K_X);
      p.occupancy = MaskMat(layout.K_T, layout.K_X);
      for (int r = 0; r < layout.K_T; ++r) {
        int i = p.i0 + r - mt;  // original-domain time index
        if (i < 0 || i >= spec.n_t) continue;
        for (int c = 0; c < layout.K_X; ++c) {
          int j = p.j0 + c - mx;
          if (j < 0 || j >= spec.n_x) continue;
          if (occ.at(i, j)) {
            p.speeds.at(r, c) = vnorm.at(i, j);
            p.occupancy.at(r, c) = 1;
          }
        }
      }
      patches.push_back(std::move(p));
    }
  }
  return patches;
}

PatchOutput center_window(const Patch& patch, const PatchLayout& layout) {
  layout.validate();
  PatchOutput out;
  out.i0 = patch.i0;
  out.j0 = patch.j0;
  out.values = Mat(layout.L_T, layout.L_X);
  const int mt = layout.margin_t(), mx = layout.margin_x();
  for (int r = 0; r < layout.L_T; ++r)
    for (int c = 0; c < layout.L_X; ++c)
      out.values.at(r, c) = patch.speeds.at(mt + r, mx + c);
  return out;
}

SpeedField stitch(const std::vector<PatchOutput>& outputs, const GridSpec& spec) {
  if (spec.n_t < 1 || spec.n_x < 1) throw ValidationError("stitch: empty domain");
  if (outputs.empty()) throw ValidationError("stitch: no output tiles");
  const int lt = outputs.front().values.rows;
  const int lx = outputs.front().values.cols;

  SpeedField field;
  field.spec = spec;
  field.v = Mat(spec.n_t, spec.n_x);
  MaskMat written(spec.n_t, spec.n_x);
  for (const auto& out : outputs) {
    if (out.values.rows != lt || out.values.cols != lx)
      throw ValidationError("stitch: tiles have mixed sizes");
    if (out.i0 < 0 || out.j0 < 0 || out.i0 % lt != 0 || out.j0 % lx != 0)
      throw ValidationError("stitch: tile origin (" + std::to_string(out.i0) + "," +
                            std::to_string(out.j0) + ") is not on the tiling");
    if (out.i0 >= spec.n_t || out.j0 >= spec.n_x)
      throw ValidationError("stitch: tile lies entirely outside the domain");
    for (int r = 0; r < lt; ++r) {
      int i = out.i0 + r;
      if (i >= spec.n_t) break;  // overhang past the domain edge is discarded
      for (int c = 0; c < lx; ++c) {
        int j = out.j0 + c;
        if (j >= spec.n_x) break;
        if (written.at(i, j))
          throw ValidationError("stitch: cell (" + std::to_string(i) + "," +
                                std::to_string(j) + ") covered twice");
        written.at(i, j) = 1;
        field.v.at(i, j) = clamp_speed(denormalize_speed(out.values.at(r, c)));
      }
    }
  }
  for (int i = 0; i < spec.n_t; ++i)
    for (int j = 0; j < spec.n_x; ++j)
      if (!written.at(i, j))
        throw ValidationError("stitch: cell (" + std::to_string(i) + "," +
                              std::to_string(j) + ") not covered by any tile");
  return field;
}

}  // namespace tse
