#include "petprep/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace petprep {

namespace {

// Samples closer than this (in voxels) to a grid node snap onto it, so
// axis-aligned warps reproduce input values exactly.
constexpr double kSnapTolerance = 1e-6;

void require_positive_spacing(const Vec3 &spacing) {
  for (int a = 0; a < 3; ++a) {
    if (!(std::isfinite(spacing[a]) && spacing[a] > 0.0)) {
      throw Error(ErrorCode::NonPositiveSpacing,
                  "target spacing[" + std::to_string(a) + "] = " + std::to_string(spacing[a]));
    }
  }
}

inline double lerp(double a, double b, double f) { return f == 0.0 ? a : a + f * (b - a); }

/// Two taps and a weight along one axis.
struct Tap {
  std::size_t lo = 0;
  std::size_t hi = 0;
  double frac = 0.0;
};

inline Tap make_tap(double c, std::size_t n) {
  const double lo = std::floor(c);
  Tap t;
  t.lo = static_cast<std::size_t>(lo);
  t.hi = std::min(t.lo + 1, n - 1);
  t.frac = c - lo;
  return t;
}

inline std::size_t nearest_index(double c, std::size_t n) {
  const double r = std::floor(c + 0.5);
  return std::min(static_cast<std::size_t>(std::max(r, 0.0)), n - 1);
}

template <typename T>
double trilinear(const Grid<T> &g, const Tap &tx, const Tap &ty, const Tap &tz) {
  const auto &geom = g.geometry();
  auto v = [&](std::size_t x, std::size_t y, std::size_t z) {
    return static_cast<double>(g[geom.index(x, y, z)]);
  };
  const double c00 = lerp(v(tx.lo, ty.lo, tz.lo), v(tx.hi, ty.lo, tz.lo), tx.frac);
  const double c10 = lerp(v(tx.lo, ty.hi, tz.lo), v(tx.hi, ty.hi, tz.lo), tx.frac);
  const double c01 = lerp(v(tx.lo, ty.lo, tz.hi), v(tx.hi, ty.lo, tz.hi), tx.frac);
  const double c11 = lerp(v(tx.lo, ty.hi, tz.hi), v(tx.hi, ty.hi, tz.hi), tx.frac);
  return lerp(lerp(c00, c10, ty.frac), lerp(c01, c11, ty.frac), tz.frac);
}

template <typename T>
Grid<T> resample_impl(const Grid<T> &in, const Vec3 &target_spacing, Interp interp) {
  require_positive_spacing(target_spacing);
  if (target_spacing == in.spacing()) {
    return in;
  }
  Geometry out_geom = in.geometry();
  out_geom.spacing = target_spacing;
  std::array<std::vector<Tap>, 3> taps;
  std::array<std::vector<std::size_t>, 3> nearest;
  for (int a = 0; a < 3; ++a) {
    const std::size_t n_in = in.shape()[a];
    const double extent = static_cast<double>(n_in) * in.spacing()[a];
    const auto n_out = static_cast<std::size_t>(std::llround(extent / target_spacing[a]));
    out_geom.shape[a] = std::max<std::size_t>(1, n_out);
    const double ratio = target_spacing[a] / in.spacing()[a];
    const double max_c = static_cast<double>(n_in - 1);
    for (std::size_t i = 0; i < out_geom.shape[a]; ++i) {
      const double c = std::min(static_cast<double>(i) * ratio, max_c);
      taps[a].push_back(make_tap(c, n_in));
      nearest[a].push_back(nearest_index(c, n_in));
    }
  }

  std::vector<T> out(out_geom.voxel_count());
  std::size_t idx = 0;
  for (std::size_t z = 0; z < out_geom.shape[2]; ++z) {
    for (std::size_t y = 0; y < out_geom.shape[1]; ++y) {
      for (std::size_t x = 0; x < out_geom.shape[0]; ++x, ++idx) {
        if (interp == Interp::nearest) {
          out[idx] = in(nearest[0][x], nearest[1][y], nearest[2][z]);
        } else {
          out[idx] = static_cast<T>(trilinear(in, taps[0][x], taps[1][y], taps[2][z]));
        }
      }
    }
  }
  return Grid<T>(std::move(out_geom), std::move(out), unchecked);
}

template <typename T> Grid<T> crop_impl(const Grid<T> &in, const Index3 &start, const Index3 &size) {
  for (int a = 0; a < 3; ++a) {
    if (size[a] == 0 || start[a] > in.shape()[a] || size[a] > in.shape()[a] - start[a]) {
      throw Error(ErrorCode::OutOfBounds,
                  "axis " + std::to_string(a) + ": start " + std::to_string(start[a]) + " + size " +
                      std::to_string(size[a]) + " exceeds extent " + std::to_string(in.shape()[a]));
    }
  }
  Geometry g = in.geometry();
  g.shape = size;
  for (int a = 0; a < 3; ++a) {
    g.origin[a] += static_cast<double>(start[a]) * g.spacing[a];
  }
  std::vector<T> out;
  out.reserve(g.voxel_count());
  for (std::size_t z = 0; z < size[2]; ++z) {
    for (std::size_t y = 0; y < size[1]; ++y) {
      const std::size_t row = in.geometry().index(start[0], start[1] + y, start[2] + z);
      const auto src = in.data().subspan(row, size[0]);
      out.insert(out.end(), src.begin(), src.end());
    }
  }
  return Grid<T>(std::move(g), std::move(out), unchecked);
}

template <typename T> Grid<T> flip_impl(const Grid<T> &in, FlipAxes axes) {
  const auto &s = in.shape();
  std::vector<T> out(in.size());
  std::size_t idx = 0;
  for (std::size_t z = 0; z < s[2]; ++z) {
    const std::size_t sz = axes.z ? s[2] - 1 - z : z;
    for (std::size_t y = 0; y < s[1]; ++y) {
      const std::size_t sy = axes.y ? s[1] - 1 - y : y;
      for (std::size_t x = 0; x < s[0]; ++x, ++idx) {
        const std::size_t sx = axes.x ? s[0] - 1 - x : x;
        out[idx] = in(sx, sy, sz);
      }
    }
  }
  return Grid<T>(in.geometry(), std::move(out), unchecked);
}

using Mat3 = std::array<std::array<double, 3>, 3>;

Mat3 multiply(const Mat3 &a, const Mat3 &b) {
  Mat3 m{};
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      for (int k = 0; k < 3; ++k) {
        m[r][c] += a[r][k] * b[k][c];
      }
    }
  }
  return m;
}

/// S^-1 * R^T with R = Rz * Ry * Rx: maps output offsets back to input offsets.
Mat3 inverse_linear_part(const AffineParams &p) {
  const double cx = std::cos(p.rotation[0]), sx = std::sin(p.rotation[0]);
  const double cy = std::cos(p.rotation[1]), sy = std::sin(p.rotation[1]);
  const double cz = std::cos(p.rotation[2]), sz = std::sin(p.rotation[2]);
  const Mat3 rx{{{1, 0, 0}, {0, cx, -sx}, {0, sx, cx}}};
  const Mat3 ry{{{cy, 0, sy}, {0, 1, 0}, {-sy, 0, cy}}};
  const Mat3 rz{{{cz, -sz, 0}, {sz, cz, 0}, {0, 0, 1}}};
  const Mat3 r = multiply(rz, multiply(ry, rx));
  Mat3 inv{};
  for (int row = 0; row < 3; ++row) {
    for (int col = 0; col < 3; ++col) {
      inv[row][col] = r[col][row] / p.scale[row];
    }
  }
  return inv;
}

template <typename T>
Grid<T> warp_impl(const Grid<T> &in, const AffineParams &params, Interp interp, T fill) {
  for (int a = 0; a < 3; ++a) {
    if (!(std::isfinite(params.scale[a]) && params.scale[a] > 0.0)) {
      throw Error(ErrorCode::NonPositiveScale, "scale[" + std::to_string(a) + "] = " +
                                                   std::to_string(params.scale[a]));
    }
    if (!std::isfinite(params.rotation[a]) || !std::isfinite(params.translation[a])) {
      throw Error(ErrorCode::InvalidArgument, "affine parameters must be finite");
    }
  }
  const Mat3 inv = inverse_linear_part(params);
  const auto &shape = in.shape();
  const auto &spacing = in.spacing();
  Vec3 half{};
  for (int a = 0; a < 3; ++a) {
    half[a] = 0.5 * static_cast<double>(shape[a] - 1);
  }

  std::vector<T> out(in.size());
  std::size_t idx = 0;
  for (std::size_t z = 0; z < shape[2]; ++z) {
    for (std::size_t y = 0; y < shape[1]; ++y) {
      for (std::size_t x = 0; x < shape[0]; ++x, ++idx) {
        // Offset of the output voxel from the grid center, minus translation (mm).
        const Vec3 d{(static_cast<double>(x) - half[0]) * spacing[0] - params.translation[0],
                     (static_cast<double>(y) - half[1]) * spacing[1] - params.translation[1],
                     (static_cast<double>(z) - half[2]) * spacing[2] - params.translation[2]};
        Vec3 c{};
        bool inside = true;
        for (int a = 0; a < 3; ++a) {
          const double q = inv[a][0] * d[0] + inv[a][1] * d[1] + inv[a][2] * d[2];
          double ci = half[a] + q / spacing[a];
          const double snapped = std::round(ci);
          if (std::abs(ci - snapped) < kSnapTolerance) {
            ci = snapped;
          }
          if (ci < 0.0 || ci > static_cast<double>(shape[a] - 1)) {
            inside = false;
            break;
          }
          c[a] = ci;
        }
        if (!inside) {
          out[idx] = fill;
        } else if (interp == Interp::nearest) {
          out[idx] = in(nearest_index(c[0], shape[0]), nearest_index(c[1], shape[1]),
                        nearest_index(c[2], shape[2]));
        } else {
          out[idx] = static_cast<T>(trilinear(in, make_tap(c[0], shape[0]),
                                              make_tap(c[1], shape[1]), make_tap(c[2], shape[2])));
        }
      }
    }
  }
  return Grid<T>(in.geometry(), std::move(out), unchecked);
}

} // namespace

Volume resample(const Volume &vol, const Vec3 &target_spacing, Interp interp) {
  return resample_impl(vol, target_spacing, interp);
}

LabelMask resample(const LabelMask &mask, const Vec3 &target_spacing) {
  return resample_impl(mask, target_spacing, Interp::nearest);
}

Volume crop(const Volume &vol, const Index3 &start, const Index3 &size) {
  return crop_impl(vol, start, size);
}

LabelMask crop(const LabelMask &mask, const Index3 &start, const Index3 &size) {
  return crop_impl(mask, start, size);
}

Volume flip(const Volume &vol, FlipAxes axes) { return flip_impl(vol, axes); }

LabelMask flip(const LabelMask &mask, FlipAxes axes) { return flip_impl(mask, axes); }

Volume affine_warp(const Volume &vol, const AffineParams &params, Interp interp) {
  if (!std::isfinite(params.fill)) {
    throw Error(ErrorCode::NonFiniteData, "affine fill value must be finite");
  }
  return warp_impl(vol, params, interp, static_cast<float>(params.fill));
}

LabelMask affine_warp(const LabelMask &mask, const AffineParams &params) {
  return warp_impl<std::uint8_t>(mask, params, Interp::nearest, 0);
}

} // namespace petprep
