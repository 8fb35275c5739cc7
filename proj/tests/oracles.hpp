#pragma once

// Brute-force reference implementations used to check the library.
// Deliberately naive: direct loops, recursion-free flood fill, dense sums.

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <vector>

#include "petprep/volume.hpp"

namespace oracle {

using petprep::LabelMask;
using petprep::Volume;

/// 2|P∩G| / (|P|+|G|) by counting voxels.
inline double dice(const LabelMask &pred, const LabelMask &gt) {
  long both = 0, p = 0, g = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    p += pred[i] == 1;
    g += gt[i] == 1;
    both += pred[i] == 1 && gt[i] == 1;
  }
  return 2.0 * static_cast<double>(both) / static_cast<double>(p + g);
}

inline bool adjacent(int dx, int dy, int dz, int connectivity) {
  const int n = std::abs(dx) + std::abs(dy) + std::abs(dz);
  const int cheb = std::max({std::abs(dx), std::abs(dy), std::abs(dz)});
  if (n == 0 || cheb > 1) {
    return false;
  }
  return connectivity == 26 || (connectivity == 18 && n <= 2) || (connectivity == 6 && n == 1);
}

/// Component id per voxel (-1 for background) via explicit-stack flood fill.
inline std::vector<int> flood_fill(const LabelMask &m, int connectivity, int &count) {
  const auto [nx, ny, nz] = m.shape();
  std::vector<int> comp(m.size(), -1);
  count = 0;
  for (std::size_t seed = 0; seed < m.size(); ++seed) {
    if (m[seed] == 0 || comp[seed] != -1) {
      continue;
    }
    std::vector<std::size_t> stack{seed};
    comp[seed] = count;
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      const long x = static_cast<long>(i % nx), y = static_cast<long>((i / nx) % ny),
                 z = static_cast<long>(i / (nx * ny));
      for (int dz = -1; dz <= 1; ++dz) {
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if (!adjacent(dx, dy, dz, connectivity)) {
              continue;
            }
            const long xx = x + dx, yy = y + dy, zz = z + dz;
            if (xx < 0 || yy < 0 || zz < 0 || xx >= static_cast<long>(nx) ||
                yy >= static_cast<long>(ny) || zz >= static_cast<long>(nz)) {
              continue;
            }
            const std::size_t j = static_cast<std::size_t>(xx + yy * static_cast<long>(nx) +
                                                           zz * static_cast<long>(nx * ny));
            if (m[j] == 1 && comp[j] == -1) {
              comp[j] = count;
              stack.push_back(j);
            }
          }
        }
      }
    }
    ++count;
  }
  return comp;
}

/// Voxels of `a` lying in components with no voxel of `b`, in cm³.
inline double untouched_cm3(const LabelMask &a, const LabelMask &b, int connectivity) {
  int count = 0;
  const auto comp = flood_fill(a, connectivity, count);
  std::vector<long> size(static_cast<std::size_t>(count), 0);
  std::vector<bool> hit(static_cast<std::size_t>(count), false);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (comp[i] >= 0) {
      ++size[static_cast<std::size_t>(comp[i])];
      if (b[i] == 1) {
        hit[static_cast<std::size_t>(comp[i])] = true;
      }
    }
  }
  long voxels = 0;
  for (int c = 0; c < count; ++c) {
    if (!hit[static_cast<std::size_t>(c)]) {
      voxels += size[static_cast<std::size_t>(c)];
    }
  }
  const auto s = a.spacing();
  const double voxel_mm3 = s[0] * s[1] * s[2];
  return static_cast<double>(voxels) * voxel_mm3 / 1000.0;
}

inline double fp_cm3(const LabelMask &pred, const LabelMask &gt, int c) { return untouched_cm3(pred, gt, c); }
inline double fn_cm3(const LabelMask &pred, const LabelMask &gt, int c) { return untouched_cm3(gt, pred, c); }

/// Dense 1D convolution with whole-sample mirror padding (…c b | a b c | b a…).
inline std::vector<double> convolve_mirror(const std::vector<double> &signal,
                                           const std::vector<double> &kernel) {
  const long n = static_cast<long>(signal.size());
  const long r = static_cast<long>(kernel.size() / 2);
  auto reflect = [n](long i) {
    if (n == 1) {
      return 0L;
    }
    const long period = 2 * (n - 1);
    i = ((i % period) + period) % period;
    return i < n ? i : period - i;
  };
  std::vector<double> out(signal.size(), 0.0);
  for (long i = 0; i < n; ++i) {
    double acc = 0.0;
    for (long k = -r; k <= r; ++k) {
      acc += kernel[static_cast<std::size_t>(k + r)] * signal[static_cast<std::size_t>(reflect(i - k))];
    }
    out[static_cast<std::size_t>(i)] = acc;
  }
  return out;
}

/// Normalized Gaussian taps on [-ceil(4σ), ceil(4σ)].
inline std::vector<double> gaussian_taps(double sigma) {
  const long r = static_cast<long>(std::ceil(4.0 * sigma));
  std::vector<double> k;
  double sum = 0.0;
  for (long i = -r; i <= r; ++i) {
    k.push_back(std::exp(-0.5 * static_cast<double>(i * i) / (sigma * sigma)));
    sum += k.back();
  }
  for (double &v : k) {
    v /= sum;
  }
  return k;
}

} // namespace oracle
