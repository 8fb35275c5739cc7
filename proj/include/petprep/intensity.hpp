#pragma once

#include <cstdint>
#include <optional>

#include "petprep/volume.hpp"

namespace petprep {

enum class NormalizationMethod { none, zscore, nonzero_zscore };

/// Per-channel intensity preprocessing: optional clipping, then normalization.
struct NormalizationConfig {
  NormalizationMethod method = NormalizationMethod::zscore;
  std::optional<double> clip_min;
  std::optional<double> clip_max;

  bool operator==(const NormalizationConfig &) const = default;
};

struct GammaParams {
  double gamma = 1.0;
  bool invert = false;
};

/// Unsharp-masking parameters; sigmas in mm, applied isotropically.
struct SharpenParams {
  double sigma1 = 1.0;
  double sigma2 = 1.0;
  double alpha = 0.0;
};

/// v -> min(max(v, lo), hi); an absent bound leaves that side open.
Volume clip(const Volume &vol, std::optional<double> lo, std::optional<double> hi);

/**
 * @brief Z-score normalization with population statistics.
 *
 * With @p nonzero_only the mean and std come from non-zero voxels only and
 * zero voxels stay exactly zero. The std is floored at 1e-8.
 */
Volume zscore_normalize(const Volume &vol, bool nonzero_only);

/// Clip then normalize, as configured.
Volume normalize_channel(const Volume &vol, const NormalizationConfig &cfg);

Volume scale_intensity(const Volume &vol, double factor);

/**
 * @brief Range-preserving gamma curve.
 *
 * With m = min, M = max, r = M - m: v -> ((v - m) / r)^gamma * r + m. The
 * inverted variant applies the curve to M + m - v and reflects the result
 * back. Volumes with r < 1e-8 are returned unchanged.
 */
Volume gamma_transform(const Volume &vol, const GammaParams &params);

/// Truncated, renormalized kernel for a sigma given in voxels (radius ceil(4 sigma)).
std::vector<double> gaussian_kernel(double sigma_voxels);

/// Separable Gaussian blur, sigma in mm per axis, mirror padding at the borders.
Volume gaussian_smooth(const Volume &vol, const Vec3 &sigma_mm);

/// g1 + alpha * (g1 - g2) with g1 = smooth(v, sigma1) and g2 = smooth(g1, sigma2).
Volume gaussian_sharpen(const Volume &vol, const SharpenParams &params);

/// Adds i.i.d. Normal(mean, std) noise; voxel i draws from counter i of the seed.
Volume add_gaussian_noise(const Volume &vol, double mean, double std, std::uint64_t seed);

} // namespace petprep
