#include "petprep/intensity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "petprep/rng.hpp"

namespace petprep {

namespace {

constexpr double kStdFloor = 1e-8;
constexpr double kGammaMinRange = 1e-8;

template <typename Fn> Volume map_voxels(const Volume &vol, Fn &&fn) {
  std::vector<float> out(vol.size());
  const auto in = vol.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<float>(fn(static_cast<double>(in[i])));
  }
  return Volume(vol.geometry(), std::move(out), unchecked);
}

/// Whole-sample mirror: ... 2 1 | 0 1 2 ... n-1 | n-2 n-3 ...
inline std::size_t mirror(std::ptrdiff_t i, std::size_t n) {
  if (n == 1) {
    return 0;
  }
  const auto period = static_cast<std::ptrdiff_t>(2 * (n - 1));
  std::ptrdiff_t m = i % period;
  if (m < 0) {
    m += period;
  }
  if (m >= static_cast<std::ptrdiff_t>(n)) {
    m = period - m;
  }
  return static_cast<std::size_t>(m);
}

void convolve_axis(std::vector<double> &buf, const Index3 &shape, int axis,
                   const std::vector<double> &kernel) {
  const std::size_t n = shape[axis];
  const auto radius = static_cast<std::ptrdiff_t>(kernel.size() / 2);
  const std::size_t stride = axis == 0 ? 1 : (axis == 1 ? shape[0] : shape[0] * shape[1]);
  std::vector<double> line(n);
  std::vector<double> result(n);

  // Enumerate every line along `axis` by its first voxel.
  const std::size_t outer = shape[0] * shape[1] * shape[2] / n;
  for (std::size_t l = 0; l < outer; ++l) {
    std::size_t base = 0;
    if (axis == 0) {
      base = l * shape[0];
    } else if (axis == 1) {
      base = (l % shape[0]) + (l / shape[0]) * shape[0] * shape[1];
    } else {
      base = l;
    }
    for (std::size_t i = 0; i < n; ++i) {
      line[i] = buf[base + i * stride];
    }
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
        acc += kernel[static_cast<std::size_t>(k + radius)] *
               line[mirror(static_cast<std::ptrdiff_t>(i) + k, n)];
      }
      result[i] = acc;
    }
    for (std::size_t i = 0; i < n; ++i) {
      buf[base + i * stride] = result[i];
    }
  }
}

void require_sigma(double sigma, const char *name, bool allow_zero) {
  if (!std::isfinite(sigma) || sigma < 0.0 || (!allow_zero && sigma == 0.0)) {
    throw Error(ErrorCode::NegativeSigma, std::string(name) + " = " + std::to_string(sigma));
  }
}

} // namespace

Volume clip(const Volume &vol, std::optional<double> lo, std::optional<double> hi) {
  if ((lo && !std::isfinite(*lo)) || (hi && !std::isfinite(*hi))) {
    throw Error(ErrorCode::InvalidBounds, "clip bounds must be finite");
  }
  if (lo && hi && !(*lo < *hi)) {
    throw Error(ErrorCode::InvalidBounds,
                "clip lower bound " + std::to_string(*lo) + " not below upper " + std::to_string(*hi));
  }
  const float flo = lo ? static_cast<float>(*lo) : -std::numeric_limits<float>::max();
  const float fhi = hi ? static_cast<float>(*hi) : std::numeric_limits<float>::max();
  std::vector<float> out(vol.data().begin(), vol.data().end());
  for (float &v : out) {
    v = std::min(std::max(v, flo), fhi);
  }
  return Volume(vol.geometry(), std::move(out), unchecked);
}

Volume zscore_normalize(const Volume &vol, bool nonzero_only) {
  const auto in = vol.data();
  std::size_t count = 0;
  double sum = 0.0;
  for (const float v : in) {
    if (!nonzero_only || v != 0.0f) {
      sum += v;
      ++count;
    }
  }
  if (count < 2) {
    throw Error(ErrorCode::DegenerateStatistics,
                std::to_string(count) + (nonzero_only ? " non-zero" : "") +
                    " voxel(s) available, need at least 2");
  }
  const double mean = sum / static_cast<double>(count);
  double sq = 0.0;
  for (const float v : in) {
    if (!nonzero_only || v != 0.0f) {
      const double d = v - mean;
      sq += d * d;
    }
  }
  const double sd = std::max(std::sqrt(sq / static_cast<double>(count)), kStdFloor);
  return map_voxels(vol, [&](double v) {
    if (nonzero_only && v == 0.0) {
      return 0.0;
    }
    return (v - mean) / sd;
  });
}

Volume normalize_channel(const Volume &vol, const NormalizationConfig &cfg) {
  Volume out = (cfg.clip_min || cfg.clip_max) ? clip(vol, cfg.clip_min, cfg.clip_max) : vol;
  switch (cfg.method) {
  case NormalizationMethod::none:
    return out;
  case NormalizationMethod::zscore:
    return zscore_normalize(out, false);
  case NormalizationMethod::nonzero_zscore:
    return zscore_normalize(out, true);
  }
  return out;
}

Volume scale_intensity(const Volume &vol, double factor) {
  if (!std::isfinite(factor)) {
    throw Error(ErrorCode::InvalidArgument, "scale factor must be finite");
  }
  return map_voxels(vol, [factor](double v) { return v * factor; });
}

Volume gamma_transform(const Volume &vol, const GammaParams &params) {
  if (!(std::isfinite(params.gamma) && params.gamma > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "gamma must be positive, got " + std::to_string(params.gamma));
  }
  const auto [lo_it, hi_it] = std::minmax_element(vol.data().begin(), vol.data().end());
  const double m = *lo_it;
  const double big_m = *hi_it;
  const double range = big_m - m;
  if (range < kGammaMinRange) {
    return vol;
  }
  const double gamma = params.gamma;
  auto curve = [&](double v) {
    const double t = std::clamp((v - m) / range, 0.0, 1.0);
    return std::pow(t, gamma) * range + m;
  };
  if (!params.invert) {
    return map_voxels(vol, curve);
  }
  return map_voxels(vol, [&](double v) { return big_m + m - curve(big_m + m - v); });
}

std::vector<double> gaussian_kernel(double sigma_voxels) {
  require_sigma(sigma_voxels, "sigma", false);
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(4.0 * sigma_voxels));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
    const double x = static_cast<double>(i);
    const double w = std::exp(-(x * x) / (2.0 * sigma_voxels * sigma_voxels));
    k[static_cast<std::size_t>(i + radius)] = w;
    total += w;
  }
  for (double &w : k) {
    w /= total;
  }
  return k;
}

Volume gaussian_smooth(const Volume &vol, const Vec3 &sigma_mm) {
  for (int a = 0; a < 3; ++a) {
    require_sigma(sigma_mm[a], "sigma", true);
  }
  if (sigma_mm[0] == 0.0 && sigma_mm[1] == 0.0 && sigma_mm[2] == 0.0) {
    return vol;
  }
  std::vector<double> buf(vol.data().begin(), vol.data().end());
  for (int a = 0; a < 3; ++a) {
    if (sigma_mm[a] > 0.0) {
      convolve_axis(buf, vol.shape(), a, gaussian_kernel(sigma_mm[a] / vol.spacing()[a]));
    }
  }
  std::vector<float> out(buf.size());
  std::transform(buf.begin(), buf.end(), out.begin(),
                 [](double v) { return static_cast<float>(v); });
  return Volume(vol.geometry(), std::move(out), unchecked);
}

Volume gaussian_sharpen(const Volume &vol, const SharpenParams &params) {
  require_sigma(params.sigma1, "sigma1", false);
  require_sigma(params.sigma2, "sigma2", false);
  if (!(std::isfinite(params.alpha) && params.alpha >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "alpha must be >= 0, got " + std::to_string(params.alpha));
  }
  const Volume g1 = gaussian_smooth(vol, {params.sigma1, params.sigma1, params.sigma1});
  const Volume g2 = gaussian_smooth(g1, {params.sigma2, params.sigma2, params.sigma2});
  std::vector<float> out(g1.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double a = g1[i];
    out[i] = static_cast<float>(a + params.alpha * (a - static_cast<double>(g2[i])));
  }
  return Volume(vol.geometry(), std::move(out), unchecked);
}

Volume add_gaussian_noise(const Volume &vol, double mean, double std, std::uint64_t seed) {
  if (!std::isfinite(std) || std < 0.0) {
    throw Error(ErrorCode::NegativeStd, "std = " + std::to_string(std));
  }
  if (!std::isfinite(mean)) {
    throw Error(ErrorCode::InvalidArgument, "noise mean must be finite");
  }
  const CounterRng rng(seed);
  std::vector<float> out(vol.size());
  const auto in = vol.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double n = std == 0.0 ? mean : mean + std * rng.normal(i);
    out[i] = static_cast<float>(static_cast<double>(in[i]) + n);
  }
  return Volume(vol.geometry(), std::move(out), unchecked);
}

} // namespace petprep
