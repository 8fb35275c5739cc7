#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "petprep/grid.hpp"
#include "petprep/intensity.hpp"
#include "petprep/volume.hpp"

namespace petprep {

/// Closed interval [lo, hi].
struct Range {
  double lo = 0.0;
  double hi = 0.0;

  [[nodiscard]] bool contains(double v) const noexcept { return v >= lo && v <= hi; }
  bool operator==(const Range &) const = default;
};

// Alternative order of TransformParams and DrawnParams follows this enum.
enum class TransformKind {
  rand_crop,
  rand_affine,
  rand_flip,
  rand_gaussian_noise,
  rand_gaussian_smooth,
  rand_gaussian_sharpen,
  rand_gamma,
  rand_scale_intensity,
};

std::string_view to_string(TransformKind kind) noexcept;
std::optional<TransformKind> transform_kind_from_string(std::string_view name) noexcept;
/// Spatial transforms move voxels and apply to every channel including the mask.
bool is_spatial(TransformKind kind) noexcept;
/// Probability used when a config omits it.
double default_probability(TransformKind kind) noexcept;

struct CropSpec {
  Index3 size{1, 1, 1}; ///< voxels; clamped to the volume extent
  bool operator==(const CropSpec &) const = default;
};

struct AffineSpec {
  Range rotation{-0.26, 0.26};  ///< radians, drawn per axis
  Range scale{0.7, 1.4};        ///< drawn per axis
  Range translation{-10, 10};   ///< mm, drawn per axis
  double fill = 0.0;
  bool operator==(const AffineSpec &) const = default;
};

struct FlipSpec {
  FlipAxes axes{true, false, false};
  bool operator==(const FlipSpec &) const = default;
};

struct NoiseSpec {
  double mean = 0.0;
  Range std{0.0, 0.33};
  bool operator==(const NoiseSpec &) const = default;
};

struct SmoothSpec {
  Range sigma{1.0, 2.0}; ///< mm, drawn per axis
  bool operator==(const SmoothSpec &) const = default;
};

struct SharpenSpec {
  Range sigma1{1.0, 2.0};        ///< mm
  Range sigma2_factor{0.5, 1.0}; ///< sigma2 = factor * sigma1
  Range alpha{10.0, 30.0};
  bool operator==(const SharpenSpec &) const = default;
};

struct GammaSpec {
  Range gamma{0.7, 1.5};
  bool allow_plain = true;    ///< non-inverted curve may be drawn
  bool allow_inverted = true; ///< inverted curve may be drawn
  bool operator==(const GammaSpec &) const = default;
};

struct ScaleSpec {
  Range factor{0.9, 1.1};
  bool operator==(const ScaleSpec &) const = default;
};

using TransformParams = std::variant<CropSpec, AffineSpec, FlipSpec, NoiseSpec, SmoothSpec,
                                     SharpenSpec, GammaSpec, ScaleSpec>;

struct TransformSpec {
  double probability = 1.0;
  TransformParams params;

  [[nodiscard]] TransformKind kind() const noexcept {
    return static_cast<TransformKind>(params.index());
  }
  bool operator==(const TransformSpec &) const = default;
};

struct PipelineConfig {
  Vec3 target_spacing{1.0, 1.0, 1.0};
  NormalizationConfig pet;
  NormalizationConfig ct;
  std::vector<TransformSpec> transforms;
  std::uint64_t master_seed = 0;

  bool operator==(const PipelineConfig &) const = default;
};

/**
 * @brief Parse and validate a pipeline config document (JSON).
 *
 * Unknown keys and transform kinds are rejected with ValidationError naming
 * the offending field path (e.g. "transforms[2].params.gamma_range").
 * Omitted probabilities and parameter ranges take the per-kind defaults
 * above. Malformed JSON raises ParseError.
 */
PipelineConfig parse_pipeline_config(std::string_view text);
PipelineConfig load_pipeline_config(const std::filesystem::path &path);

/// Canonical JSON: every field explicit, keys sorted, two-space indent, trailing newline.
std::string serialize_pipeline_config(const PipelineConfig &config);

/// SHA-256 (hex) of the canonical serialization.
std::string config_digest(const PipelineConfig &config);

/// Stable per-(case, replicate) seed; independent of processing order.
std::uint64_t derive_case_seed(std::uint64_t master_seed, std::string_view case_id,
                               std::uint64_t replicate) noexcept;

// Concrete values drawn for one transform.
struct CropDraw {
  Index3 size{};
  Vec3 start_fraction{}; ///< in [0, 1); resolved against the volume extent at apply time
};
struct AffineDraw {
  AffineParams params;
};
struct FlipDraw {
  FlipAxes axes;
};
struct NoiseDraw {
  double mean = 0.0;
  double std = 0.0;
  std::uint64_t seed = 0;
};
struct SmoothDraw {
  Vec3 sigma{};
};
struct SharpenDraw {
  SharpenParams params;
  double sigma2_factor = 1.0;
};
struct GammaDraw {
  GammaParams params;
};
struct ScaleDraw {
  double factor = 1.0;
};

using DrawnParams = std::variant<CropDraw, AffineDraw, FlipDraw, NoiseDraw, SmoothDraw,
                                 SharpenDraw, GammaDraw, ScaleDraw>;

struct SampledTransform {
  TransformKind kind = TransformKind::rand_crop;
  bool applied = false;
  std::optional<DrawnParams> values; ///< present iff applied
};

struct SampledParams {
  std::uint64_t case_seed = 0;
  std::vector<SampledTransform> transforms; ///< parallel to the config's transform list
};

/**
 * @brief Draw the stochastic choices for one sample.
 *
 * A single stream seeded by @p case_seed supplies, per transform in list
 * order, one Bernoulli(probability) draw followed (when applied) by that
 * transform's uniform draws.
 */
SampledParams sample_params(const PipelineConfig &config, std::uint64_t case_seed);

struct CaseChannels {
  Volume pet;
  Volume ct;
  LabelMask mask;
};

/// Resample (trilinear images, nearest mask), clip and normalize. No randomness.
CaseChannels preprocess(const Volume &pet, const Volume &ct, const LabelMask &mask,
                        const PipelineConfig &config);

/// Applies drawn spatial transforms to all channels, then intensity transforms to the images.
CaseChannels apply_sampled(const CaseChannels &input, const SampledParams &params);

struct AugmentedSample {
  Volume pet;
  Volume ct;
  LabelMask mask;
  std::string case_id;
  std::uint64_t replicate = 0;
  std::uint64_t master_seed = 0;
  SampledParams params;
};

/// preprocess, then sample_params(derive_case_seed(...)), then apply_sampled.
AugmentedSample apply_pipeline(const Volume &pet, const Volume &ct, const LabelMask &mask,
                               const PipelineConfig &config, std::string_view case_id,
                               std::uint64_t replicate);

/// Provenance sidecar: case, seeds, config digest and every drawn value.
std::string provenance_json(const AugmentedSample &sample, std::string_view config_sha256);

} // namespace petprep
