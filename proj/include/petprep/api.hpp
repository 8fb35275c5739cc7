#pragma once

// Entry points for scripting-language bindings. Inputs are borrowed views of
// caller-owned buffers; outputs are freshly allocated.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include "petprep/metrics.hpp"
#include "petprep/volume.hpp"

namespace petprep::api {

/// Contiguous x-fastest real buffer with its geometry. Not owned.
struct ArrayView {
  std::span<const float> data;
  Index3 shape{1, 1, 1};
  Vec3 spacing{1.0, 1.0, 1.0};
  Vec3 origin{0.0, 0.0, 0.0};
};

struct PipelineOutput {
  Volume pet;
  Volume ct;
  LabelMask mask;
  std::string provenance_json;
};

/// Copies a view into a Volume (ShapeMismatch, NonFiniteData, NonPositiveSpacing).
Volume to_volume(const ArrayView &view);

/// Copies a view into a LabelMask; any value other than 0 or 1 is NonBinaryMask.
LabelMask to_mask(const ArrayView &view);

/// Loads and validates the config at `config_path`, then runs the native pipeline.
/// The provenance sidecar is identical to the one `petprep augment` writes.
PipelineOutput apply_pipeline(const ArrayView &pet, const ArrayView &ct, const ArrayView &mask,
                              const std::filesystem::path &config_path, std::string_view case_id,
                              std::uint64_t replicate);

/// evaluate_case on raw buffers sharing one shape and spacing.
CaseMetrics evaluate(std::span<const float> pred, std::span<const float> gt, const Index3 &shape,
                     const Vec3 &spacing, int connectivity);

Volume read_nifti(const std::filesystem::path &path);
LabelMask read_nifti_mask(const std::filesystem::path &path);

} // namespace petprep::api
