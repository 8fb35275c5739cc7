#include "petprep/api.hpp"

#include <utility>
#include <vector>

#include "petprep/augment.hpp"
#include "petprep/error.hpp"
#include "petprep/nifti.hpp"

namespace petprep::api {

Volume to_volume(const ArrayView &view) {
  return make_volume(view.data, view.shape, view.spacing, view.origin);
}

LabelMask to_mask(const ArrayView &view) {
  std::vector<std::uint8_t> bits(view.data.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    const float v = view.data[i];
    if (v != 0.0f && v != 1.0f) {
      throw Error(ErrorCode::NonBinaryMask, "voxel " + std::to_string(i) + " = " + std::to_string(v));
    }
    bits[i] = v == 1.0f ? 1 : 0;
  }
  return make_mask(std::move(bits), view.shape, view.spacing, view.origin);
}

PipelineOutput apply_pipeline(const ArrayView &pet, const ArrayView &ct, const ArrayView &mask,
                              const std::filesystem::path &config_path, std::string_view case_id,
                              std::uint64_t replicate) {
  const PipelineConfig cfg = load_pipeline_config(config_path);
  AugmentedSample s =
      petprep::apply_pipeline(to_volume(pet), to_volume(ct), to_mask(mask), cfg, case_id, replicate);
  std::string provenance = provenance_json(s, config_digest(cfg));
  return {std::move(s.pet), std::move(s.ct), std::move(s.mask), std::move(provenance)};
}

CaseMetrics evaluate(std::span<const float> pred, std::span<const float> gt, const Index3 &shape,
                     const Vec3 &spacing, int connectivity) {
  const Connectivity conn = connectivity_from_int(connectivity);
  return evaluate_case(to_mask({pred, shape, spacing}), to_mask({gt, shape, spacing}), conn, "");
}

Volume read_nifti(const std::filesystem::path &path) { return nifti::read_volume(path); }

LabelMask read_nifti_mask(const std::filesystem::path &path) { return nifti::read_mask(path); }

} // namespace petprep::api
