#include "petprep/augment.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "petprep/rng.hpp"

namespace petprep {

using nlohmann::json;

std::uint64_t derive_case_seed(std::uint64_t master_seed, std::string_view case_id,
                               std::uint64_t replicate) noexcept {
  std::uint64_t s = mix64(master_seed);
  s = mix64(s ^ fnv1a64(case_id));
  return mix64(s ^ mix64(replicate));
}

namespace {

Vec3 draw3(RngStream &rng, const Range &r) {
  Vec3 v{};
  for (double &x : v) {
    x = rng.uniform(r.lo, r.hi);
  }
  return v;
}

DrawnParams draw(const TransformParams &spec, RngStream &rng) {
  return std::visit(
      [&rng](const auto &s) -> DrawnParams {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, CropSpec>) {
          CropDraw d;
          d.size = s.size;
          for (double &f : d.start_fraction) {
            f = rng.uniform();
          }
          return d;
        } else if constexpr (std::is_same_v<T, AffineSpec>) {
          AffineDraw d;
          d.params.rotation = draw3(rng, s.rotation);
          d.params.scale = draw3(rng, s.scale);
          d.params.translation = draw3(rng, s.translation);
          d.params.fill = s.fill;
          return d;
        } else if constexpr (std::is_same_v<T, FlipSpec>) {
          return FlipDraw{s.axes};
        } else if constexpr (std::is_same_v<T, NoiseSpec>) {
          NoiseDraw d;
          d.mean = s.mean;
          d.std = rng.uniform(s.std.lo, s.std.hi);
          d.seed = rng.next_u64();
          return d;
        } else if constexpr (std::is_same_v<T, SmoothSpec>) {
          return SmoothDraw{draw3(rng, s.sigma)};
        } else if constexpr (std::is_same_v<T, SharpenSpec>) {
          SharpenDraw d;
          d.params.sigma1 = rng.uniform(s.sigma1.lo, s.sigma1.hi);
          d.sigma2_factor = rng.uniform(s.sigma2_factor.lo, s.sigma2_factor.hi);
          d.params.sigma2 = d.sigma2_factor * d.params.sigma1;
          d.params.alpha = rng.uniform(s.alpha.lo, s.alpha.hi);
          return d;
        } else if constexpr (std::is_same_v<T, GammaSpec>) {
          GammaDraw d;
          d.params.gamma = rng.uniform(s.gamma.lo, s.gamma.hi);
          if (s.allow_plain && s.allow_inverted) {
            d.params.invert = rng.bernoulli(0.5);
          } else {
            d.params.invert = s.allow_inverted;
          }
          return d;
        } else {
          return ScaleDraw{rng.uniform(s.factor.lo, s.factor.hi)};
        }
      },
      spec);
}

/// Per-channel noise seed so PET and CT receive independent fields.
std::uint64_t channel_seed(std::uint64_t seed, std::uint64_t channel) {
  return mix64(seed ^ mix64(channel + 1));
}

Index3 crop_start(const CropDraw &d, const Index3 &shape, Index3 &size) {
  Index3 start{};
  for (int a = 0; a < 3; ++a) {
    size[a] = std::min(d.size[a], shape[a]);
    const std::size_t slack = shape[a] - size[a];
    const auto s = static_cast<std::size_t>(d.start_fraction[a] * static_cast<double>(slack + 1));
    start[a] = std::min(s, slack);
  }
  return start;
}

CaseChannels apply_spatial(CaseChannels c, const DrawnParams &values) {
  if (const auto *crop_d = std::get_if<CropDraw>(&values)) {
    Index3 size{};
    const Index3 start = crop_start(*crop_d, c.pet.shape(), size);
    return {crop(c.pet, start, size), crop(c.ct, start, size), crop(c.mask, start, size)};
  }
  if (const auto *affine_d = std::get_if<AffineDraw>(&values)) {
    return {affine_warp(c.pet, affine_d->params, Interp::trilinear),
            affine_warp(c.ct, affine_d->params, Interp::trilinear),
            affine_warp(c.mask, affine_d->params)};
  }
  const auto &flip_d = std::get<FlipDraw>(values);
  return {flip(c.pet, flip_d.axes), flip(c.ct, flip_d.axes), flip(c.mask, flip_d.axes)};
}

Volume apply_intensity(const Volume &v, const DrawnParams &values, std::uint64_t channel) {
  return std::visit(
      [&](const auto &d) -> Volume {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, NoiseDraw>) {
          return add_gaussian_noise(v, d.mean, d.std, channel_seed(d.seed, channel));
        } else if constexpr (std::is_same_v<T, SmoothDraw>) {
          return gaussian_smooth(v, d.sigma);
        } else if constexpr (std::is_same_v<T, SharpenDraw>) {
          return gaussian_sharpen(v, d.params);
        } else if constexpr (std::is_same_v<T, GammaDraw>) {
          return gamma_transform(v, d.params);
        } else if constexpr (std::is_same_v<T, ScaleDraw>) {
          return scale_intensity(v, d.factor);
        } else {
          return v;
        }
      },
      values);
}

json vec_json(const Vec3 &v) { return json::array({v[0], v[1], v[2]}); }

json drawn_json(const DrawnParams &values) {
  return std::visit(
      [](const auto &d) -> json {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, CropDraw>) {
          return {{"size", d.size}, {"start_fraction", vec_json(d.start_fraction)}};
        } else if constexpr (std::is_same_v<T, AffineDraw>) {
          return {{"rotation", vec_json(d.params.rotation)},
                  {"scale", vec_json(d.params.scale)},
                  {"translation", vec_json(d.params.translation)},
                  {"fill", d.params.fill}};
        } else if constexpr (std::is_same_v<T, FlipDraw>) {
          return {{"x", d.axes.x}, {"y", d.axes.y}, {"z", d.axes.z}};
        } else if constexpr (std::is_same_v<T, NoiseDraw>) {
          return {{"mean", d.mean}, {"std", d.std}, {"seed", d.seed}};
        } else if constexpr (std::is_same_v<T, SmoothDraw>) {
          return {{"sigma", vec_json(d.sigma)}};
        } else if constexpr (std::is_same_v<T, SharpenDraw>) {
          return {{"sigma1", d.params.sigma1},
                  {"sigma2", d.params.sigma2},
                  {"sigma2_factor", d.sigma2_factor},
                  {"alpha", d.params.alpha}};
        } else if constexpr (std::is_same_v<T, GammaDraw>) {
          return {{"gamma", d.params.gamma}, {"invert", d.params.invert}};
        } else {
          return {{"factor", d.factor}};
        }
      },
      values);
}

} // namespace

SampledParams sample_params(const PipelineConfig &config, std::uint64_t case_seed) {
  SampledParams out;
  out.case_seed = case_seed;
  RngStream rng(case_seed);
  for (const auto &spec : config.transforms) {
    SampledTransform t;
    t.kind = spec.kind();
    t.applied = rng.bernoulli(spec.probability);
    if (t.applied) {
      t.values = draw(spec.params, rng);
    }
    out.transforms.push_back(std::move(t));
  }
  return out;
}

CaseChannels preprocess(const Volume &pet, const Volume &ct, const LabelMask &mask,
                        const PipelineConfig &config) {
  require_same_geometry(pet.geometry(), ct.geometry(), "PET vs CT");
  require_same_geometry(pet.geometry(), mask.geometry(), "PET vs mask");
  return {normalize_channel(resample(pet, config.target_spacing, Interp::trilinear), config.pet),
          normalize_channel(resample(ct, config.target_spacing, Interp::trilinear), config.ct),
          resample(mask, config.target_spacing)};
}

CaseChannels apply_sampled(const CaseChannels &input, const SampledParams &params) {
  CaseChannels c = input;
  for (const auto &t : params.transforms) {
    if (t.applied && t.values && is_spatial(t.kind)) {
      c = apply_spatial(std::move(c), *t.values);
    }
  }
  for (const auto &t : params.transforms) {
    if (t.applied && t.values && !is_spatial(t.kind)) {
      c.pet = apply_intensity(c.pet, *t.values, 0);
      c.ct = apply_intensity(c.ct, *t.values, 1);
    }
  }
  return c;
}

AugmentedSample apply_pipeline(const Volume &pet, const Volume &ct, const LabelMask &mask,
                               const PipelineConfig &config, std::string_view case_id,
                               std::uint64_t replicate) {
  const std::uint64_t seed = derive_case_seed(config.master_seed, case_id, replicate);
  SampledParams params = sample_params(config, seed);
  CaseChannels out = apply_sampled(preprocess(pet, ct, mask, config), params);
  return AugmentedSample{std::move(out.pet), std::move(out.ct), std::move(out.mask),
                         std::string(case_id), replicate, config.master_seed, std::move(params)};
}

std::string provenance_json(const AugmentedSample &sample, std::string_view config_sha256) {
  json transforms = json::array();
  for (const auto &t : sample.params.transforms) {
    json entry = {{"kind", to_string(t.kind)}, {"applied", t.applied}};
    if (t.values) {
      entry["values"] = drawn_json(*t.values);
    }
    transforms.push_back(std::move(entry));
  }
  const json root = {{"case_id", sample.case_id},
                     {"replicate", sample.replicate},
                     {"master_seed", sample.master_seed},
                     {"case_seed", sample.params.case_seed},
                     {"config_sha256", std::string(config_sha256)},
                     {"shape", sample.pet.shape()},
                     {"transforms", transforms}};
  return root.dump(2) + "\n";
}

} // namespace petprep
