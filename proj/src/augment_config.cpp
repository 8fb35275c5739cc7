// Pipeline config parsing, validation and canonical serialization.

#include <openssl/evp.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "petprep/augment.hpp"

namespace petprep {

using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string &path, const std::string &what) {
  throw Error(ErrorCode::ValidationError, path + ": " + what);
}

/// Reads keys from one JSON object and rejects whatever was not consumed.
class ObjectReader {
public:
  ObjectReader(const json &obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) {
      invalid(path_.empty() ? "<root>" : path_, "expected an object");
    }
  }

  [[nodiscard]] std::string path_of(std::string_view key) const {
    return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
  }

  const json *optional(std::string_view key) {
    used_.emplace(key);
    const auto it = obj_.find(std::string(key));
    return it == obj_.end() ? nullptr : &*it;
  }

  const json &required(std::string_view key) {
    const json *v = optional(key);
    if (v == nullptr) {
      invalid(path_of(key), "missing required key");
    }
    return *v;
  }

  void reject_unknown() const {
    for (const auto &item : obj_.items()) {
      if (!used_.contains(item.key())) {
        invalid(path_of(item.key()), "unknown key");
      }
    }
  }

private:
  const json &obj_;
  std::string path_;
  std::set<std::string, std::less<>> used_;
};

double finite_number(const json &v, const std::string &path) {
  if (!v.is_number()) {
    invalid(path, "expected a number");
  }
  const double d = v.get<double>();
  if (!std::isfinite(d)) {
    invalid(path, "expected a finite number");
  }
  return d;
}

Vec3 positive_triple(const json &v, const std::string &path) {
  if (!v.is_array() || v.size() != 3) {
    invalid(path, "expected an array of 3 numbers");
  }
  Vec3 out{};
  for (std::size_t a = 0; a < 3; ++a) {
    out[a] = finite_number(v[a], path + "[" + std::to_string(a) + "]");
    if (out[a] <= 0.0) {
      invalid(path + "[" + std::to_string(a) + "]", "must be positive");
    }
  }
  return out;
}

struct RangeRule {
  bool lo_positive = false;     ///< lo > 0
  bool lo_non_negative = false; ///< lo >= 0
};

Range parse_range(const json &v, const std::string &path, RangeRule rule) {
  if (!v.is_array() || v.size() != 2) {
    invalid(path, "expected [lo, hi]");
  }
  const Range r{finite_number(v[0], path + "[0]"), finite_number(v[1], path + "[1]")};
  if (r.lo > r.hi) {
    invalid(path, "lo > hi");
  }
  if (rule.lo_positive && !(r.lo > 0.0)) {
    invalid(path, "lo must be > 0");
  }
  if (rule.lo_non_negative && r.lo < 0.0) {
    invalid(path, "lo must be >= 0");
  }
  return r;
}

void read_range(ObjectReader &obj, std::string_view key, Range &target, RangeRule rule = {}) {
  if (const json *v = obj.optional(key)) {
    target = parse_range(*v, obj.path_of(key), rule);
  }
}

NormalizationConfig parse_normalization(const json &v, const std::string &path) {
  ObjectReader obj(v, path);
  NormalizationConfig cfg;
  const json &method = obj.required("method");
  const std::string mpath = obj.path_of("method");
  if (!method.is_string()) {
    invalid(mpath, "expected a string");
  }
  const auto name = method.get<std::string>();
  if (name == "zscore") {
    cfg.method = NormalizationMethod::zscore;
  } else if (name == "nonzero_zscore") {
    cfg.method = NormalizationMethod::nonzero_zscore;
  } else if (name == "none") {
    cfg.method = NormalizationMethod::none;
  } else {
    invalid(mpath, "unknown method \"" + name + "\" (zscore, nonzero_zscore, none)");
  }
  for (const char *key : {"clip_min", "clip_max"}) {
    const json *b = obj.optional(key);
    if (b != nullptr && !b->is_null()) {
      (std::string_view(key) == "clip_min" ? cfg.clip_min : cfg.clip_max) =
          finite_number(*b, obj.path_of(key));
    }
  }
  if (cfg.clip_min && cfg.clip_max && !(*cfg.clip_min < *cfg.clip_max)) {
    invalid(path, "clip_min must be below clip_max");
  }
  obj.reject_unknown();
  return cfg;
}

FlipAxes parse_axes(const json &v, const std::string &path) {
  if (!v.is_array() || v.empty()) {
    invalid(path, "expected a non-empty array of \"x\", \"y\", \"z\"");
  }
  FlipAxes axes{false, false, false};
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string p = path + "[" + std::to_string(i) + "]";
    if (!v[i].is_string()) {
      invalid(p, "expected \"x\", \"y\" or \"z\"");
    }
    const auto a = v[i].get<std::string>();
    bool *slot = a == "x" ? &axes.x : a == "y" ? &axes.y : a == "z" ? &axes.z : nullptr;
    if (slot == nullptr) {
      invalid(p, "expected \"x\", \"y\" or \"z\"");
    }
    if (*slot) {
      invalid(p, "duplicate axis");
    }
    *slot = true;
  }
  return axes;
}

TransformParams parse_params(TransformKind kind, const json *v, const std::string &path) {
  static const json kEmpty = json::object();
  ObjectReader obj(v != nullptr ? *v : kEmpty, path);
  TransformParams out;
  switch (kind) {
  case TransformKind::rand_crop: {
    CropSpec s;
    const json &size = obj.required("size");
    const std::string sp = obj.path_of("size");
    if (!size.is_array() || size.size() != 3) {
      invalid(sp, "expected an array of 3 positive integers");
    }
    for (std::size_t a = 0; a < 3; ++a) {
      if (!size[a].is_number_unsigned() || size[a].get<std::uint64_t>() == 0) {
        invalid(sp + "[" + std::to_string(a) + "]", "expected a positive integer");
      }
      s.size[a] = size[a].get<std::size_t>();
    }
    out = s;
    break;
  }
  case TransformKind::rand_affine: {
    AffineSpec s;
    read_range(obj, "rotation_range", s.rotation);
    read_range(obj, "scale_range", s.scale, {.lo_positive = true});
    read_range(obj, "translation_range", s.translation);
    if (const json *f = obj.optional("fill")) {
      s.fill = finite_number(*f, obj.path_of("fill"));
    }
    out = s;
    break;
  }
  case TransformKind::rand_flip: {
    FlipSpec s;
    s.axes = parse_axes(obj.required("axes"), obj.path_of("axes"));
    out = s;
    break;
  }
  case TransformKind::rand_gaussian_noise: {
    NoiseSpec s;
    if (const json *m = obj.optional("mean")) {
      s.mean = finite_number(*m, obj.path_of("mean"));
    }
    read_range(obj, "std_range", s.std, {.lo_non_negative = true});
    out = s;
    break;
  }
  case TransformKind::rand_gaussian_smooth: {
    SmoothSpec s;
    read_range(obj, "sigma_range", s.sigma, {.lo_non_negative = true});
    out = s;
    break;
  }
  case TransformKind::rand_gaussian_sharpen: {
    SharpenSpec s;
    read_range(obj, "sigma1_range", s.sigma1, {.lo_positive = true});
    read_range(obj, "sigma2_factor_range", s.sigma2_factor, {.lo_positive = true});
    read_range(obj, "alpha_range", s.alpha, {.lo_non_negative = true});
    out = s;
    break;
  }
  case TransformKind::rand_gamma: {
    GammaSpec s;
    read_range(obj, "gamma_range", s.gamma, {.lo_positive = true});
    if (const json *inv = obj.optional("invert")) {
      const std::string ip = obj.path_of("invert");
      if (!inv->is_array() || inv->empty() || inv->size() > 2) {
        invalid(ip, "expected [false], [true] or [false, true]");
      }
      s.allow_plain = s.allow_inverted = false;
      for (const auto &b : *inv) {
        if (!b.is_boolean()) {
          invalid(ip, "expected booleans");
        }
        (b.get<bool>() ? s.allow_inverted : s.allow_plain) = true;
      }
    }
    out = s;
    break;
  }
  case TransformKind::rand_scale_intensity: {
    ScaleSpec s;
    read_range(obj, "factor_range", s.factor);
    out = s;
    break;
  }
  }
  obj.reject_unknown();
  return out;
}

json range_json(const Range &r) { return json::array({r.lo, r.hi}); }

json axes_json(FlipAxes axes) {
  json a = json::array();
  if (axes.x) a.push_back("x");
  if (axes.y) a.push_back("y");
  if (axes.z) a.push_back("z");
  return a;
}

json params_json(const TransformParams &params) {
  return std::visit(
      [](const auto &s) -> json {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, CropSpec>) {
          return {{"size", s.size}};
        } else if constexpr (std::is_same_v<T, AffineSpec>) {
          return {{"rotation_range", range_json(s.rotation)},
                  {"scale_range", range_json(s.scale)},
                  {"translation_range", range_json(s.translation)},
                  {"fill", s.fill}};
        } else if constexpr (std::is_same_v<T, FlipSpec>) {
          return {{"axes", axes_json(s.axes)}};
        } else if constexpr (std::is_same_v<T, NoiseSpec>) {
          return {{"mean", s.mean}, {"std_range", range_json(s.std)}};
        } else if constexpr (std::is_same_v<T, SmoothSpec>) {
          return {{"sigma_range", range_json(s.sigma)}};
        } else if constexpr (std::is_same_v<T, SharpenSpec>) {
          return {{"sigma1_range", range_json(s.sigma1)},
                  {"sigma2_factor_range", range_json(s.sigma2_factor)},
                  {"alpha_range", range_json(s.alpha)}};
        } else if constexpr (std::is_same_v<T, GammaSpec>) {
          json inv = json::array();
          if (s.allow_plain) inv.push_back(false);
          if (s.allow_inverted) inv.push_back(true);
          return {{"gamma_range", range_json(s.gamma)}, {"invert", inv}};
        } else {
          return {{"factor_range", range_json(s.factor)}};
        }
      },
      params);
}

json normalization_json(const NormalizationConfig &cfg) {
  const char *method = cfg.method == NormalizationMethod::zscore           ? "zscore"
                       : cfg.method == NormalizationMethod::nonzero_zscore ? "nonzero_zscore"
                                                                           : "none";
  json j = {{"method", method}, {"clip_min", nullptr}, {"clip_max", nullptr}};
  if (cfg.clip_min) j["clip_min"] = *cfg.clip_min;
  if (cfg.clip_max) j["clip_max"] = *cfg.clip_max;
  return j;
}

} // namespace

std::string_view to_string(TransformKind kind) noexcept {
  switch (kind) {
  case TransformKind::rand_crop: return "rand_crop";
  case TransformKind::rand_affine: return "rand_affine";
  case TransformKind::rand_flip: return "rand_flip";
  case TransformKind::rand_gaussian_noise: return "rand_gaussian_noise";
  case TransformKind::rand_gaussian_smooth: return "rand_gaussian_smooth";
  case TransformKind::rand_gaussian_sharpen: return "rand_gaussian_sharpen";
  case TransformKind::rand_gamma: return "rand_gamma";
  case TransformKind::rand_scale_intensity: return "rand_scale_intensity";
  }
  return "unknown";
}

std::optional<TransformKind> transform_kind_from_string(std::string_view name) noexcept {
  for (int k = 0; k <= static_cast<int>(TransformKind::rand_scale_intensity); ++k) {
    const auto kind = static_cast<TransformKind>(k);
    if (to_string(kind) == name) {
      return kind;
    }
  }
  return std::nullopt;
}

bool is_spatial(TransformKind kind) noexcept {
  return kind == TransformKind::rand_crop || kind == TransformKind::rand_affine ||
         kind == TransformKind::rand_flip;
}

double default_probability(TransformKind kind) noexcept {
  switch (kind) {
  case TransformKind::rand_crop: return 1.0;
  case TransformKind::rand_affine: return 0.2;
  case TransformKind::rand_flip: return 0.5;
  case TransformKind::rand_gaussian_noise: return 0.1;
  case TransformKind::rand_gaussian_smooth: return 0.2;
  case TransformKind::rand_gaussian_sharpen: return 0.2;
  case TransformKind::rand_gamma: return 0.3;
  case TransformKind::rand_scale_intensity: return 0.15;
  }
  return 0.0;
}

PipelineConfig parse_pipeline_config(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error &e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  ObjectReader obj(root, "");
  PipelineConfig cfg;
  cfg.target_spacing = positive_triple(obj.required("target_spacing"), "target_spacing");

  ObjectReader norm(obj.required("normalization"), "normalization");
  cfg.pet = parse_normalization(norm.required("pet"), "normalization.pet");
  cfg.ct = parse_normalization(norm.required("ct"), "normalization.ct");
  norm.reject_unknown();

  const json &transforms = obj.required("transforms");
  if (!transforms.is_array()) {
    invalid("transforms", "expected an array");
  }
  for (std::size_t i = 0; i < transforms.size(); ++i) {
    const std::string path = "transforms[" + std::to_string(i) + "]";
    ObjectReader t(transforms[i], path);
    const json &kind_json = t.required("kind");
    if (!kind_json.is_string()) {
      invalid(t.path_of("kind"), "expected a string");
    }
    const auto kind = transform_kind_from_string(kind_json.get<std::string>());
    if (!kind) {
      invalid(t.path_of("kind"), "unknown transform kind \"" + kind_json.get<std::string>() + "\"");
    }
    TransformSpec spec;
    spec.probability = default_probability(*kind);
    if (const json *p = t.optional("probability")) {
      spec.probability = finite_number(*p, t.path_of("probability"));
      if (spec.probability < 0.0 || spec.probability > 1.0) {
        invalid(t.path_of("probability"), "must lie in [0, 1]");
      }
    }
    spec.params = parse_params(*kind, t.optional("params"), t.path_of("params"));
    t.reject_unknown();
    cfg.transforms.push_back(std::move(spec));
  }

  if (const json *seed = obj.optional("master_seed")) {
    if (!seed->is_number_unsigned()) {
      invalid("master_seed", "expected a non-negative integer");
    }
    cfg.master_seed = seed->get<std::uint64_t>();
  }
  obj.reject_unknown();
  return cfg;
}

PipelineConfig load_pipeline_config(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::FileNotFound, path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_pipeline_config(ss.str());
  } catch (const Error &e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

std::string serialize_pipeline_config(const PipelineConfig &config) {
  json transforms = json::array();
  for (const auto &t : config.transforms) {
    transforms.push_back({{"kind", to_string(t.kind())},
                          {"probability", t.probability},
                          {"params", params_json(t.params)}});
  }
  const json root = {{"target_spacing", config.target_spacing},
                     {"normalization",
                      {{"pet", normalization_json(config.pet)}, {"ct", normalization_json(config.ct)}}},
                     {"transforms", transforms},
                     {"master_seed", config.master_seed}};
  return root.dump(2) + "\n";
}

std::string config_digest(const PipelineConfig &config) {
  const std::string canonical = serialize_pipeline_config(config);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(canonical.data(), canonical.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::IoError, "SHA-256 digest failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xF];
  }
  return out;
}

} // namespace petprep
