#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include "petprep/dataset.hpp"
#include "petprep/nifti.hpp"
#include "petprep/volume.hpp"

namespace testing {

namespace fs = std::filesystem;

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
  explicit TempDir(const std::string &tag) {
    static std::uint64_t serial = 0;
    std::random_device rd;
    path_ = fs::temp_directory_path() /
            ("petprep_" + tag + "_" + std::to_string(rd()) + "_" + std::to_string(serial++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir &) = delete;
  TempDir &operator=(const TempDir &) = delete;

  [[nodiscard]] const fs::path &path() const { return path_; }
  fs::path operator/(const std::string &name) const { return path_ / name; }

private:
  fs::path path_;
};

inline std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void spit(const fs::path &p, const std::string &text) {
  std::ofstream(p, std::ios::binary) << text;
}

inline petprep::Volume random_volume(std::mt19937_64 &gen, const petprep::Index3 &shape,
                                     const petprep::Vec3 &spacing, float lo = 0.0f,
                                     float hi = 1.0f) {
  std::uniform_real_distribution<float> dist(lo, hi);
  std::vector<float> v(shape[0] * shape[1] * shape[2]);
  for (float &x : v) {
    x = dist(gen);
  }
  return petprep::make_volume(std::move(v), shape, spacing);
}

inline petprep::LabelMask random_mask(std::mt19937_64 &gen, const petprep::Index3 &shape,
                                      const petprep::Vec3 &spacing, double density) {
  std::bernoulli_distribution dist(density);
  std::vector<std::uint8_t> v(shape[0] * shape[1] * shape[2]);
  for (auto &x : v) {
    x = dist(gen) ? 1 : 0;
  }
  return petprep::make_mask(std::move(v), shape, spacing);
}

/// Writes n synthetic PET/CT/mask cases of the given shape and a manifest listing them.
inline fs::path write_synthetic_cohort(const fs::path &dir, std::size_t n,
                                       const petprep::Index3 &shape, std::uint64_t seed = 1) {
  std::mt19937_64 gen(seed);
  const petprep::Vec3 spacing{2.0, 2.0, 2.0};
  std::string csv = "case_id,tracer,pet_path,ct_path,mask_path,lesion_count\n";
  for (std::size_t c = 0; c < n; ++c) {
    const std::string id = "case" + std::to_string(c);
    auto pet = random_volume(gen, shape, spacing, 0.0f, 20.0f);
    auto ct = random_volume(gen, shape, spacing, -1000.0f, 1000.0f);
    auto mask = random_mask(gen, shape, spacing, 0.05);
    petprep::nifti::write_volume(pet, dir / (id + "_pet.nii.gz"));
    petprep::nifti::write_volume(ct, dir / (id + "_ct.nii.gz"));
    petprep::nifti::write_mask(mask, dir / (id + "_mask.nii.gz"));
    csv += id + (c % 2 ? ",PSMA," : ",FDG,") + id + "_pet.nii.gz," + id + "_ct.nii.gz," + id +
           "_mask.nii.gz," + std::to_string(c % 7) + "\n";
  }
  const fs::path manifest = dir / "manifest.csv";
  spit(manifest, csv);
  return manifest;
}

/// Manifest text with `n` rows whose lesion counts cycle through every bin.
inline std::string synthetic_manifest_text(std::size_t n) {
  std::string csv = "case_id,tracer,pet_path,ct_path,mask_path,lesion_count\n";
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lesions = (i * 7919) % 37; // covers 0, 1-5, 6-20 and >20
    const std::string id = "s" + std::to_string(i);
    csv += id + (i % 3 ? ",FDG," : ",PSMA,") + id + "_pet.nii.gz," + id + "_ct.nii.gz," + id +
           "_mask.nii.gz," + std::to_string(lesions) + "\n";
  }
  return csv;
}

} // namespace testing
