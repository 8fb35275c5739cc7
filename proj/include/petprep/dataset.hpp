#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace petprep {

enum class Tracer { FDG, PSMA };

std::string_view to_string(Tracer tracer) noexcept;

struct ManifestEntry {
  std::string case_id;
  Tracer tracer = Tracer::FDG;
  std::filesystem::path pet_path;
  std::filesystem::path ct_path;
  std::filesystem::path mask_path;
  std::size_t lesion_count = 0;

  bool operator==(const ManifestEntry &) const = default;
};

/// Case inventory; row order is the order of the source file.
struct DatasetManifest {
  std::vector<ManifestEntry> entries;
};

/**
 * @brief Parse manifest CSV text.
 *
 * Header must be exactly case_id,tracer,pet_path,ct_path,mask_path,lesion_count.
 * Fields are trimmed of surrounding whitespace. Relative paths are resolved
 * against @p base_dir.
 */
DatasetManifest parse_manifest(std::string_view text, const std::filesystem::path &base_dir = {});

/// Reads a manifest file; relative paths resolve against the file's directory.
DatasetManifest load_manifest(const std::filesystem::path &path);

/// CSV text with the canonical header, rows in manifest order.
std::string format_manifest(const DatasetManifest &manifest);
void save_manifest(const DatasetManifest &manifest, const std::filesystem::path &path);

/// Lesion-count strata: 0, 1-5, 6-20, more than 20.
inline constexpr std::size_t kLesionBinCount = 4;
std::size_t lesion_bin(std::size_t lesion_count) noexcept;
std::string_view lesion_bin_label(std::size_t bin) noexcept;

struct BinSummary {
  std::string label;
  std::size_t train = 0;
  std::size_t test = 0;
};

struct SplitResult {
  std::vector<std::string> train; ///< manifest order
  std::vector<std::string> test;  ///< manifest order
  std::uint64_t seed = 0;
  std::array<BinSummary, kLesionBinCount> bins;
};

/**
 * @brief Train/test split stratified by lesion count.
 *
 * Every bin sends floor(size * fraction) cases to test; the remaining
 * round(N * fraction) - sum(floor) test slots go to the bins with the
 * largest fractional remainders (ties to the lower bin). Which cases go
 * to test is decided by a seeded Fisher-Yates shuffle per bin.
 */
SplitResult stratified_split(const DatasetManifest &manifest, double test_fraction,
                             std::uint64_t seed);

/// Rows of @p manifest whose case ids appear in @p ids, in manifest order.
DatasetManifest select_cases(const DatasetManifest &manifest, const std::vector<std::string> &ids);

} // namespace petprep
