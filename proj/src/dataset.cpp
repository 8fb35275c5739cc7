#include "petprep/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "petprep/error.hpp"
#include "petprep/rng.hpp"

namespace petprep {

namespace {

constexpr std::array<std::string_view, 6> kColumns = {"case_id",   "tracer",    "pet_path",
                                                      "ct_path",   "mask_path", "lesion_count"};
// Absorbs representation error so that, e.g., 5 * 0.2 floors to 1.
constexpr double kQuotaEpsilon = 1e-9;

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                            : comma - start)));
    if (comma == std::string_view::npos) {
      break;
    }
    start = comma + 1;
  }
  return out;
}

std::filesystem::path resolve(std::string_view field, const std::filesystem::path &base) {
  std::filesystem::path p{std::string(field)};
  if (p.is_relative() && !base.empty()) {
    p = base / p;
  }
  return p.lexically_normal();
}

} // namespace

std::string_view to_string(Tracer tracer) noexcept {
  return tracer == Tracer::FDG ? "FDG" : "PSMA";
}

DatasetManifest parse_manifest(std::string_view text, const std::filesystem::path &base_dir) {
  DatasetManifest m;
  std::unordered_set<std::string> seen;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const std::string_view line =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (trim(line).empty()) {
      continue;
    }
    const auto fields = split_fields(line);
    const std::string where = "line " + std::to_string(line_no);
    if (!header_seen) {
      if (!std::equal(fields.begin(), fields.end(), kColumns.begin(), kColumns.end())) {
        throw Error(ErrorCode::ParseError,
                    where + ": header must be case_id,tracer,pet_path,ct_path,mask_path,lesion_count");
      }
      header_seen = true;
      continue;
    }
    if (fields.size() != kColumns.size()) {
      throw Error(ErrorCode::ParseError, where + ": expected 6 fields, found " +
                                             std::to_string(fields.size()));
    }
    ManifestEntry e;
    e.case_id = std::string(fields[0]);
    if (e.case_id.empty()) {
      throw Error(ErrorCode::ParseError, where + ": empty case_id");
    }
    if (fields[1] == "FDG") {
      e.tracer = Tracer::FDG;
    } else if (fields[1] == "PSMA") {
      e.tracer = Tracer::PSMA;
    } else {
      throw Error(ErrorCode::UnknownTracer, where + ": tracer \"" + std::string(fields[1]) + "\"");
    }
    for (int f = 2; f <= 4; ++f) {
      if (fields[f].empty()) {
        throw Error(ErrorCode::ParseError, where + ": empty " + std::string(kColumns[f]));
      }
    }
    e.pet_path = resolve(fields[2], base_dir);
    e.ct_path = resolve(fields[3], base_dir);
    e.mask_path = resolve(fields[4], base_dir);
    const auto count_field = fields[5];
    const auto [ptr, ec] =
        std::from_chars(count_field.data(), count_field.data() + count_field.size(), e.lesion_count);
    if (ec != std::errc{} || ptr != count_field.data() + count_field.size() || count_field.empty()) {
      throw Error(ErrorCode::ParseError,
                  where + ": lesion_count \"" + std::string(count_field) + "\" is not a non-negative integer");
    }
    if (!seen.insert(e.case_id).second) {
      throw Error(ErrorCode::DuplicateCaseId, where + ": " + e.case_id);
    }
    m.entries.push_back(std::move(e));
  }
  if (!header_seen) {
    throw Error(ErrorCode::ParseError, "manifest has no header row");
  }
  return m;
}

DatasetManifest load_manifest(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::FileNotFound, path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_manifest(ss.str(), path.parent_path());
  } catch (const Error &e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

std::string format_manifest(const DatasetManifest &manifest) {
  std::string out = "case_id,tracer,pet_path,ct_path,mask_path,lesion_count\n";
  for (const auto &e : manifest.entries) {
    out += e.case_id;
    out += ',';
    out += to_string(e.tracer);
    out += ',';
    out += e.pet_path.generic_string();
    out += ',';
    out += e.ct_path.generic_string();
    out += ',';
    out += e.mask_path.generic_string();
    out += ',';
    out += std::to_string(e.lesion_count);
    out += '\n';
  }
  return out;
}

void save_manifest(const DatasetManifest &manifest, const std::filesystem::path &path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << format_manifest(manifest);
  if (!out) {
    throw Error(ErrorCode::IoError, "cannot write " + path.string());
  }
}

std::size_t lesion_bin(std::size_t lesion_count) noexcept {
  if (lesion_count == 0) {
    return 0;
  }
  if (lesion_count <= 5) {
    return 1;
  }
  if (lesion_count <= 20) {
    return 2;
  }
  return 3;
}

std::string_view lesion_bin_label(std::size_t bin) noexcept {
  static constexpr std::array<std::string_view, kLesionBinCount> labels = {"0", "1-5", "6-20", ">20"};
  return bin < labels.size() ? labels[bin] : "?";
}

SplitResult stratified_split(const DatasetManifest &manifest, double test_fraction,
                             std::uint64_t seed) {
  const std::size_t n = manifest.entries.size();
  if (n < 2) {
    throw Error(ErrorCode::TooFewCases, "need at least 2 cases, have " + std::to_string(n));
  }
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidFraction, "test fraction must lie in (0, 1), got " +
                                                std::to_string(test_fraction));
  }

  std::array<std::vector<std::size_t>, kLesionBinCount> members;
  for (std::size_t i = 0; i < n; ++i) {
    members[lesion_bin(manifest.entries[i].lesion_count)].push_back(i);
  }

  std::array<std::size_t, kLesionBinCount> quota{};
  std::array<double, kLesionBinCount> remainder{};
  std::size_t assigned = 0;
  for (std::size_t b = 0; b < kLesionBinCount; ++b) {
    const double exact = static_cast<double>(members[b].size()) * test_fraction;
    quota[b] = static_cast<std::size_t>(std::floor(exact + kQuotaEpsilon));
    remainder[b] = std::max(0.0, exact - static_cast<double>(quota[b]));
    assigned += quota[b];
  }
  const auto target = static_cast<std::size_t>(std::llround(static_cast<double>(n) * test_fraction));
  std::array<std::size_t, kLesionBinCount> order{};
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t k = 0; assigned < target && k < kLesionBinCount; ++k) {
    const std::size_t b = order[k];
    if (quota[b] < members[b].size()) {
      ++quota[b];
      ++assigned;
    }
  }

  std::vector<bool> is_test(n, false);
  SplitResult result;
  result.seed = seed;
  for (std::size_t b = 0; b < kLesionBinCount; ++b) {
    auto shuffled = members[b];
    RngStream rng(mix64(seed ^ mix64(b + 1)));
    for (std::size_t i = shuffled.size(); i > 1; --i) {
      std::swap(shuffled[i - 1], shuffled[rng.below(i)]);
    }
    for (std::size_t k = 0; k < quota[b]; ++k) {
      is_test[shuffled[k]] = true;
    }
    result.bins[b].label = std::string(lesion_bin_label(b));
    result.bins[b].test = quota[b];
    result.bins[b].train = members[b].size() - quota[b];
  }
  for (std::size_t i = 0; i < n; ++i) {
    (is_test[i] ? result.test : result.train).push_back(manifest.entries[i].case_id);
  }
  return result;
}

DatasetManifest select_cases(const DatasetManifest &manifest, const std::vector<std::string> &ids) {
  const std::unordered_set<std::string> wanted(ids.begin(), ids.end());
  DatasetManifest out;
  for (const auto &e : manifest.entries) {
    if (wanted.contains(e.case_id)) {
      out.entries.push_back(e);
    }
  }
  return out;
}

} // namespace petprep
