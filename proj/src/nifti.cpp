#include "petprep/nifti.hpp"

#include <zlib.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <memory>
#include <string>
#include <vector>

namespace petprep::nifti {

static_assert(std::endian::native == std::endian::little, "NIfTI I/O assumes a little-endian host");

namespace {

constexpr std::int32_t kHeaderSize = 348;
constexpr float kDefaultVoxOffset = 352.0f;
// Off-axis direction components below this fraction of the column norm count as zero.
constexpr double kObliqueTolerance = 1e-4;

struct GzCloser {
  void operator()(gzFile f) const noexcept { gzclose(f); }
};
using GzHandle = std::unique_ptr<std::remove_pointer_t<gzFile>, GzCloser>;

GzHandle open_for_read(const std::filesystem::path &path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    throw Error(ErrorCode::FileNotFound, path.string());
  }
  // gzread passes uncompressed files through unchanged.
  GzHandle f(gzopen(path.c_str(), "rb"));
  if (!f) {
    throw Error(ErrorCode::IoError, "cannot open " + path.string());
  }
  return f;
}

void read_exact(gzFile f, void *dst, std::size_t bytes, const std::filesystem::path &path,
                const char *what) {
  auto *out = static_cast<char *>(dst);
  while (bytes > 0) {
    const unsigned chunk = static_cast<unsigned>(std::min<std::size_t>(bytes, 1u << 30));
    const int got = gzread(f, out, chunk);
    if (got <= 0) {
      throw Error(ErrorCode::CorruptHeader, path.string() + ": truncated " + what);
    }
    out += got;
    bytes -= static_cast<std::size_t>(got);
  }
}

Header read_header_from(gzFile f, const std::filesystem::path &path) {
  Header h{};
  read_exact(f, &h, sizeof h, path, "header");
  if (h.sizeof_hdr != kHeaderSize) {
    if (__builtin_bswap32(static_cast<std::uint32_t>(h.sizeof_hdr)) == kHeaderSize) {
      throw Error(ErrorCode::CorruptHeader, path.string() + ": big-endian files are not supported");
    }
    throw Error(ErrorCode::CorruptHeader, path.string() + ": sizeof_hdr = " + std::to_string(h.sizeof_hdr));
  }
  if (std::memcmp(h.magic, "n+1\0", 4) != 0) {
    throw Error(ErrorCode::BadMagic, path.string() + ": expected single-file NIfTI-1 magic \"n+1\"");
  }
  return h;
}

std::size_t bytes_per_voxel(std::int16_t datatype) {
  switch (datatype) {
  case kUInt8: return 1;
  case kInt16: return 2;
  case kInt32: return 4;
  case kFloat32: return 4;
  case kFloat64: return 8;
  default: return 0;
  }
}

template <typename T> double load(const unsigned char *p) {
  T v;
  std::memcpy(&v, p, sizeof v);
  return static_cast<double>(v);
}

double decode(std::int16_t datatype, const unsigned char *p) {
  switch (datatype) {
  case kUInt8: return load<std::uint8_t>(p);
  case kInt16: return load<std::int16_t>(p);
  case kInt32: return load<std::int32_t>(p);
  case kFloat32: return load<float>(p);
  case kFloat64: return load<double>(p);
  default: return 0.0;
  }
}

using Mat3x4 = std::array<std::array<double, 4>, 3>;

/// Voxel-to-world affine, by the sform > qform > pixdim precedence.
Mat3x4 voxel_to_world(const Header &h) {
  Mat3x4 m{};
  if (h.sform_code > 0) {
    for (int c = 0; c < 4; ++c) {
      m[0][c] = h.srow_x[c];
      m[1][c] = h.srow_y[c];
      m[2][c] = h.srow_z[c];
    }
    return m;
  }
  const double dx = h.pixdim[1], dy = h.pixdim[2];
  double dz = h.pixdim[3];
  if (h.qform_code > 0) {
    const double b = h.quatern_b, c = h.quatern_c, d = h.quatern_d;
    const double a = std::sqrt(std::max(0.0, 1.0 - (b * b + c * c + d * d)));
    const double r[3][3] = {
        {a * a + b * b - c * c - d * d, 2 * (b * c - a * d), 2 * (b * d + a * c)},
        {2 * (b * c + a * d), a * a + c * c - b * b - d * d, 2 * (c * d - a * b)},
        {2 * (b * d - a * c), 2 * (c * d + a * b), a * a + d * d - c * c - b * b}};
    if (h.pixdim[0] < 0.0f) {
      dz = -dz;
    }
    const double scale[3] = {dx, dy, dz};
    for (int row = 0; row < 3; ++row) {
      for (int col = 0; col < 3; ++col) {
        m[row][col] = r[row][col] * scale[col];
      }
    }
    m[0][3] = h.qoffset_x;
    m[1][3] = h.qoffset_y;
    m[2][3] = h.qoffset_z;
    return m;
  }
  m[0][0] = dx;
  m[1][1] = dy;
  m[2][2] = dz;
  return m;
}

} // namespace

Header read_header(const std::filesystem::path &path) {
  auto f = open_for_read(path);
  return read_header_from(f.get(), path);
}

Volume read_volume(const std::filesystem::path &path) {
  auto f = open_for_read(path);
  const Header h = read_header_from(f.get(), path);
  const std::string where = path.string();

  if (h.dim[0] < 3 || h.dim[0] > 7) {
    throw Error(ErrorCode::CorruptHeader, where + ": dim[0] = " + std::to_string(h.dim[0]));
  }
  Index3 n{};
  for (int a = 0; a < 3; ++a) {
    if (h.dim[a + 1] < 1) {
      throw Error(ErrorCode::CorruptHeader, where + ": non-positive dim[" + std::to_string(a + 1) + "]");
    }
    n[a] = static_cast<std::size_t>(h.dim[a + 1]);
  }
  for (int a = 4; a <= h.dim[0]; ++a) {
    if (h.dim[a] > 1) {
      throw Error(ErrorCode::CorruptHeader, where + ": only 3D volumes are supported");
    }
  }
  const std::size_t bpv = bytes_per_voxel(h.datatype);
  if (bpv == 0) {
    throw Error(ErrorCode::UnsupportedDatatype, where + ": datatype " + std::to_string(h.datatype));
  }
  Vec3 spacing{};
  for (int a = 0; a < 3; ++a) {
    spacing[a] = h.pixdim[a + 1];
    if (!(std::isfinite(spacing[a]) && spacing[a] > 0.0)) {
      throw Error(ErrorCode::CorruptHeader, where + ": pixdim[" + std::to_string(a + 1) + "] not positive");
    }
  }
  if (!(h.vox_offset >= static_cast<float>(kHeaderSize))) {
    throw Error(ErrorCode::CorruptHeader, where + ": vox_offset " + std::to_string(h.vox_offset));
  }

  // Each voxel axis must map onto exactly one world axis.
  const Mat3x4 affine = voxel_to_world(h);
  std::array<int, 3> world_axis{};
  std::array<bool, 3> negative{};
  std::array<bool, 3> used{};
  for (int j = 0; j < 3; ++j) {
    double norm = 0.0;
    int best = 0;
    for (int r = 0; r < 3; ++r) {
      norm = std::max(norm, std::abs(affine[r][j]));
      if (std::abs(affine[r][j]) > std::abs(affine[best][j])) {
        best = r;
      }
    }
    for (int r = 0; r < 3; ++r) {
      if (r != best && std::abs(affine[r][j]) > kObliqueTolerance * norm) {
        throw Error(ErrorCode::UnsupportedOrientation, where + ": oblique voxel-to-world affine");
      }
    }
    if (norm == 0.0 || used[best]) {
      throw Error(ErrorCode::UnsupportedOrientation, where + ": degenerate voxel-to-world affine");
    }
    used[best] = true;
    world_axis[j] = best;
    negative[j] = affine[best][j] < 0.0;
  }

  const std::size_t skip = static_cast<std::size_t>(h.vox_offset) - kHeaderSize;
  if (skip > 0) {
    std::vector<char> ext(skip);
    read_exact(f.get(), ext.data(), skip, path, "extension block");
  }
  const std::size_t count = n[0] * n[1] * n[2];
  std::vector<unsigned char> raw(count * bpv);
  read_exact(f.get(), raw.data(), raw.size(), path, "voxel data");

  const double slope = (h.scl_slope == 0.0f || !std::isfinite(h.scl_slope)) ? 1.0 : h.scl_slope;
  const double inter = std::isfinite(h.scl_inter) ? h.scl_inter : 0.0;

  Geometry geom;
  for (int j = 0; j < 3; ++j) {
    const int w = world_axis[j];
    geom.shape[w] = n[j];
    geom.spacing[w] = spacing[j];
    geom.origin[w] = affine[w][3];
    if (negative[j]) {
      geom.origin[w] += affine[w][j] * static_cast<double>(n[j] - 1);
    }
  }
  validate_geometry(geom);

  std::vector<float> data(count);
  const bool identity_layout = world_axis == std::array<int, 3>{0, 1, 2} &&
                               !negative[0] && !negative[1] && !negative[2];
  std::size_t src = 0;
  for (std::size_t k = 0; k < n[2]; ++k) {
    for (std::size_t j = 0; j < n[1]; ++j) {
      for (std::size_t i = 0; i < n[0]; ++i, ++src) {
        std::size_t dst = src;
        if (!identity_layout) {
          const std::array<std::size_t, 3> in_idx{i, j, k};
          Index3 out_idx{};
          for (int a = 0; a < 3; ++a) {
            out_idx[world_axis[a]] = negative[a] ? n[a] - 1 - in_idx[a] : in_idx[a];
          }
          dst = geom.index(out_idx[0], out_idx[1], out_idx[2]);
        }
        const double v = decode(h.datatype, raw.data() + src * bpv) * slope + inter;
        data[dst] = static_cast<float>(v);
      }
    }
  }
  try {
    return Volume(std::move(geom), std::move(data));
  } catch (const Error &e) {
    throw Error(e.code(), where + ": " + e.what());
  }
}

LabelMask read_mask(const std::filesystem::path &path) {
  const Volume vol = read_volume(path);
  std::vector<std::uint8_t> bits(vol.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    const float v = vol[i];
    if (v != 0.0f && v != 1.0f) {
      throw Error(ErrorCode::NonBinaryMask,
                  path.string() + ": voxel " + std::to_string(i) + " = " + std::to_string(v));
    }
    bits[i] = v == 1.0f ? 1 : 0;
  }
  return LabelMask(vol.geometry(), std::move(bits), unchecked);
}

Header make_header(const Geometry &geom) {
  for (int a = 0; a < 3; ++a) {
    if (geom.shape[a] > 32767) {
      throw Error(ErrorCode::IoError, "extent " + std::to_string(geom.shape[a]) +
                                          " exceeds the NIfTI-1 limit of 32767");
    }
  }
  Header h{};
  h.sizeof_hdr = kHeaderSize;
  h.regular = 'r';
  h.dim[0] = 3;
  for (int a = 0; a < 3; ++a) {
    h.dim[a + 1] = static_cast<std::int16_t>(geom.shape[a]);
  }
  for (int a = 4; a < 8; ++a) {
    h.dim[a] = 1;
  }
  h.datatype = kFloat32;
  h.bitpix = 32;
  h.pixdim[0] = 1.0f; // qfac
  for (int a = 0; a < 3; ++a) {
    h.pixdim[a + 1] = static_cast<float>(geom.spacing[a]);
  }
  h.vox_offset = kDefaultVoxOffset;
  h.scl_slope = 1.0f;
  h.scl_inter = 0.0f;
  h.xyzt_units = 2; // millimetres
  h.qform_code = 1;
  h.sform_code = 1;
  h.qoffset_x = static_cast<float>(geom.origin[0]);
  h.qoffset_y = static_cast<float>(geom.origin[1]);
  h.qoffset_z = static_cast<float>(geom.origin[2]);
  float *rows[3] = {h.srow_x, h.srow_y, h.srow_z};
  for (int r = 0; r < 3; ++r) {
    rows[r][r] = static_cast<float>(geom.spacing[r]);
    rows[r][3] = static_cast<float>(geom.origin[r]);
  }
  std::memcpy(h.magic, "n+1\0", 4);
  return h;
}

namespace {

void write_payload(const Header &h, std::span<const float> data,
                   const std::filesystem::path &path) {
  const char extension[4] = {0, 0, 0, 0};
  const bool gz = path.extension() == ".gz";
  if (gz) {
    GzHandle f(gzopen(path.c_str(), "wb"));
    if (!f) {
      throw Error(ErrorCode::IoError, "cannot create " + path.string());
    }
    auto put = [&](const void *p, std::size_t n) {
      const auto *bytes = static_cast<const char *>(p);
      while (n > 0) {
        const unsigned chunk = static_cast<unsigned>(std::min<std::size_t>(n, 1u << 30));
        if (gzwrite(f.get(), bytes, chunk) != static_cast<int>(chunk)) {
          throw Error(ErrorCode::IoError, "write failed: " + path.string());
        }
        bytes += chunk;
        n -= chunk;
      }
    };
    put(&h, sizeof h);
    put(extension, sizeof extension);
    put(data.data(), data.size_bytes());
    if (gzclose(f.release()) != Z_OK) {
      throw Error(ErrorCode::IoError, "close failed: " + path.string());
    }
    return;
  }
  std::unique_ptr<std::FILE, int (*)(std::FILE *)> f(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!f) {
    throw Error(ErrorCode::IoError, "cannot create " + path.string());
  }
  const bool ok = std::fwrite(&h, sizeof h, 1, f.get()) == 1 &&
                  std::fwrite(extension, sizeof extension, 1, f.get()) == 1 &&
                  (data.empty() || std::fwrite(data.data(), data.size_bytes(), 1, f.get()) == 1);
  if (!ok || std::fclose(f.release()) != 0) {
    throw Error(ErrorCode::IoError, "write failed: " + path.string());
  }
}

} // namespace

void write_volume(const Volume &vol, const std::filesystem::path &path) {
  write_payload(make_header(vol.geometry()), vol.data(), path);
}

void write_mask(const LabelMask &mask, const std::filesystem::path &path) {
  std::vector<float> as_float(mask.data().begin(), mask.data().end());
  write_payload(make_header(mask.geometry()), as_float, path);
}

} // namespace petprep::nifti
