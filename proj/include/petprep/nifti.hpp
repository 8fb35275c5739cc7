#pragma once

#include <array>
#include <cstdint>
#include <filesystem>

#include "petprep/volume.hpp"

namespace petprep::nifti {

/// On-disk NIfTI-1 header, 348 bytes, little-endian.
#pragma pack(push, 1)
struct Header {
  std::int32_t sizeof_hdr;
  char data_type[10];
  char db_name[18];
  std::int32_t extents;
  std::int16_t session_error;
  char regular;
  char dim_info;
  std::int16_t dim[8];
  float intent_p1;
  float intent_p2;
  float intent_p3;
  std::int16_t intent_code;
  std::int16_t datatype;
  std::int16_t bitpix;
  std::int16_t slice_start;
  float pixdim[8];
  float vox_offset;
  float scl_slope;
  float scl_inter;
  std::int16_t slice_end;
  char slice_code;
  char xyzt_units;
  float cal_max;
  float cal_min;
  float slice_duration;
  float toffset;
  std::int32_t glmax;
  std::int32_t glmin;
  char descrip[80];
  char aux_file[24];
  std::int16_t qform_code;
  std::int16_t sform_code;
  float quatern_b;
  float quatern_c;
  float quatern_d;
  float qoffset_x;
  float qoffset_y;
  float qoffset_z;
  float srow_x[4];
  float srow_y[4];
  float srow_z[4];
  char intent_name[16];
  char magic[4];
};
#pragma pack(pop)
static_assert(sizeof(Header) == 348);

enum Datatype : std::int16_t {
  kUInt8 = 2,
  kInt16 = 4,
  kInt32 = 8,
  kFloat32 = 16,
  kFloat64 = 64,
};

/**
 * @brief Read a .nii or .nii.gz file as 32-bit intensities.
 *
 * Voxel values are decoded from uint8/int16/int32/float32/float64 with
 * scl_slope/scl_inter applied (slope 0 means 1). Geometry comes from the
 * sform when set, else the qform, else pixdim alone. Axis permutations and
 * flips are folded into the returned grid so that spacing stays positive
 * and world positions are preserved; oblique orientations are rejected.
 */
Volume read_volume(const std::filesystem::path &path);

/// As read_volume, then requires every voxel to be exactly 0 or 1.
LabelMask read_mask(const std::filesystem::path &path);

/// Reads only the header (after validation of size and magic).
Header read_header(const std::filesystem::path &path);

/// float32 NIfTI-1 with an axis-aligned sform/qform; gzip when the name ends in .gz.
void write_volume(const Volume &vol, const std::filesystem::path &path);
void write_mask(const LabelMask &mask, const std::filesystem::path &path);

/// Header that write_volume would emit for this geometry.
Header make_header(const Geometry &geom);

} // namespace petprep::nifti
