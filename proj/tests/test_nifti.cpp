#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>

#include <zlib.h>

#include "petprep/error.hpp"
#include "petprep/nifti.hpp"
#include "support.hpp"

using namespace petprep;
namespace nii = petprep::nifti;

namespace {

ErrorCode code_of(auto &&fn) {
  try {
    fn();
  } catch (const Error &e) {
    return e.code();
  }
  FAIL("expected petprep::Error");
  return ErrorCode::InvalidArgument;
}

template <typename T> void append(std::string &buf, const T &value) {
  buf.append(reinterpret_cast<const char *>(&value), sizeof(T));
}

/// Header bytes + 4-byte extension flag + raw payload.
std::string raw_file(const nii::Header &h, const std::string &payload) {
  std::string buf;
  append(buf, h);
  buf.append(4, '\0');
  buf += payload;
  return buf;
}

nii::Header int16_header(const Index3 &shape) {
  nii::Header h = nii::make_header({shape, {1, 1, 1}, {0, 0, 0}});
  h.datatype = nii::kInt16;
  h.bitpix = 16;
  return h;
}

} // namespace

TEST_CASE("float32 volumes round-trip bit-exactly") {
  testing::TempDir dir("nifti");
  std::mt19937_64 gen(31);
  Volume v = testing::random_volume(gen, {7, 5, 3}, {1.25, 2.5, 3.0}, -1000.0f, 3000.0f);
  v = Volume({v.shape(), v.spacing(), {-12.5, 40.0, 3.25}}, std::vector<float>(v.data().begin(), v.data().end()));
  for (const char *name : {"v.nii", "v.nii.gz"}) {
    nii::write_volume(v, dir / name);
    const Volume back = nii::read_volume(dir / name);
    CHECK(back.geometry() == v.geometry());
    CHECK(std::memcmp(back.data().data(), v.data().data(), v.size() * sizeof(float)) == 0);
  }
  CHECK(testing::slurp(dir / "v.nii.gz").substr(0, 2) == std::string("\x1f\x8b"));
}

TEST_CASE("masks round-trip bit-exactly") {
  testing::TempDir dir("nifti");
  std::mt19937_64 gen(32);
  const LabelMask m = testing::random_mask(gen, {6, 6, 4}, {2, 2, 2}, 0.4);
  nii::write_mask(m, dir / "m.nii.gz");
  CHECK(nii::read_mask(dir / "m.nii.gz") == m);

  nii::write_volume(make_volume(std::vector<float>{0, 0.5f}, {2, 1, 1}, {1, 1, 1}), dir / "bad.nii");
  CHECK(code_of([&] { nii::read_mask(dir / "bad.nii"); }) == ErrorCode::NonBinaryMask);
}

TEST_CASE("written header fields") {
  const nii::Header h = nii::make_header({{4, 5, 6}, {1, 2, 3}, {0, 0, 0}});
  const std::int16_t dims[8] = {3, 4, 5, 6, 1, 1, 1, 1};
  CHECK(std::memcmp(h.dim, dims, sizeof dims) == 0);
  CHECK(h.sizeof_hdr == 348);
  CHECK(h.datatype == nii::kFloat32);
  CHECK(h.bitpix == 32);
  CHECK(h.vox_offset == 352.0f);
  CHECK(std::memcmp(h.magic, "n+1\0", 4) == 0);
  CHECK(h.pixdim[2] == 2.0f);
  CHECK(h.srow_z[2] == 3.0f);
  CHECK(code_of([] { nii::make_header({{40000, 1, 1}, {1, 1, 1}, {0, 0, 0}}); }) ==
        ErrorCode::IoError);
}

TEST_CASE("scl_slope and scl_inter decode int16 data") {
  testing::TempDir dir("nifti");
  nii::Header h = int16_header({2, 1, 1});
  h.scl_slope = 2.0f;
  h.scl_inter = 1.0f;
  std::string payload;
  append(payload, std::int16_t{3});
  append(payload, std::int16_t{-4});
  testing::spit(dir / "i16.nii", raw_file(h, payload));
  const Volume v = nii::read_volume(dir / "i16.nii");
  CHECK(v[0] == 7.0f);
  CHECK(v[1] == -7.0f);

  h.scl_slope = 0.0f; // treated as 1
  h.scl_inter = 0.0f;
  testing::spit(dir / "i16b.nii", raw_file(h, payload));
  CHECK(nii::read_volume(dir / "i16b.nii")[0] == 3.0f);
}

TEST_CASE("other datatypes decode") {
  testing::TempDir dir("nifti");
  nii::Header h = int16_header({3, 1, 1});
  h.datatype = nii::kUInt8;
  h.bitpix = 8;
  testing::spit(dir / "u8.nii", raw_file(h, std::string("\x00\x01\xff", 3)));
  const Volume u8 = nii::read_volume(dir / "u8.nii");
  CHECK(u8[2] == 255.0f);

  h.datatype = nii::kFloat64;
  h.bitpix = 64;
  std::string payload;
  append(payload, 0.5);
  append(payload, -2.0);
  append(payload, 1e3);
  testing::spit(dir / "f64.nii", raw_file(h, payload));
  const Volume f64 = nii::read_volume(dir / "f64.nii");
  CHECK(f64[0] == 0.5f);
  CHECK(f64[2] == 1000.0f);

  h.datatype = 128; // RGB24
  h.bitpix = 24;
  testing::spit(dir / "rgb.nii", raw_file(h, std::string(9, '\0')));
  CHECK(code_of([&] { nii::read_volume(dir / "rgb.nii"); }) == ErrorCode::UnsupportedDatatype);
}

TEST_CASE("malformed files are rejected") {
  testing::TempDir dir("nifti");
  CHECK(code_of([&] { nii::read_volume(dir / "missing.nii.gz"); }) == ErrorCode::FileNotFound);

  testing::spit(dir / "short.nii", std::string(100, '\0'));
  CHECK(code_of([&] { nii::read_volume(dir / "short.nii"); }) == ErrorCode::CorruptHeader);

  nii::Header h = int16_header({1, 1, 1});
  std::memcpy(h.magic, "ni1\0", 4);
  std::string payload(2, '\0');
  testing::spit(dir / "magic.nii", raw_file(h, payload));
  CHECK(code_of([&] { nii::read_volume(dir / "magic.nii"); }) == ErrorCode::BadMagic);

  h = int16_header({4, 4, 4});
  testing::spit(dir / "trunc.nii", raw_file(h, std::string(10, '\0')));
  CHECK(code_of([&] { nii::read_volume(dir / "trunc.nii"); }) == ErrorCode::CorruptHeader);

  h = int16_header({1, 1, 1});
  h.sizeof_hdr = 540; // NIfTI-2
  testing::spit(dir / "n2.nii", raw_file(h, payload));
  CHECK(code_of([&] { nii::read_volume(dir / "n2.nii"); }) == ErrorCode::CorruptHeader);
}

TEST_CASE("sform orientation is folded into the grid") {
  testing::TempDir dir("nifti");
  // x axis stored reversed: world x = 10 - 2*i.
  nii::Header h = nii::make_header({{3, 1, 1}, {2, 1, 1}, {0, 0, 0}});
  h.srow_x[0] = -2.0f;
  h.srow_x[3] = 10.0f;
  std::string payload;
  for (float f : {1.0f, 2.0f, 3.0f}) {
    append(payload, f);
  }
  testing::spit(dir / "flip.nii", raw_file(h, payload));
  const Volume v = nii::read_volume(dir / "flip.nii");
  CHECK(v.spacing()[0] == 2.0);
  CHECK(v.origin()[0] == 6.0);
  CHECK(v[0] == 3.0f);
  CHECK(v[2] == 1.0f);

  h.srow_x[1] = 0.5f; // shear: oblique
  testing::spit(dir / "oblique.nii", raw_file(h, payload));
  CHECK(code_of([&] { nii::read_volume(dir / "oblique.nii"); }) ==
        ErrorCode::UnsupportedOrientation);
}

TEST_CASE("gzip reader handles concatenated payload") {
  testing::TempDir dir("nifti");
  const Volume v = make_volume(std::vector<float>{1, 2, 3, 4}, {2, 2, 1}, {1, 1, 1});
  nii::write_volume(v, dir / "a.nii");
  const std::string raw = testing::slurp(dir / "a.nii");
  gzFile gz = gzopen((dir / "b.nii.gz").c_str(), "wb");
  REQUIRE(gz != nullptr);
  gzwrite(gz, raw.data(), static_cast<unsigned>(raw.size()));
  gzclose(gz);
  CHECK(nii::read_volume(dir / "b.nii.gz") == v);
  CHECK(nii::read_header(dir / "b.nii.gz").dim[1] == 2);
}
