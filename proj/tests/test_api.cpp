#include <doctest.h>

#include <cstring>
#include <sstream>

#include <json.hpp>

#include "petprep/api.hpp"
#include "petprep/cli.hpp"
#include "petprep/error.hpp"
#include "petprep/nifti.hpp"
#include "support.hpp"

using namespace petprep;
namespace fs = std::filesystem;

namespace {

api::ArrayView view_of(const Volume &v) { return {v.data(), v.shape(), v.spacing(), v.origin()}; }

std::vector<float> as_floats(const LabelMask &m) {
  return {m.data().begin(), m.data().end()};
}

bool bit_equal(const Volume &a, const Volume &b) {
  return a.geometry() == b.geometry() &&
         std::memcmp(a.data().data(), b.data().data(), a.size() * sizeof(float)) == 0;
}

int run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  return cli::run(args, out, err);
}

/// Every transform firing often, crop 8, fixed master seed.
fs::path busy_config(const testing::TempDir &dir, std::uint64_t seed) {
  auto j = nlohmann::json::parse(
      testing::slurp(fs::path(PETPREP_CONFIG_DIR) / "variant_sharpen_clip280.json"));
  j["master_seed"] = seed;
  for (auto &t : j["transforms"]) {
    if (t["kind"] == "rand_crop") {
      t["params"]["size"] = {8, 8, 8};
    } else {
      t["probability"] = 0.7;
    }
  }
  const auto p = dir / "busy.json";
  testing::spit(p, j.dump(2));
  return p;
}

} // namespace

TEST_CASE("api: passthrough returns the inputs") {
  testing::TempDir dir("api");
  std::mt19937_64 gen(3);
  const auto pet = testing::random_volume(gen, {6, 5, 4}, {2, 2, 2}, 0.0f, 10.0f);
  const auto ct = testing::random_volume(gen, {6, 5, 4}, {2, 2, 2}, -500.0f, 500.0f);
  const auto mask = testing::random_mask(gen, {6, 5, 4}, {2, 2, 2}, 0.2);
  testing::spit(dir / "pass.json",
                R"({"target_spacing": [2, 2, 2], "normalization": {"pet": {"method": "none"},
                    "ct": {"method": "none"}}, "transforms": []})");
  const auto m = as_floats(mask);
  const auto out = api::apply_pipeline(view_of(pet), view_of(ct), {m, mask.shape(), mask.spacing()},
                                       dir / "pass.json", "p", 0);
  CHECK(bit_equal(out.pet, pet));
  CHECK(bit_equal(out.ct, ct));
  CHECK(out.mask == mask);
  CHECK(nlohmann::json::parse(out.provenance_json)["case_id"] == "p");
}

TEST_CASE("api: apply_pipeline matches CLI augment bit for bit") {
  testing::TempDir dir("api");
  const auto manifest = testing::write_synthetic_cohort(dir.path(), 10, {10, 10, 10}, 11);
  const auto cfg = busy_config(dir, 5);
  REQUIRE(run_cli({"augment", "--config", cfg.string(), "--manifest", manifest.string(),
                   "--replicates", "2", "--seed", "5", "--out-dir", (dir / "aug").string()}) == 0);

  for (int c = 0; c < 10; ++c) {
    const std::string id = "case" + std::to_string(c);
    const auto pet = api::read_nifti(dir / (id + "_pet.nii.gz"));
    const auto ct = api::read_nifti(dir / (id + "_ct.nii.gz"));
    const auto mask = api::read_nifti_mask(dir / (id + "_mask.nii.gz"));
    const auto m = as_floats(mask);
    for (std::uint64_t r = 0; r < 2; ++r) {
      const auto out = api::apply_pipeline(view_of(pet), view_of(ct),
                                           {m, mask.shape(), mask.spacing(), mask.origin()}, cfg, id, r);
      const auto twice = api::apply_pipeline(view_of(pet), view_of(ct),
                                             {m, mask.shape(), mask.spacing(), mask.origin()}, cfg, id, r);
      CHECK(bit_equal(out.pet, twice.pet));
      const std::string stem = (dir / "aug" / (id + "_r" + std::to_string(r))).string();
      CHECK(bit_equal(out.pet, api::read_nifti(stem + "_pet.nii.gz")));
      CHECK(bit_equal(out.ct, api::read_nifti(stem + "_ct.nii.gz")));
      CHECK(out.mask == api::read_nifti_mask(stem + "_mask.nii.gz"));
      CHECK(out.provenance_json == testing::slurp(stem + ".json"));
    }
  }
}

TEST_CASE("api: evaluate matches CLI evaluate exactly") {
  testing::TempDir dir("api");
  const auto manifest = testing::write_synthetic_cohort(dir.path(), 10, {8, 8, 8}, 21);
  fs::create_directories(dir / "pred");
  std::mt19937_64 gen(99);
  for (int c = 0; c < 10; ++c) {
    const auto p = testing::random_mask(gen, {8, 8, 8}, {2, 2, 2}, 0.08);
    nifti::write_mask(p, dir / "pred" / ("case" + std::to_string(c) + ".nii.gz"));
  }
  REQUIRE(run_cli({"evaluate", "--manifest", manifest.string(), "--pred-dir",
                   (dir / "pred").string(), "--connectivity", "26", "--out-json",
                   (dir / "r.json").string(), "--out-csv", (dir / "r.csv").string()}) == 0);
  const auto report = nlohmann::json::parse(testing::slurp(dir / "r.json"));
  for (const auto &row : report["cases"]) {
    const std::string id = row["case_id"];
    const auto pred = as_floats(api::read_nifti_mask(dir / "pred" / (id + ".nii.gz")));
    const auto gt = as_floats(api::read_nifti_mask(dir / (id + "_mask.nii.gz")));
    const auto m = api::evaluate(pred, gt, {8, 8, 8}, {2, 2, 2}, 26);
    REQUIRE(m.dice.has_value());
    CHECK(*m.dice == row["dice"].get<double>());
    CHECK(m.fp_vol_cm3 == row["fp_vol_cm3"].get<double>());
    CHECK(*m.fn_vol_cm3 == row["fn_vol_cm3"].get<double>());
  }
}

TEST_CASE("api: evaluate edge cases") {
  std::vector<float> a(27, 0.0f);
  a[13] = 1.0f;
  CHECK(*api::evaluate(a, a, {3, 3, 3}, {1, 1, 1}, 6).dice == 1.0);

  auto b = a;
  b[0] = 0.5f;
  try {
    api::evaluate(b, a, {3, 3, 3}, {1, 1, 1}, 6);
    FAIL("expected NonBinaryMask");
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::NonBinaryMask);
  }
  CHECK_THROWS_AS(api::evaluate(a, a, {3, 3, 2}, {1, 1, 1}, 6), Error);
  CHECK_THROWS_AS(api::evaluate(a, a, {3, 3, 3}, {1, 1, 1}, 8), Error);
}

TEST_CASE("api: read_nifti errors carry native codes") {
  testing::TempDir dir("api");
  try {
    api::read_nifti(dir / "missing.nii");
    FAIL("expected FileNotFound");
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::FileNotFound);
  }
}
