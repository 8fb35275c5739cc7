#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "petprep/error.hpp"
#include "petprep/metrics.hpp"
#include "support.hpp"

using namespace petprep;

namespace {

LabelMask mask_with(const Index3 &shape, const Vec3 &spacing, std::initializer_list<Index3> on) {
  std::vector<std::uint8_t> v(shape[0] * shape[1] * shape[2], 0);
  for (const auto &p : on) {
    v[p[0] + shape[0] * (p[1] + shape[1] * p[2])] = 1;
  }
  return make_mask(std::move(v), shape, spacing);
}

ErrorCode code_of(auto &&fn) {
  try {
    fn();
  } catch (const Error &e) {
    return e.code();
  }
  FAIL("expected petprep::Error");
  return ErrorCode::InvalidArgument;
}

/// 2x2x2 block with its low corner at `at`.
void stamp_cube(std::vector<std::uint8_t> &v, const Index3 &shape, const Index3 &at) {
  for (std::size_t z = 0; z < 2; ++z) {
    for (std::size_t y = 0; y < 2; ++y) {
      for (std::size_t x = 0; x < 2; ++x) {
        v[(at[0] + x) + shape[0] * ((at[1] + y) + shape[1] * (at[2] + z))] = 1;
      }
    }
  }
}

} // namespace

TEST_CASE("connected components: adjacency definitions") {
  const Index3 s{3, 3, 3};
  const LabelMask single = mask_with(s, {1, 1, 1}, {{1, 1, 1}});
  const auto one = connected_components(single, Connectivity::six);
  CHECK(one.count == 1);
  CHECK(one.component_sizes == std::vector<std::size_t>{1});

  const LabelMask corner = mask_with(s, {1, 1, 1}, {{0, 0, 0}, {1, 1, 1}});
  CHECK(connected_components(corner, Connectivity::twenty_six).count == 1);
  CHECK(connected_components(corner, Connectivity::eighteen).count == 2);
  CHECK(connected_components(corner, Connectivity::six).count == 2);

  const LabelMask edge = mask_with(s, {1, 1, 1}, {{0, 0, 0}, {1, 1, 0}});
  CHECK(connected_components(edge, Connectivity::twenty_six).count == 1);
  CHECK(connected_components(edge, Connectivity::eighteen).count == 1);
  CHECK(connected_components(edge, Connectivity::six).count == 2);

  const LabelMask face = mask_with(s, {1, 1, 1}, {{0, 0, 0}, {0, 0, 1}});
  CHECK(connected_components(face, Connectivity::six).count == 1);
}

TEST_CASE("connected components: labels follow first raster visit") {
  const LabelMask m = mask_with({4, 1, 1}, {1, 1, 1}, {{3, 0, 0}, {0, 0, 0}, {1, 0, 0}});
  const auto cc = connected_components(m, Connectivity::six);
  CHECK(cc.count == 2);
  CHECK(cc.labels == std::vector<std::uint32_t>{1, 1, 0, 2});
  CHECK(cc.component_sizes == std::vector<std::size_t>{2, 1});
}

TEST_CASE("connected components: U-shape merges provisional labels") {
  // Two arms joined only at the bottom row force a union in pass one.
  const LabelMask u = mask_with({3, 3, 1}, {1, 1, 1},
                                {{0, 0, 0}, {2, 0, 0}, {0, 1, 0}, {2, 1, 0}, {0, 2, 0}, {1, 2, 0},
                                 {2, 2, 0}});
  const auto cc = connected_components(u, Connectivity::six);
  CHECK(cc.count == 1);
  CHECK(cc.component_sizes[0] == 7);
}

TEST_CASE("connected components agree with the flood-fill oracle") {
  std::mt19937_64 gen(2025);
  for (int seed = 0; seed < 200; ++seed) {
    const LabelMask m = testing::random_mask(gen, {6, 6, 6}, {1, 1, 1}, 0.3);
    for (int c : {6, 18, 26}) {
      int expected = 0;
      const auto comp = oracle::flood_fill(m, c, expected);
      const auto cc = connected_components(m, connectivity_from_int(c));
      REQUIRE(cc.count == static_cast<std::size_t>(expected));
      std::size_t total = 0;
      for (auto s : cc.component_sizes) {
        total += s;
      }
      std::size_t fg = 0;
      for (auto v : m.data()) {
        fg += v;
      }
      CHECK(total == fg);
      // Same partition: voxels share an oracle component iff they share a label.
      std::vector<int> map(cc.count + 1, -1);
      for (std::size_t i = 0; i < m.size(); ++i) {
        CHECK((cc.labels[i] == 0) == (comp[i] == -1));
        if (cc.labels[i] != 0) {
          int &slot = map[cc.labels[i]];
          if (slot == -1) {
            slot = comp[i];
          }
          CHECK(slot == comp[i]);
        }
      }
    }
  }
}

TEST_CASE("dice") {
  const Index3 s{4, 1, 1};
  const LabelMask g = mask_with(s, {1, 1, 1}, {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}});
  const LabelMask p = mask_with(s, {1, 1, 1}, {{1, 0, 0}, {2, 0, 0}, {3, 0, 0}});
  CHECK(dice(g, g) == 1.0);
  CHECK(dice(mask_with(s, {1, 1, 1}, {}), g) == 0.0);
  CHECK(dice(p, g) == doctest::Approx(2.0 * 2.0 / 6.0).epsilon(1e-15));
  CHECK(code_of([&] { dice(g, mask_with(s, {1, 1, 1}, {})); }) == ErrorCode::EmptyGroundTruth);
  CHECK(code_of([&] { dice(g, mask_with(s, {1, 1, 2}, {{0, 0, 0}})); }) ==
        ErrorCode::GeometryMismatch);
}

TEST_CASE("lesion volumes") {
  const Index3 shape{8, 8, 8};
  const Vec3 sp{2, 2, 2};
  std::vector<std::uint8_t> gt(512, 0), pred(512, 0);
  stamp_cube(gt, shape, {0, 0, 0});
  stamp_cube(pred, shape, {5, 5, 5});
  const LabelMask g = make_mask(gt, shape, sp);
  const LabelMask p = make_mask(pred, shape, sp);
  const auto v = lesion_volumes(p, g, Connectivity::eighteen);
  CHECK(v.fp_vol_cm3 == 0.064);
  CHECK(v.fn_vol_cm3 == 0.064);
  const auto self = lesion_volumes(g, g, Connectivity::eighteen);
  CHECK(self.fp_vol_cm3 == 0.0);
  CHECK(self.fn_vol_cm3 == 0.0);

  // Two gt components, prediction touches one of them by a single voxel.
  std::vector<std::uint8_t> gt2(512, 0), pred2(512, 0);
  stamp_cube(gt2, shape, {0, 0, 0});
  stamp_cube(gt2, shape, {4, 4, 4});
  pred2[1 + 8 * (1 + 8 * 1)] = 1;
  const LabelMask g2 = make_mask(gt2, shape, {1, 1, 1});
  const LabelMask p2 = make_mask(pred2, shape, {1, 1, 1});
  const auto v2 = lesion_volumes(p2, g2, Connectivity::eighteen);
  CHECK(v2.fp_vol_cm3 == 0.0);
  CHECK(v2.fn_vol_cm3 == oracle::fn_cm3(p2, g2, 18));
  CHECK(v2.fn_vol_cm3 == 8.0 / 1000.0);
}

TEST_CASE("evaluate_case") {
  const Index3 s{3, 3, 3};
  const LabelMask empty = mask_with(s, {1, 1, 1}, {});
  const auto neg = evaluate_case(empty, empty, Connectivity::eighteen, "neg");
  CHECK_FALSE(neg.dice.has_value());
  CHECK_FALSE(neg.fn_vol_cm3.has_value());
  CHECK(neg.fp_vol_cm3 == 0.0);

  const LabelMask blob = mask_with(s, {1, 1, 1}, {{1, 1, 1}});
  const auto fp = evaluate_case(blob, empty, Connectivity::eighteen, "fp");
  CHECK_FALSE(fp.dice.has_value());
  CHECK(fp.fp_vol_cm3 == 0.001);

  const auto perfect = evaluate_case(blob, blob, Connectivity::eighteen, "ok");
  CHECK(perfect.case_id == "ok");
  CHECK(perfect.dice == 1.0);
  CHECK(perfect.fp_vol_cm3 == 0.0);
  CHECK(perfect.fn_vol_cm3 == 0.0);
}

TEST_CASE("cohort aggregation") {
  const std::vector<CaseMetrics> one{{"a", 1.0, 0.0, 0.0}};
  const auto r1 = aggregate_cohort(one);
  CHECK(format_2dp(*r1.mean_dice_pct) == "100.00");
  CHECK(format_2dp(r1.mean_fp_vol_cm3) == "0.00");
  CHECK(format_2dp(*r1.mean_fn_vol_cm3) == "0.00");

  const std::vector<CaseMetrics> two{{"b", 0.5, 1.0, 2.0}, {"a", 1.0, 0.0, 0.0}};
  const auto r2 = aggregate_cohort(two);
  CHECK(*r2.mean_dice_pct == 75.0);
  CHECK(r2.mean_fp_vol_cm3 == 0.5);
  CHECK(r2.n_cases == 2);

  const std::vector<CaseMetrics> mixed{{"p", 0.8, 1.0, 3.0}, {"n", std::nullopt, 2.0, std::nullopt}};
  const auto r3 = aggregate_cohort(mixed);
  CHECK(*r3.mean_dice_pct == doctest::Approx(80.0).epsilon(1e-12));
  CHECK(r3.mean_fp_vol_cm3 == 1.5);
  CHECK(*r3.mean_fn_vol_cm3 == 3.0);
  CHECK(r3.n_positive_cases == 1);

  const std::vector<CaseMetrics> negatives{{"x", std::nullopt, 0.25, std::nullopt}};
  const auto r4 = aggregate_cohort(negatives);
  CHECK(r4.all_negative());
  CHECK_FALSE(r4.mean_dice_pct.has_value());
  CHECK(r4.mean_fp_vol_cm3 == 0.25);

  CHECK(code_of([] { aggregate_cohort(std::vector<CaseMetrics>{}); }) == ErrorCode::EmptyCohort);
}

TEST_CASE("two-decimal formatting rounds half up") {
  CHECK(format_2dp(0.064) == "0.06");
  CHECK(format_2dp(0.125) == "0.13");
  CHECK(format_2dp(63.185) == "63.19");
  CHECK(format_2dp(-0.001) == "0.00");
  CHECK(format_2dp(5.5549) == "5.55");
}

TEST_CASE("connectivity parsing") {
  CHECK(connectivity_from_int(26) == Connectivity::twenty_six);
  CHECK(code_of([] { connectivity_from_int(8); }) == ErrorCode::InvalidArgument);
}
