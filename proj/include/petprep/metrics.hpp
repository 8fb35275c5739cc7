#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "petprep/volume.hpp"

namespace petprep {

/// Voxel adjacency: faces (6), faces + edges (18), faces + edges + corners (26).
enum class Connectivity { six = 6, eighteen = 18, twenty_six = 26 };

/// Throws InvalidArgument for anything other than 6, 18 or 26.
Connectivity connectivity_from_int(int value);

struct LabeledComponents {
  Index3 shape{};
  std::vector<std::uint32_t> labels;       ///< 0 = background, 1..count otherwise
  std::size_t count = 0;
  std::vector<std::size_t> component_sizes; ///< entry l-1 holds the size of label l
};

/// Two-pass union-find labeling; labels follow first visit in raster order.
LabeledComponents connected_components(const LabelMask &mask, Connectivity conn);

/// 2|P & G| / (|P| + |G|) from exact voxel counts.
double dice(const LabelMask &pred, const LabelMask &gt);

struct LesionVolumes {
  double fp_vol_cm3 = 0.0;
  double fn_vol_cm3 = 0.0;
};

/**
 * @brief Component-wise false positive / false negative volume.
 *
 * A predicted component counts as false positive when none of its voxels
 * touch ground-truth foreground; a ground-truth component counts as false
 * negative when none of its voxels are predicted.
 */
LesionVolumes lesion_volumes(const LabelMask &pred, const LabelMask &gt, Connectivity conn);

struct CaseMetrics {
  std::string case_id;
  std::optional<double> dice; ///< absent when the ground truth is empty
  double fp_vol_cm3 = 0.0;
  std::optional<double> fn_vol_cm3;
};

CaseMetrics evaluate_case(const LabelMask &pred, const LabelMask &gt, Connectivity conn,
                          std::string case_id);

struct CohortReport {
  std::optional<double> mean_dice_pct; ///< absent for an all-negative cohort
  double mean_fp_vol_cm3 = 0.0;
  std::optional<double> mean_fn_vol_cm3;
  std::size_t n_cases = 0;
  std::size_t n_positive_cases = 0;

  [[nodiscard]] bool all_negative() const noexcept { return n_positive_cases == 0; }
};

/**
 * @brief Cohort means in the Dice % / FPvol / FNvol layout.
 *
 * Dice and FNvol average over cases with foreground ground truth; FPvol
 * averages over every case. Cases are folded in case_id order so the result
 * does not depend on input order. Throws EmptyCohort on an empty list.
 */
CohortReport aggregate_cohort(std::span<const CaseMetrics> cases);

/// Half-up rounding to two decimals, rendered as text ("63.19").
std::string format_2dp(double value);

} // namespace petprep
