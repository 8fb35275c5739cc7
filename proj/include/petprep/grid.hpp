#pragma once

#include "petprep/volume.hpp"

namespace petprep {

/**
 * @brief Resample onto a grid with the given voxel spacing.
 *
 * Output extent per axis is round(n * s_in / s_out), never below 1; the origin
 * is kept so voxel 0 stays at the same world position. Trilinear sampling
 * clamps to the edge of the input field. Same-spacing requests return an
 * exact copy.
 */
Volume resample(const Volume &vol, const Vec3 &target_spacing,
                Interp interp = Interp::trilinear);
/// Masks always resample with nearest neighbour.
LabelMask resample(const LabelMask &mask, const Vec3 &target_spacing);

/// Sub-grid [start, start + size); origin moves by start * spacing.
Volume crop(const Volume &vol, const Index3 &start, const Index3 &size);
LabelMask crop(const LabelMask &mask, const Index3 &start, const Index3 &size);

struct FlipAxes {
  bool x = false;
  bool y = false;
  bool z = false;

  bool operator==(const FlipAxes &) const = default;
};

Volume flip(const Volume &vol, FlipAxes axes);
LabelMask flip(const LabelMask &mask, FlipAxes axes);

/**
 * @brief Parameters of a rigid-plus-scale transform about the grid center.
 *
 * The forward map is p = c + R * S * (q - c) + t where c is the world center
 * of the grid and R = Rz * Ry * Rx.
 */
struct AffineParams {
  Vec3 rotation{0.0, 0.0, 0.0};    ///< radians about x, y, z
  Vec3 scale{1.0, 1.0, 1.0};       ///< unitless, > 0
  Vec3 translation{0.0, 0.0, 0.0}; ///< mm
  double fill = 0.0;               ///< value for samples outside the input field
};

/// Same-shape warp; each output voxel pulls its value through the inverse map.
Volume affine_warp(const Volume &vol, const AffineParams &params,
                   Interp interp = Interp::trilinear);
/// Nearest-neighbour warp; the fill value is always 0.
LabelMask affine_warp(const LabelMask &mask, const AffineParams &params);

} // namespace petprep
