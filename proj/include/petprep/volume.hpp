#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "petprep/error.hpp"

namespace petprep {

/// Physical triple (mm) ordered x, y, z.
using Vec3 = std::array<double, 3>;
/// Voxel index or extent triple ordered x, y, z.
using Index3 = std::array<std::size_t, 3>;

/**
 * @brief Shape and physical placement of a voxel grid.
 *
 * Voxel (i, j, k) has its center at origin + (i, j, k) * spacing. Storage is
 * x-fastest, matching the NIfTI on-disk order.
 */
struct Geometry {
  Index3 shape{1, 1, 1};
  Vec3 spacing{1.0, 1.0, 1.0};
  Vec3 origin{0.0, 0.0, 0.0};

  [[nodiscard]] std::size_t voxel_count() const noexcept {
    return shape[0] * shape[1] * shape[2];
  }
  [[nodiscard]] std::size_t index(std::size_t x, std::size_t y,
                                  std::size_t z) const noexcept {
    return x + shape[0] * (y + shape[1] * z);
  }
  [[nodiscard]] double voxel_volume_mm3() const noexcept {
    return spacing[0] * spacing[1] * spacing[2];
  }

  bool operator==(const Geometry &) const = default;
};

/// Throws NonPositiveSpacing / ShapeMismatch when the geometry is unusable.
void validate_geometry(const Geometry &geom);

struct unchecked_t {
  explicit unchecked_t() = default;
};
inline constexpr unchecked_t unchecked{};

/**
 * @brief Dense 3D grid of voxels with physical geometry.
 *
 * Instances are immutable once built; every operation in the library returns
 * a freshly allocated grid.
 */
template <typename T> class Grid {
public:
  using value_type = T;

  /// Validates geometry and contents (finite for float, {0,1} for masks).
  Grid(Geometry geom, std::vector<T> data);
  /// Skips content validation; for kernels whose output is valid by construction.
  Grid(Geometry geom, std::vector<T> data, unchecked_t)
      : geom_(std::move(geom)), data_(std::move(data)) {}

  [[nodiscard]] const Geometry &geometry() const noexcept { return geom_; }
  [[nodiscard]] const Index3 &shape() const noexcept { return geom_.shape; }
  [[nodiscard]] const Vec3 &spacing() const noexcept { return geom_.spacing; }
  [[nodiscard]] const Vec3 &origin() const noexcept { return geom_.origin; }
  [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }

  [[nodiscard]] std::span<const T> data() const noexcept { return data_; }
  [[nodiscard]] T operator[](std::size_t i) const noexcept { return data_[i]; }
  [[nodiscard]] T operator()(std::size_t x, std::size_t y,
                             std::size_t z) const noexcept {
    return data_[geom_.index(x, y, z)];
  }

  bool operator==(const Grid &) const = default;

private:
  Geometry geom_;
  std::vector<T> data_;
};

/// Intensity image: SUV for PET, HU for CT.
using Volume = Grid<float>;
/// Binary lesion mask sharing a Volume's geometry.
using LabelMask = Grid<std::uint8_t>;

extern template class Grid<float>;
extern template class Grid<std::uint8_t>;

enum class Interp { trilinear, nearest };

Volume make_volume(std::vector<float> data, const Index3 &shape,
                   const Vec3 &spacing, const Vec3 &origin = {0.0, 0.0, 0.0});
Volume make_volume(std::span<const float> data, const Index3 &shape,
                   const Vec3 &spacing, const Vec3 &origin = {0.0, 0.0, 0.0});

LabelMask make_mask(std::vector<std::uint8_t> data, const Index3 &shape,
                    const Vec3 &spacing, const Vec3 &origin = {0.0, 0.0, 0.0});
LabelMask make_mask(std::span<const std::uint8_t> data, const Index3 &shape,
                    const Vec3 &spacing, const Vec3 &origin = {0.0, 0.0, 0.0});

/// Throws GeometryMismatch unless both grids share shape, spacing and origin.
void require_same_geometry(const Geometry &a, const Geometry &b,
                           const char *what);

} // namespace petprep
