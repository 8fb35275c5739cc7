#include "petprep/volume.hpp"

#include <cmath>
#include <string>
#include <type_traits>

namespace petprep {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
  case ErrorCode::NonPositiveSpacing: return "NonPositiveSpacing";
  case ErrorCode::NonFiniteData: return "NonFiniteData";
  case ErrorCode::ShapeMismatch: return "ShapeMismatch";
  case ErrorCode::NonBinaryMask: return "NonBinaryMask";
  case ErrorCode::OutOfBounds: return "OutOfBounds";
  case ErrorCode::NonPositiveScale: return "NonPositiveScale";
  case ErrorCode::InvalidBounds: return "InvalidBounds";
  case ErrorCode::InvalidArgument: return "InvalidArgument";
  case ErrorCode::DegenerateStatistics: return "DegenerateStatistics";
  case ErrorCode::NegativeSigma: return "NegativeSigma";
  case ErrorCode::NegativeStd: return "NegativeStd";
  case ErrorCode::ParseError: return "ParseError";
  case ErrorCode::ValidationError: return "ValidationError";
  case ErrorCode::GeometryMismatch: return "GeometryMismatch";
  case ErrorCode::EmptyGroundTruth: return "EmptyGroundTruth";
  case ErrorCode::EmptyCohort: return "EmptyCohort";
  case ErrorCode::FileNotFound: return "FileNotFound";
  case ErrorCode::BadMagic: return "BadMagic";
  case ErrorCode::UnsupportedDatatype: return "UnsupportedDatatype";
  case ErrorCode::UnsupportedOrientation: return "UnsupportedOrientation";
  case ErrorCode::CorruptHeader: return "CorruptHeader";
  case ErrorCode::IoError: return "IoError";
  case ErrorCode::DuplicateCaseId: return "DuplicateCaseId";
  case ErrorCode::UnknownTracer: return "UnknownTracer";
  case ErrorCode::TooFewCases: return "TooFewCases";
  case ErrorCode::InvalidFraction: return "InvalidFraction";
  }
  return "Unknown";
}

void validate_geometry(const Geometry &geom) {
  for (int a = 0; a < 3; ++a) {
    if (geom.shape[a] == 0) {
      throw Error(ErrorCode::ShapeMismatch, "grid extent must be positive on every axis");
    }
    if (!(std::isfinite(geom.spacing[a]) && geom.spacing[a] > 0.0)) {
      throw Error(ErrorCode::NonPositiveSpacing,
                  "spacing[" + std::to_string(a) + "] = " + std::to_string(geom.spacing[a]));
    }
    if (!std::isfinite(geom.origin[a])) {
      throw Error(ErrorCode::NonFiniteData, "origin must be finite");
    }
  }
}

template <typename T>
Grid<T>::Grid(Geometry geom, std::vector<T> data)
    : geom_(std::move(geom)), data_(std::move(data)) {
  validate_geometry(geom_);
  if (data_.size() != geom_.voxel_count()) {
    throw Error(ErrorCode::ShapeMismatch,
                "data has " + std::to_string(data_.size()) + " voxels, shape implies " +
                    std::to_string(geom_.voxel_count()));
  }
  if constexpr (std::is_floating_point_v<T>) {
    for (std::size_t i = 0; i < data_.size(); ++i) {
      if (!std::isfinite(data_[i])) {
        throw Error(ErrorCode::NonFiniteData, "voxel " + std::to_string(i) + " is not finite");
      }
    }
  } else {
    for (std::size_t i = 0; i < data_.size(); ++i) {
      if (data_[i] > 1) {
        throw Error(ErrorCode::NonBinaryMask,
                    "voxel " + std::to_string(i) + " = " + std::to_string(data_[i]));
      }
    }
  }
}

template class Grid<float>;
template class Grid<std::uint8_t>;

Volume make_volume(std::vector<float> data, const Index3 &shape, const Vec3 &spacing,
                   const Vec3 &origin) {
  return Volume(Geometry{shape, spacing, origin}, std::move(data));
}

Volume make_volume(std::span<const float> data, const Index3 &shape, const Vec3 &spacing,
                   const Vec3 &origin) {
  return make_volume(std::vector<float>(data.begin(), data.end()), shape, spacing, origin);
}

LabelMask make_mask(std::vector<std::uint8_t> data, const Index3 &shape, const Vec3 &spacing,
                    const Vec3 &origin) {
  return LabelMask(Geometry{shape, spacing, origin}, std::move(data));
}

LabelMask make_mask(std::span<const std::uint8_t> data, const Index3 &shape,
                    const Vec3 &spacing, const Vec3 &origin) {
  return make_mask(std::vector<std::uint8_t>(data.begin(), data.end()), shape, spacing, origin);
}

void require_same_geometry(const Geometry &a, const Geometry &b, const char *what) {
  if (!(a == b)) {
    throw Error(ErrorCode::GeometryMismatch, std::string(what) + ": grids differ in shape, spacing or origin");
  }
}

} // namespace petprep
