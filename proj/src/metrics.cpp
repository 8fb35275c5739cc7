#include "petprep/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace petprep {

namespace {

struct Offset {
  int dx, dy, dz;
};

/// Neighbours already visited in raster order (z, then y, then x).
std::vector<Offset> backward_neighbourhood(Connectivity conn) {
  const int max_nonzero = conn == Connectivity::six ? 1 : (conn == Connectivity::eighteen ? 2 : 3);
  std::vector<Offset> out;
  for (int dz = -1; dz <= 0; ++dz) {
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const bool backward = dz < 0 || (dz == 0 && dy < 0) || (dz == 0 && dy == 0 && dx < 0);
        const int nonzero = (dx != 0) + (dy != 0) + (dz != 0);
        if (backward && nonzero <= max_nonzero) {
          out.push_back({dx, dy, dz});
        }
      }
    }
  }
  return out;
}

class DisjointSets {
public:
  std::uint32_t make() {
    parent_.push_back(static_cast<std::uint32_t>(parent_.size()));
    return parent_.back();
  }
  std::uint32_t find(std::uint32_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a != b) {
      // Smaller label wins so a component's root is its first-visited voxel.
      parent_[std::max(a, b)] = std::min(a, b);
    }
  }

private:
  std::vector<std::uint32_t> parent_;
};

struct Counts {
  std::size_t pred = 0;
  std::size_t gt = 0;
  std::size_t both = 0;
};

Counts count_overlap(const LabelMask &pred, const LabelMask &gt) {
  Counts c;
  const auto p = pred.data();
  const auto g = gt.data();
  for (std::size_t i = 0; i < p.size(); ++i) {
    c.pred += p[i];
    c.gt += g[i];
    c.both += p[i] & g[i];
  }
  return c;
}

/// Total size of components in `labels` that share no voxel with `other`.
std::size_t untouched_voxels(const LabeledComponents &cc, const LabelMask &other) {
  std::vector<bool> touched(cc.count + 1, false);
  const auto o = other.data();
  for (std::size_t i = 0; i < cc.labels.size(); ++i) {
    if (cc.labels[i] != 0 && o[i] != 0) {
      touched[cc.labels[i]] = true;
    }
  }
  std::size_t total = 0;
  for (std::size_t l = 1; l <= cc.count; ++l) {
    if (!touched[l]) {
      total += cc.component_sizes[l - 1];
    }
  }
  return total;
}

double voxels_to_cm3(std::size_t voxels, const Geometry &geom) {
  return static_cast<double>(voxels) * geom.voxel_volume_mm3() / 1000.0;
}

} // namespace

Connectivity connectivity_from_int(int value) {
  switch (value) {
  case 6: return Connectivity::six;
  case 18: return Connectivity::eighteen;
  case 26: return Connectivity::twenty_six;
  default:
    throw Error(ErrorCode::InvalidArgument,
                "connectivity must be 6, 18 or 26, got " + std::to_string(value));
  }
}

LabeledComponents connected_components(const LabelMask &mask, Connectivity conn) {
  const auto &geom = mask.geometry();
  const auto [nx, ny, nz] = geom.shape;
  const auto neighbours = backward_neighbourhood(conn);

  // Pass 1: provisional labels (0 reserved for background).
  std::vector<std::uint32_t> provisional(mask.size(), 0);
  DisjointSets sets;
  sets.make();
  for (std::size_t z = 0; z < nz; ++z) {
    for (std::size_t y = 0; y < ny; ++y) {
      for (std::size_t x = 0; x < nx; ++x) {
        const std::size_t idx = geom.index(x, y, z);
        if (mask[idx] == 0) {
          continue;
        }
        std::uint32_t label = 0;
        for (const auto &o : neighbours) {
          const auto xx = static_cast<std::ptrdiff_t>(x) + o.dx;
          const auto yy = static_cast<std::ptrdiff_t>(y) + o.dy;
          const auto zz = static_cast<std::ptrdiff_t>(z) + o.dz;
          if (xx < 0 || yy < 0 || zz < 0 || xx >= static_cast<std::ptrdiff_t>(nx) ||
              yy >= static_cast<std::ptrdiff_t>(ny)) {
            continue;
          }
          const std::uint32_t nl = provisional[geom.index(static_cast<std::size_t>(xx),
                                                          static_cast<std::size_t>(yy),
                                                          static_cast<std::size_t>(zz))];
          if (nl == 0) {
            continue;
          }
          if (label == 0) {
            label = nl;
          } else {
            sets.unite(label, nl);
          }
        }
        provisional[idx] = label == 0 ? sets.make() : label;
      }
    }
  }

  // Pass 2: resolve roots and renumber by first raster visit.
  LabeledComponents out;
  out.shape = geom.shape;
  out.labels.assign(mask.size(), 0);
  std::vector<std::uint32_t> final_label;
  for (std::size_t i = 0; i < provisional.size(); ++i) {
    if (provisional[i] == 0) {
      continue;
    }
    const std::uint32_t root = sets.find(provisional[i]);
    if (root >= final_label.size()) {
      final_label.resize(root + 1, 0);
    }
    if (final_label[root] == 0) {
      final_label[root] = static_cast<std::uint32_t>(++out.count);
      out.component_sizes.push_back(0);
    }
    out.labels[i] = final_label[root];
    ++out.component_sizes[final_label[root] - 1];
  }
  return out;
}

double dice(const LabelMask &pred, const LabelMask &gt) {
  require_same_geometry(pred.geometry(), gt.geometry(), "dice");
  const Counts c = count_overlap(pred, gt);
  if (c.gt == 0) {
    throw Error(ErrorCode::EmptyGroundTruth, "dice is undefined without ground-truth foreground");
  }
  return 2.0 * static_cast<double>(c.both) / static_cast<double>(c.pred + c.gt);
}

LesionVolumes lesion_volumes(const LabelMask &pred, const LabelMask &gt, Connectivity conn) {
  require_same_geometry(pred.geometry(), gt.geometry(), "lesion_volumes");
  const auto pred_cc = connected_components(pred, conn);
  const auto gt_cc = connected_components(gt, conn);
  return {voxels_to_cm3(untouched_voxels(pred_cc, gt), pred.geometry()),
          voxels_to_cm3(untouched_voxels(gt_cc, pred), gt.geometry())};
}

CaseMetrics evaluate_case(const LabelMask &pred, const LabelMask &gt, Connectivity conn,
                          std::string case_id) {
  require_same_geometry(pred.geometry(), gt.geometry(), case_id.c_str());
  CaseMetrics m;
  m.case_id = std::move(case_id);
  const auto vols = lesion_volumes(pred, gt, conn);
  m.fp_vol_cm3 = vols.fp_vol_cm3;
  const auto gt_data = gt.data();
  if (std::any_of(gt_data.begin(), gt_data.end(), [](std::uint8_t v) { return v != 0; })) {
    m.dice = dice(pred, gt);
    m.fn_vol_cm3 = vols.fn_vol_cm3;
  }
  return m;
}

CohortReport aggregate_cohort(std::span<const CaseMetrics> cases) {
  if (cases.empty()) {
    throw Error(ErrorCode::EmptyCohort, "no cases to aggregate");
  }
  std::vector<const CaseMetrics *> ordered;
  ordered.reserve(cases.size());
  for (const auto &c : cases) {
    ordered.push_back(&c);
  }
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const CaseMetrics *a, const CaseMetrics *b) { return a->case_id < b->case_id; });

  double dice_sum = 0.0, fp_sum = 0.0, fn_sum = 0.0;
  std::size_t positives = 0;
  for (const CaseMetrics *c : ordered) {
    fp_sum += c->fp_vol_cm3;
    if (c->dice) {
      ++positives;
      dice_sum += *c->dice;
      fn_sum += c->fn_vol_cm3.value_or(0.0);
    }
  }
  CohortReport r;
  r.n_cases = cases.size();
  r.n_positive_cases = positives;
  r.mean_fp_vol_cm3 = fp_sum / static_cast<double>(r.n_cases);
  if (positives > 0) {
    r.mean_dice_pct = 100.0 * dice_sum / static_cast<double>(positives);
    r.mean_fn_vol_cm3 = fn_sum / static_cast<double>(positives);
  }
  return r;
}

std::string format_2dp(double value) {
  const double rounded = std::floor(value * 100.0 + 0.5) / 100.0;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", rounded == 0.0 ? 0.0 : rounded);
  return buf;
}

} // namespace petprep
