// Evaluation metrics: Dice, Jaccard, average symmetric surface distance
// (ASSD) and Hausdorff distance, per foreground class plus the unweighted
// mean over the three foreground classes.
//
// Surfaces are voxel-center point sets: a foreground voxel belongs to the
// surface when any 6-neighbor is background or outside the grid (the volume
// border counts as background). Distances are exact Euclidean in mm via a
// separable lower-envelope distance transform with anisotropic spacing.

#ifndef MSCMR_METRICS_HPP
#define MSCMR_METRICS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mscmr/core.hpp"

namespace mscmr {
namespace metrics {

struct OverlapCounts {
  int64_t pred = 0, truth = 0, both = 0;
};

inline OverlapCounts overlap_counts(const LabelGrid3D& pred, const LabelGrid3D& gt,
                                    int cls) {
  if (!pred.meta.same_grid(gt.meta))
    throw InputError("overlap_counts: dims/spacing mismatch");
  OverlapCounts oc;
  for (size_t i = 0; i < pred.voxels.size(); ++i) {
    const bool a = pred.voxels[i] == cls;
    const bool b = gt.voxels[i] == cls;
    oc.pred += a;
    oc.truth += b;
    oc.both += a && b;
  }
  return oc;
}

// Both-empty convention: 1.0 (flagged by the caller); one-empty: 0.0.
inline double dice(const OverlapCounts& oc) {
  if (oc.pred + oc.truth == 0) return 1.0;
  return 2.0 * static_cast<double>(oc.both) / static_cast<double>(oc.pred + oc.truth);
}

inline double jaccard(const OverlapCounts& oc) {
  const int64_t uni = oc.pred + oc.truth - oc.both;
  if (uni == 0) return 1.0;
  return static_cast<double>(oc.both) / static_cast<double>(uni);
}

struct SurfacePointSet {
  std::vector<int64_t> flat_indices;            // ascending
  std::vector<std::array<double, 3>> points_mm; // index * spacing per axis
};

inline SurfacePointSet extract_surface(const std::vector<uint8_t>& mask,
                                       const GridMeta& meta) {
  const int64_t nx = meta.dims[0], ny = meta.dims[1], nz = meta.dims[2];
  SurfacePointSet s;
  auto bg = [&](int64_t x, int64_t y, int64_t z) {
    if (x < 0 || x >= nx || y < 0 || y >= ny || z < 0 || z >= nz) return true;
    return mask[static_cast<size_t>((z * ny + y) * nx + x)] == 0;
  };
  for (int64_t z = 0; z < nz; ++z)
    for (int64_t y = 0; y < ny; ++y)
      for (int64_t x = 0; x < nx; ++x) {
        const int64_t i = (z * ny + y) * nx + x;
        if (!mask[static_cast<size_t>(i)]) continue;
        if (bg(x - 1, y, z) || bg(x + 1, y, z) || bg(x, y - 1, z) || bg(x, y + 1, z) ||
            bg(x, y, z - 1) || bg(x, y, z + 1)) {
          s.flat_indices.push_back(i);
          s.points_mm.push_back({x * meta.spacing[0], y * meta.spacing[1],
                                 z * meta.spacing[2]});
        }
      }
  return s;
}

namespace detail {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 1D squared-distance transform by lower envelope of parabolas rooted at
// positions j*step with heights f[j]. Exact for arbitrary positive step.
inline void dt_1d(std::vector<double>& f, double step, std::vector<double>& scratch_d,
                  std::vector<int>& scratch_v, std::vector<double>& scratch_z) {
  const int n = static_cast<int>(f.size());
  if (n == 1) return;
  auto& d = scratch_d;
  auto& v = scratch_v;
  auto& z = scratch_z;
  d.resize(static_cast<size_t>(n));
  v.resize(static_cast<size_t>(n));
  z.resize(static_cast<size_t>(n) + 1);
  int k = 0;
  v[0] = 0;
  z[0] = -kInf;
  z[1] = kInf;
  auto pos = [step](int j) { return step * j; };
  for (int q = 1; q < n; ++q) {
    if (f[static_cast<size_t>(q)] == kInf) continue;
    if (f[static_cast<size_t>(v[static_cast<size_t>(k)])] == kInf) {
      v[static_cast<size_t>(k)] = q;
      continue;
    }
    double s;
    while (true) {
      const int p = v[static_cast<size_t>(k)];
      s = ((f[static_cast<size_t>(q)] + pos(q) * pos(q)) -
           (f[static_cast<size_t>(p)] + pos(p) * pos(p))) /
          (2.0 * pos(q) - 2.0 * pos(p));
      if (s > z[static_cast<size_t>(k)]) break;
      --k;
    }
    ++k;
    v[static_cast<size_t>(k)] = q;
    z[static_cast<size_t>(k)] = s;
    z[static_cast<size_t>(k) + 1] = kInf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[static_cast<size_t>(k) + 1] < pos(q)) ++k;
    const int p = v[static_cast<size_t>(k)];
    const double dx = pos(q) - pos(p);
    d[static_cast<size_t>(q)] =
        f[static_cast<size_t>(p)] == kInf ? kInf : dx * dx + f[static_cast<size_t>(p)];
  }
  f.assign(d.begin(), d.end());
}

}  // namespace detail

// Exact squared Euclidean distance (mm^2) from every voxel center to the
// nearest point of `sites` (flat voxel indices). Infinity when empty.
inline std::vector<double> squared_edt(const std::vector<int64_t>& sites,
                                       const GridMeta& meta) {
  const int64_t nx = meta.dims[0], ny = meta.dims[1], nz = meta.dims[2];
  std::vector<double> d(static_cast<size_t>(nx * ny * nz), detail::kInf);
  for (int64_t i : sites) d[static_cast<size_t>(i)] = 0.0;
  std::vector<double> line, sd, sz;
  std::vector<int> sv;
  // x pass
  line.resize(static_cast<size_t>(nx));
  for (int64_t z = 0; z < nz; ++z)
    for (int64_t y = 0; y < ny; ++y) {
      const int64_t base = (z * ny + y) * nx;
      for (int64_t x = 0; x < nx; ++x) line[static_cast<size_t>(x)] = d[static_cast<size_t>(base + x)];
      detail::dt_1d(line, meta.spacing[0], sd, sv, sz);
      for (int64_t x = 0; x < nx; ++x) d[static_cast<size_t>(base + x)] = line[static_cast<size_t>(x)];
    }
  // y pass
  line.resize(static_cast<size_t>(ny));
  for (int64_t z = 0; z < nz; ++z)
    for (int64_t x = 0; x < nx; ++x) {
      for (int64_t y = 0; y < ny; ++y)
        line[static_cast<size_t>(y)] = d[static_cast<size_t>((z * ny + y) * nx + x)];
      detail::dt_1d(line, meta.spacing[1], sd, sv, sz);
      for (int64_t y = 0; y < ny; ++y)
        d[static_cast<size_t>((z * ny + y) * nx + x)] = line[static_cast<size_t>(y)];
    }
  // z pass
  line.resize(static_cast<size_t>(nz));
  for (int64_t y = 0; y < ny; ++y)
    for (int64_t x = 0; x < nx; ++x) {
      for (int64_t z = 0; z < nz; ++z)
        line[static_cast<size_t>(z)] = d[static_cast<size_t>((z * ny + y) * nx + x)];
      detail::dt_1d(line, meta.spacing[2], sd, sv, sz);
      for (int64_t z = 0; z < nz; ++z)
        d[static_cast<size_t>((z * ny + y) * nx + x)] = line[static_cast<size_t>(z)];
    }
  return d;
}

struct SurfaceDistances {
  std::optional<double> assd_mm;  // or the configured aggregate
  std::optional<double> hausdorff_mm;
};

// How the symmetric per-point distance multiset is aggregated into the
// "surface distance" number. Mean is ASSD, the default.
enum class DistanceAggregate { Mean, Median, P95 };

// Both directed distance sets come from one EDT per surface, sampled at the
// other surface's voxels.
inline SurfaceDistances surface_distances(const SurfacePointSet& pred,
                                          const SurfacePointSet& gt,
                                          const GridMeta& meta,
                                          DistanceAggregate agg = DistanceAggregate::Mean) {
  if (pred.flat_indices.empty() || gt.flat_indices.empty()) return {};
  const std::vector<double> d_to_gt = squared_edt(gt.flat_indices, meta);
  const std::vector<double> d_to_pred = squared_edt(pred.flat_indices, meta);
  std::vector<double> dists;
  dists.reserve(pred.flat_indices.size() + gt.flat_indices.size());
  double max_d = 0.0;
  for (int64_t i : pred.flat_indices) {
    const double dist = std::sqrt(d_to_gt[static_cast<size_t>(i)]);
    dists.push_back(dist);
    max_d = std::max(max_d, dist);
  }
  for (int64_t i : gt.flat_indices) {
    const double dist = std::sqrt(d_to_pred[static_cast<size_t>(i)]);
    dists.push_back(dist);
    max_d = std::max(max_d, dist);
  }
  SurfaceDistances out;
  out.hausdorff_mm = max_d;
  switch (agg) {
    case DistanceAggregate::Mean: {
      double sum = 0.0;
      for (double d : dists) sum += d;
      out.assd_mm = sum / static_cast<double>(dists.size());
      break;
    }
    case DistanceAggregate::Median:
    case DistanceAggregate::P95: {
      std::sort(dists.begin(), dists.end());
      const double q = agg == DistanceAggregate::Median ? 0.5 : 0.95;
      const size_t idx = std::min(dists.size() - 1,
                                  static_cast<size_t>(q * (dists.size() - 1) + 0.5));
      out.assd_mm = dists[idx];
      break;
    }
  }
  return out;
}

struct ClassMetrics {
  double dice = 0.0;
  double jaccard = 0.0;
  std::optional<double> assd_mm;
  std::optional<double> hd_mm;
  bool pred_empty = false;
  bool gt_empty = false;
};

struct MetricsReport {
  // Foreground classes in ID order (1=RV, 2=LV, 3=LVM by default).
  std::vector<ClassMetrics> per_class;
  double mean_dice = 0.0;
  double mean_jaccard = 0.0;
  std::optional<double> mean_assd_mm;
  std::optional<double> mean_hd_mm;
  bool distances_incomplete = false;  // some class had an undefined distance
};

inline MetricsReport evaluate(const LabelGrid3D& pred, const LabelGrid3D& gt,
                              DistanceAggregate agg = DistanceAggregate::Mean) {
  if (!pred.meta.same_grid(gt.meta))
    throw InputError("evaluate: dims/spacing mismatch");
  if (pred.class_count != gt.class_count)
    throw InputError("evaluate: class_count mismatch");
  MetricsReport rep;
  const int64_t n = pred.meta.voxel_count();
  std::vector<uint8_t> mask_p(static_cast<size_t>(n)), mask_g(static_cast<size_t>(n));
  double sum_dice = 0.0, sum_jac = 0.0, sum_assd = 0.0, sum_hd = 0.0;
  int n_dist = 0;
  const int n_fg = pred.class_count - 1;
  for (int c = 1; c < pred.class_count; ++c) {
    ClassMetrics cm;
    const OverlapCounts oc = overlap_counts(pred, gt, c);
    cm.pred_empty = oc.pred == 0;
    cm.gt_empty = oc.truth == 0;
    cm.dice = dice(oc);
    cm.jaccard = jaccard(oc);
    for (int64_t i = 0; i < n; ++i) {
      mask_p[static_cast<size_t>(i)] = pred.voxels[static_cast<size_t>(i)] == c;
      mask_g[static_cast<size_t>(i)] = gt.voxels[static_cast<size_t>(i)] == c;
    }
    const SurfaceDistances sd = surface_distances(extract_surface(mask_p, pred.meta),
                                                  extract_surface(mask_g, pred.meta),
                                                  pred.meta, agg);
    cm.assd_mm = sd.assd_mm;
    cm.hd_mm = sd.hausdorff_mm;
    sum_dice += cm.dice;
    sum_jac += cm.jaccard;
    if (sd.assd_mm && sd.hausdorff_mm) {
      sum_assd += *sd.assd_mm;
      sum_hd += *sd.hausdorff_mm;
      ++n_dist;
    } else {
      rep.distances_incomplete = true;
    }
    rep.per_class.push_back(cm);
  }
  rep.mean_dice = sum_dice / n_fg;
  rep.mean_jaccard = sum_jac / n_fg;
  if (n_dist > 0) {
    rep.mean_assd_mm = sum_assd / n_dist;
    rep.mean_hd_mm = sum_hd / n_dist;
  }
  return rep;
}

}  // namespace metrics
}  // namespace mscmr

#endif  // MSCMR_METRICS_HPP
