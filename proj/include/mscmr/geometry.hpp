// Resampling, center-cropping, and the exact inverse reconstruction.
//
// Coordinate convention: voxel centers. The source position of output index
// i is (i + 0.5) * n_in / n_out - 0.5, clamped to the valid range. Nearest
// rounds halves down (ceil(x - 0.5)), linear is tri-/bilinear with edge
// clamping.

#ifndef MSCMR_GEOMETRY_HPP
#define MSCMR_GEOMETRY_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>

#include "mscmr/core.hpp"

namespace mscmr {
namespace geometry {

enum class Interp { Linear, Nearest };

struct CropRecord {
  std::array<int64_t, 2> pre_crop_dims{0, 0};         // in-plane dims before crop
  std::array<int64_t, 2> offsets{0, 0};               // (ox, oy), floor((n-c)/2)
  std::array<int64_t, 2> original_inplane_dims{0, 0}; // dims before resize_slices
  Interp interp_used = Interp::Linear;
};

namespace detail {

inline double source_pos(int64_t i_out, int64_t n_in, int64_t n_out) {
  return (static_cast<double>(i_out) + 0.5) * static_cast<double>(n_in) /
             static_cast<double>(n_out) -
         0.5;
}

// round-half-down, clamped into [0, n-1]
inline int64_t nearest_index(double pos, int64_t n) {
  const int64_t i = static_cast<int64_t>(std::ceil(pos - 0.5));
  return std::clamp<int64_t>(i, 0, n - 1);
}

struct LinearSample {
  int64_t i0, i1;
  double w1;  // weight of i1; weight of i0 is 1 - w1
};

inline LinearSample linear_sample(double pos, int64_t n) {
  const double p = std::clamp(pos, 0.0, static_cast<double>(n - 1));
  const int64_t i0 = std::clamp<int64_t>(static_cast<int64_t>(std::floor(p)), 0, n - 1);
  const int64_t i1 = std::min<int64_t>(i0 + 1, n - 1);
  return {i0, i1, p - static_cast<double>(i0)};
}

inline GridMeta resampled_meta(const GridMeta& in, std::array<int64_t, 3> target) {
  GridMeta out = in;
  for (int a = 0; a < 3; ++a) {
    if (target[a] < 1) throw InputError("resample: target dims must be >= 1");
    out.dims[a] = target[a];
    out.spacing[a] = in.spacing[a] * static_cast<double>(in.dims[a]) /
                     static_cast<double>(target[a]);
  }
  return out;
}

}  // namespace detail

inline VoxelGrid3D resample_volume(const VoxelGrid3D& in, std::array<int64_t, 3> target,
                                   Interp interp) {
  VoxelGrid3D out;
  out.meta = detail::resampled_meta(in.meta, target);
  out.voxels.resize(static_cast<size_t>(out.meta.voxel_count()));
  const auto& d = in.meta.dims;
  for (int64_t z = 0; z < target[2]; ++z) {
    const double pz = detail::source_pos(z, d[2], target[2]);
    for (int64_t y = 0; y < target[1]; ++y) {
      const double py = detail::source_pos(y, d[1], target[1]);
      for (int64_t x = 0; x < target[0]; ++x) {
        const double px = detail::source_pos(x, d[0], target[0]);
        float v;
        if (interp == Interp::Nearest) {
          v = in.at(detail::nearest_index(px, d[0]), detail::nearest_index(py, d[1]),
                    detail::nearest_index(pz, d[2]));
        } else {
          const auto sx = detail::linear_sample(px, d[0]);
          const auto sy = detail::linear_sample(py, d[1]);
          const auto sz = detail::linear_sample(pz, d[2]);
          double acc = 0.0;
          for (int cz = 0; cz < 2; ++cz)
            for (int cy = 0; cy < 2; ++cy)
              for (int cx = 0; cx < 2; ++cx) {
                const double w = (cx ? sx.w1 : 1.0 - sx.w1) * (cy ? sy.w1 : 1.0 - sy.w1) *
                                 (cz ? sz.w1 : 1.0 - sz.w1);
                acc += w * in.at(cx ? sx.i1 : sx.i0, cy ? sy.i1 : sy.i0,
                                 cz ? sz.i1 : sz.i0);
              }
          v = static_cast<float>(acc);
        }
        out.at(x, y, z) = v;
      }
    }
  }
  return out;
}

inline LabelGrid3D resample_labels(const LabelGrid3D& in, std::array<int64_t, 3> target,
                                   Interp interp = Interp::Nearest) {
  if (interp != Interp::Nearest)
    throw InputError("labels must be resampled with nearest interpolation");
  LabelGrid3D out;
  out.meta = detail::resampled_meta(in.meta, target);
  out.class_count = in.class_count;
  out.voxels.resize(static_cast<size_t>(out.meta.voxel_count()));
  const auto& d = in.meta.dims;
  for (int64_t z = 0; z < target[2]; ++z) {
    const int64_t sz = detail::nearest_index(detail::source_pos(z, d[2], target[2]), d[2]);
    for (int64_t y = 0; y < target[1]; ++y) {
      const int64_t sy = detail::nearest_index(detail::source_pos(y, d[1], target[1]), d[1]);
      for (int64_t x = 0; x < target[0]; ++x) {
        const int64_t sx = detail::nearest_index(detail::source_pos(x, d[0], target[0]), d[0]);
        out.at(x, y, z) = in.at(sx, sy, sz);
      }
    }
  }
  return out;
}

// Per-channel linear resampling for probability stacks, renormalized back to
// the simplex afterwards.
inline ProbGrid4D resample_probs(const ProbGrid4D& in, std::array<int64_t, 3> target) {
  ProbGrid4D out;
  out.meta = detail::resampled_meta(in.meta, target);
  out.class_count = in.class_count;
  const int64_t n = out.meta.voxel_count();
  out.voxels.resize(static_cast<size_t>(n) * out.class_count);
  VoxelGrid3D chan;
  chan.meta = in.meta;
  chan.voxels.resize(static_cast<size_t>(in.meta.voxel_count()));
  for (int c = 0; c < in.class_count; ++c) {
    for (int64_t i = 0; i < in.meta.voxel_count(); ++i)
      chan.voxels[static_cast<size_t>(i)] = in.voxels[i * in.class_count + c];
    const VoxelGrid3D r = resample_volume(chan, target, Interp::Linear);
    for (int64_t i = 0; i < n; ++i)
      out.voxels[i * out.class_count + c] = r.voxels[static_cast<size_t>(i)];
  }
  for (int64_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (int c = 0; c < out.class_count; ++c) sum += out.voxels[i * out.class_count + c];
    if (sum > 0.0)
      for (int c = 0; c < out.class_count; ++c)
        out.voxels[i * out.class_count + c] =
            static_cast<float>(out.voxels[i * out.class_count + c] / sum);
  }
  return out;
}

// In-plane resize, slice count unchanged. With the z target equal to the
// source nz, the z source position is exact, so this is a per-slice 2D
// resample in either interpolation mode.
inline VoxelGrid3D resize_slices(const VoxelGrid3D& in, std::array<int64_t, 2> inplane) {
  return resample_volume(in, {inplane[0], inplane[1], in.meta.dims[2]}, Interp::Linear);
}

inline LabelGrid3D resize_slices(const LabelGrid3D& in, std::array<int64_t, 2> inplane) {
  return resample_labels(in, {inplane[0], inplane[1], in.meta.dims[2]});
}

namespace detail {

inline CropRecord make_crop_record(const GridMeta& meta, std::array<int64_t, 2> crop,
                                   Interp interp) {
  if (crop[0] < 1 || crop[1] < 1) throw InputError("crop dims must be >= 1");
  if (meta.dims[0] < crop[0] || meta.dims[1] < crop[1])
    throw InputError("crop larger than input in-plane dims");
  CropRecord rec;
  rec.pre_crop_dims = {meta.dims[0], meta.dims[1]};
  rec.offsets = {(meta.dims[0] - crop[0]) / 2, (meta.dims[1] - crop[1]) / 2};
  rec.original_inplane_dims = rec.pre_crop_dims;
  rec.interp_used = interp;
  return rec;
}

template <typename Grid>
void copy_crop(const Grid& in, Grid& out, const CropRecord& rec,
               std::array<int64_t, 2> crop) {
  for (int64_t z = 0; z < in.meta.dims[2]; ++z)
    for (int64_t y = 0; y < crop[1]; ++y)
      for (int64_t x = 0; x < crop[0]; ++x)
        out.at(x, y, z) = in.at(x + rec.offsets[0], y + rec.offsets[1], z);
}

}  // namespace detail

inline std::pair<VoxelGrid3D, CropRecord> center_crop(const VoxelGrid3D& in,
                                                      std::array<int64_t, 2> crop) {
  CropRecord rec = detail::make_crop_record(in.meta, crop, Interp::Linear);
  VoxelGrid3D out;
  out.meta = in.meta;
  out.meta.dims = {crop[0], crop[1], in.meta.dims[2]};
  out.voxels.resize(static_cast<size_t>(out.meta.voxel_count()));
  detail::copy_crop(in, out, rec, crop);
  return {std::move(out), rec};
}

inline std::pair<LabelGrid3D, CropRecord> center_crop(const LabelGrid3D& in,
                                                      std::array<int64_t, 2> crop) {
  CropRecord rec = detail::make_crop_record(in.meta, crop, Interp::Nearest);
  LabelGrid3D out;
  out.meta = in.meta;
  out.meta.dims = {crop[0], crop[1], in.meta.dims[2]};
  out.class_count = in.class_count;
  out.voxels.resize(static_cast<size_t>(out.meta.voxel_count()));
  detail::copy_crop(in, out, rec, crop);
  return {std::move(out), rec};
}

// Inverse of resize_slices + center_crop: pad back to pre-crop dims with
// background, then nearest-resample in-plane to the original dims.
inline LabelGrid3D reconstruct_inverse(const LabelGrid3D& cropped, const CropRecord& rec) {
  if (cropped.meta.dims[0] + rec.offsets[0] > rec.pre_crop_dims[0] ||
      cropped.meta.dims[1] + rec.offsets[1] > rec.pre_crop_dims[1])
    throw InputError("reconstruct_inverse: crop record does not match grid dims");
  LabelGrid3D padded;
  padded.meta = cropped.meta;
  padded.meta.dims = {rec.pre_crop_dims[0], rec.pre_crop_dims[1], cropped.meta.dims[2]};
  padded.class_count = cropped.class_count;
  padded.voxels.assign(static_cast<size_t>(padded.meta.voxel_count()), 0);
  for (int64_t z = 0; z < cropped.meta.dims[2]; ++z)
    for (int64_t y = 0; y < cropped.meta.dims[1]; ++y)
      for (int64_t x = 0; x < cropped.meta.dims[0]; ++x)
        padded.at(x + rec.offsets[0], y + rec.offsets[1], z) = cropped.at(x, y, z);
  if (rec.original_inplane_dims == rec.pre_crop_dims) return padded;
  return resize_slices(padded, rec.original_inplane_dims);
}

}  // namespace geometry
}  // namespace mscmr

#endif  // MSCMR_GEOMETRY_HPP
