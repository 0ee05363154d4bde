// Core grid types shared by the whole pipeline.
//
// Memory layout conventions (documented once, used everywhere):
//   VoxelGrid3D / LabelGrid3D : x fastest, then y, then z.
//                               index(x,y,z) = (z*ny + y)*nx + x
//   ProbGrid4D                : channel fastest within a voxel.
//                               index(x,y,z,c) = ((z*ny + y)*nx + x)*C + c

#ifndef MSCMR_CORE_HPP
#define MSCMR_CORE_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mscmr {

// Thrown for malformed inputs (bad files, shape mismatches, invalid values).
class InputError : public std::runtime_error {
public:
  explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

struct GridMeta {
  std::array<int64_t, 3> dims{1, 1, 1};    // (nx, ny, nz) voxel counts
  std::array<double, 3> spacing{1.0, 1.0, 1.0};  // mm per voxel

  int64_t voxel_count() const { return dims[0] * dims[1] * dims[2]; }

  void validate() const {
    for (int a = 0; a < 3; ++a) {
      if (dims[a] < 1)
        throw InputError("GridMeta: dims must be >= 1");
      if (!(spacing[a] > 0.0) || !std::isfinite(spacing[a]))
        throw InputError("GridMeta: spacing must be positive and finite");
    }
  }

  bool same_dims(const GridMeta& o) const { return dims == o.dims; }
  bool same_grid(const GridMeta& o) const {
    return dims == o.dims && spacing == o.spacing;
  }
};

struct VoxelGrid3D {
  GridMeta meta;
  std::vector<float> voxels;  // finite intensities, x-fastest order

  int64_t index(int64_t x, int64_t y, int64_t z) const {
    return (z * meta.dims[1] + y) * meta.dims[0] + x;
  }
  float at(int64_t x, int64_t y, int64_t z) const { return voxels[index(x, y, z)]; }
  float& at(int64_t x, int64_t y, int64_t z) { return voxels[index(x, y, z)]; }

  void validate() const {
    meta.validate();
    if (static_cast<int64_t>(voxels.size()) != meta.voxel_count())
      throw InputError("VoxelGrid3D: voxel count does not match dims");
    for (float v : voxels)
      if (!std::isfinite(v)) throw InputError("VoxelGrid3D: non-finite voxel value");
  }
};

struct LabelGrid3D {
  GridMeta meta;
  std::vector<uint8_t> voxels;  // class IDs in {0 .. class_count-1}
  int class_count = 4;          // 0=background, 1=RV, 2=LV, 3=LVM by default

  int64_t index(int64_t x, int64_t y, int64_t z) const {
    return (z * meta.dims[1] + y) * meta.dims[0] + x;
  }
  uint8_t at(int64_t x, int64_t y, int64_t z) const { return voxels[index(x, y, z)]; }
  uint8_t& at(int64_t x, int64_t y, int64_t z) { return voxels[index(x, y, z)]; }

  void validate() const {
    meta.validate();
    if (class_count < 1)
      throw InputError("LabelGrid3D: class_count must be >= 1");
    if (static_cast<int64_t>(voxels.size()) != meta.voxel_count())
      throw InputError("LabelGrid3D: voxel count does not match dims");
    for (uint8_t v : voxels)
      if (v >= class_count) throw InputError("LabelGrid3D: voxel ID out of range");
  }
};

struct ProbGrid4D {
  GridMeta meta;
  int class_count = 4;
  std::vector<float> voxels;  // channel-fastest, per-voxel simplex

  static constexpr double kSimplexTol = 1e-5;

  int64_t index(int64_t x, int64_t y, int64_t z, int c) const {
    return ((z * meta.dims[1] + y) * meta.dims[0] + x) * class_count + c;
  }
  float at(int64_t x, int64_t y, int64_t z, int c) const {
    return voxels[index(x, y, z, c)];
  }
  float& at(int64_t x, int64_t y, int64_t z, int c) {
    return voxels[index(x, y, z, c)];
  }

  void validate() const {
    meta.validate();
    if (class_count < 2)
      throw InputError("ProbGrid4D: class_count must be >= 2");
    const int64_t n = meta.voxel_count();
    if (static_cast<int64_t>(voxels.size()) != n * class_count)
      throw InputError("ProbGrid4D: voxel count does not match dims * class_count");
    for (int64_t i = 0; i < n; ++i) {
      double sum = 0.0;
      for (int c = 0; c < class_count; ++c) {
        const float p = voxels[i * class_count + c];
        if (!(p >= 0.0f) || !(p <= 1.0f))
          throw InputError("ProbGrid4D: probability outside [0,1]");
        sum += p;
      }
      if (std::abs(sum - 1.0) > kSimplexTol)
        throw InputError("ProbGrid4D: per-voxel channel sum deviates from 1");
    }
  }
};

inline VoxelGrid3D make_grid(std::array<int64_t, 3> dims,
                             std::array<double, 3> spacing, float fill = 0.0f) {
  VoxelGrid3D g;
  g.meta.dims = dims;
  g.meta.spacing = spacing;
  g.voxels.assign(static_cast<size_t>(g.meta.voxel_count()), fill);
  return g;
}

inline LabelGrid3D make_labels(std::array<int64_t, 3> dims,
                               std::array<double, 3> spacing, int class_count = 4,
                               uint8_t fill = 0) {
  LabelGrid3D g;
  g.meta.dims = dims;
  g.meta.spacing = spacing;
  g.class_count = class_count;
  g.voxels.assign(static_cast<size_t>(g.meta.voxel_count()), fill);
  return g;
}

inline ProbGrid4D make_probs(std::array<int64_t, 3> dims,
                             std::array<double, 3> spacing, int class_count = 4) {
  ProbGrid4D g;
  g.meta.dims = dims;
  g.meta.spacing = spacing;
  g.class_count = class_count;
  g.voxels.assign(static_cast<size_t>(g.meta.voxel_count()) * class_count, 0.0f);
  return g;
}

}  // namespace mscmr

#endif  // MSCMR_CORE_HPP
