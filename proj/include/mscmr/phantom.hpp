// Synthetic cardiac-like phantoms: a desk-scale stand-in for real CMR data.
// Each slice holds an LV disk, an LVM ring around it, and a separate RV
// blob; b-SSFP-like and LGE-like intensity regimes share the geometry.
// Deterministic for a given seed.

#ifndef MSCMR_PHANTOM_HPP
#define MSCMR_PHANTOM_HPP

#include <cmath>
#include <cstdint>
#include <random>

#include "mscmr/core.hpp"

namespace mscmr {
namespace phantom {

struct PhantomSpec {
  std::array<int64_t, 3> dims{64, 64, 8};
  std::array<double, 3> spacing{1.25, 1.25, 10.0};
  double lv_radius = 8.0;       // voxels, in-plane
  double lvm_thickness = 4.0;   // ring width around the LV
  double rv_radius = 6.0;       // blob left of the ring
  double noise_sigma = 0.0;     // additive gaussian, intensity units
  // Intensity regimes: blood pool bright on b-SSFP, myocardium dark on LGE.
  float bssfp_background = 100.0f, bssfp_blood = 800.0f, bssfp_myo = 300.0f;
  float lge_background = 80.0f, lge_blood = 500.0f, lge_myo = 150.0f;

  void validate() const {
    GridMeta m{dims, spacing};
    m.validate();
    const double outer = lv_radius + lvm_thickness;
    const double half_x = static_cast<double>(dims[0]) / 2.0;
    const double half_y = static_cast<double>(dims[1]) / 2.0;
    if (lv_radius <= 0 || lvm_thickness <= 0 || rv_radius <= 0)
      throw InputError("phantom: radii must be positive");
    if (outer + 2.0 * rv_radius + 2.0 >= half_x || outer >= half_y - 1.0)
      throw InputError("phantom: radii exceed volume dims");
  }
};

struct PhantomPair {
  VoxelGrid3D bssfp;
  VoxelGrid3D lge;
  LabelGrid3D labels;  // 0=background, 1=RV, 2=LV, 3=LVM
};

namespace detail {

// Portable gaussian (Box-Muller over explicit uniforms) so outputs do not
// depend on the standard library's distribution implementation.
class Gaussian {
public:
  explicit Gaussian(uint64_t seed) : rng_(seed) {}
  double next() {
    if (have_) {
      have_ = false;
      return cached_;
    }
    double u1, u2;
    do {
      u1 = uniform();
    } while (u1 <= 1e-300);
    u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    cached_ = r * std::sin(theta);
    have_ = true;
    return r * std::cos(theta);
  }

private:
  double uniform() {
    return (rng_() >> 11) * 0x1.0p-53;
  }
  std::mt19937_64 rng_;
  bool have_ = false;
  double cached_ = 0.0;
};

}  // namespace detail

inline PhantomPair generate(const PhantomSpec& spec, uint64_t seed) {
  spec.validate();
  PhantomPair out;
  out.bssfp = make_grid(spec.dims, spec.spacing, spec.bssfp_background);
  out.lge = make_grid(spec.dims, spec.spacing, spec.lge_background);
  out.labels = make_labels(spec.dims, spec.spacing, 4, 0);

  const double cx = static_cast<double>(spec.dims[0]) * 0.5 + spec.rv_radius;
  const double cy = static_cast<double>(spec.dims[1]) * 0.5;
  const double outer = spec.lv_radius + spec.lvm_thickness;
  // RV center sits left of the LVM ring with a one-voxel gap so the classes
  // stay disjoint and non-adjacent.
  const double rv_cx = cx - outer - spec.rv_radius - 2.0;

  for (int64_t z = 0; z < spec.dims[2]; ++z)
    for (int64_t y = 0; y < spec.dims[1]; ++y)
      for (int64_t x = 0; x < spec.dims[0]; ++x) {
        const double dx = static_cast<double>(x) - cx;
        const double dy = static_cast<double>(y) - cy;
        const double r = std::sqrt(dx * dx + dy * dy);
        const double rv_dx = static_cast<double>(x) - rv_cx;
        uint8_t label = 0;
        float b = spec.bssfp_background, l = spec.lge_background;
        if (r <= spec.lv_radius) {
          label = 2;  // LV blood pool
          b = spec.bssfp_blood;
          l = spec.lge_blood;
        } else if (r <= outer) {
          label = 3;  // myocardium ring
          b = spec.bssfp_myo;
          l = spec.lge_myo;
        } else if (std::sqrt(rv_dx * rv_dx + dy * dy) <= spec.rv_radius) {
          label = 1;  // RV blood pool
          b = spec.bssfp_blood;
          l = spec.lge_blood;
        }
        out.labels.at(x, y, z) = label;
        out.bssfp.at(x, y, z) = b;
        out.lge.at(x, y, z) = l;
      }

  if (spec.noise_sigma > 0.0) {
    detail::Gaussian g(seed);
    for (float& v : out.bssfp.voxels)
      v += static_cast<float>(spec.noise_sigma * g.next());
    for (float& v : out.lge.voxels)
      v += static_cast<float>(spec.noise_sigma * g.next());
  }
  return out;
}

}  // namespace phantom
}  // namespace mscmr

#endif  // MSCMR_PHANTOM_HPP
