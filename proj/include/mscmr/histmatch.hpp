// Per-slice histogram matching: remap a b-SSFP slice's intensities so its
// CDF approximates a target LGE slice's CDF. Labels are never touched.

#ifndef MSCMR_HISTMATCH_HPP
#define MSCMR_HISTMATCH_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mscmr/core.hpp"

namespace mscmr {
namespace histmatch {

struct Histogram {
  int bin_count = 256;
  double lo = 0.0, hi = 1.0;   // intensity range, hi > lo
  std::vector<int64_t> counts; // one per bin
  int64_t total = 0;

  double bin_width() const { return (hi - lo) / bin_count; }
  double bin_center(int b) const { return lo + (b + 0.5) * bin_width(); }

  int bin_of(double v) const {
    const double clamped = std::clamp(v, lo, hi);
    int b = static_cast<int>((clamped - lo) / bin_width());
    return std::clamp(b, 0, bin_count - 1);
  }

  // CDF at bin b inclusive, in [0,1], nondecreasing, ends at 1.
  std::vector<double> cdf() const {
    std::vector<double> c(counts.size());
    int64_t acc = 0;
    for (size_t i = 0; i < counts.size(); ++i) {
      acc += counts[i];
      c[i] = static_cast<double>(acc) / static_cast<double>(total);
    }
    return c;
  }
};

struct CdfMapping {
  std::vector<double> lut;  // target intensity per source bin, nondecreasing
};

inline Histogram compute_histogram(std::span<const float> slice, int bin_count = 256,
                                   std::optional<std::pair<double, double>> range = {}) {
  if (slice.empty()) throw InputError("compute_histogram: empty slice");
  if (bin_count < 2) throw InputError("compute_histogram: need >= 2 bins");
  Histogram h;
  h.bin_count = bin_count;
  if (range) {
    h.lo = range->first;
    h.hi = range->second;
  } else {
    auto [mn, mx] = std::minmax_element(slice.begin(), slice.end());
    h.lo = *mn;
    h.hi = *mx;
  }
  if (!(h.hi > h.lo)) h.hi = h.lo + 1.0;  // degenerate constant slice
  h.counts.assign(bin_count, 0);
  for (float v : slice) ++h.counts[h.bin_of(v)];
  h.total = static_cast<int64_t>(slice.size());
  return h;
}

inline bool is_degenerate(const Histogram& h) {
  // A single populated bin, i.e. the slice was constant (or binned as such).
  int populated = 0;
  for (int64_t c : h.counts)
    if (c > 0) ++populated;
  return populated <= 1;
}

// Classic CDF matching: each source bin maps to the center of the smallest
// target bin whose CDF reaches the source bin's CDF.
inline CdfMapping build_mapping(const Histogram& source, const Histogram& target) {
  const auto cs = source.cdf();
  const auto ct = target.cdf();
  CdfMapping m;
  m.lut.resize(static_cast<size_t>(source.bin_count));
  int t = 0;
  for (int s = 0; s < source.bin_count; ++s) {
    while (t < target.bin_count - 1 && ct[t] < cs[s] - 1e-15) ++t;
    m.lut[static_cast<size_t>(s)] = target.bin_center(t);
  }
  return m;
}

inline std::vector<float> apply_mapping(std::span<const float> slice,
                                        const Histogram& source_hist,
                                        const CdfMapping& m) {
  std::vector<float> out(slice.size());
  for (size_t i = 0; i < slice.size(); ++i)
    out[i] = static_cast<float>(m.lut[static_cast<size_t>(source_hist.bin_of(slice[i]))]);
  return out;
}

// Median intensity of a histogram (first bin where the CDF crosses 0.5).
inline double histogram_median(const Histogram& h) {
  int64_t acc = 0;
  for (int b = 0; b < h.bin_count; ++b) {
    acc += h.counts[static_cast<size_t>(b)];
    if (2 * acc >= h.total) return h.bin_center(b);
  }
  return h.bin_center(h.bin_count - 1);
}

// Match one source slice against one target slice. A constant source slice
// carries no rank information, so it maps to the target's median intensity.
inline std::vector<float> match_slice(std::span<const float> source,
                                      std::span<const float> target, int bin_count = 256) {
  const Histogram hs = compute_histogram(source, bin_count);
  const Histogram ht = compute_histogram(target, bin_count);
  if (is_degenerate(hs))
    return std::vector<float>(source.size(), static_cast<float>(histogram_median(ht)));
  return apply_mapping(source, hs, build_mapping(hs, ht));
}

// Fake-LGE synthesis: slice k of the b-SSFP volume is matched against the
// histogram of slice k of the (already resampled) LGE volume. Labels pass
// through untouched.
inline std::pair<VoxelGrid3D, LabelGrid3D> make_fake_lge(const VoxelGrid3D& bssfp,
                                                         const LabelGrid3D& bssfp_labels,
                                                         const VoxelGrid3D& lge,
                                                         int bin_count = 256) {
  if (!bssfp.meta.same_dims(lge.meta))
    throw InputError("make_fake_lge: LGE must be resampled to the b-SSFP grid first");
  if (!bssfp.meta.same_dims(bssfp_labels.meta))
    throw InputError("make_fake_lge: labels do not match the b-SSFP grid");
  VoxelGrid3D out;
  out.meta = bssfp.meta;
  out.voxels.resize(bssfp.voxels.size());
  const int64_t slice_len = bssfp.meta.dims[0] * bssfp.meta.dims[1];
  for (int64_t z = 0; z < bssfp.meta.dims[2]; ++z) {
    const size_t off = static_cast<size_t>(z * slice_len);
    const auto matched = match_slice(
        std::span<const float>(bssfp.voxels.data() + off, static_cast<size_t>(slice_len)),
        std::span<const float>(lge.voxels.data() + off, static_cast<size_t>(slice_len)),
        bin_count);
    std::copy(matched.begin(), matched.end(), out.voxels.begin() + off);
  }
  return {std::move(out), bssfp_labels};
}

}  // namespace histmatch
}  // namespace mscmr

#endif  // MSCMR_HISTMATCH_HPP
