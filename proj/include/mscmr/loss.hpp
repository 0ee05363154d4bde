// Weighted cross-entropy over label grids, with class-frequency weights and
// an analytic gradient for finite-difference verification.
//
//   wCE = -sum_c w_c * sum_i [label_i == c] * log p_{i,c}
//   w_c = (#voxels of class c) / (#voxels)         (frequency weights)
//
// Sum reduction is the formula as written; mean divides by the voxel count.
// Note the frequency weights UP-weight frequent classes; the conventional
// inverse-frequency variant is available behind `WeightMode::Inverse`.

#ifndef MSCMR_LOSS_HPP
#define MSCMR_LOSS_HPP

#include <algorithm>
#include <cmath>
#include <vector>

#include "mscmr/core.hpp"

namespace mscmr {
namespace loss {

struct ClassWeights {
  std::vector<double> w;
};

enum class WeightMode { Frequency, Inverse };
enum class Reduction { Sum, Mean };

// Probabilities are clamped to [kProbEps, 1] before the log; this is the
// only numerical guard in the module.
constexpr double kProbEps = 1e-12;

inline ClassWeights class_weights(const std::vector<const LabelGrid3D*>& label_sets,
                                  WeightMode mode = WeightMode::Frequency) {
  if (label_sets.empty()) throw InputError("class_weights: no label volumes");
  const int C = label_sets[0]->class_count;
  std::vector<int64_t> counts(static_cast<size_t>(C), 0);
  int64_t total = 0;
  for (const LabelGrid3D* g : label_sets) {
    if (g->class_count != C)
      throw InputError("class_weights: class_count mismatch across volumes");
    for (uint8_t v : g->voxels) ++counts[v];
    total += g->meta.voxel_count();
  }
  if (total == 0) throw InputError("class_weights: empty label set");
  ClassWeights cw;
  cw.w.resize(static_cast<size_t>(C));
  for (int c = 0; c < C; ++c) {
    const double freq = static_cast<double>(counts[static_cast<size_t>(c)]) /
                        static_cast<double>(total);
    if (mode == WeightMode::Frequency) {
      cw.w[static_cast<size_t>(c)] = freq;
    } else {
      // inverse-frequency, normalized to sum 1; absent classes get weight 0
      cw.w[static_cast<size_t>(c)] = freq > 0.0 ? 1.0 / freq : 0.0;
    }
  }
  if (mode == WeightMode::Inverse) {
    double s = 0.0;
    for (double v : cw.w) s += v;
    if (s > 0.0)
      for (double& v : cw.w) v /= s;
  }
  return cw;
}

inline ClassWeights class_weights(const LabelGrid3D& labels,
                                  WeightMode mode = WeightMode::Frequency) {
  return class_weights(std::vector<const LabelGrid3D*>{&labels}, mode);
}

namespace detail {

inline void check_shapes(const ProbGrid4D& prob, const LabelGrid3D& labels,
                         const ClassWeights& weights) {
  if (!prob.meta.same_dims(labels.meta))
    throw InputError("weighted_cross_entropy: prob/label dims mismatch");
  if (static_cast<int>(weights.w.size()) != prob.class_count)
    throw InputError("weighted_cross_entropy: weight vector length != class_count");
  if (labels.class_count > prob.class_count)
    throw InputError("weighted_cross_entropy: label class_count exceeds prob channels");
}

}  // namespace detail

// Deterministic regardless of thread count: single fixed-order accumulation.
inline double weighted_cross_entropy(const ProbGrid4D& prob, const LabelGrid3D& labels,
                                     const ClassWeights& weights,
                                     Reduction reduction = Reduction::Sum) {
  detail::check_shapes(prob, labels, weights);
  const int64_t n = prob.meta.voxel_count();
  const int C = prob.class_count;
  double acc = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    const int c = labels.voxels[static_cast<size_t>(i)];
    const double p =
        std::max(static_cast<double>(prob.voxels[i * C + c]), kProbEps);
    acc -= weights.w[static_cast<size_t>(c)] * std::log(std::min(p, 1.0));
  }
  if (reduction == Reduction::Mean) acc /= static_cast<double>(n);
  return acc;
}

// d wCE / d p_{i,c} = -w_c / p_{i,c} on the true-class channel, 0 elsewhere
// (divided by N for mean reduction). Returned in the same channel-fastest
// layout as ProbGrid4D, as doubles.
inline std::vector<double> weighted_ce_gradient(const ProbGrid4D& prob,
                                                const LabelGrid3D& labels,
                                                const ClassWeights& weights,
                                                Reduction reduction = Reduction::Sum) {
  detail::check_shapes(prob, labels, weights);
  const int64_t n = prob.meta.voxel_count();
  const int C = prob.class_count;
  const double scale =
      reduction == Reduction::Mean ? 1.0 / static_cast<double>(n) : 1.0;
  std::vector<double> grad(static_cast<size_t>(n) * C, 0.0);
  for (int64_t i = 0; i < n; ++i) {
    const int c = labels.voxels[static_cast<size_t>(i)];
    const double p =
        std::max(static_cast<double>(prob.voxels[i * C + c]), kProbEps);
    grad[static_cast<size_t>(i * C + c)] =
        -scale * weights.w[static_cast<size_t>(c)] / p;
  }
  return grad;
}

}  // namespace loss
}  // namespace mscmr

#endif  // MSCMR_LOSS_HPP
