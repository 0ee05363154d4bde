// Finite-difference verification of the analytic weighted cross-entropy
// gradient. Central differences of the loss at h = 1e-4, compared per
// component in relative terms.

#ifndef MSCMR_GRADCHECK_HPP
#define MSCMR_GRADCHECK_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>

#include "mscmr/core.hpp"
#include "mscmr/loss.hpp"

namespace mscmr {
namespace gradcheck {

struct Result {
  int cases = 0;
  double max_rel_err = 0.0;
  bool passed = false;
};

struct Options {
  int cases = 100;
  double step = 1e-4;
  double tolerance = 1e-5;
  int max_dim = 4;          // grids up to max_dim^3
  double p_lo = 0.05, p_hi = 0.95;
  bool corrupt = false;     // negative-control hook: perturbs the gradient
};

// Random simplex-valid probabilities with every channel in [p_lo, p_hi]
// after normalization would be fiddly; instead draw raw channel values in
// [p_lo, p_hi] and skip the simplex constraint. The loss only reads the
// true-class channel, and finite differences perturb one channel at a time,
// so the check is exact without simplex projection.
inline Result run(uint64_t seed, const Options& opt = {}) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> up(opt.p_lo, opt.p_hi);
  std::uniform_int_distribution<int64_t> ud(1, opt.max_dim);
  Result res;
  res.cases = opt.cases;
  const int C = 4;
  for (int k = 0; k < opt.cases; ++k) {
    const std::array<int64_t, 3> dims{ud(rng), ud(rng), ud(rng)};
    ProbGrid4D prob = make_probs(dims, {1, 1, 1}, C);
    LabelGrid3D labels = make_labels(dims, {1, 1, 1}, C);
    for (float& v : prob.voxels) v = static_cast<float>(up(rng));
    std::uniform_int_distribution<int> uc(0, C - 1);
    for (uint8_t& v : labels.voxels) v = static_cast<uint8_t>(uc(rng));
    const loss::ClassWeights w = loss::class_weights(labels);
    const loss::Reduction red = (k % 2 == 0) ? loss::Reduction::Sum : loss::Reduction::Mean;

    auto grad = loss::weighted_ce_gradient(prob, labels, w, red);
    if (opt.corrupt && !grad.empty()) grad[0] += 0.5;

    for (size_t j = 0; j < grad.size(); ++j) {
      const float orig = prob.voxels[j];
      // Divide by the realized float step, not the nominal one, so storage
      // rounding does not pollute the difference quotient.
      const float vp = static_cast<float>(orig + opt.step);
      const float vm = static_cast<float>(orig - opt.step);
      prob.voxels[j] = vp;
      const double fp = loss::weighted_cross_entropy(prob, labels, w, red);
      prob.voxels[j] = vm;
      const double fm = loss::weighted_cross_entropy(prob, labels, w, red);
      prob.voxels[j] = orig;
      const double fd = (fp - fm) / (static_cast<double>(vp) - static_cast<double>(vm));
      const double denom = std::max({std::abs(fd), std::abs(grad[j]), 1e-12});
      const double rel = std::abs(fd - grad[j]) / denom;
      res.max_rel_err = std::max(res.max_rel_err, rel);
    }
  }
  res.passed = res.max_rel_err <= opt.tolerance;
  return res;
}

}  // namespace gradcheck
}  // namespace mscmr

#endif  // MSCMR_GRADCHECK_HPP
