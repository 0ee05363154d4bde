// Ensemble averaging, argmax labeling, and per-class largest-connected-
// component cleanup. All tie-breaking is deterministic so pipeline outputs
// are reproducible byte-for-byte.

#ifndef MSCMR_POSTPROCESS_HPP
#define MSCMR_POSTPROCESS_HPP

#include <algorithm>
#include <array>
#include <cstdint>
#include <numeric>
#include <vector>

#include "mscmr/core.hpp"

namespace mscmr {
namespace postprocess {

enum class Connectivity {
  Face6,    // 3D, face neighbors
  Full26,   // 3D, face+edge+corner neighbors
  Slice4,   // per-slice 2D, edge neighbors
  Slice8,   // per-slice 2D, edge+corner neighbors
};

inline ProbGrid4D ensemble_mean(const std::vector<ProbGrid4D>& predictions) {
  if (predictions.empty()) throw InputError("ensemble_mean: empty prediction list");
  const ProbGrid4D& first = predictions[0];
  for (const auto& p : predictions) {
    if (!p.meta.same_dims(first.meta) || p.class_count != first.class_count)
      throw InputError("ensemble_mean: prediction shape mismatch");
  }
  ProbGrid4D out;
  out.meta = first.meta;
  out.class_count = first.class_count;
  out.voxels.resize(first.voxels.size());
  const double inv_k = 1.0 / static_cast<double>(predictions.size());
  for (size_t i = 0; i < out.voxels.size(); ++i) {
    double acc = 0.0;
    for (const auto& p : predictions) acc += p.voxels[i];
    out.voxels[i] = static_cast<float>(acc * inv_k);
  }
  return out;
}

// Ties go to the lowest class index.
inline LabelGrid3D argmax_labels(const ProbGrid4D& prob) {
  LabelGrid3D out;
  out.meta = prob.meta;
  out.class_count = prob.class_count;
  const int64_t n = prob.meta.voxel_count();
  const int C = prob.class_count;
  out.voxels.resize(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) {
    int best = 0;
    float best_p = prob.voxels[i * C];
    for (int c = 1; c < C; ++c) {
      const float p = prob.voxels[i * C + c];
      if (p > best_p) {
        best = c;
        best_p = p;
      }
    }
    out.voxels[static_cast<size_t>(i)] = static_cast<uint8_t>(best);
  }
  return out;
}

// Alternative ensemble mode: per-member argmax, then plurality vote per
// voxel. Vote ties break toward the lowest class index.
inline LabelGrid3D majority_vote_labels(const std::vector<ProbGrid4D>& predictions) {
  if (predictions.empty()) throw InputError("majority_vote_labels: empty prediction list");
  std::vector<LabelGrid3D> votes;
  votes.reserve(predictions.size());
  for (const auto& p : predictions) votes.push_back(argmax_labels(p));
  const int64_t n = votes[0].meta.voxel_count();
  const int C = votes[0].class_count;
  for (const auto& v : votes)
    if (!v.meta.same_dims(votes[0].meta))
      throw InputError("majority_vote_labels: prediction shape mismatch");
  LabelGrid3D out = votes[0];
  std::vector<int> tally(static_cast<size_t>(C));
  for (int64_t i = 0; i < n; ++i) {
    std::fill(tally.begin(), tally.end(), 0);
    for (const auto& v : votes) ++tally[v.voxels[static_cast<size_t>(i)]];
    int best = 0;
    for (int c = 1; c < C; ++c)
      if (tally[static_cast<size_t>(c)] > tally[static_cast<size_t>(best)]) best = c;
    out.voxels[static_cast<size_t>(i)] = static_cast<uint8_t>(best);
  }
  return out;
}

namespace detail {

inline std::vector<std::array<int, 3>> neighbor_offsets(Connectivity conn) {
  std::vector<std::array<int, 3>> offs;
  const bool slice_only = conn == Connectivity::Slice4 || conn == Connectivity::Slice8;
  const bool diagonal = conn == Connectivity::Full26 || conn == Connectivity::Slice8;
  for (int dz = -1; dz <= 1; ++dz)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0 && dz == 0) continue;
        if (slice_only && dz != 0) continue;
        const int manhattan = std::abs(dx) + std::abs(dy) + std::abs(dz);
        if (!diagonal && manhattan != 1) continue;
        offs.push_back({dx, dy, dz});
      }
  return offs;
}

struct UnionFind {
  std::vector<int64_t> parent;
  explicit UnionFind(int64_t n) : parent(static_cast<size_t>(n)) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int64_t find(int64_t a) {
    while (parent[static_cast<size_t>(a)] != a) {
      parent[static_cast<size_t>(a)] = parent[static_cast<size_t>(parent[static_cast<size_t>(a)])];
      a = parent[static_cast<size_t>(a)];
    }
    return a;
  }
  void unite(int64_t a, int64_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a > b) std::swap(a, b);  // keep the smaller index as root
    parent[static_cast<size_t>(b)] = a;
  }
};

}  // namespace detail

struct Component {
  std::vector<int64_t> voxels;  // flat indices, ascending
  int64_t size() const { return static_cast<int64_t>(voxels.size()); }
};

struct ComponentSet {
  Connectivity connectivity = Connectivity::Full26;
  // Ordered by size descending, ties by smallest contained voxel index.
  std::vector<Component> components;
};

// Union-find over a binary mask (mask[i] != 0 is foreground). A BFS
// flood-fill oracle for this lives in the test suite.
inline ComponentSet connected_components(const std::vector<uint8_t>& mask,
                                         const GridMeta& meta, Connectivity conn) {
  const int64_t nx = meta.dims[0], ny = meta.dims[1], nz = meta.dims[2];
  const int64_t n = nx * ny * nz;
  if (static_cast<int64_t>(mask.size()) != n)
    throw InputError("connected_components: mask size does not match dims");
  const auto offs = detail::neighbor_offsets(conn);
  detail::UnionFind uf(n);
  for (int64_t z = 0; z < nz; ++z)
    for (int64_t y = 0; y < ny; ++y)
      for (int64_t x = 0; x < nx; ++x) {
        const int64_t i = (z * ny + y) * nx + x;
        if (!mask[static_cast<size_t>(i)]) continue;
        for (const auto& o : offs) {
          const int64_t xx = x + o[0], yy = y + o[1], zz = z + o[2];
          if (xx < 0 || xx >= nx || yy < 0 || yy >= ny || zz < 0 || zz >= nz) continue;
          const int64_t j = (zz * ny + yy) * nx + xx;
          if (j < i && mask[static_cast<size_t>(j)]) uf.unite(i, j);
        }
      }
  // Gather by root; roots are the smallest index in each component, so
  // iterating ascending yields ascending voxel lists.
  std::vector<int64_t> root_slot(static_cast<size_t>(n), -1);
  ComponentSet cs;
  cs.connectivity = conn;
  for (int64_t i = 0; i < n; ++i) {
    if (!mask[static_cast<size_t>(i)]) continue;
    const int64_t r = uf.find(i);
    if (root_slot[static_cast<size_t>(r)] < 0) {
      root_slot[static_cast<size_t>(r)] = static_cast<int64_t>(cs.components.size());
      cs.components.emplace_back();
    }
    cs.components[static_cast<size_t>(root_slot[static_cast<size_t>(r)])].voxels.push_back(i);
  }
  std::stable_sort(cs.components.begin(), cs.components.end(),
                   [](const Component& a, const Component& b) {
                     if (a.size() != b.size()) return a.size() > b.size();
                     return a.voxels.front() < b.voxels.front();
                   });
  return cs;
}

// For each foreground class independently, keep only the largest component;
// everything else becomes background. Idempotent.
inline LabelGrid3D largest_component_per_class(const LabelGrid3D& labels,
                                               Connectivity conn) {
  LabelGrid3D out = labels;
  const int64_t n = labels.meta.voxel_count();
  std::vector<uint8_t> mask(static_cast<size_t>(n));
  for (int c = 1; c < labels.class_count; ++c) {
    bool any = false;
    for (int64_t i = 0; i < n; ++i) {
      const bool fg = labels.voxels[static_cast<size_t>(i)] == c;
      mask[static_cast<size_t>(i)] = fg ? 1 : 0;
      any = any || fg;
    }
    if (!any) continue;
    const ComponentSet cs = connected_components(mask, labels.meta, conn);
    for (size_t k = 1; k < cs.components.size(); ++k)
      for (int64_t i : cs.components[k].voxels)
        out.voxels[static_cast<size_t>(i)] = 0;
  }
  return out;
}

}  // namespace postprocess
}  // namespace mscmr

#endif  // MSCMR_POSTPROCESS_HPP
