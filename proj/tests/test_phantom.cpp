#include <catch2/catch_amalgamated.hpp>

#include "mscmr/phantom.hpp"
#include "mscmr/postprocess.hpp"

using namespace mscmr;
using namespace mscmr::phantom;

TEST_CASE("same seed reproduces identical volumes") {
  PhantomSpec spec;
  spec.noise_sigma = 15.0;
  const auto a = generate(spec, 777);
  const auto b = generate(spec, 777);
  CHECK(a.bssfp.voxels == b.bssfp.voxels);
  CHECK(a.lge.voxels == b.lge.voxels);
  CHECK(a.labels.voxels == b.labels.voxels);
  const auto c = generate(spec, 778);
  CHECK(a.bssfp.voxels != c.bssfp.voxels);
}

TEST_CASE("zero noise gives piecewise-constant intensities") {
  PhantomSpec spec;
  const auto p = generate(spec, 1);
  for (size_t i = 0; i < p.labels.voxels.size(); ++i) {
    switch (p.labels.voxels[i]) {
      case 0: CHECK(p.bssfp.voxels[i] == spec.bssfp_background); break;
      case 1:
      case 2: CHECK(p.bssfp.voxels[i] == spec.bssfp_blood); break;
      case 3: CHECK(p.bssfp.voxels[i] == spec.bssfp_myo); break;
    }
    if (p.labels.voxels[i] == 3) CHECK(p.lge.voxels[i] == spec.lge_myo);
  }
}

TEST_CASE("labels are geometrically consistent") {
  PhantomSpec spec;
  const auto p = generate(spec, 5);
  p.labels.validate();

  // all four classes present
  std::array<int64_t, 4> counts{};
  for (uint8_t v : p.labels.voxels) ++counts[v];
  for (int c = 0; c < 4; ++c) CHECK(counts[static_cast<size_t>(c)] > 0);

  // each class is one 26-connected component (so LVM forms a closed ring)
  const int64_t n = p.labels.meta.voxel_count();
  std::vector<uint8_t> mask(static_cast<size_t>(n));
  for (int c = 1; c < 4; ++c) {
    for (int64_t i = 0; i < n; ++i)
      mask[static_cast<size_t>(i)] = p.labels.voxels[static_cast<size_t>(i)] == c;
    const auto cs = postprocess::connected_components(
        mask, p.labels.meta, postprocess::Connectivity::Full26);
    CHECK(cs.components.size() == 1);
  }

  // RV is not adjacent to LV or LVM (disjoint structures)
  for (int64_t z = 0; z < spec.dims[2]; ++z)
    for (int64_t y = 1; y + 1 < spec.dims[1]; ++y)
      for (int64_t x = 1; x + 1 < spec.dims[0]; ++x) {
        if (p.labels.at(x, y, z) != 1) continue;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const uint8_t nb = p.labels.at(x + dx, y + dy, z);
            CHECK((nb == 0 || nb == 1));
          }
      }
}

TEST_CASE("oversized radii are rejected") {
  PhantomSpec spec;
  spec.dims = {24, 24, 4};
  spec.lv_radius = 10.0;
  spec.rv_radius = 8.0;
  CHECK_THROWS_AS(generate(spec, 1), InputError);
}
