#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <set>

#include "mscmr/geometry.hpp"
#include "oracles.hpp"

using namespace mscmr;
using namespace mscmr::geometry;

TEST_CASE("resample to identical dims is the identity") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  auto g = make_grid({7, 5, 3}, {1, 1, 1});
  for (auto& v : g.voxels) v = u(rng);
  for (Interp interp : {Interp::Linear, Interp::Nearest}) {
    const auto out = resample_volume(g, g.meta.dims, interp);
    CHECK(out.voxels == g.voxels);
  }
}

TEST_CASE("linear resample of a constant volume stays constant") {
  const auto g = make_grid({6, 6, 4}, {1, 1, 1}, 7.0f);
  const auto out = resample_volume(g, {11, 3, 9}, Interp::Linear);
  for (float v : out.voxels) CHECK(v == 7.0f);
}

TEST_CASE("nearest upsampling duplicates with round-half-down") {
  // [A, B] -> length 4 should give [A, A, B, B] under
  // round((i+0.5)*2/4 - 0.5) with halves rounding down.
  auto g = make_labels({2, 1, 1}, {1, 1, 1}, 4);
  g.voxels = {1, 2};
  const auto out = resample_labels(g, {4, 1, 1});
  CHECK(out.voxels == std::vector<uint8_t>{1, 1, 2, 2});
}

TEST_CASE("resampled spacing rescales by old_dim/new_dim") {
  const auto g = make_grid({8, 8, 4}, {1.0, 2.0, 10.0});
  const auto out = resample_volume(g, {16, 4, 4}, Interp::Linear);
  CHECK(out.meta.spacing[0] == 0.5);
  CHECK(out.meta.spacing[1] == 4.0);
  CHECK(out.meta.spacing[2] == 10.0);
}

TEST_CASE("resize_slices keeps slice count and handles identity") {
  auto g = make_grid({256, 256, 5}, {1, 1, 8});
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<float> u(0.0f, 10.0f);
  for (auto& v : g.voxels) v = u(rng);
  const auto same = resize_slices(g, {256, 256});
  CHECK(same.voxels == g.voxels);

  const auto constant = resize_slices(make_grid({128, 128, 3}, {1, 1, 8}, 4.5f), {256, 256});
  CHECK(constant.meta.dims == std::array<int64_t, 3>{256, 256, 3});
  for (float v : constant.voxels) CHECK(v == 4.5f);
}

TEST_CASE("nearest 2x2 checkerboard upsamples into 2x2 blocks") {
  auto g = make_labels({2, 2, 1}, {1, 1, 1}, 4);
  g.voxels = {0, 1, 2, 3};
  const auto out = resize_slices(g, {4, 4});
  for (int64_t y = 0; y < 4; ++y)
    for (int64_t x = 0; x < 4; ++x)
      CHECK(out.at(x, y, 0) == g.at(x / 2, y / 2, 0));
}

TEST_CASE("center crop offsets and errors") {
  SECTION("256 -> 144 starts at 56") {
    const auto g = make_grid({256, 256, 2}, {1, 1, 1});
    const auto [cropped, rec] = center_crop(g, {144, 144});
    CHECK(rec.offsets == std::array<int64_t, 2>{56, 56});
    CHECK(cropped.meta.dims == std::array<int64_t, 3>{144, 144, 2});
  }
  SECTION("crop equal to input is identity") {
    auto g = make_grid({10, 12, 3}, {1, 1, 1});
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    for (auto& v : g.voxels) v = u(rng);
    const auto [cropped, rec] = center_crop(g, {10, 12});
    CHECK(rec.offsets == std::array<int64_t, 2>{0, 0});
    CHECK(cropped.voxels == g.voxels);
  }
  SECTION("crop larger than input fails") {
    const auto g = make_grid({100, 100, 1}, {1, 1, 1});
    CHECK_THROWS_AS(center_crop(g, {144, 144}), InputError);
  }
}

TEST_CASE("reconstruct_inverse undoes resize+crop for in-window labels") {
  // Original already 256x256, foreground well inside the crop window:
  // the composition is exact.
  auto labels = make_labels({256, 256, 3}, {1, 1, 8}, 4);
  for (int64_t z = 0; z < 3; ++z)
    for (int64_t y = 100; y < 140; ++y)
      for (int64_t x = 110; x < 150; ++x) labels.at(x, y, z) = static_cast<uint8_t>(1 + (x + y) % 3);
  const auto resized = resize_slices(labels, {256, 256});
  auto [cropped, rec] = center_crop(resized, {144, 144});
  rec.original_inplane_dims = {256, 256};
  const auto restored = reconstruct_inverse(cropped, rec);
  CHECK(restored.voxels == labels.voxels);
}

TEST_CASE("reconstruct_inverse places a crop-local voxel at the padded offset") {
  auto cropped = make_labels({144, 144, 1}, {1, 1, 1}, 4);
  cropped.at(0, 0, 0) = 2;
  CropRecord rec;
  rec.pre_crop_dims = {256, 256};
  rec.offsets = {56, 56};
  rec.original_inplane_dims = {256, 256};
  const auto restored = reconstruct_inverse(cropped, rec);
  CHECK(restored.at(56, 56, 0) == 2);
  int64_t fg = 0;
  for (uint8_t v : restored.voxels) fg += v != 0;
  CHECK(fg == 1);
}

TEST_CASE("all-background stays background through reconstruction") {
  const auto cropped = make_labels({144, 144, 2}, {1, 1, 1}, 4);
  CropRecord rec;
  rec.pre_crop_dims = {256, 256};
  rec.offsets = {56, 56};
  rec.original_inplane_dims = {200, 180};
  const auto restored = reconstruct_inverse(cropped, rec);
  CHECK(restored.meta.dims == std::array<int64_t, 3>{200, 180, 2});
  for (uint8_t v : restored.voxels) CHECK(v == 0);
}

TEST_CASE("reconstruct_inverse rejects mismatched records") {
  const auto cropped = make_labels({144, 144, 1}, {1, 1, 1}, 4);
  CropRecord rec;
  rec.pre_crop_dims = {100, 100};  // smaller than the grid being padded
  rec.offsets = {0, 0};
  rec.original_inplane_dims = {100, 100};
  CHECK_THROWS_AS(reconstruct_inverse(cropped, rec), InputError);
}

TEST_CASE("nearest resampling preserves the label set") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    std::uniform_int_distribution<int64_t> ud(1, 12);
    const auto g = oracles::random_labels(rng, {ud(rng), ud(rng), ud(rng)}, {1, 1, 1});
    const auto out = resample_labels(g, {ud(rng), ud(rng), ud(rng)});
    std::set<uint8_t> in_set(g.voxels.begin(), g.voxels.end());
    for (uint8_t v : out.voxels) CHECK(in_set.count(v) == 1);
  }
}

TEST_CASE("linear resampling stays within the input range") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<float> u(-50.0f, 50.0f);
  for (int trial = 0; trial < 20; ++trial) {
    std::uniform_int_distribution<int64_t> ud(1, 12);
    auto g = make_grid({ud(rng), ud(rng), ud(rng)}, {1, 1, 1});
    for (auto& v : g.voxels) v = u(rng);
    const auto [mn, mx] = std::minmax_element(g.voxels.begin(), g.voxels.end());
    const auto out = resample_volume(g, {ud(rng), ud(rng), ud(rng)}, Interp::Linear);
    const float tol = 1e-4f;
    for (float v : out.voxels) {
      CHECK(v >= *mn - tol);
      CHECK(v <= *mx + tol);
    }
  }
}

TEST_CASE("crop then pad is identity on the window, background elsewhere") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    std::uniform_int_distribution<int64_t> ud(4, 16);
    const std::array<int64_t, 3> dims{ud(rng), ud(rng), ud(rng)};
    const auto g = oracles::random_labels(rng, dims, {1, 1, 1});
    std::uniform_int_distribution<int64_t> cx(1, dims[0]), cy(1, dims[1]);
    auto [cropped, rec] = center_crop(g, {cx(rng), cy(rng)});
    const auto back = reconstruct_inverse(cropped, rec);
    REQUIRE(back.meta.dims == g.meta.dims);
    for (int64_t z = 0; z < dims[2]; ++z)
      for (int64_t y = 0; y < dims[1]; ++y)
        for (int64_t x = 0; x < dims[0]; ++x) {
          const bool inside = x >= rec.offsets[0] &&
                              x < rec.offsets[0] + cropped.meta.dims[0] &&
                              y >= rec.offsets[1] &&
                              y < rec.offsets[1] + cropped.meta.dims[1];
          CHECK(back.at(x, y, z) == (inside ? g.at(x, y, z) : 0));
        }
  }
}

TEST_CASE("probability reconstruction stays simplex-valid") {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<float> u(0.05f, 1.0f);
  auto p = make_probs({6, 6, 2}, {1, 1, 1}, 4);
  for (int64_t i = 0; i < p.meta.voxel_count(); ++i) {
    float sum = 0.0f;
    for (int c = 0; c < 4; ++c) sum += (p.voxels[i * 4 + c] = u(rng));
    for (int c = 0; c < 4; ++c) p.voxels[i * 4 + c] /= sum;
  }
  const auto out = resample_probs(p, {9, 5, 3});
  out.validate();
}
