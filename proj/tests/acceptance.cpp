// Acceptance suite: one pass/fail line per criterion, nonzero exit if any
// fails. All tolerances are fixed here, in code.

#include <chrono>
#include <cstdio>
#include <random>
#include <set>

#include "mscmr/core.hpp"
#include "mscmr/geometry.hpp"
#include "mscmr/gradcheck.hpp"
#include "mscmr/histmatch.hpp"
#include "mscmr/metrics.hpp"
#include "mscmr/phantom.hpp"
#include "mscmr/postprocess.hpp"
#include "mscmr/report.hpp"
#include "mscmr/volume_io.hpp"
#include "oracles.hpp"

using namespace mscmr;

namespace {

int g_failures = 0;

void report(const char* name, bool ok, double seconds) {
  std::printf("%-34s %s  (%.2fs)\n", name, ok ? "PASS" : "FAIL", seconds);
  if (!ok) ++g_failures;
}

template <typename F>
void criterion(const char* name, F&& body) {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = false;
  try {
    ok = body();
  } catch (const std::exception& e) {
    std::printf("  exception: %s\n", e.what());
  }
  const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report(name, ok, dt);
}

// 1 ------------------------------------------------------------------------

bool metric_oracle_equivalence() {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int64_t> ud(1, 12);
  std::uniform_real_distribution<double> us(0.5, 10.0);
  int pairs = 0;
  while (pairs < 200) {
    GridMeta meta{{ud(rng), ud(rng), ud(rng)}, {us(rng), us(rng), us(rng)}};
    const auto pred = oracles::random_labels(rng, meta.dims, meta.spacing, 4, 0.35);
    const auto gt = oracles::random_labels(rng, meta.dims, meta.spacing, 4, 0.35);
    ++pairs;
    for (int c = 1; c < 4; ++c) {
      const auto oc = metrics::overlap_counts(pred, gt, c);
      // exact rational formulas on integer counts
      const double d = metrics::dice(oc);
      const double j = metrics::jaccard(oc);
      if (oc.pred + oc.truth > 0 &&
          std::abs(d * (oc.pred + oc.truth) - 2.0 * oc.both) > 1e-9)
        return false;
      const int64_t uni = oc.pred + oc.truth - oc.both;
      if (uni > 0 && std::abs(j * uni - static_cast<double>(oc.both)) > 1e-9)
        return false;

      std::vector<uint8_t> mp(pred.voxels.size()), mg(gt.voxels.size());
      for (size_t i = 0; i < mp.size(); ++i) {
        mp[i] = pred.voxels[i] == c;
        mg[i] = gt.voxels[i] == c;
      }
      const auto sp = metrics::extract_surface(mp, meta);
      const auto sg = metrics::extract_surface(mg, meta);
      if (sp.flat_indices.empty() || sg.flat_indices.empty()) continue;
      const auto sd = metrics::surface_distances(sp, sg, meta);
      const auto oracle = oracles::brute_force_distances(sp.points_mm, sg.points_mm);
      if (std::abs(*sd.assd_mm - oracle.assd) > 1e-9) return false;
      if (std::abs(*sd.hausdorff_mm - oracle.hausdorff) > 1e-9) return false;
    }
  }
  return true;
}

// 2 ------------------------------------------------------------------------

bool gradient_verification() {
  gradcheck::Options opt;  // 100 cases, C=4, dims <= 4^3, h=1e-4, tol 1e-5
  const auto res = gradcheck::run(4242, opt);
  std::printf("  max relative error %.3e (tolerance 1e-5)\n", res.max_rel_err);
  return res.passed;
}

// 3 ------------------------------------------------------------------------

bool histogram_match_fidelity() {
  std::mt19937_64 rng(31337);
  const int B = 256;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 4096;
    std::uniform_real_distribution<float> usrc(0.0f, 500.0f + 10.0f * trial);
    std::uniform_real_distribution<float> utgt(50.0f, 300.0f);
    std::vector<float> source(n), target(n);
    for (auto& v : source) v = usrc(rng);
    for (auto& v : target) v = utgt(rng);
    if (std::set<float>(source.begin(), source.end()).size() < 256) return false;

    const auto hs = histmatch::compute_histogram(source, B);
    const auto ht = histmatch::compute_histogram(target, B);
    const auto mapping = histmatch::build_mapping(hs, ht);
    for (size_t s = 1; s < mapping.lut.size(); ++s)
      if (mapping.lut[s] < mapping.lut[s - 1]) return false;
    const auto out = histmatch::apply_mapping(source, hs, mapping);
    if (oracles::ks_distance(out, target) > 2.0 / B) return false;
  }
  // label invariance, bit-exact
  std::uniform_real_distribution<float> u(0.0f, 400.0f);
  auto bssfp = make_grid({32, 32, 4}, {1, 1, 8});
  auto lge = make_grid({32, 32, 4}, {1, 1, 8});
  for (auto& v : bssfp.voxels) v = u(rng);
  for (auto& v : lge.voxels) v = u(rng) * 0.5f + 100.0f;
  auto labels = make_labels({32, 32, 4}, {1, 1, 8}, 4);
  std::uniform_int_distribution<int> c(0, 3);
  for (auto& v : labels.voxels) v = static_cast<uint8_t>(c(rng));
  const auto [fake, out_labels] = histmatch::make_fake_lge(bssfp, labels, lge, B);
  return out_labels.voxels == labels.voxels;
}

// 4 ------------------------------------------------------------------------

bool geometry_round_trip() {
  std::mt19937_64 rng(515);
  for (int trial = 0; trial < 50; ++trial) {
    std::uniform_int_distribution<int64_t> uxy(32, 256), uz(1, 6);
    const std::array<int64_t, 3> dims{uxy(rng), uxy(rng), uz(rng)};
    auto labels = make_labels(dims, {1.5, 1.5, 8.0}, 4);
    // foreground confined to the central 40% so it survives the 144/256 crop
    std::uniform_int_distribution<int> cls(1, 3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int64_t x0 = dims[0] * 3 / 10, x1 = dims[0] * 7 / 10;
    const int64_t y0 = dims[1] * 3 / 10, y1 = dims[1] * 7 / 10;
    for (int64_t z = 0; z < dims[2]; ++z)
      for (int64_t y = y0; y < y1; ++y)
        for (int64_t x = x0; x < x1; ++x)
          if (u(rng) < 0.4) labels.at(x, y, z) = static_cast<uint8_t>(cls(rng));

    const auto resized = geometry::resize_slices(labels, {256, 256});
    // nearest resampling never invents label IDs
    std::set<uint8_t> in_set(labels.voxels.begin(), labels.voxels.end());
    for (uint8_t v : resized.voxels)
      if (!in_set.count(v)) return false;

    auto [cropped, rec] = geometry::center_crop(resized, {144, 144});
    rec.original_inplane_dims = {dims[0], dims[1]};
    const auto restored = geometry::reconstruct_inverse(cropped, rec);
    if (restored.meta.dims != labels.meta.dims) return false;
    if (restored.voxels != labels.voxels) return false;
  }
  return true;
}

// 5 ------------------------------------------------------------------------

bool same_partition(const postprocess::ComponentSet& cs, const std::vector<int>& oracle,
                    int64_t n) {
  std::vector<int> mine(static_cast<size_t>(n), -1);
  for (size_t k = 0; k < cs.components.size(); ++k)
    for (int64_t i : cs.components[k].voxels)
      mine[static_cast<size_t>(i)] = static_cast<int>(k);
  std::vector<int> fwd, bwd;
  fwd.assign(cs.components.size() + 1, -1);
  int max_oracle = -1;
  for (int v : oracle) max_oracle = std::max(max_oracle, v);
  bwd.assign(static_cast<size_t>(max_oracle + 2), -1);
  for (int64_t i = 0; i < n; ++i) {
    const int a = mine[static_cast<size_t>(i)], b = oracle[static_cast<size_t>(i)];
    if ((a < 0) != (b < 0)) return false;
    if (a < 0) continue;
    if (fwd[static_cast<size_t>(a)] < 0) fwd[static_cast<size_t>(a)] = b;
    else if (fwd[static_cast<size_t>(a)] != b) return false;
    if (bwd[static_cast<size_t>(b)] < 0) bwd[static_cast<size_t>(b)] = a;
    else if (bwd[static_cast<size_t>(b)] != a) return false;
  }
  return true;
}

bool connected_component_oracle() {
  std::mt19937_64 rng(616);
  std::vector<std::pair<std::array<int64_t, 3>, std::vector<uint8_t>>> cases;
  // 200 random masks
  std::uniform_int_distribution<int64_t> ud(1, 16);
  std::uniform_real_distribution<double> up(0.1, 0.9);
  for (int trial = 0; trial < 200; ++trial) {
    const std::array<int64_t, 3> dims{ud(rng), ud(rng), ud(rng)};
    cases.emplace_back(dims, oracles::random_mask(rng, dims[0] * dims[1] * dims[2], up(rng)));
  }
  // adversarial: checkerboards, diagonal chains, hollow shells
  {
    const std::array<int64_t, 3> dims{16, 16, 16};
    const int64_t n = 16 * 16 * 16;
    std::vector<uint8_t> checker(static_cast<size_t>(n)), checker2(static_cast<size_t>(n));
    std::vector<uint8_t> diag(static_cast<size_t>(n), 0), shell(static_cast<size_t>(n), 0);
    std::vector<uint8_t> slab(static_cast<size_t>(n), 0), cross(static_cast<size_t>(n), 0);
    for (int64_t z = 0; z < 16; ++z)
      for (int64_t y = 0; y < 16; ++y)
        for (int64_t x = 0; x < 16; ++x) {
          const size_t i = static_cast<size_t>((z * 16 + y) * 16 + x);
          checker[i] = (x + y + z) % 2;
          checker2[i] = ((x / 2) + (y / 2) + (z / 2)) % 2;
          if (x == y && y == z) diag[i] = 1;
          const bool border = x == 0 || x == 15 || y == 0 || y == 15 || z == 0 || z == 15;
          if (border) shell[i] = 1;
          if (z == 7 || z == 9) slab[i] = 1;
          if ((x == 7 && y == 7) || (y == 7 && z == 7)) cross[i] = 1;
        }
    cases.emplace_back(dims, checker);
    cases.emplace_back(dims, checker2);
    cases.emplace_back(dims, diag);
    cases.emplace_back(dims, shell);
    cases.emplace_back(dims, slab);
    cases.emplace_back(dims, cross);
  }
  {  // small hollow shells and diagonal chains at other sizes
    for (int64_t s : {4, 6, 8, 10}) {
      const std::array<int64_t, 3> dims{s, s, s};
      std::vector<uint8_t> shell(static_cast<size_t>(s * s * s), 0);
      for (int64_t z = 0; z < s; ++z)
        for (int64_t y = 0; y < s; ++y)
          for (int64_t x = 0; x < s; ++x)
            if (x == 0 || x == s - 1 || y == 0 || y == s - 1 || z == 0 || z == s - 1)
              shell[static_cast<size_t>((z * s + y) * s + x)] = 1;
      cases.emplace_back(dims, shell);
    }
  }

  for (const auto& [dims, mask] : cases) {
    GridMeta meta{dims, {1, 1, 1}};
    for (bool diagonal : {false, true}) {
      const auto conn = diagonal ? postprocess::Connectivity::Full26
                                 : postprocess::Connectivity::Face6;
      const auto cs = postprocess::connected_components(mask, meta, conn);
      const auto oracle = oracles::bfs_components(mask, dims, diagonal);
      if (!same_partition(cs, oracle, meta.voxel_count())) return false;
    }
  }

  // idempotence of the per-class cleanup
  for (int trial = 0; trial < 20; ++trial) {
    const std::array<int64_t, 3> dims{ud(rng), ud(rng), ud(rng)};
    const auto labels = oracles::random_labels(rng, dims, {1, 1, 1});
    for (const auto conn :
         {postprocess::Connectivity::Face6, postprocess::Connectivity::Full26}) {
      const auto once = postprocess::largest_component_per_class(labels, conn);
      const auto twice = postprocess::largest_component_per_class(once, conn);
      if (once.voxels != twice.voxels) return false;
    }
  }
  return true;
}

// 6 ------------------------------------------------------------------------

bool end_to_end_phantom() {
  phantom::PhantomSpec spec;
  spec.dims = {64, 64, 6};
  const auto ph = phantom::generate(spec, 99);
  const double max_spacing =
      std::max({spec.spacing[0], spec.spacing[1], spec.spacing[2]});

  auto build_stacks = [&](double noise, bool speckle, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> un(0.0f, static_cast<float>(noise));
    std::vector<ProbGrid4D> members;
    for (int k = 0; k < 5; ++k) {
      auto p = make_probs(spec.dims, spec.spacing, 4);
      const int64_t n = p.meta.voxel_count();
      for (int64_t i = 0; i < n; ++i) {
        float sum = 0.0f;
        for (int c = 0; c < 4; ++c) {
          float v = (ph.labels.voxels[static_cast<size_t>(i)] == c ? 1.0f : 0.0f);
          if (noise > 0.0) v += un(rng);
          sum += (p.voxels[i * 4 + c] = v);
        }
        for (int c = 0; c < 4; ++c) p.voxels[i * 4 + c] /= sum;
      }
      if (speckle) {
        // 2-voxel far-field island per foreground class, in a corner
        for (int c = 1; c < 4; ++c) {
          for (int64_t dx = 0; dx < 2; ++dx) {
            const int64_t i = p.index(dx + 2 * (c - 1) * 3, 1, 0, 0) / 4;
            for (int cc = 0; cc < 4; ++cc) p.voxels[i * 4 + cc] = cc == c ? 1.0f : 0.0f;
          }
        }
      }
      members.push_back(std::move(p));
    }
    return members;
  };

  auto run_case = [&](double noise, bool speckle, uint64_t seed) {
    const auto members = build_stacks(noise, speckle, seed);
    auto labels = postprocess::argmax_labels(postprocess::ensemble_mean(members));
    labels = postprocess::largest_component_per_class(labels,
                                                      postprocess::Connectivity::Full26);
    return metrics::evaluate(labels, ph.labels);
  };

  // noisy one-hot with injected speckle: cleanup must recover the phantom
  const auto noisy = run_case(0.3, true, 7);
  for (const auto& cm : noisy.per_class) {
    if (cm.dice < 0.99) return false;
    if (!cm.hd_mm || *cm.hd_mm > 2.0 * max_spacing) return false;
  }
  // noiseless one-hot: exact recovery
  const auto clean = run_case(0.0, true, 8);
  for (const auto& cm : clean.per_class) {
    if (cm.dice != 1.0) return false;
    if (!cm.hd_mm || *cm.hd_mm != 0.0) return false;
  }
  return true;
}

// 7 ------------------------------------------------------------------------

bool io_bit_exactness() {
  std::mt19937_64 rng(717);
  GridMeta meta{{6, 5, 4}, {1.25, 1.25, 10.0}};
  // each supported dtype round-trips with a byte-identical payload
  for (const auto dt : {io::DataType::UInt8, io::DataType::Int16, io::DataType::UInt16,
                        io::DataType::Float32}) {
    auto g = make_grid(meta.dims, meta.spacing);
    std::uniform_int_distribution<int> u(0, 200);
    for (auto& v : g.voxels) v = static_cast<float>(u(rng));
    const auto bytes1 = io::write_intensity_volume_as(g, dt);
    const auto back = io::read_intensity_volume(bytes1);
    const auto bytes2 = io::write_intensity_volume_as(back, dt);
    if (bytes1 != bytes2) return false;
    if (back.voxels != g.voxels) return false;
  }
  // reports identical across repeated runs
  const auto pred = oracles::random_labels(rng, {8, 8, 3}, {1.5, 1.5, 9.0});
  const auto gt = oracles::random_labels(rng, {8, 8, 3}, {1.5, 1.5, 9.0});
  const auto r1 = metrics::evaluate(pred, gt);
  const auto r2 = metrics::evaluate(pred, gt);
  const auto json1 = report::metrics_to_json(r1, 4).dump(2);
  const auto json2 = report::metrics_to_json(r2, 4).dump(2);
  const auto csv1 = report::csv_header(4) + report::csv_row("v", r1);
  const auto csv2 = report::csv_header(4) + report::csv_row("v", r2);
  return json1 == json2 && csv1 == csv2;
}

}  // namespace

int main() {
  criterion("1 metric oracle equivalence", metric_oracle_equivalence);
  criterion("2 gradient verification", gradient_verification);
  criterion("3 histogram-match fidelity", histogram_match_fidelity);
  criterion("4 geometry round-trip", geometry_round_trip);
  criterion("5 connected-component oracle", connected_component_oracle);
  criterion("6 end-to-end phantom", end_to_end_phantom);
  criterion("7 I/O bit-exactness", io_bit_exactness);
  if (g_failures > 0) {
    std::printf("%d criterion(s) FAILED\n", g_failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}
