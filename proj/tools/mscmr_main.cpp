// mscmr: command-line driver for the LGE segmentation pipeline.
//
// Subcommands mirror the three pipeline stages plus evaluation and test
// utilities:
//   augment     b-SSFP + LGE -> fake-LGE volume with unchanged labels
//   preprocess  resize to 256x256, center-crop to 144x144, record manifest
//   postprocess ensemble -> argmax -> inverse reconstruction -> largest-CC
//   evaluate    Dice / Jaccard / surface distance / Hausdorff reports
//   phantom     synthetic test volumes
//   gradcheck   finite-difference verification of the loss gradient
//   pipeline    augment + preprocess + postprocess + evaluate in one run
//
// Exit codes: 0 success, 1 internal error, 2 usage or input error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "mscmr/config.hpp"
#include "mscmr/core.hpp"
#include "mscmr/geometry.hpp"
#include "mscmr/gradcheck.hpp"
#include "mscmr/histmatch.hpp"
#include "mscmr/metrics.hpp"
#include "mscmr/phantom.hpp"
#include "mscmr/postprocess.hpp"
#include "mscmr/report.hpp"
#include "mscmr/volume_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

mscmr::PipelineConfig load_config(const std::string& path) {
  if (path.empty()) return {};
  const auto bytes = mscmr::io::read_file(path);
  json j;
  try {
    j = json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    throw mscmr::InputError(std::string("config: bad JSON in ") + path + ": " + e.what());
  }
  return mscmr::config_from_json(j);
}

void apply_overrides(mscmr::PipelineConfig& cfg, const std::string& connectivity,
                     const std::string& ensemble) {
  if (!connectivity.empty())
    cfg.connectivity = mscmr::detail::conn_from_name(connectivity);
  if (!ensemble.empty()) {
    if (ensemble == "mean") cfg.ensemble = mscmr::EnsembleMode::Mean;
    else if (ensemble == "vote") cfg.ensemble = mscmr::EnsembleMode::Vote;
    else throw mscmr::InputError("--ensemble must be mean or vote");
  }
}

void write_json_atomic(const fs::path& path, const json& j) {
  mscmr::io::write_file_atomic(path, j.dump(2) + "\n");
}

mscmr::metrics::DistanceAggregate to_metric_agg(mscmr::SurfaceAggregate a) {
  switch (a) {
    case mscmr::SurfaceAggregate::Assd: return mscmr::metrics::DistanceAggregate::Mean;
    case mscmr::SurfaceAggregate::Median: return mscmr::metrics::DistanceAggregate::Median;
    case mscmr::SurfaceAggregate::P95: return mscmr::metrics::DistanceAggregate::P95;
  }
  return mscmr::metrics::DistanceAggregate::Mean;
}

// --------------------------------------------------------------------------

struct AugmentArgs {
  std::string bssfp, labels, lge, out_dir;
};

void run_augment(const AugmentArgs& a, const mscmr::PipelineConfig& cfg) {
  const auto bssfp_bytes = mscmr::io::read_file(a.bssfp);
  const auto label_bytes = mscmr::io::read_file(a.labels);
  const auto lge_bytes = mscmr::io::read_file(a.lge);

  const auto bssfp = mscmr::io::load_intensity(a.bssfp);
  const auto labels = mscmr::io::load_labels(a.labels, cfg.label_remap, cfg.class_count);
  auto lge = mscmr::io::load_intensity(a.lge);

  if (!lge.meta.same_dims(bssfp.meta))
    lge = mscmr::geometry::resample_volume(lge, bssfp.meta.dims,
                                           mscmr::geometry::Interp::Linear);
  auto [fake, fake_labels] =
      mscmr::histmatch::make_fake_lge(bssfp, labels, lge, cfg.histogram_bins);

  fs::create_directories(a.out_dir);
  const fs::path out = fs::path(a.out_dir);
  mscmr::io::save_intensity(out / "fake_lge.nii.gz", fake);
  mscmr::io::save_labels(out / "fake_lge_labels.nii.gz", fake_labels);

  json manifest{
      {"command", "augment"},
      {"inputs",
       {{"bssfp", {{"path", a.bssfp}, {"fnv1a", mscmr::fnv1a_hex(bssfp_bytes)}}},
        {"labels", {{"path", a.labels}, {"fnv1a", mscmr::fnv1a_hex(label_bytes)}}},
        {"lge", {{"path", a.lge}, {"fnv1a", mscmr::fnv1a_hex(lge_bytes)}}}}},
      {"config", mscmr::config_to_json(cfg)},
  };
  write_json_atomic(out / "manifest.json", manifest);
}

// --------------------------------------------------------------------------

struct PreprocessArgs {
  std::string input, out_dir, kind = "intensity";
};

void run_preprocess(const PreprocessArgs& a, const mscmr::PipelineConfig& cfg) {
  const auto input_bytes = mscmr::io::read_file(a.input);
  fs::create_directories(a.out_dir);
  const fs::path out = fs::path(a.out_dir);

  mscmr::geometry::CropRecord rec;
  if (a.kind == "label") {
    const auto labels = mscmr::io::load_labels(a.input, cfg.label_remap, cfg.class_count);
    const auto original = labels.meta.dims;
    auto resized = mscmr::geometry::resize_slices(labels, cfg.resize_dims);
    auto [cropped, r] = mscmr::geometry::center_crop(resized, cfg.crop_dims);
    rec = r;
    rec.original_inplane_dims = {original[0], original[1]};
    mscmr::io::save_labels(out / "preprocessed.nii.gz", cropped);
  } else if (a.kind == "intensity") {
    const auto vol = mscmr::io::load_intensity(a.input);
    const auto original = vol.meta.dims;
    auto resized = mscmr::geometry::resize_slices(vol, cfg.resize_dims);
    auto [cropped, r] = mscmr::geometry::center_crop(resized, cfg.crop_dims);
    rec = r;
    rec.original_inplane_dims = {original[0], original[1]};
    mscmr::io::save_intensity(out / "preprocessed.nii.gz", cropped);
  } else {
    throw mscmr::InputError("--kind must be intensity or label");
  }

  json manifest{
      {"command", "preprocess"},
      {"inputs",
       {{"volume", {{"path", a.input}, {"fnv1a", mscmr::fnv1a_hex(input_bytes)}}}}},
      {"crop_record", mscmr::crop_record_to_json(rec)},
      {"config", mscmr::config_to_json(cfg)},
  };
  write_json_atomic(out / "manifest.json", manifest);
}

// --------------------------------------------------------------------------

struct PostprocessArgs {
  std::vector<std::string> prob_args;  // one per ensemble member; commas split
  std::string manifest, out_path;
};

mscmr::ProbGrid4D load_member(const std::string& arg) {
  std::vector<fs::path> paths;
  std::stringstream ss(arg);
  std::string part;
  while (std::getline(ss, part, ','))
    if (!part.empty()) paths.emplace_back(part);
  return mscmr::io::load_probability_stack(paths);
}

void run_postprocess(const PostprocessArgs& a, const mscmr::PipelineConfig& cfg) {
  if (a.prob_args.empty())
    throw mscmr::InputError("postprocess: need at least one probability stack");
  const auto manifest_bytes = mscmr::io::read_file(a.manifest);
  const json manifest = json::parse(manifest_bytes.begin(), manifest_bytes.end());
  if (!manifest.contains("crop_record"))
    throw mscmr::InputError("postprocess: manifest has no crop_record");
  const auto rec = mscmr::crop_record_from_json(manifest["crop_record"]);

  std::vector<mscmr::ProbGrid4D> members;
  members.reserve(a.prob_args.size());
  for (const auto& arg : a.prob_args) members.push_back(load_member(arg));

  mscmr::LabelGrid3D labels =
      cfg.ensemble == mscmr::EnsembleMode::Mean
          ? mscmr::postprocess::argmax_labels(mscmr::postprocess::ensemble_mean(members))
          : mscmr::postprocess::majority_vote_labels(members);
  labels = mscmr::geometry::reconstruct_inverse(labels, rec);

  json stats = json::array();
  const int64_t n = labels.meta.voxel_count();
  std::vector<uint8_t> mask(static_cast<size_t>(n));
  for (int c = 1; c < labels.class_count; ++c) {
    for (int64_t i = 0; i < n; ++i)
      mask[static_cast<size_t>(i)] = labels.voxels[static_cast<size_t>(i)] == c;
    const auto cs = mscmr::postprocess::connected_components(mask, labels.meta,
                                                            cfg.connectivity);
    json sizes = json::array();
    for (const auto& comp : cs.components) sizes.push_back(comp.size());
    stats.push_back({{"class", c}, {"component_sizes", sizes}});
  }
  labels = mscmr::postprocess::largest_component_per_class(labels, cfg.connectivity);

  mscmr::io::save_labels(a.out_path, labels);
  const fs::path stats_path = fs::path(a.out_path).parent_path() / "postprocess_stats.json";
  write_json_atomic(stats_path, json{{"command", "postprocess"},
                                     {"ensemble_members", a.prob_args.size()},
                                     {"components_before_cleanup", stats},
                                     {"config", mscmr::config_to_json(cfg)}});
}

// --------------------------------------------------------------------------

struct EvaluateArgs {
  std::string pred, gt, out_base;
  std::string volume_id = "volume";
};

void run_evaluate(const EvaluateArgs& a, const mscmr::PipelineConfig& cfg) {
  const auto pred = mscmr::io::load_labels(a.pred, cfg.label_remap, cfg.class_count);
  const auto gt = mscmr::io::load_labels(a.gt, cfg.label_remap, cfg.class_count);
  if (!pred.meta.same_grid(gt.meta)) {
    std::ostringstream os;
    os << "evaluate: grid mismatch:";
    for (int ax = 0; ax < 3; ++ax)
      os << " axis" << ax << " dims " << pred.meta.dims[ax] << " vs " << gt.meta.dims[ax]
         << " spacing " << pred.meta.spacing[ax] << " vs " << gt.meta.spacing[ax] << ";";
    throw mscmr::InputError(os.str());
  }
  const auto rep = mscmr::metrics::evaluate(pred, gt, to_metric_agg(cfg.surface_aggregate));

  json j{{"command", "evaluate"},
         {"volume", a.volume_id},
         {"metrics", mscmr::report::metrics_to_json(rep, cfg.class_count)},
         {"config", mscmr::config_to_json(cfg)}};
  write_json_atomic(a.out_base + ".json", j);
  mscmr::io::write_file_atomic(a.out_base + ".csv",
                               mscmr::report::csv_header(cfg.class_count) +
                                   mscmr::report::csv_row(a.volume_id, rep));
}

// --------------------------------------------------------------------------

struct PhantomArgs {
  std::string out_dir;
  uint64_t seed = 1;
  std::vector<int64_t> dims{64, 64, 8};
  double noise = 0.0;
};

void run_phantom(const PhantomArgs& a, const mscmr::PipelineConfig& cfg) {
  mscmr::phantom::PhantomSpec spec;
  if (a.dims.size() != 3) throw mscmr::InputError("--dims needs 3 values");
  spec.dims = {a.dims[0], a.dims[1], a.dims[2]};
  spec.noise_sigma = a.noise;
  const auto pair = mscmr::phantom::generate(spec, a.seed);
  fs::create_directories(a.out_dir);
  const fs::path out = fs::path(a.out_dir);
  mscmr::io::save_intensity(out / "bssfp.nii.gz", pair.bssfp);
  mscmr::io::save_intensity(out / "lge.nii.gz", pair.lge);
  mscmr::io::save_labels(out / "labels.nii.gz", pair.labels);
  write_json_atomic(out / "manifest.json",
                    json{{"command", "phantom"},
                         {"seed", a.seed},
                         {"dims", {spec.dims[0], spec.dims[1], spec.dims[2]}},
                         {"noise_sigma", spec.noise_sigma},
                         {"config", mscmr::config_to_json(cfg)}});
}

// --------------------------------------------------------------------------

int run_gradcheck(uint64_t seed, bool corrupt) {
  mscmr::gradcheck::Options opt;
  opt.corrupt = corrupt;
  const auto res = mscmr::gradcheck::run(seed, opt);
  std::printf("gradcheck: %d cases, max relative error %.3e, tolerance %.1e: %s\n",
              res.cases, res.max_rel_err, opt.tolerance, res.passed ? "PASS" : "FAIL");
  return res.passed ? 0 : 1;
}

// --------------------------------------------------------------------------

struct PipelineArgs {
  std::string bssfp, labels, lge, gt, out_dir;
  std::vector<std::string> prob_args;
};

void run_pipeline(const PipelineArgs& a, const mscmr::PipelineConfig& cfg) {
  const fs::path out(a.out_dir);
  fs::create_directories(out / "augment");
  run_augment({a.bssfp, a.labels, a.lge, (out / "augment").string()}, cfg);
  run_preprocess({a.bssfp, (out / "preprocess").string(), "intensity"}, cfg);
  // The CNN stage is external: the caller supplies one probability stack per
  // ensemble member, predicted on the preprocessed (cropped) grid.
  run_postprocess({a.prob_args, (out / "preprocess" / "manifest.json").string(),
                   (out / "prediction.nii.gz").string()},
                  cfg);
  run_evaluate({(out / "prediction.nii.gz").string(), a.gt, (out / "report").string(),
                "pipeline"},
               cfg);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LGE cardiac segmentation pipeline (augment / preprocess / "
               "postprocess / evaluate)"};
  app.require_subcommand(1);

  std::string config_path, connectivity, ensemble;
  app.add_option("--config", config_path, "JSON config file (defaults when omitted)");
  app.add_option("--connectivity", connectivity, "component connectivity: 6|26|2d4|2d8");
  app.add_option("--ensemble", ensemble, "ensemble mode: mean|vote");

  AugmentArgs aug;
  auto* sc_aug = app.add_subcommand("augment", "synthesize a fake-LGE volume");
  sc_aug->add_option("--bssfp", aug.bssfp, "b-SSFP intensity volume")->required();
  sc_aug->add_option("--labels", aug.labels, "b-SSFP label volume")->required();
  sc_aug->add_option("--lge", aug.lge, "target LGE intensity volume")->required();
  sc_aug->add_option("--out", aug.out_dir, "output directory")->required();

  PreprocessArgs pre;
  auto* sc_pre = app.add_subcommand("preprocess", "resize + center-crop with manifest");
  sc_pre->add_option("--input", pre.input, "input volume")->required();
  sc_pre->add_option("--out", pre.out_dir, "output directory")->required();
  sc_pre->add_option("--kind", pre.kind, "intensity|label (default intensity)");

  PostprocessArgs post;
  auto* sc_post = app.add_subcommand("postprocess", "ensemble + reconstruct + cleanup");
  sc_post->add_option("--probs", post.prob_args,
                      "probability stack per ensemble member (4D NIfTI, or "
                      "comma-separated per-class 3D files)")->required();
  sc_post->add_option("--manifest", post.manifest, "preprocess manifest")->required();
  sc_post->add_option("--out", post.out_path, "output label volume")->required();

  EvaluateArgs eval;
  auto* sc_eval = app.add_subcommand("evaluate", "segmentation metrics report");
  sc_eval->add_option("--pred", eval.pred, "predicted label volume")->required();
  sc_eval->add_option("--gt", eval.gt, "ground-truth label volume")->required();
  sc_eval->add_option("--out", eval.out_base,
                      "report base path (writes <base>.json and <base>.csv)")->required();
  sc_eval->add_option("--volume-id", eval.volume_id, "volume name in the report");

  PhantomArgs ph;
  auto* sc_ph = app.add_subcommand("phantom", "generate synthetic test volumes");
  sc_ph->add_option("--out", ph.out_dir, "output directory")->required();
  sc_ph->add_option("--seed", ph.seed, "RNG seed");
  sc_ph->add_option("--dims", ph.dims, "volume dims nx ny nz")->expected(3);
  sc_ph->add_option("--noise", ph.noise, "gaussian noise sigma");

  uint64_t gc_seed = 42;
  bool gc_corrupt = false;
  auto* sc_gc = app.add_subcommand("gradcheck", "verify the loss gradient");
  sc_gc->add_option("--seed", gc_seed, "RNG seed");
  sc_gc->add_flag("--corrupt-gradient", gc_corrupt,
                  "negative control: perturb the gradient (must fail)");

  PipelineArgs pipe;
  auto* sc_pipe = app.add_subcommand("pipeline", "augment + preprocess + postprocess + evaluate");
  sc_pipe->add_option("--bssfp", pipe.bssfp, "b-SSFP intensity volume")->required();
  sc_pipe->add_option("--labels", pipe.labels, "b-SSFP label volume")->required();
  sc_pipe->add_option("--lge", pipe.lge, "target LGE intensity volume")->required();
  sc_pipe->add_option("--probs", pipe.prob_args, "probability stacks on the cropped grid")
      ->required();
  sc_pipe->add_option("--gt", pipe.gt, "ground-truth labels at original dims")->required();
  sc_pipe->add_option("--out", pipe.out_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    mscmr::PipelineConfig cfg = load_config(config_path);
    apply_overrides(cfg, connectivity, ensemble);
    if (sc_aug->parsed()) run_augment(aug, cfg);
    else if (sc_pre->parsed()) run_preprocess(pre, cfg);
    else if (sc_post->parsed()) run_postprocess(post, cfg);
    else if (sc_eval->parsed()) run_evaluate(eval, cfg);
    else if (sc_ph->parsed()) run_phantom(ph, cfg);
    else if (sc_gc->parsed()) return run_gradcheck(gc_seed, gc_corrupt);
    else if (sc_pipe->parsed()) run_pipeline(pipe, cfg);
  } catch (const mscmr::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
