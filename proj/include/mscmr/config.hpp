// Pipeline configuration (JSON with full-default fallback) and run
// manifests. Every command echoes its effective config into the report so
// runs are self-describing.

#ifndef MSCMR_CONFIG_HPP
#define MSCMR_CONFIG_HPP

#include <array>
#include <cstdint>
#include <cstdio>
#include <string>

#include "json.hpp"
#include "mscmr/core.hpp"
#include "mscmr/geometry.hpp"
#include "mscmr/loss.hpp"
#include "mscmr/postprocess.hpp"
#include "mscmr/volume_io.hpp"

namespace mscmr {

inline constexpr const char* kToolVersion = "0.1.0";

enum class EnsembleMode { Mean, Vote };
enum class SurfaceAggregate { Assd, Median, P95 };

struct PipelineConfig {
  int class_count = 4;
  io::LabelRemap label_remap = io::identity_remap(4);
  std::array<int64_t, 2> resize_dims{256, 256};
  std::array<int64_t, 2> crop_dims{144, 144};
  int histogram_bins = 256;
  postprocess::Connectivity connectivity = postprocess::Connectivity::Full26;
  EnsembleMode ensemble = EnsembleMode::Mean;
  loss::WeightMode weight_mode = loss::WeightMode::Frequency;
  loss::Reduction reduction = loss::Reduction::Sum;
  SurfaceAggregate surface_aggregate = SurfaceAggregate::Assd;

  void validate() const {
    if (class_count < 2) throw InputError("config: class_count must be >= 2");
    if (resize_dims[0] < 1 || resize_dims[1] < 1 || crop_dims[0] < 1 || crop_dims[1] < 1)
      throw InputError("config: dims must be positive");
    if (histogram_bins < 2) throw InputError("config: histogram_bins must be >= 2");
    // remap must be a bijection onto {0..class_count-1} value-side-injective
    std::vector<int> seen(static_cast<size_t>(class_count), 0);
    for (const auto& [code, cls] : label_remap) {
      if (cls < 0 || cls >= class_count)
        throw InputError("config: remap target out of class range");
      if (seen[static_cast<size_t>(cls)]++)
        throw InputError("config: remap is not injective");
    }
  }
};

namespace detail {

inline std::string conn_name(postprocess::Connectivity c) {
  switch (c) {
    case postprocess::Connectivity::Face6: return "6";
    case postprocess::Connectivity::Full26: return "26";
    case postprocess::Connectivity::Slice4: return "2d4";
    case postprocess::Connectivity::Slice8: return "2d8";
  }
  return "26";
}

inline postprocess::Connectivity conn_from_name(const std::string& s) {
  if (s == "6") return postprocess::Connectivity::Face6;
  if (s == "26") return postprocess::Connectivity::Full26;
  if (s == "2d4") return postprocess::Connectivity::Slice4;
  if (s == "2d8") return postprocess::Connectivity::Slice8;
  throw InputError("config: connectivity must be one of 6, 26, 2d4, 2d8");
}

}  // namespace detail

inline nlohmann::json config_to_json(const PipelineConfig& c) {
  nlohmann::json remap = nlohmann::json::object();
  for (const auto& [code, cls] : c.label_remap) remap[std::to_string(code)] = cls;
  return nlohmann::json{
      {"class_count", c.class_count},
      {"label_remap", remap},
      {"resize_dims", {c.resize_dims[0], c.resize_dims[1]}},
      {"crop_dims", {c.crop_dims[0], c.crop_dims[1]}},
      {"histogram_bins", c.histogram_bins},
      {"connectivity", detail::conn_name(c.connectivity)},
      {"ensemble", c.ensemble == EnsembleMode::Mean ? "mean" : "vote"},
      {"weight_mode", c.weight_mode == loss::WeightMode::Frequency ? "eq1" : "inverse"},
      {"reduction", c.reduction == loss::Reduction::Sum ? "sum" : "mean"},
      {"surface_aggregate", c.surface_aggregate == SurfaceAggregate::Assd    ? "assd"
                            : c.surface_aggregate == SurfaceAggregate::Median ? "median"
                                                                              : "p95"},
      {"tool_version", kToolVersion},
  };
}

inline PipelineConfig config_from_json(const nlohmann::json& j) {
  PipelineConfig c;
  if (j.contains("class_count")) c.class_count = j["class_count"].get<int>();
  c.label_remap = io::identity_remap(c.class_count);
  if (j.contains("label_remap")) {
    c.label_remap.clear();
    for (const auto& [key, val] : j["label_remap"].items())
      c.label_remap[std::stoll(key)] = val.get<int>();
  }
  if (j.contains("resize_dims"))
    c.resize_dims = {j["resize_dims"][0].get<int64_t>(), j["resize_dims"][1].get<int64_t>()};
  if (j.contains("crop_dims"))
    c.crop_dims = {j["crop_dims"][0].get<int64_t>(), j["crop_dims"][1].get<int64_t>()};
  if (j.contains("histogram_bins")) c.histogram_bins = j["histogram_bins"].get<int>();
  if (j.contains("connectivity")) {
    const auto& v = j["connectivity"];
    c.connectivity = v.is_number() ? detail::conn_from_name(std::to_string(v.get<int>()))
                                   : detail::conn_from_name(v.get<std::string>());
  }
  if (j.contains("ensemble")) {
    const std::string s = j["ensemble"].get<std::string>();
    if (s == "mean") c.ensemble = EnsembleMode::Mean;
    else if (s == "vote") c.ensemble = EnsembleMode::Vote;
    else throw InputError("config: ensemble must be mean or vote");
  }
  if (j.contains("weight_mode")) {
    const std::string s = j["weight_mode"].get<std::string>();
    if (s == "eq1") c.weight_mode = loss::WeightMode::Frequency;
    else if (s == "inverse") c.weight_mode = loss::WeightMode::Inverse;
    else throw InputError("config: weight_mode must be eq1 or inverse");
  }
  if (j.contains("reduction")) {
    const std::string s = j["reduction"].get<std::string>();
    if (s == "sum") c.reduction = loss::Reduction::Sum;
    else if (s == "mean") c.reduction = loss::Reduction::Mean;
    else throw InputError("config: reduction must be sum or mean");
  }
  if (j.contains("surface_aggregate")) {
    const std::string s = j["surface_aggregate"].get<std::string>();
    if (s == "assd") c.surface_aggregate = SurfaceAggregate::Assd;
    else if (s == "median") c.surface_aggregate = SurfaceAggregate::Median;
    else if (s == "p95") c.surface_aggregate = SurfaceAggregate::P95;
    else throw InputError("config: surface_aggregate must be assd, median, or p95");
  }
  c.validate();
  return c;
}

// FNV-1a, for input provenance in manifests (not cryptographic).
inline std::string fnv1a_hex(const std::vector<uint8_t>& bytes) {
  uint64_t h = 1469598103934665603ull;
  for (uint8_t b : bytes) {
    h ^= b;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

inline nlohmann::json crop_record_to_json(const geometry::CropRecord& r) {
  return nlohmann::json{
      {"pre_crop_dims", {r.pre_crop_dims[0], r.pre_crop_dims[1]}},
      {"offsets", {r.offsets[0], r.offsets[1]}},
      {"original_inplane_dims", {r.original_inplane_dims[0], r.original_inplane_dims[1]}},
      {"interp_used", r.interp_used == geometry::Interp::Linear ? "linear" : "nearest"},
  };
}

inline geometry::CropRecord crop_record_from_json(const nlohmann::json& j) {
  geometry::CropRecord r;
  r.pre_crop_dims = {j.at("pre_crop_dims")[0].get<int64_t>(),
                     j.at("pre_crop_dims")[1].get<int64_t>()};
  r.offsets = {j.at("offsets")[0].get<int64_t>(), j.at("offsets")[1].get<int64_t>()};
  r.original_inplane_dims = {j.at("original_inplane_dims")[0].get<int64_t>(),
                             j.at("original_inplane_dims")[1].get<int64_t>()};
  r.interp_used = j.at("interp_used").get<std::string>() == "nearest"
                      ? geometry::Interp::Nearest
                      : geometry::Interp::Linear;
  return r;
}

}  // namespace mscmr

#endif  // MSCMR_CONFIG_HPP
