// Metrics report serialization: nested JSON and a flat CSV row per volume.
// Column order is fixed and float formatting is deterministic, so repeated
// runs produce byte-identical reports.

#ifndef MSCMR_REPORT_HPP
#define MSCMR_REPORT_HPP

#include <cstdio>
#include <string>
#include <vector>

#include "json.hpp"
#include "mscmr/metrics.hpp"

namespace mscmr {
namespace report {

inline std::vector<std::string> class_names(int class_count) {
  if (class_count == 4) return {"RV", "LV", "LVM"};
  std::vector<std::string> names;
  for (int c = 1; c < class_count; ++c) names.push_back("class" + std::to_string(c));
  return names;
}

inline std::string format_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return std::string(buf);
}

inline nlohmann::json metrics_to_json(const metrics::MetricsReport& rep,
                                      int class_count) {
  const auto names = class_names(class_count);
  nlohmann::json per_class = nlohmann::json::object();
  for (size_t i = 0; i < rep.per_class.size(); ++i) {
    const auto& cm = rep.per_class[i];
    nlohmann::json jc{
        {"dice", cm.dice},
        {"jaccard", cm.jaccard},
        {"pred_empty", cm.pred_empty},
        {"gt_empty", cm.gt_empty},
    };
    jc["assd_mm"] = cm.assd_mm ? nlohmann::json(*cm.assd_mm) : nlohmann::json();
    jc["hd_mm"] = cm.hd_mm ? nlohmann::json(*cm.hd_mm) : nlohmann::json();
    per_class[names[i]] = jc;
  }
  nlohmann::json j{
      {"surface_distance_definition", "average symmetric surface distance (ASSD)"},
      {"hausdorff_definition", "full (100th percentile) symmetric Hausdorff"},
      {"per_class", per_class},
      {"mean", {{"dice", rep.mean_dice}, {"jaccard", rep.mean_jaccard}}},
      {"distances_incomplete", rep.distances_incomplete},
  };
  j["mean"]["assd_mm"] = rep.mean_assd_mm ? nlohmann::json(*rep.mean_assd_mm) : nlohmann::json();
  j["mean"]["hd_mm"] = rep.mean_hd_mm ? nlohmann::json(*rep.mean_hd_mm) : nlohmann::json();
  return j;
}

inline std::string csv_header(int class_count) {
  std::string h = "volume";
  for (const auto& name : class_names(class_count))
    for (const char* m : {"dice", "jaccard", "assd_mm", "hd_mm"})
      h += "," + name + "_" + m;
  h += ",mean_dice,mean_jaccard,mean_assd_mm,mean_hd_mm\n";
  return h;
}

inline std::string csv_row(const std::string& volume_id,
                           const metrics::MetricsReport& rep) {
  auto opt = [](const std::optional<double>& v) {
    return v ? format_num(*v) : std::string("NA");
  };
  std::string row = volume_id;
  for (const auto& cm : rep.per_class) {
    row += "," + format_num(cm.dice);
    row += "," + format_num(cm.jaccard);
    row += "," + opt(cm.assd_mm);
    row += "," + opt(cm.hd_mm);
  }
  row += "," + format_num(rep.mean_dice);
  row += "," + format_num(rep.mean_jaccard);
  row += "," + opt(rep.mean_assd_mm);
  row += "," + opt(rep.mean_hd_mm);
  row += "\n";
  return row;
}

}  // namespace report
}  // namespace mscmr

#endif  // MSCMR_REPORT_HPP
