#include "paretotune/report.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

#include "paretotune/csv.hpp"
#include "paretotune/error.hpp"

namespace paretotune {

ReportSummary summarize(std::span<const std::string> objectives,
                        std::span<const Sample> samples, const Thresholds& thresholds,
                        const std::optional<ObjectiveVector>& reference,
                        const std::optional<FrontEntry>& default_entry) {
  ReportSummary r;
  r.objectives.assign(objectives.begin(), objectives.end());
  r.total_samples = samples.size();
  const auto valid = filter_valid(samples, objectives, thresholds);
  r.valid_samples = valid.size();
  if (valid.empty()) throw UsageError("no valid samples to report on");
  const auto front = front_of(valid);
  r.front_size = front.size();

  if (reference) {
    if (reference->size() != objectives.size()) throw UsageError("reference point has the wrong number of objectives");
    r.reference = *reference;
  } else {
    r.reference = valid.front().objectives;
    for (const auto& s : valid)
      for (std::size_t j = 0; j < objectives.size(); ++j) r.reference[j] = std::max(r.reference[j], s.objectives[j]);
  }
  for (const auto& e : front)
    for (std::size_t j = 0; j < objectives.size(); ++j)
      if (e.objectives[j] > r.reference[j])
        throw UsageError("front point exceeds the reference point in objective '" + objectives[j] + "' (" +
                         format_double(e.objectives[j]) + " > " + format_double(r.reference[j]) + ")");
  if (objectives.size() == 2) {
    std::vector<ObjectiveVector> pts;
    for (const auto& e : front) pts.push_back(e.objectives);
    r.hypervolume = hypervolume_2d(pts, r.reference);
  }

  for (std::size_t j = 0; j < objectives.size(); ++j) {
    const FrontEntry* best = &front.front();
    for (const auto& e : front)
      if (e.objectives[j] < best->objectives[j]) best = &e;
    r.best.push_back(*best);
  }
  if (default_entry) {
    r.default_entry = default_entry;
    for (std::size_t j = 0; j < objectives.size(); ++j)
      r.improvement_vs_default.push_back(default_entry->objectives[j] / r.best[j].objectives[j]);
  }
  return r;
}

Json ReportSummary::to_json(const ParameterSpace& space) const {
  auto entry = [&](const FrontEntry& e) {
    Json objs = Json::object();
    for (std::size_t j = 0; j < objectives.size(); ++j) objs[objectives[j]] = e.objectives[j];
    return Json{{"config", space.config_to_json(e.config)}, {"objectives", objs}};
  };
  Json best_rows = Json::object();
  for (std::size_t j = 0; j < objectives.size(); ++j) best_rows[objectives[j]] = entry(best[j]);
  Json j{{"objectives", objectives},
         {"total_samples", total_samples},
         {"valid_samples", valid_samples},
         {"front_size", front_size},
         {"reference", reference},
         {"hypervolume", hypervolume ? Json(*hypervolume) : Json(nullptr)},
         {"best", best_rows}};
  if (default_entry) {
    j["default"] = entry(*default_entry);
    Json ratios = Json::object();
    for (std::size_t k = 0; k < objectives.size(); ++k) ratios[objectives[k]] = improvement_vs_default[k];
    j["improvement_vs_default"] = ratios;
  }
  return j;
}

std::string ReportSummary::to_table() const {
  std::ostringstream os;
  os << "samples: " << total_samples << " total, " << valid_samples << " valid\n";
  os << "front size: " << front_size << "\n";
  if (hypervolume) os << "hypervolume: " << format_double(*hypervolume) << "\n";
  os << "\n";
  std::size_t label_width = std::string("default").size();
  std::size_t width = 12;
  for (const auto& o : objectives) {
    label_width = std::max(label_width, o.size() + 5);
    width = std::max(width, o.size());
  }
  label_width += 2;
  width += 2;
  os << std::left << std::setw(static_cast<int>(label_width)) << "row";
  for (const auto& o : objectives) os << std::setw(static_cast<int>(width)) << o;
  if (default_entry) os << "improvement vs default";
  os << "\n";
  auto row = [&](const std::string& label, const FrontEntry& e, std::optional<std::size_t> ratio) {
    os << std::setw(static_cast<int>(label_width)) << label;
    for (double v : e.objectives) os << std::setw(static_cast<int>(width)) << format_double(v);
    if (ratio) os << std::fixed << std::setprecision(2) << improvement_vs_default[*ratio] << "x" << std::defaultfloat;
    os << "\n";
  };
  if (default_entry) row("default", *default_entry, std::nullopt);
  for (std::size_t j = 0; j < objectives.size(); ++j)
    row("best " + objectives[j], best[j], default_entry ? std::optional<std::size_t>(j) : std::nullopt);
  return os.str();
}

}  // namespace paretotune
