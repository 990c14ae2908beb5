#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "paretotune/sample.hpp"
#include "paretotune/space.hpp"

namespace paretotune {

struct ReportSummary {
  std::vector<std::string> objectives;
  std::size_t total_samples = 0;
  std::size_t valid_samples = 0;
  std::size_t front_size = 0;
  ObjectiveVector reference;
  std::optional<double> hypervolume;  // 2-objective sessions only
  // Front entry minimizing each objective, in objective order.
  std::vector<FrontEntry> best;
  std::optional<FrontEntry> default_entry;
  // default value / best value, per objective. For runtime this is the
  // speedup; for an error metric it is the accuracy improvement factor.
  std::vector<double> improvement_vs_default;

  Json to_json(const ParameterSpace& space) const;
  std::string to_table() const;
};

// Throws UsageError if a front point exceeds the reference point. Without a
// reference, the componentwise max over the valid samples is used.
ReportSummary summarize(std::span<const std::string> objectives,
                        std::span<const Sample> samples, const Thresholds& thresholds,
                        const std::optional<ObjectiveVector>& reference,
                        const std::optional<FrontEntry>& default_entry);

}  // namespace paretotune
