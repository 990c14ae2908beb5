#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "paretotune/pareto.hpp"
#include "paretotune/space.hpp"

namespace paretotune {

// Source index 0 is the random bootstrap batch; k >= 1 is active-learning
// iteration k.
inline constexpr std::size_t kRandomSource = 0;

struct Sample {
  std::uint64_t id = 0;
  Configuration config;
  std::uint64_t key = 0;  // canonical key (enumeration rank)
  ObjectiveVector objectives;  // empty when failed
  std::optional<std::string> error;
  std::size_t source = kRandomSource;
  double wall_time = 0.0;

  bool ok() const { return !error.has_value(); }
};

enum class Provenance { measured, predicted };

struct FrontEntry {
  Configuration config;
  std::uint64_t key = 0;
  ObjectiveVector objectives;
  Provenance provenance = Provenance::measured;
};

// Successful samples whose thresholded objectives are strictly below bounds.
std::vector<Sample> filter_valid(std::span<const Sample> samples, std::span<const std::string> objective_names,
                                 const Thresholds& thresholds);

// Non-dominated filter over successful samples, as measured front entries.
std::vector<FrontEntry> front_of(std::span<const Sample> samples);

}  // namespace paretotune
