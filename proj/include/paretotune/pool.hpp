#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "paretotune/space.hpp"
#include "paretotune/surrogate.hpp"

namespace paretotune {

// Forest predictions for every configuration of the space, indexed by rank.
// Each tree's leaves are mapped to boxes of the configuration grid, so the
// cost is one addition per (tree, configuration) instead of a tree walk.
// Values are bit-identical to ForestModel::predict on the encoded configs.
std::vector<double> predict_space(const ForestModel& model, const ParameterSpace& space);

// Predictions for the configurations with the given ranks.
std::vector<double> predict_ranks(const ForestModel& model, const ParameterSpace& space,
                                  std::span<const std::uint64_t> ranks);

// Indices of the non-dominated rows of column-major objective data, ordered
// as pareto_front orders them (objectives ascending, then index).
std::vector<std::size_t> pareto_front_columns(std::span<const std::vector<double>> columns);

}  // namespace paretotune
