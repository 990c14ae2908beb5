#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "paretotune/error.hpp"

namespace paretotune {

// All objectives are minimized.
using ObjectiveVector = std::vector<double>;

// Per-objective strict upper bounds, keyed by objective name.
using Thresholds = std::map<std::string, double>;

// True iff a <= b componentwise with at least one strict inequality.
bool dominates(std::span<const double> a, std::span<const double> b);

namespace detail {

void check_lengths(std::span<const ObjectiveVector> vectors);

// Indices of non-dominated vectors. Vectors with identical values do not
// dominate each other.
std::vector<std::size_t> non_dominated_indices(std::span<const ObjectiveVector> vectors);

}  // namespace detail

// Keys of the non-dominated points, ascending by first objective, then by the
// remaining objectives, then by key. Entries sharing both key and objectives
// collapse to one.
template <class Key>
std::vector<Key> pareto_front(const std::vector<std::pair<Key, ObjectiveVector>>& points) {
  std::vector<ObjectiveVector> vectors;
  vectors.reserve(points.size());
  for (const auto& p : points) vectors.push_back(p.second);
  detail::check_lengths(vectors);
  auto keep = detail::non_dominated_indices(vectors);
  std::sort(keep.begin(), keep.end(), [&](std::size_t a, std::size_t b) {
    if (points[a].second != points[b].second) return points[a].second < points[b].second;
    return points[a].first < points[b].first;
  });
  std::vector<Key> out;
  out.reserve(keep.size());
  for (std::size_t k = 0; k < keep.size(); ++k) {
    if (k > 0 && points[keep[k]].second == points[keep[k - 1]].second &&
        !(points[keep[k - 1]].first < points[keep[k]].first))
      continue;
    out.push_back(points[keep[k]].first);
  }
  return out;
}

// Area dominated by the front inside the box bounded above by ref. Dominated
// points are allowed and contribute nothing.
double hypervolume_2d(std::span<const ObjectiveVector> front, std::span<const double> ref);

// Indices of vectors whose thresholded objectives are all strictly below their
// bounds. Throws UsageError for a threshold naming an unknown objective.
std::vector<std::size_t> valid_indices(std::span<const ObjectiveVector> vectors,
                                       std::span<const std::string> objective_names,
                                       const Thresholds& thresholds);

}  // namespace paretotune
