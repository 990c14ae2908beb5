#include "paretotune/pareto.hpp"

#include <cmath>
#include <limits>

namespace paretotune {

bool dominates(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw UsageError("objective vectors have different lengths (" + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()) + ")");
  bool strict = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] > b[i]) return false;
    if (a[i] < b[i]) strict = true;
  }
  return strict;
}

namespace detail {

void check_lengths(std::span<const ObjectiveVector> vectors) {
  for (const auto& v : vectors)
    if (v.size() != vectors.front().size())
      throw UsageError("objective vectors have different lengths (" + std::to_string(v.size()) + " vs " +
                       std::to_string(vectors.front().size()) + ")");
}

std::vector<std::size_t> non_dominated_indices(std::span<const ObjectiveVector> vectors) {
  std::vector<std::size_t> order(vectors.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (vectors[a] != vectors[b]) return vectors[a] < vectors[b];
    return a < b;
  });

  std::vector<std::size_t> keep;
  if (vectors.empty()) return keep;

  if (vectors.front().size() == 2) {
    double best_before = std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < order.size();) {
      const double x = vectors[order[g]][0];
      const double group_min = vectors[order[g]][1];
      std::size_t end = g;
      for (; end < order.size() && vectors[order[end]][0] == x; ++end) {
        const double y = vectors[order[end]][1];
        if (!(best_before <= y) && !(group_min < y)) keep.push_back(order[end]);
      }
      best_before = std::min(best_before, group_min);
      g = end;
    }
    return keep;
  }

  // Lexicographic order: a dominator always precedes what it dominates, and
  // anything dominated by a dropped point is also dominated by a kept one.
  for (std::size_t i : order) {
    const bool dominated = std::any_of(keep.begin(), keep.end(),
                                       [&](std::size_t k) { return dominates(vectors[k], vectors[i]); });
    if (!dominated) keep.push_back(i);
  }
  return keep;
}

}  // namespace detail

double hypervolume_2d(std::span<const ObjectiveVector> front, std::span<const double> ref) {
  if (ref.size() != 2) throw UsageError("hypervolume_2d needs a 2-objective reference point");
  std::vector<std::pair<double, double>> pts;
  pts.reserve(front.size());
  for (const auto& p : front) {
    if (p.size() != 2) throw UsageError("hypervolume_2d needs 2-objective points");
    if (p[0] > ref[0] || p[1] > ref[1])
      throw UsageError("front point (" + std::to_string(p[0]) + ", " + std::to_string(p[1]) +
                       ") exceeds the reference point");
    pts.emplace_back(p[0], p[1]);
  }
  std::sort(pts.begin(), pts.end());
  double area = 0.0;
  double ceiling = ref[1];
  for (const auto& [x, y] : pts) {
    if (y < ceiling) {
      area += (ref[0] - x) * (ceiling - y);
      ceiling = y;
    }
  }
  return area;
}

std::vector<std::size_t> valid_indices(std::span<const ObjectiveVector> vectors,
                                       std::span<const std::string> objective_names,
                                       const Thresholds& thresholds) {
  std::vector<std::pair<std::size_t, double>> bounds;
  for (const auto& [name, bound] : thresholds) {
    const auto it = std::find(objective_names.begin(), objective_names.end(), name);
    if (it == objective_names.end()) throw UsageError("validity threshold names unknown objective '" + name + "'");
    bounds.emplace_back(static_cast<std::size_t>(it - objective_names.begin()), bound);
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    const bool ok = std::all_of(bounds.begin(), bounds.end(),
                                [&](const auto& b) { return vectors[i].at(b.first) < b.second; });
    if (ok) out.push_back(i);
  }
  return out;
}

}  // namespace paretotune
