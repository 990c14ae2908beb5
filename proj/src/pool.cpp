#include "paretotune/pool.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "paretotune/error.hpp"
#include "paretotune/pareto.hpp"

namespace paretotune {

namespace {

constexpr std::size_t kInnerTarget = 256;

class GridAccumulator {
 public:
  GridAccumulator(const ParameterSpace& space, std::vector<double>& sums)
      : space_(space), sums_(sums), allowed_(space.dimension()), pos_(space.dimension(), 0) {}

  void add_tree(const RegressionTree& tree) {
    for (std::size_t p = 0; p < space_.dimension(); ++p) {
      allowed_[p].resize(space_.param(p).size());
      std::iota(allowed_[p].begin(), allowed_[p].end(), std::uint32_t{0});
    }
    descend(tree.nodes(), 0);
  }

 private:
  void descend(const std::vector<TreeNode>& nodes, std::int32_t at) {
    const TreeNode& node = nodes[at];
    if (node.feature < 0) {
      add_box(node.value);
      return;
    }
    const FeatureSlot& slot = space_.feature_slots()[node.feature];
    const std::size_t p = slot.param;
    std::vector<std::uint32_t> saved = allowed_[p];
    std::vector<std::uint32_t> left;
    std::vector<std::uint32_t> right;
    for (std::uint32_t idx : saved) (slot.feature_values[idx] <= node.threshold ? left : right).push_back(idx);
    if (!left.empty()) {
      allowed_[p] = std::move(left);
      descend(nodes, node.left);
    }
    if (!right.empty()) {
      allowed_[p] = std::move(right);
      descend(nodes, node.right);
    }
    allowed_[p] = std::move(saved);
  }

  void add_box(double value) {
    // Trailing parameters are flattened into an offset list so the inner loop
    // is long even when the last parameters have few values.
    const std::size_t d = allowed_.size();
    inner_.assign(1, 0);
    std::size_t split = d;
    while (split > 0 && inner_.size() < kInnerTarget) {
      --split;
      const std::uint64_t stride = space_.stride(split);
      next_.clear();
      for (std::uint32_t idx : allowed_[split])
        for (std::uint64_t off : inner_) next_.push_back(off + idx * stride);
      inner_.swap(next_);
    }
    std::sort(inner_.begin(), inner_.end());
    runs_.clear();
    for (std::uint64_t off : inner_) {
      if (!runs_.empty() && runs_.back().first + runs_.back().second == off)
        ++runs_.back().second;
      else
        runs_.emplace_back(off, 1);
    }
    std::fill(pos_.begin(), pos_.end(), 0);
    for (;;) {
      std::uint64_t base = 0;
      for (std::size_t p = 0; p < split; ++p) base += allowed_[p][pos_[p]] * space_.stride(p);
      double* cell = sums_.data() + base;
      for (const auto& [start, len] : runs_) {
        double* run = cell + start;
        for (std::uint64_t i = 0; i < len; ++i) run[i] += value;
      }
      std::size_t p = split;
      while (p-- > 0) {
        if (++pos_[p] < allowed_[p].size()) break;
        pos_[p] = 0;
      }
      if (p == static_cast<std::size_t>(-1)) return;
    }
  }

  const ParameterSpace& space_;
  std::vector<double>& sums_;
  std::vector<std::vector<std::uint32_t>> allowed_;
  std::vector<std::size_t> pos_;
  std::vector<std::uint64_t> inner_;
  std::vector<std::uint64_t> next_;
  std::vector<std::pair<std::uint64_t, std::uint64_t>> runs_;
};

}  // namespace

std::vector<double> predict_space(const ForestModel& model, const ParameterSpace& space) {
  if (model.width() != space.encoding_width())
    throw UsageError("model width does not match the space encoding");
  std::vector<double> sums(space.cardinality(), 0.0);
  GridAccumulator acc(space, sums);
  for (const auto& tree : model.trees()) acc.add_tree(tree);
  for (auto& s : sums) s = model.finish(s);
  return sums;
}

std::vector<double> predict_ranks(const ForestModel& model, const ParameterSpace& space,
                                  std::span<const std::uint64_t> ranks) {
  if (model.width() != space.encoding_width())
    throw UsageError("model width does not match the space encoding");
  std::vector<double> out;
  out.reserve(ranks.size());
  FeatureVector x(space.encoding_width());
  for (std::uint64_t r : ranks) {
    space.encode_into(space.unrank(r), x);
    out.push_back(model.predict(x));
  }
  return out;
}

std::vector<std::size_t> pareto_front_columns(std::span<const std::vector<double>> columns) {
  if (columns.empty()) return {};
  const std::size_t n = columns.front().size();
  for (const auto& c : columns)
    if (c.size() != n) throw UsageError("objective columns have different lengths");

  if (columns.size() != 2) {
    std::vector<ObjectiveVector> rows(n, ObjectiveVector(columns.size()));
    for (std::size_t j = 0; j < columns.size(); ++j)
      for (std::size_t i = 0; i < n; ++i) rows[i][j] = columns[j][i];
    std::vector<std::pair<std::size_t, ObjectiveVector>> points;
    points.reserve(n);
    for (std::size_t i = 0; i < n; ++i) points.emplace_back(i, std::move(rows[i]));
    return pareto_front(points);
  }

  const auto& a = columns[0];
  const auto& b = columns[1];
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    if (a[i] != a[j]) return a[i] < a[j];
    if (b[i] != b[j]) return b[i] < b[j];
    return i < j;
  });
  std::vector<std::size_t> keep;
  double best_before = std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < n;) {
    const double x = a[order[g]];
    const double group_min = b[order[g]];
    std::size_t end = g;
    for (; end < n && a[order[end]] == x; ++end) {
      const double y = b[order[end]];
      if (!(best_before <= y) && !(group_min < y)) keep.push_back(order[end]);
    }
    best_before = std::min(best_before, group_min);
    g = end;
  }
  return keep;
}

}  // namespace paretotune
