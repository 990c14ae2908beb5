#include "paretotune/surrogate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

#include "paretotune/error.hpp"
#include "paretotune/rng.hpp"

namespace paretotune {

void ForestParams::validate() const {
  if (n_trees < 1) throw UsageError("forest n_trees must be >= 1");
  if (min_samples_leaf < 1) throw UsageError("forest min_samples_leaf must be >= 1");
  if (!(feature_subsample > 0.0 && feature_subsample <= 1.0))
    throw UsageError("forest feature_subsample must lie in (0, 1]");
  if (max_depth && *max_depth < 1) throw UsageError("forest max_depth must be >= 1");
}

Json ForestParams::to_json() const {
  return Json{{"n_trees", n_trees},
              {"max_depth", max_depth ? Json(*max_depth) : Json(nullptr)},
              {"min_samples_leaf", min_samples_leaf},
              {"feature_subsample", feature_subsample},
              {"bootstrap", bootstrap},
              {"seed", seed}};
}

ForestParams ForestParams::from_json(const Json& j) {
  ForestParams p;
  p.n_trees = j.value("n_trees", p.n_trees);
  if (j.contains("max_depth") && !j["max_depth"].is_null()) p.max_depth = j["max_depth"].get<std::size_t>();
  p.min_samples_leaf = j.value("min_samples_leaf", p.min_samples_leaf);
  p.feature_subsample = j.value("feature_subsample", p.feature_subsample);
  p.bootstrap = j.value("bootstrap", p.bootstrap);
  p.seed = j.value("seed", p.seed);
  p.validate();
  return p;
}

std::size_t RegressionTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.feature < 0; }));
}

std::size_t RegressionTree::depth() const {
  if (nodes_.empty()) return 0;
  std::vector<std::size_t> d(nodes_.size(), 0);
  std::size_t best = 0;
  // Children always follow their parent in the node array.
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    best = std::max(best, d[i]);
    if (nodes_[i].feature >= 0) {
      d[nodes_[i].left] = d[i] + 1;
      d[nodes_[i].right] = d[i] + 1;
    }
  }
  return best;
}

namespace {

class TreeBuilder {
 public:
  TreeBuilder(std::span<const double> x, std::size_t width, std::span<const double> y,
              const ForestParams& params, Rng rng)
      : x_(x), width_(width), y_(y), params_(params), rng_(std::move(rng)) {
    features_.resize(width);
    tries_ = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::floor(params.feature_subsample * static_cast<double>(width))));
    tries_ = std::min(tries_, width);
  }

  std::vector<TreeNode> build(std::vector<std::uint32_t> rows) {
    rows_ = std::move(rows);
    nodes_.clear();
    grow(0, rows_.size(), 0);
    return std::move(nodes_);
  }

 private:
  struct Split {
    std::int32_t feature = -1;
    double threshold = 0.0;
    double score = 0.0;
  };

  double xv(std::uint32_t row, std::size_t f) const { return x_[row * width_ + f]; }

  std::int32_t grow(std::size_t begin, std::size_t end, std::size_t depth) {
    const std::size_t n = end - begin;
    double sum = 0.0;
    double lo = y_[rows_[begin]];
    double hi = lo;
    for (std::size_t i = begin; i < end; ++i) {
      const double v = y_[rows_[i]];
      sum += v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    const double mean = sum / static_cast<double>(n);

    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back(TreeNode{});
    TreeNode leaf;
    leaf.value = lo == hi ? lo : std::clamp(mean, lo, hi);

    const bool can_split = lo != hi && n >= 2 * params_.min_samples_leaf &&
                           (!params_.max_depth || depth < *params_.max_depth);
    if (!can_split) {
      nodes_[id] = leaf;
      return id;
    }

    const Split best = find_split(begin, end, mean);
    if (best.feature < 0) {
      nodes_[id] = leaf;
      return id;
    }

    const auto f = static_cast<std::size_t>(best.feature);
    const auto mid = std::stable_partition(rows_.begin() + static_cast<std::ptrdiff_t>(begin),
                                           rows_.begin() + static_cast<std::ptrdiff_t>(end),
                                           [&](std::uint32_t r) { return xv(r, f) <= best.threshold; });
    const auto split_at = static_cast<std::size_t>(mid - rows_.begin());

    const std::int32_t left = grow(begin, split_at, depth + 1);
    const std::int32_t right = grow(split_at, end, depth + 1);
    TreeNode& node = nodes_[id];
    node.feature = best.feature;
    node.threshold = best.threshold;
    node.left = left;
    node.right = right;
    node.value = leaf.value;
    return id;
  }

  Split find_split(std::size_t begin, std::size_t end, double mean) {
    std::iota(features_.begin(), features_.end(), std::size_t{0});
    for (std::size_t i = 0; i + 1 < width_; ++i)
      std::swap(features_[i], features_[i + uniform_below(rng_, width_ - i)]);

    Split best;
    for (std::size_t k = 0; k < width_; ++k) {
      // Past the sampled subset only keep looking until some valid split exists.
      if (k >= tries_ && best.feature >= 0) break;
      evaluate_feature(features_[k], begin, end, mean, best);
    }
    return best;
  }

  void evaluate_feature(std::size_t f, std::size_t begin, std::size_t end, double mean, Split& best) {
    const std::size_t n = end - begin;
    scratch_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = rows_[begin + i];
      scratch_[i] = {xv(r, f), y_[r] - mean};
    }
    std::sort(scratch_.begin(), scratch_.end());
    if (scratch_.front().first == scratch_.back().first) return;

    double total = 0.0;
    for (const auto& [_, v] : scratch_) total += v;

    const std::size_t min_leaf = params_.min_samples_leaf;
    double left = 0.0;
    for (std::size_t j = 1; j < n; ++j) {
      left += scratch_[j - 1].second;
      if (j < min_leaf || n - j < min_leaf) continue;
      const double a = scratch_[j - 1].first;
      const double b = scratch_[j].first;
      if (!(a < b)) continue;
      const double nl = static_cast<double>(j);
      const double nr = static_cast<double>(n - j);
      const double right = total - left;
      const double score = left * left / nl + right * right / nr;
      double threshold = a + (b - a) / 2.0;
      if (!(threshold < b)) threshold = a;
      const auto fi = static_cast<std::int32_t>(f);
      if (best.feature < 0 || score > best.score || (score == best.score && fi < best.feature)) {
        best = Split{fi, threshold, score};
      }
    }
  }

  std::span<const double> x_;
  std::size_t width_;
  std::span<const double> y_;
  const ForestParams& params_;
  Rng rng_;
  std::size_t tries_ = 1;
  std::vector<std::size_t> features_;
  std::vector<std::uint32_t> rows_;
  std::vector<TreeNode> nodes_;
  std::vector<std::pair<double, double>> scratch_;
};

}  // namespace

ForestModel::ForestModel(std::vector<RegressionTree> trees, std::string objective_name,
                         std::size_t training_size, std::size_t width, double y_min, double y_max)
    : trees_(std::move(trees)),
      objective_name_(std::move(objective_name)),
      training_size_(training_size),
      width_(width),
      y_min_(y_min),
      y_max_(y_max) {}

double ForestModel::finish(double tree_sum) const {
  return std::clamp(tree_sum / static_cast<double>(trees_.size()), y_min_, y_max_);
}

double ForestModel::predict(std::span<const double> x) const {
  if (x.size() != width_)
    throw UsageError("feature vector has width " + std::to_string(x.size()) + ", model expects " +
                     std::to_string(width_));
  double sum = 0.0;
  for (const auto& tree : trees_) sum += tree.predict(x);
  return finish(sum);
}

std::vector<double> ForestModel::predict_batch(std::span<const FeatureVector> xs) const {
  std::vector<double> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(predict(x));
  return out;
}

Json ForestModel::to_json() const {
  Json trees = Json::array();
  for (const auto& tree : trees_) {
    Json nodes = Json::array();
    for (const auto& n : tree.nodes()) {
      if (n.feature < 0)
        nodes.push_back(Json{{"value", n.value}});
      else
        nodes.push_back(Json{{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left}, {"right", n.right}});
    }
    trees.push_back(std::move(nodes));
  }
  return Json{{"objective", objective_name_},
              {"training_size", training_size_},
              {"width", width_},
              {"target_range", {y_min_, y_max_}},
              {"trees", std::move(trees)}};
}

ForestModel fit_forest(std::span<const FeatureVector> xs, std::span<const double> ys,
                       const ForestParams& params, std::string objective_name) {
  params.validate();
  if (xs.empty()) throw UsageError("cannot fit a forest on an empty training set");
  if (xs.size() != ys.size())
    throw UsageError("training set has " + std::to_string(xs.size()) + " inputs but " +
                     std::to_string(ys.size()) + " targets");
  const std::size_t width = xs.front().size();
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i].size() != width) throw UsageError("training inputs have inconsistent widths");
    for (double v : xs[i])
      if (!std::isfinite(v)) throw UsageError("non-finite feature in training input " + std::to_string(i));
    if (!std::isfinite(ys[i])) throw UsageError("non-finite target at training index " + std::to_string(i));
  }
  if (width == 0) throw UsageError("training inputs have zero width");

  const std::size_t n = xs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (xs[a] != xs[b]) return xs[a] < xs[b];
    return ys[a] < ys[b];
  });

  std::vector<double> x(n * width);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::copy(xs[order[i]].begin(), xs[order[i]].end(), x.begin() + static_cast<std::ptrdiff_t>(i * width));
    y[i] = ys[order[i]];
  }
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());

  std::vector<RegressionTree> trees(params.n_trees);
  auto train = [&](std::size_t t) {
    Rng rng = make_rng(params.seed, t);
    std::vector<std::uint32_t> rows(n);
    if (params.bootstrap) {
      for (auto& r : rows) r = static_cast<std::uint32_t>(uniform_below(rng, n));
    } else {
      std::iota(rows.begin(), rows.end(), std::uint32_t{0});
    }
    TreeBuilder builder(x, width, y, params, std::move(rng));
    trees[t] = RegressionTree(builder.build(std::move(rows)));
  };

  std::size_t workers = params.threads ? params.threads : std::thread::hardware_concurrency();
  workers = std::clamp<std::size_t>(workers, 1, params.n_trees);
  if (workers == 1) {
    for (std::size_t t = 0; t < params.n_trees; ++t) train(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t t; (t = next.fetch_add(1)) < params.n_trees;) train(t);
      });
  }
  return ForestModel(std::move(trees), std::move(objective_name), n, width, *lo, *hi);
}

}  // namespace paretotune
