#include "paretotune/evaluator.hpp"

#include <cmath>
#include <thread>

#include "paretotune/error.hpp"

namespace paretotune {

namespace {

constexpr std::string_view kKFusionSpace = R"({
  "parameters": [
    {"name": "volume_resolution", "type": "ordinal", "values": [64, 128, 256], "default": 256},
    {"name": "compute_size_ratio", "type": "ordinal", "values": [1, 2, 4, 8], "default": 1},
    {"name": "tracking_rate", "type": "int_range", "lo": 1, "hi": 5, "step": 1, "default": 1},
    {"name": "integration_rate", "type": "int_range", "lo": 1, "hi": 5, "step": 1, "default": 2},
    {"name": "mu", "type": "ordinal",
     "values": [0.025, 0.05, 0.075, 0.1, 0.125, 0.15, 0.175, 0.2, 0.225, 0.25], "default": 0.1},
    {"name": "icp_threshold", "type": "ordinal",
     "values": [0.001, 0.002, 0.003, 0.004, 0.005, 0.006, 0.007, 0.008, 0.009, 0.01], "default": 0.005},
    {"name": "pyramid_level1_iterations", "type": "int_range", "lo": 1, "hi": 5, "step": 1, "default": 5},
    {"name": "pyramid_level2_iterations", "type": "int_range", "lo": 1, "hi": 5, "step": 1, "default": 5},
    {"name": "pyramid_level3_iterations", "type": "int_range", "lo": 1, "hi": 5, "step": 1, "default": 4}
  ]
}
)";

constexpr std::string_view kElasticFusionSpace = R"({
  "parameters": [
    {"name": "icp_rgb_weight", "type": "ordinal",
     "values": [0.5, 1, 1.5, 2, 2.5, 3, 3.5, 4, 4.5, 5, 5.5, 6, 6.5, 7, 7.5, 8, 8.5, 9, 9.5, 10, 10.5, 11, 11.5, 12],
     "default": 10},
    {"name": "depth_cutoff", "type": "ordinal",
     "values": [0.5, 1, 1.5, 2, 2.5, 3, 3.5, 4, 4.5, 5, 5.5, 6, 6.5, 7, 7.5, 8, 8.5, 9, 9.5, 10, 10.5, 11, 11.5, 12],
     "default": 3},
    {"name": "confidence_threshold", "type": "ordinal",
     "values": [0.5, 1, 1.5, 2, 2.5, 3, 3.5, 4, 4.5, 5, 5.5, 6, 6.5, 7, 7.5, 8, 8.5, 9, 9.5, 10, 10.5, 11, 11.5, 12],
     "default": 10},
    {"name": "so3_disabled", "type": "boolean", "default": false},
    {"name": "open_loop", "type": "boolean", "default": true},
    {"name": "relocalisation", "type": "boolean", "default": true},
    {"name": "fast_odometry", "type": "boolean", "default": false},
    {"name": "ftf_rgb", "type": "boolean", "default": false}
  ]
}
)";

// Reads a numeric parameter by name, checking it lies on the bundled grid.
class Reader {
 public:
  Reader(const ParameterSpace& bundled, const ParameterSpace& space, const Configuration& config)
      : bundled_(bundled), space_(space), config_(config) {}

  double operator()(std::string_view name) const {
    const auto p = space_.find(name);
    if (!p) throw UsageError("configuration lacks benchmark parameter '" + std::string(name) + "'");
    const ParamValue v = space_.value(config_, *p);
    const auto& ref = bundled_.param(*bundled_.find(name));
    if (!ref.index_of(v))
      throw UsageError("value of '" + std::string(name) + "' is off the benchmark grid");
    if (const auto* d = std::get_if<double>(&v)) return *d;
    if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
    if (const auto* b = std::get_if<bool>(&v)) return *b ? 1.0 : 0.0;
    throw UsageError("parameter '" + std::string(name) + "' is not numeric");
  }

 private:
  const ParameterSpace& bundled_;
  const ParameterSpace& space_;
  const Configuration& config_;
};

void kfusion(const Reader& at, double& runtime, double& ate) {
  const double v = at("volume_resolution");
  const double r = at("compute_size_ratio");
  const double t = at("tracking_rate");
  const double g = at("integration_rate");
  const double m = at("mu");
  const double e = at("icp_threshold");
  const double p1 = at("pyramid_level1_iterations");
  const double p2 = at("pyramid_level2_iterations");
  const double p3 = at("pyramid_level3_iterations");

  const double q = v / 64.0;
  runtime = 0.008 * (q * q * q) / r + 0.002 * (p1 + 2.0 * p2 + 4.0 * p3) / r + 0.010 / g + 0.006 / t +
            0.020 * (1.0 + std::sin(200.0 * m) * std::cos(1000.0 * e));
  ate = 0.012 * std::sqrt(256.0 / v) + 0.006 * (r - 1.0) + 0.004 * (t - 1.0) + 0.003 * (g - 1.0) +
        0.080 * std::abs(m - 0.100) + 2.0 * std::abs(e - 0.005) + 0.002 * std::max(0.0, 9.0 - p1 - p2 - p3) +
        0.005 * (1.0 + std::cos(150.0 * m + 800.0 * e));
}

void elasticfusion(const Reader& at, double& runtime, double& ate) {
  const double w = at("icp_rgb_weight");
  const double d = at("depth_cutoff");
  const double c = at("confidence_threshold");
  const double s = at("so3_disabled");
  const double o = at("open_loop");
  const double l = at("relocalisation");
  const double f = at("fast_odometry");
  const double b = at("ftf_rgb");

  runtime = 10.0 + 0.6 * std::sqrt(w) + 0.4 * d + 0.3 * c - 3.0 * f - 1.5 * s + 2.0 * b + 1.0 * (1.0 - o) +
            0.5 * (1.0 + std::sin(3.0 * w) * std::cos(2.0 * d));
  ate = 0.020 + 0.004 * std::abs(w - 2.0) + 0.003 * std::abs(d - 10.0) + 0.002 * std::abs(c - 4.0) +
        0.010 * s * f * 0.5 + 0.008 * o + 0.006 * (1.0 - l) + 0.004 * b +
        0.003 * (1.0 + std::cos(2.0 * w + d)) * 0.5;
}

}  // namespace

std::optional<Benchmark> benchmark_from_name(std::string_view name) {
  if (name == "synth-kfusion") return Benchmark::synth_kfusion;
  if (name == "synth-elasticfusion") return Benchmark::synth_elasticfusion;
  return std::nullopt;
}

std::string_view benchmark_name(Benchmark b) {
  return b == Benchmark::synth_kfusion ? "synth-kfusion" : "synth-elasticfusion";
}

std::string_view bundled_space_document(Benchmark b) {
  return b == Benchmark::synth_kfusion ? kKFusionSpace : kElasticFusionSpace;
}

ParameterSpace bundled_space(Benchmark b) { return parse_space(bundled_space_document(b)); }

EvaluationResult evaluate_builtin(Benchmark b, const ParameterSpace& space, const Configuration& config,
                                  std::uint64_t id) {
  static const ParameterSpace kf = bundled_space(Benchmark::synth_kfusion);
  static const ParameterSpace ef = bundled_space(Benchmark::synth_elasticfusion);
  if (!space.is_valid(config)) throw UsageError("configuration is not valid for its space");
  const Reader reader(b == Benchmark::synth_kfusion ? kf : ef, space, config);
  double runtime = 0.0;
  double ate = 0.0;
  if (b == Benchmark::synth_kfusion)
    kfusion(reader, runtime, ate);
  else
    elasticfusion(reader, runtime, ate);
  return EvaluationResult{id, {{"runtime_s", runtime}, {"ate_m", ate}}, std::nullopt};
}

std::vector<EvaluationResult> BuiltinEvaluator::evaluate(const ParameterSpace& space,
                                                         std::span<const EvaluationRequest> requests) {
  std::vector<EvaluationResult> out;
  out.reserve(requests.size());
  for (const auto& r : requests) {
    if (delay_.count() > 0) std::this_thread::sleep_for(delay_);
    out.push_back(evaluate_builtin(bench_, space, r.config, r.id));
    ++calls_;
  }
  return out;
}

}  // namespace paretotune
