#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "paretotune/space.hpp"

namespace paretotune {

struct EvaluationRequest {
  std::uint64_t id = 0;
  Configuration config;
};

struct EvaluationResult {
  std::uint64_t id = 0;
  std::map<std::string, double> metrics;
  std::optional<std::string> error;  // set when the evaluation failed

  bool ok() const { return !error.has_value(); }
  static EvaluationResult failure(std::uint64_t id, std::string reason) {
    return EvaluationResult{id, {}, std::move(reason)};
  }
};

class Evaluator {
 public:
  virtual ~Evaluator() = default;

  // One result per request, in request order.
  virtual std::vector<EvaluationResult> evaluate(const ParameterSpace& space,
                                                 std::span<const EvaluationRequest> requests) = 0;

  // Metric names the evaluator is known to produce; empty if unknown.
  virtual std::vector<std::string> objectives() const { return {}; }
};

// Built-in synthetic benchmark surfaces.
enum class Benchmark { synth_kfusion, synth_elasticfusion };

std::optional<Benchmark> benchmark_from_name(std::string_view name);
std::string_view benchmark_name(Benchmark b);

// The bundled space definition document for a benchmark.
std::string_view bundled_space_document(Benchmark b);
ParameterSpace bundled_space(Benchmark b);

// Deterministic, noise-free metrics {runtime_s, ate_m}. The configuration may
// come from any space whose parameters carry the benchmark's names and take
// values on the benchmark's grid (sub-grids of the bundled space qualify).
EvaluationResult evaluate_builtin(Benchmark b, const ParameterSpace& space, const Configuration& config,
                                  std::uint64_t id = 0);

class BuiltinEvaluator : public Evaluator {
 public:
  explicit BuiltinEvaluator(Benchmark b, std::chrono::milliseconds delay = {}) : bench_(b), delay_(delay) {}

  std::vector<EvaluationResult> evaluate(const ParameterSpace& space,
                                         std::span<const EvaluationRequest> requests) override;
  std::vector<std::string> objectives() const override { return {"runtime_s", "ate_m"}; }

  std::uint64_t calls() const { return calls_; }

 private:
  Benchmark bench_;
  std::chrono::milliseconds delay_;
  std::uint64_t calls_ = 0;
};

// Wire encoding of one request line (without the trailing LF).
std::string encode_request_line(const ParameterSpace& space, const EvaluationRequest& request);

// Parses one response line. Returns nullopt when the line carries no usable id.
// A line with an id but a malformed body yields a failed result for that id.
std::optional<EvaluationResult> decode_response_line(std::string_view line);

// Runs `command` through /bin/sh once per batch, streaming requests on the
// child's stdin and reading results from its stdout. Results come back in
// request order; ids the child never answered (exit, timeout, malformed line)
// are failed. Throws EvaluatorError when the child cannot be spawned.
std::vector<EvaluationResult> evaluate_subprocess(const std::string& command, const ParameterSpace& space,
                                                  std::span<const EvaluationRequest> requests,
                                                  std::chrono::milliseconds timeout);

class SubprocessEvaluator : public Evaluator {
 public:
  SubprocessEvaluator(std::string command, std::chrono::milliseconds timeout, std::size_t parallelism = 1,
                      std::vector<std::string> objectives = {});

  std::vector<EvaluationResult> evaluate(const ParameterSpace& space,
                                         std::span<const EvaluationRequest> requests) override;
  std::vector<std::string> objectives() const override { return objectives_; }

 private:
  std::string command_;
  std::chrono::milliseconds timeout_;
  std::size_t parallelism_;
  std::vector<std::string> objectives_;
};

}  // namespace paretotune
