#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "paretotune/evaluator.hpp"
#include "paretotune/journal.hpp"
#include "paretotune/sample.hpp"
#include "paretotune/space.hpp"
#include "paretotune/surrogate.hpp"

namespace paretotune {

struct SessionOptions {
  std::size_t rs = 100;  // random bootstrap batch size
  std::size_t max_iterations = 10;
  std::optional<std::size_t> per_iteration_cap = 500;
  std::optional<std::size_t> total_budget;
  std::uint64_t pool_cap = 2'000'000;
  ForestParams forest;
  Thresholds validity_thresholds;
  // Hypervolume reference for the iteration log. Defaults to the componentwise
  // max over the successful bootstrap samples.
  std::optional<ObjectiveVector> reference;
  std::uint64_t seed = 0;
  // A batch whose failed fraction reaches this value aborts the session.
  double max_failure_fraction = 0.5;

  void validate() const;
  Json to_json() const;
  static SessionOptions from_json(const Json& j);
};

enum class SessionStatus { running, converged, budget_exhausted };

std::string_view to_string(SessionStatus s);

struct IterationRecord {
  std::size_t index = 0;
  std::size_t predicted_front_size = 0;
  std::size_t new_samples = 0;
  std::optional<double> hypervolume;  // 2-objective sessions only
};

// Algorithm state: evaluated samples (append-only), per-iteration log and
// status. Single writer; an attached journal receives every event.
class TuningSession {
 public:
  TuningSession(ParameterSpace space, std::vector<std::string> objectives, SessionOptions options);

  // Starts a fresh journal at path (truncating) and writes the header.
  void attach_journal(const std::filesystem::path& path);

  // Rebuilds a session from a journal and reopens it for appending.
  static TuningSession resume(const std::filesystem::path& path);
  // Rebuilds a session from a journal without reopening it.
  static TuningSession load(const std::filesystem::path& path);

  // Runs until converged or a budget stops it.
  void run(Evaluator& evaluator);
  // Evaluates whatever part of the random bootstrap batch is missing.
  std::size_t bootstrap(Evaluator& evaluator);
  // Fit, predict over the pool, evaluate the unevaluated part of the predicted
  // front. Returns the number of new samples; 0 means converged.
  std::size_t active_learning_step(Evaluator& evaluator);

  const ParameterSpace& space() const { return space_; }
  const std::vector<std::string>& objectives() const { return objectives_; }
  const SessionOptions& options() const { return options_; }
  const std::vector<Sample>& samples() const { return samples_; }
  const std::vector<IterationRecord>& iterations() const { return iterations_; }
  SessionStatus status() const { return status_; }
  bool evaluated(std::uint64_t key) const { return keys_.contains(key); }

  std::optional<ObjectiveVector> reference() const;
  std::vector<FrontEntry> measured_front() const;
  std::optional<double> measured_hypervolume() const;

  Json header_json() const;

 private:
  struct Batch {
    std::vector<std::uint64_t> keys;  // canonical order
    std::size_t source = 0;
  };

  void evaluate_batch(Evaluator& evaluator, const Batch& batch);
  void append_sample(Sample sample);
  void set_status(SessionStatus s);
  void finish_iteration_if_done(const IterationRecord& record);
  void replay(const Json& record, std::size_t line);

  ParameterSpace space_;
  std::vector<std::string> objectives_;
  SessionOptions options_;
  std::vector<Sample> samples_;
  std::unordered_set<std::uint64_t> keys_;
  std::vector<IterationRecord> iterations_;
  SessionStatus status_ = SessionStatus::running;
  std::optional<JournalWriter> journal_;
};

TuningSession run_session(const ParameterSpace& space, const std::vector<std::string>& objectives,
                          Evaluator& evaluator, const SessionOptions& options,
                          const std::optional<std::filesystem::path>& journal = std::nullopt);

inline std::size_t active_learning_step(TuningSession& session, Evaluator& evaluator) {
  return session.active_learning_step(evaluator);
}

inline std::vector<FrontEntry> measured_front(const TuningSession& session) { return session.measured_front(); }

inline TuningSession resume(const std::filesystem::path& journal) { return TuningSession::resume(journal); }

}  // namespace paretotune
