#include "paretotune/session.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "paretotune/error.hpp"
#include "paretotune/pool.hpp"
#include "paretotune/rng.hpp"

namespace paretotune {

std::vector<Sample> filter_valid(std::span<const Sample> samples, std::span<const std::string> objective_names,
                                 const Thresholds& thresholds) {
  std::vector<Sample> ok;
  for (const auto& s : samples)
    if (s.ok()) ok.push_back(s);
  std::vector<ObjectiveVector> vectors;
  vectors.reserve(ok.size());
  for (const auto& s : ok) vectors.push_back(s.objectives);
  std::vector<Sample> out;
  for (std::size_t i : valid_indices(vectors, objective_names, thresholds)) out.push_back(std::move(ok[i]));
  return out;
}

std::vector<FrontEntry> front_of(std::span<const Sample> samples) {
  std::vector<std::pair<std::uint64_t, ObjectiveVector>> points;
  std::unordered_map<std::uint64_t, const Sample*> by_key;
  for (const auto& s : samples) {
    if (!s.ok()) continue;
    points.emplace_back(s.key, s.objectives);
    by_key.emplace(s.key, &s);
  }
  std::vector<FrontEntry> out;
  for (std::uint64_t key : pareto_front(points)) {
    const Sample& s = *by_key.at(key);
    out.push_back(FrontEntry{s.config, s.key, s.objectives, Provenance::measured});
  }
  return out;
}

std::string_view to_string(SessionStatus s) {
  switch (s) {
    case SessionStatus::running:
      return "running";
    case SessionStatus::converged:
      return "converged";
    case SessionStatus::budget_exhausted:
      return "budget-exhausted";
  }
  return "?";
}

namespace {

constexpr std::uint64_t kGatherLimit = std::uint64_t{1} << 26;

std::optional<SessionStatus> status_from_string(std::string_view s) {
  if (s == "running") return SessionStatus::running;
  if (s == "converged") return SessionStatus::converged;
  if (s == "budget-exhausted") return SessionStatus::budget_exhausted;
  return std::nullopt;
}

Json optional_json(const std::optional<std::size_t>& v) { return v ? Json(*v) : Json(nullptr); }

std::optional<std::size_t> optional_size(const Json& j, const char* key, std::optional<std::size_t> fallback) {
  if (!j.contains(key)) return fallback;
  if (j[key].is_null()) return std::nullopt;
  return j[key].get<std::size_t>();
}

}  // namespace

void SessionOptions::validate() const {
  if (rs < 1) throw UsageError("rs must be >= 1");
  if (pool_cap < 1) throw UsageError("pool_cap must be >= 1");
  if (per_iteration_cap && *per_iteration_cap < 1) throw UsageError("per-iteration cap must be >= 1");
  if (total_budget && rs > *total_budget)
    throw UsageError("budget misconfiguration: rs (" + std::to_string(rs) + ") exceeds the total budget (" +
                     std::to_string(*total_budget) + ")");
  if (!(max_failure_fraction > 0.0 && max_failure_fraction <= 1.0))
    throw UsageError("max_failure_fraction must lie in (0, 1]");
  forest.validate();
}

Json SessionOptions::to_json() const {
  Json thresholds = Json::object();
  for (const auto& [k, v] : validity_thresholds) thresholds[k] = v;
  return Json{{"rs", rs},
              {"max_iterations", max_iterations},
              {"per_iteration_cap", optional_json(per_iteration_cap)},
              {"total_budget", optional_json(total_budget)},
              {"pool_cap", pool_cap},
              {"forest", forest.to_json()},
              {"validity_thresholds", thresholds},
              {"reference", reference ? Json(*reference) : Json(nullptr)},
              {"seed", seed},
              {"max_failure_fraction", max_failure_fraction}};
}

SessionOptions SessionOptions::from_json(const Json& j) {
  SessionOptions o;
  o.rs = j.value("rs", o.rs);
  o.max_iterations = j.value("max_iterations", o.max_iterations);
  o.per_iteration_cap = optional_size(j, "per_iteration_cap", o.per_iteration_cap);
  o.total_budget = optional_size(j, "total_budget", o.total_budget);
  o.pool_cap = j.value("pool_cap", o.pool_cap);
  if (j.contains("forest")) o.forest = ForestParams::from_json(j["forest"]);
  if (j.contains("validity_thresholds"))
    for (const auto& [k, v] : j["validity_thresholds"].items()) o.validity_thresholds[k] = v.get<double>();
  if (j.contains("reference") && !j["reference"].is_null()) o.reference = j["reference"].get<ObjectiveVector>();
  o.seed = j.value("seed", o.seed);
  o.max_failure_fraction = j.value("max_failure_fraction", o.max_failure_fraction);
  return o;
}

TuningSession::TuningSession(ParameterSpace space, std::vector<std::string> objectives, SessionOptions options)
    : space_(std::move(space)), objectives_(std::move(objectives)), options_(std::move(options)) {
  options_.validate();
  if (objectives_.size() < 2) throw UsageError("a session needs at least two objectives");
  for (std::size_t i = 0; i < objectives_.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (objectives_[i] == objectives_[j]) throw UsageError("duplicate objective '" + objectives_[i] + "'");
  for (const auto& [name, _] : options_.validity_thresholds)
    if (std::find(objectives_.begin(), objectives_.end(), name) == objectives_.end())
      throw UsageError("validity threshold names unknown objective '" + name + "'");
  if (options_.reference && options_.reference->size() != objectives_.size())
    throw UsageError("reference point has the wrong number of objectives");
  if (options_.rs > space_.cardinality())
    throw UsageError("rs (" + std::to_string(options_.rs) + ") exceeds the space cardinality (" +
                     std::to_string(space_.cardinality()) + ")");
}

Json TuningSession::header_json() const {
  return Json{{"type", "header"},
              {"version", 1},
              {"space", space_.to_json()},
              {"objectives", objectives_},
              {"options", options_.to_json()}};
}

void TuningSession::attach_journal(const std::filesystem::path& path) {
  if (!samples_.empty()) throw UsageError("attach_journal must be called before any evaluation");
  journal_.emplace(path, JournalWriter::Mode::truncate);
  journal_->append(header_json());
  journal_->sync();
}

TuningSession TuningSession::load(const std::filesystem::path& path) {
  const auto records = read_journal(path);
  if (records.empty()) throw JournalError("journal '" + path.string() + "' is empty; last valid record is none");
  const Json& header = records.front();
  if (header["type"] != "header")
    throw JournalError("journal '" + path.string() + "': record 1 is not a session header; last valid record is none");
  std::optional<TuningSession> session;
  try {
    session.emplace(parse_space(header.at("space")), header.at("objectives").get<std::vector<std::string>>(),
                    SessionOptions::from_json(header.value("options", Json::object())));
  } catch (const JournalError&) {
    throw;
  } catch (const std::exception& e) {
    throw JournalError("journal '" + path.string() + "': record 1 (header) is invalid: " + e.what() +
                       "; last valid record is none");
  }
  for (std::size_t i = 1; i < records.size(); ++i) {
    try {
      session->replay(records[i], i + 1);
    } catch (const std::exception& e) {
      throw JournalError("journal '" + path.string() + "': record " + std::to_string(i + 1) + " is invalid: " +
                         e.what() + "; last valid record is " + std::to_string(i) + " (" +
                         records[i - 1].value("type", "?") + ")");
    }
  }
  return std::move(*session);
}

TuningSession TuningSession::resume(const std::filesystem::path& path) {
  TuningSession session = load(path);
  session.journal_.emplace(path, JournalWriter::Mode::append);
  return session;
}

void TuningSession::replay(const Json& record, std::size_t /*line*/) {
  const std::string type = record.at("type").get<std::string>();
  if (status_ != SessionStatus::running) throw JournalError("record follows a terminal status");
  if (type == "sample") {
    Sample s;
    s.id = record.at("id").get<std::uint64_t>();
    s.config = space_.config_from_json(record.at("config"));
    s.key = space_.rank(s.config);
    if (record.contains("key") && record["key"].get<std::uint64_t>() != s.key)
      throw JournalError("sample key does not match its configuration");
    const Json& source = record.at("source");
    s.source = source.is_string() && source == "random" ? kRandomSource : source.get<std::size_t>();
    if (s.source > iterations_.size() + 1) throw JournalError("sample belongs to a future iteration");
    s.wall_time = record.value("wall_time", 0.0);
    const std::string status = record.value("status", "ok");
    if (status == "ok") {
      s.objectives = record.at("objectives").get<ObjectiveVector>();
      if (s.objectives.size() != objectives_.size()) throw JournalError("sample has the wrong number of objectives");
      for (double v : s.objectives)
        if (!std::isfinite(v)) throw JournalError("sample has a non-finite objective");
    } else if (status == "failed") {
      s.error = record.value("error", std::string("failed"));
    } else {
      throw JournalError("unknown sample status '" + status + "'");
    }
    if (keys_.contains(s.key)) throw JournalError("configuration evaluated twice");
    keys_.insert(s.key);
    samples_.push_back(std::move(s));
  } else if (type == "iteration") {
    IterationRecord r;
    r.index = record.at("index").get<std::size_t>();
    if (r.index != iterations_.size() + 1) throw JournalError("iteration index out of sequence");
    r.predicted_front_size = record.at("predicted_front").get<std::size_t>();
    r.new_samples = record.at("new").get<std::size_t>();
    if (record.contains("hypervolume") && !record["hypervolume"].is_null())
      r.hypervolume = record["hypervolume"].get<double>();
    iterations_.push_back(r);
  } else if (type == "status") {
    const auto s = status_from_string(record.at("status").get<std::string>());
    if (!s) throw JournalError("unknown status");
    status_ = *s;
  } else {
    throw JournalError("unknown record type '" + type + "'");
  }
}

void TuningSession::append_sample(Sample sample) {
  if (journal_) {
    Json j{{"type", "sample"},
           {"id", sample.id},
           {"key", sample.key},
           {"source", sample.source == kRandomSource ? Json("random") : Json(sample.source)},
           {"config", space_.config_to_json(sample.config)},
           {"wall_time", sample.wall_time}};
    if (sample.ok()) {
      j["status"] = "ok";
      j["objectives"] = sample.objectives;
    } else {
      j["status"] = "failed";
      j["error"] = *sample.error;
    }
    journal_->append(j);
  }
  keys_.insert(sample.key);
  samples_.push_back(std::move(sample));
}

void TuningSession::set_status(SessionStatus s) {
  status_ = s;
  if (journal_) {
    journal_->append(Json{{"type", "status"}, {"status", std::string(to_string(s))}});
    journal_->sync();
  }
}

void TuningSession::evaluate_batch(Evaluator& evaluator, const Batch& batch) {
  if (batch.keys.empty()) return;
  std::vector<EvaluationRequest> requests;
  requests.reserve(batch.keys.size());
  for (std::size_t i = 0; i < batch.keys.size(); ++i)
    requests.push_back(EvaluationRequest{samples_.size() + i, space_.unrank(batch.keys[i])});

  const auto t0 = std::chrono::steady_clock::now();
  auto results = evaluator.evaluate(space_, requests);
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::unordered_map<std::uint64_t, EvaluationResult*> by_id;
  for (auto& r : results) by_id.emplace(r.id, &r);

  std::size_t failures = 0;
  std::string first_error;
  for (std::size_t i = 0; i < requests.size(); ++i) {
    Sample s;
    s.id = requests[i].id;
    s.config = requests[i].config;
    s.key = batch.keys[i];
    s.source = batch.source;
    s.wall_time = elapsed / static_cast<double>(requests.size());
    const auto it = by_id.find(s.id);
    if (it == by_id.end()) {
      s.error = "evaluator returned no result";
    } else if (!it->second->ok()) {
      s.error = *it->second->error;
    } else {
      for (const auto& name : objectives_) {
        const auto m = it->second->metrics.find(name);
        if (m == it->second->metrics.end() || !std::isfinite(m->second)) {
          s.error = "missing or non-finite objective '" + name + "'";
          s.objectives.clear();
          break;
        }
        s.objectives.push_back(m->second);
      }
    }
    if (!s.ok()) {
      if (failures++ == 0) first_error = *s.error;
    }
    append_sample(std::move(s));
  }
  if (journal_) journal_->sync();

  const double fraction = static_cast<double>(failures) / static_cast<double>(requests.size());
  if (failures > 0 && fraction >= options_.max_failure_fraction)
    throw EvaluatorError(std::to_string(failures) + " of " + std::to_string(requests.size()) +
                         " evaluations failed (first error: " + first_error + ")");
}

std::size_t TuningSession::bootstrap(Evaluator& evaluator) {
  Batch batch;
  batch.source = kRandomSource;
  for (const auto& c : sample_random(space_, options_.rs, options_.seed)) {
    const std::uint64_t key = space_.rank(c);
    if (!keys_.contains(key)) batch.keys.push_back(key);
  }
  std::sort(batch.keys.begin(), batch.keys.end());
  evaluate_batch(evaluator, batch);
  return batch.keys.size();
}

void TuningSession::finish_iteration_if_done(const IterationRecord& record) {
  if (record.new_samples == 0)
    set_status(SessionStatus::converged);
  else if (record.index >= options_.max_iterations ||
           (options_.total_budget && samples_.size() >= *options_.total_budget))
    set_status(SessionStatus::budget_exhausted);
}

std::size_t TuningSession::active_learning_step(Evaluator& evaluator) {
  if (status_ != SessionStatus::running) return 0;
  const std::size_t k = iterations_.size() + 1;

  // A resumed journal can end right after an iteration record.
  if (!iterations_.empty()) {
    const bool later_samples = std::any_of(samples_.begin(), samples_.end(),
                                           [&](const Sample& s) { return s.source >= k; });
    if (!later_samples) {
      finish_iteration_if_done(iterations_.back());
      if (status_ != SessionStatus::running) return 0;
    }
  }
  if (k > options_.max_iterations) {
    set_status(SessionStatus::budget_exhausted);
    return 0;
  }

  // State at the start of iteration k. Samples already journaled for k come
  // from an interrupted run of this same step.
  std::vector<const Sample*> prior;
  std::unordered_set<std::uint64_t> prior_keys;
  for (const auto& s : samples_)
    if (s.source < k) {
      prior.push_back(&s);
      prior_keys.insert(s.key);
    }
  if (options_.total_budget && prior.size() >= *options_.total_budget) {
    set_status(SessionStatus::budget_exhausted);
    return 0;
  }

  std::vector<FeatureVector> xs;
  std::vector<std::vector<double>> ys(objectives_.size());
  for (const Sample* s : prior) {
    if (!s->ok()) continue;
    xs.push_back(space_.encode(s->config));
    for (std::size_t j = 0; j < objectives_.size(); ++j) ys[j].push_back(s->objectives[j]);
  }
  if (xs.empty()) throw EvaluatorError("no successful samples to train the surrogate models on");

  std::vector<ForestModel> models;
  for (std::size_t j = 0; j < objectives_.size(); ++j) {
    ForestParams fp = options_.forest;
    fp.seed = splitmix64(options_.seed ^ splitmix64(options_.forest.seed + 1000 * k + j));
    models.push_back(fit_forest(xs, ys[j], fp, objectives_[j]));
  }

  // Pool: the whole space when it fits, else the evaluated configurations
  // plus a uniform subsample.
  std::vector<std::uint64_t> pool;
  std::vector<std::vector<double>> predicted(objectives_.size());
  const bool whole_space = space_.cardinality() <= options_.pool_cap;
  if (whole_space) {
    for (std::size_t j = 0; j < objectives_.size(); ++j) predicted[j] = predict_space(models[j], space_);
  } else {
    Rng rng = make_rng(options_.seed, 0x9001 + k);
    const std::uint64_t target =
        std::min<std::uint64_t>(space_.cardinality(), std::max<std::uint64_t>(options_.pool_cap, prior_keys.size()));
    if (space_.cardinality() <= kGatherLimit) {
      std::vector<bool> chosen(space_.cardinality(), false);
      for (std::uint64_t key : prior_keys) chosen[key] = true;
      for (std::uint64_t n = prior_keys.size(); n < target;) {
        const std::uint64_t key = uniform_below(rng, space_.cardinality());
        if (!chosen[key]) {
          chosen[key] = true;
          ++n;
        }
      }
      pool.reserve(target);
      for (std::uint64_t key = 0; key < chosen.size(); ++key)
        if (chosen[key]) pool.push_back(key);
    } else {
      std::unordered_set<std::uint64_t> chosen(prior_keys);
      while (chosen.size() < target) chosen.insert(uniform_below(rng, space_.cardinality()));
      pool.assign(chosen.begin(), chosen.end());
      std::sort(pool.begin(), pool.end());
    }
    // Gathering from a whole-grid prediction gives the same values as
    // pointwise prediction and is much cheaper while the grid stays modest.
    const bool gather = space_.cardinality() <= kGatherLimit;
    for (std::size_t j = 0; j < objectives_.size(); ++j) {
      if (gather) {
        const auto all = predict_space(models[j], space_);
        predicted[j].reserve(pool.size());
        for (std::uint64_t key : pool) predicted[j].push_back(all[key]);
      } else {
        predicted[j] = predict_ranks(models[j], space_, pool);
      }
    }
  }
  const auto front = pareto_front_columns(predicted);

  // Front order is ascending first objective with ties by key.
  std::vector<std::uint64_t> candidates;
  for (std::size_t idx : front) {
    const std::uint64_t key = whole_space ? idx : pool[idx];
    if (!prior_keys.contains(key)) candidates.push_back(key);
  }
  std::size_t cap = std::numeric_limits<std::size_t>::max();
  if (options_.per_iteration_cap) cap = *options_.per_iteration_cap;
  if (options_.total_budget) cap = std::min(cap, *options_.total_budget - prior.size());
  if (candidates.size() > cap) candidates.resize(cap);
  std::sort(candidates.begin(), candidates.end());

  Batch batch;
  batch.source = k;
  std::unordered_set<std::uint64_t> planned(candidates.begin(), candidates.end());
  for (const auto& s : samples_)
    if (s.source == k && !planned.contains(s.key))
      throw JournalError("journaled sample for iteration " + std::to_string(k) + " is not in its batch");
  for (std::uint64_t key : candidates)
    if (!keys_.contains(key)) batch.keys.push_back(key);
  evaluate_batch(evaluator, batch);

  IterationRecord record{k, front.size(), candidates.size(), measured_hypervolume()};
  iterations_.push_back(record);
  if (journal_) {
    journal_->append(Json{{"type", "iteration"},
                          {"index", record.index},
                          {"predicted_front", record.predicted_front_size},
                          {"new", record.new_samples},
                          {"hypervolume", record.hypervolume ? Json(*record.hypervolume) : Json(nullptr)}});
    journal_->sync();
  }
  finish_iteration_if_done(record);
  return record.new_samples;
}

void TuningSession::run(Evaluator& evaluator) {
  if (status_ != SessionStatus::running) return;
  bootstrap(evaluator);
  while (status_ == SessionStatus::running) active_learning_step(evaluator);
}

std::optional<ObjectiveVector> TuningSession::reference() const {
  if (options_.reference) return options_.reference;
  std::optional<ObjectiveVector> ref;
  for (const auto& s : samples_) {
    if (!s.ok() || s.source != kRandomSource) continue;
    if (!ref) {
      ref = s.objectives;
      continue;
    }
    for (std::size_t j = 0; j < ref->size(); ++j) (*ref)[j] = std::max((*ref)[j], s.objectives[j]);
  }
  return ref;
}

std::vector<FrontEntry> TuningSession::measured_front() const {
  const auto valid = filter_valid(samples_, objectives_, options_.validity_thresholds);
  if (std::none_of(samples_.begin(), samples_.end(), [](const Sample& s) { return s.ok(); }))
    throw UsageError("session has no successful samples");
  return front_of(valid);
}

std::optional<double> TuningSession::measured_hypervolume() const {
  if (objectives_.size() != 2) return std::nullopt;
  const auto ref = reference();
  if (!ref) return std::nullopt;
  std::vector<ObjectiveVector> inside;
  for (const auto& e : front_of(filter_valid(samples_, objectives_, options_.validity_thresholds)))
    if (e.objectives[0] <= (*ref)[0] && e.objectives[1] <= (*ref)[1]) inside.push_back(e.objectives);
  return hypervolume_2d(inside, *ref);
}

TuningSession run_session(const ParameterSpace& space, const std::vector<std::string>& objectives,
                          Evaluator& evaluator, const SessionOptions& options,
                          const std::optional<std::filesystem::path>& journal) {
  TuningSession session(space, objectives, options);
  if (journal) session.attach_journal(*journal);
  session.run(evaluator);
  return session;
}

}  // namespace paretotune
