#include "paretotune/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "paretotune/csv.hpp"
#include "paretotune/error.hpp"
#include "paretotune/evaluator.hpp"
#include "paretotune/report.hpp"
#include "paretotune/session.hpp"

namespace paretotune {

namespace {

namespace fs = std::filesystem;

ParameterSpace load_space_arg(const std::string& spec) {
  if (spec.rfind("builtin:", 0) == 0) {
    const auto b = benchmark_from_name(spec.substr(8));
    if (!b) throw UsageError("unknown builtin space '" + spec.substr(8) + "'");
    return bundled_space(*b);
  }
  if (!fs::exists(spec)) throw UsageError("space file '" + spec + "' does not exist");
  return load_space(spec);
}

struct EvaluatorFlags {
  std::string spec;
  double timeout_s = 3600.0;
  std::size_t parallel = 1;
  long long delay_ms = 0;
};

std::unique_ptr<Evaluator> make_evaluator(const EvaluatorFlags& flags, const std::vector<std::string>& objectives) {
  const auto& spec = flags.spec;
  if (spec.rfind("builtin:", 0) == 0) {
    const auto b = benchmark_from_name(spec.substr(8));
    if (!b) throw UsageError("unknown builtin evaluator '" + spec.substr(8) + "'");
    return std::make_unique<BuiltinEvaluator>(*b, std::chrono::milliseconds(flags.delay_ms));
  }
  if (spec.rfind("cmd:", 0) == 0) {
    if (spec.size() == 4) throw UsageError("--evaluator cmd: needs a command");
    if (!(flags.timeout_s > 0)) throw UsageError("--timeout must be positive");
    return std::make_unique<SubprocessEvaluator>(
        spec.substr(4), std::chrono::milliseconds(static_cast<long long>(flags.timeout_s * 1000.0)), flags.parallel,
        objectives);
  }
  throw UsageError("--evaluator must be builtin:NAME or cmd:COMMAND, got '" + spec + "'");
}

Thresholds parse_thresholds(const std::vector<std::string>& specs) {
  Thresholds out;
  for (const auto& s : specs) {
    const auto lt = s.find('<');
    if (lt == std::string::npos || lt == 0 || lt + 1 >= s.size())
      throw UsageError("--valid expects <objective>< <value>, got '" + s + "'");
    out[s.substr(0, lt)] = parse_double(s.substr(lt + 1));
  }
  return out;
}

ObjectiveVector parse_vector(const std::string& text) {
  ObjectiveVector out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) out.push_back(parse_double(item));
  return out;
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("PARETOTUNE_SEED"); env && *env) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(env, &used);
      if (used == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
    throw UsageError(std::string("PARETOTUNE_SEED is not an unsigned integer: '") + env + "'");
  }
  return 0;
}

std::size_t non_negative(long long v, const char* flag) {
  if (v < 0) throw UsageError(std::string(flag) + " must not be negative");
  return static_cast<std::size_t>(v);
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write '" + path.string() + "'");
  out << content;
}

std::optional<FrontEntry> find_default(const TuningSession& session, const std::optional<Configuration>& config,
                                       Evaluator* evaluator) {
  if (!config) return std::nullopt;
  const auto key = session.space().rank(*config);
  for (const auto& s : session.samples())
    if (s.key == key && s.ok()) return FrontEntry{s.config, s.key, s.objectives, Provenance::measured};
  if (!evaluator) return std::nullopt;
  const EvaluationRequest req{0, *config};
  const auto results = evaluator->evaluate(session.space(), std::span(&req, 1));
  if (results.empty() || !results.front().ok()) return std::nullopt;
  ObjectiveVector objs;
  for (const auto& name : session.objectives()) {
    const auto it = results.front().metrics.find(name);
    if (it == results.front().metrics.end()) return std::nullopt;
    objs.push_back(it->second);
  }
  return FrontEntry{*config, key, objs, Provenance::measured};
}

struct TuneFlags {
  std::string space;
  EvaluatorFlags evaluator;
  std::vector<std::string> objectives;
  long long rs = 100;
  long long max_iters = 10;
  long long cap = 500;
  long long budget = 0;
  long long pool_cap = 2'000'000;
  long long trees = 100;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> valid;
  std::string ref;
  bool resume = false;
};

int cmd_tune(const TuneFlags& f, std::ostream& out) {
  const fs::path dir(f.out);
  fs::create_directories(dir);
  const fs::path journal = dir / "journal.jsonl";

  std::optional<TuningSession> session;
  std::vector<std::string> objectives = f.objectives;
  if (fs::exists(journal)) {
    if (!f.resume) throw UsageError("'" + journal.string() + "' already exists; pass --resume to continue it");
    session.emplace(TuningSession::resume(journal));
    objectives = session->objectives();
  }
  auto evaluator = make_evaluator(f.evaluator, objectives);
  if (!session) {
    if (f.space.empty()) throw UsageError("--space is required");
    if (objectives.empty()) objectives = evaluator->objectives();
    if (objectives.empty()) throw UsageError("--objectives is required for this evaluator");
    SessionOptions o;
    if (f.rs < 1) throw UsageError("--rs must be >= 1");
    o.rs = static_cast<std::size_t>(f.rs);
    o.max_iterations = non_negative(f.max_iters, "--max-iters");
    o.per_iteration_cap = f.cap == 0 ? std::nullopt : std::optional<std::size_t>(non_negative(f.cap, "--cap"));
    o.total_budget = f.budget == 0 ? std::nullopt : std::optional<std::size_t>(non_negative(f.budget, "--budget"));
    if (f.pool_cap < 1) throw UsageError("--pool-cap must be >= 1");
    o.pool_cap = static_cast<std::uint64_t>(f.pool_cap);
    if (f.trees < 1) throw UsageError("--trees must be >= 1");
    o.forest.n_trees = static_cast<std::size_t>(f.trees);
    o.validity_thresholds = parse_thresholds(f.valid);
    if (!f.ref.empty()) o.reference = parse_vector(f.ref);
    o.seed = resolve_seed(f.seed);
    session.emplace(load_space_arg(f.space), objectives, o);
    session->attach_journal(journal);
  }

  session->run(*evaluator);

  const auto front = session->measured_front();
  {
    std::ostringstream csv;
    write_front_csv(csv, session->space(), session->objectives(), front);
    write_file(dir / "front.csv", csv.str());
  }
  {
    std::ostringstream csv;
    write_points_csv(csv, session->space(), session->objectives(), session->samples());
    write_file(dir / "points.csv", csv.str());
  }
  std::optional<FrontEntry> def;
  try {
    def = find_default(*session, session->space().default_configuration(), evaluator.get());
  } catch (const std::exception&) {
    def.reset();
  }
  const auto summary = summarize(session->objectives(), session->samples(), session->options().validity_thresholds,
                                 session->reference(), def);
  Json j = summary.to_json(session->space());
  j["status"] = std::string(to_string(session->status()));
  Json iters = Json::array();
  for (const auto& it : session->iterations())
    iters.push_back(Json{{"index", it.index},
                         {"predicted_front", it.predicted_front_size},
                         {"new", it.new_samples},
                         {"hypervolume", it.hypervolume ? Json(*it.hypervolume) : Json(nullptr)}});
  j["iterations"] = iters;
  write_file(dir / "summary.json", j.dump(2) + "\n");

  out << "status: " << to_string(session->status()) << "\n";
  out << "samples: " << session->samples().size() << " (random " << session->options().rs << ", "
      << session->iterations().size() << " active-learning iterations)\n";
  for (const auto& it : session->iterations())
    out << "  iteration " << it.index << ": predicted front " << it.predicted_front_size << ", new " << it.new_samples
        << "\n";
  out << "front: " << front.size() << " points -> " << (dir / "front.csv").string() << "\n";
  return kExitOk;
}

TuningSession load_for_reading(const std::string& path) {
  if (!fs::exists(path)) throw JournalError("journal '" + path + "' does not exist");
  auto session = TuningSession::load(path);
  if (session.samples().empty()) throw JournalError("journal '" + path + "' holds no samples");
  if (std::none_of(session.samples().begin(), session.samples().end(), [](const Sample& s) { return s.ok(); }))
    throw JournalError("journal '" + path + "' holds no successful samples");
  return session;
}

int cmd_pareto(const std::string& samples, const std::vector<std::string>& valid, const std::string& out_path,
               std::ostream& out) {
  const auto session = load_for_reading(samples);
  const Thresholds thresholds = valid.empty() ? session.options().validity_thresholds : parse_thresholds(valid);
  const auto front = front_of(filter_valid(session.samples(), session.objectives(), thresholds));
  std::ostringstream csv;
  write_front_csv(csv, session.space(), session.objectives(), front);
  if (out_path.empty())
    out << csv.str();
  else
    write_file(out_path, csv.str());
  return kExitOk;
}

int cmd_report(const std::string& samples, const std::vector<std::string>& valid, const std::string& ref,
               const std::string& default_path, const EvaluatorFlags& eval_flags, const std::string& out_path,
               bool json, std::ostream& out) {
  const auto session = load_for_reading(samples);
  const Thresholds thresholds = valid.empty() ? session.options().validity_thresholds : parse_thresholds(valid);
  std::optional<ObjectiveVector> reference;
  if (!ref.empty()) reference = parse_vector(ref);

  std::optional<Configuration> default_config;
  if (!default_path.empty()) {
    std::ifstream in(default_path);
    if (!in) throw UsageError("cannot open default configuration '" + default_path + "'");
    const Json doc = Json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw UsageError("default configuration '" + default_path + "' is not valid JSON");
    default_config = session.space().config_from_json(doc);
  } else {
    default_config = session.space().default_configuration();
  }
  std::unique_ptr<Evaluator> evaluator;
  if (!eval_flags.spec.empty()) evaluator = make_evaluator(eval_flags, session.objectives());
  const auto def = find_default(session, default_config, evaluator.get());
  if (default_config && !def && !default_path.empty())
    throw UsageError("default configuration is not in the journal and could not be evaluated (pass --evaluator)");

  const auto summary = summarize(session.objectives(), session.samples(), thresholds, reference, def);
  const std::string doc = summary.to_json(session.space()).dump(2) + "\n";
  if (!out_path.empty()) write_file(out_path, doc);
  if (json)
    out << doc;
  else
    out << summary.to_table();
  return kExitOk;
}

int cmd_sample(const std::string& space_arg, long long n, std::optional<std::uint64_t> seed,
               const EvaluatorFlags& eval_flags, std::vector<std::string> objectives, const std::string& out_path,
               std::ostream& out) {
  const auto space = load_space_arg(space_arg);
  if (n < 0) throw UsageError("--n must not be negative");
  const auto configs = sample_random(space, static_cast<std::uint64_t>(n), resolve_seed(seed));
  std::vector<EvaluationResult> results;
  if (!eval_flags.spec.empty()) {
    auto evaluator = make_evaluator(eval_flags, objectives);
    if (objectives.empty()) objectives = evaluator->objectives();
    if (objectives.empty()) throw UsageError("--objectives is required for this evaluator");
    std::vector<EvaluationRequest> requests;
    for (std::size_t i = 0; i < configs.size(); ++i) requests.push_back({i, configs[i]});
    results = evaluator->evaluate(space, requests);
  }
  std::ostringstream csv;
  write_configurations_csv(csv, space, configs, objectives, results);
  if (out_path.empty())
    out << csv.str();
  else
    write_file(out_path, csv.str());
  return kExitOk;
}

int cmd_space(const std::string& space_arg, bool json, std::ostream& out) {
  const auto space = load_space_arg(space_arg);
  if (json) {
    out << space.to_json().dump(2) << "\n";
    return kExitOk;
  }
  for (const auto& p : space.params()) {
    out << p.name() << " (" << to_string(p.kind()) << ", " << p.size() << " values):";
    for (std::size_t i = 0; i < p.size(); ++i) out << ' ' << p.value_text(i);
    if (p.default_index()) out << "  [default " << p.value_text(*p.default_index()) << "]";
    out << "\n";
  }
  out << "cardinality: " << space.cardinality() << "\n";
  out << "encoding width: " << space.encoding_width() << "\n";
  return kExitOk;
}

void add_evaluator_flags(CLI::App* cmd, EvaluatorFlags& f, bool required) {
  auto* opt = cmd->add_option("--evaluator", f.spec, "builtin:NAME or cmd:COMMAND");
  if (required) opt->required();
  cmd->add_option("--timeout", f.timeout_s, "Per-batch timeout for cmd: evaluators, seconds");
  cmd->add_option("--parallel", f.parallel, "Concurrent evaluator processes per batch")->check(CLI::PositiveNumber);
  cmd->add_option("--delay-ms", f.delay_ms, "Artificial delay per builtin evaluation");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-objective auto-tuner: random-forest surrogates with active learning on the predicted Pareto front",
               "paretotune"};
  app.require_subcommand(1);

  TuneFlags tune;
  auto* tune_cmd = app.add_subcommand("tune", "Run (or resume) a tuning session");
  tune_cmd->add_option("--space", tune.space, "Space definition file or builtin:NAME");
  add_evaluator_flags(tune_cmd, tune.evaluator, true);
  tune_cmd->add_option("--objectives", tune.objectives, "Objective names (comma separated)")->delimiter(',');
  tune_cmd->add_option("--rs", tune.rs, "Random bootstrap batch size");
  tune_cmd->add_option("--max-iters", tune.max_iters, "Maximum active-learning iterations");
  tune_cmd->add_option("--cap", tune.cap, "Per-iteration evaluation cap (0 = unlimited)");
  tune_cmd->add_option("--budget", tune.budget, "Total evaluation budget (0 = unlimited)");
  tune_cmd->add_option("--pool-cap", tune.pool_cap, "Largest pool predicted per iteration");
  tune_cmd->add_option("--trees", tune.trees, "Trees per forest");
  tune_cmd->add_option("--seed", tune.seed, "RNG seed (falls back to PARETOTUNE_SEED)");
  tune_cmd->add_option("--out", tune.out, "Output directory")->required();
  tune_cmd->add_option("--valid", tune.valid, "Validity threshold, e.g. ate_m<0.05 (repeatable)");
  tune_cmd->add_option("--ref", tune.ref, "Hypervolume reference point, comma separated");
  tune_cmd->add_flag("--resume", tune.resume, "Continue the journal in --out");

  std::string samples;
  std::vector<std::string> valid;
  std::string out_path;
  auto* pareto_cmd = app.add_subcommand("pareto", "Measured Pareto front of a session journal");
  pareto_cmd->add_option("--samples", samples, "Session journal")->required();
  pareto_cmd->add_option("--valid", valid, "Validity threshold (repeatable)");
  pareto_cmd->add_option("--out", out_path, "Output CSV (default: stdout)");

  std::string ref;
  std::string default_path;
  bool json = false;
  EvaluatorFlags report_eval;
  auto* report_cmd = app.add_subcommand("report", "Summarize a session journal");
  report_cmd->add_option("--samples", samples, "Session journal")->required();
  report_cmd->add_option("--valid", valid, "Validity threshold (repeatable)");
  report_cmd->add_option("--ref", ref, "Hypervolume reference point, comma separated");
  report_cmd->add_option("--default", default_path, "Default configuration (JSON object)");
  add_evaluator_flags(report_cmd, report_eval, false);
  report_cmd->add_option("--out", out_path, "Write the JSON summary here");
  report_cmd->add_flag("--json", json, "Print JSON instead of a table");

  std::string space_arg;
  long long n = 0;
  std::optional<std::uint64_t> seed;
  EvaluatorFlags sample_eval;
  std::vector<std::string> objectives;
  auto* sample_cmd = app.add_subcommand("sample", "Draw distinct random configurations");
  sample_cmd->add_option("--space", space_arg, "Space definition file or builtin:NAME")->required();
  sample_cmd->add_option("--n", n, "Number of configurations")->required();
  sample_cmd->add_option("--seed", seed, "RNG seed (falls back to PARETOTUNE_SEED)");
  add_evaluator_flags(sample_cmd, sample_eval, false);
  sample_cmd->add_option("--objectives", objectives, "Objective names (comma separated)")->delimiter(',');
  sample_cmd->add_option("--out", out_path, "Output CSV (default: stdout)");

  auto* space_cmd = app.add_subcommand("space", "Describe a space definition");
  space_cmd->add_option("--space", space_arg, "Space definition file or builtin:NAME")->required();
  space_cmd->add_flag("--json", json, "Print the normalized JSON document");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    std::ostringstream cli_out;
    std::ostringstream cli_err;
    const int code = app.exit(e, cli_out, cli_err);
    out << cli_out.str();
    err << cli_err.str();
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*tune_cmd) return cmd_tune(tune, out);
    if (*pareto_cmd) return cmd_pareto(samples, valid, out_path, out);
    if (*report_cmd) return cmd_report(samples, valid, ref, default_path, report_eval, out_path, json, out);
    if (*sample_cmd) return cmd_sample(space_arg, n, seed, sample_eval, objectives, out_path, out);
    if (*space_cmd) return cmd_space(space_arg, json, out);
  } catch (const JournalError& e) {
    err << "error: " << e.what() << "\n";
    return kExitJournal;
  } catch (const EvaluatorError& e) {
    err << "evaluator error: " << e.what() << "\n";
    return kExitEvaluator;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitUsage;
}

}  // namespace paretotune
