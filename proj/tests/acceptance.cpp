// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <unordered_set>

#include "paretotune/cli.hpp"
#include "paretotune/csv.hpp"
#include "paretotune/journal.hpp"
#include "paretotune/pareto.hpp"
#include "paretotune/session.hpp"
#include "paretotune/surrogate.hpp"
#include "support.hpp"

using namespace paretotune;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

Outcome fail(std::string why) { return {false, std::move(why)}; }

int failures = 0;
std::string only;  // optional name filter from argv

void criterion(const std::string& name, const std::function<Outcome()>& body) {
  if (name.find(only) == std::string::npos) return;
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = fail(std::string("exception: ") + e.what());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass) ++failures;
  char timing[32];
  std::snprintf(timing, sizeof timing, "%.1fs", secs);
  std::cout << (o.pass ? "PASS " : "FAIL ") << name << " (" << timing << ")";
  if (!o.detail.empty()) std::cout << ": " << o.detail;
  std::cout << std::endl;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::vector<ObjectiveVector> objectives_of(const std::vector<FrontEntry>& front) {
  std::vector<ObjectiveVector> out;
  for (const auto& e : front) out.push_back(e.objectives);
  return out;
}

double grid_front_hypervolume(const testing::GridTruth& g) {
  std::vector<ObjectiveVector> front;
  for (auto i : testing::brute_front(g.points)) front.push_back(g.points[i]);
  return hypervolume_2d(front, g.max);
}

std::string front_csv(const TuningSession& s) {
  std::ostringstream out;
  const auto front = s.measured_front();
  write_front_csv(out, s.space(), s.objectives(), front);
  return out.str();
}

// Journal records minus wall-clock fields.
std::vector<Json> without_timing(const testing::fs::path& path) {
  auto records = read_journal(path);
  for (auto& r : records) r.erase("wall_time");
  return records;
}

const std::vector<std::string> kRuntimeFirst = {"runtime_s", "ate_m"};

Outcome five_run_fixture() {
  const std::vector<std::pair<int, ObjectiveVector>> rows = {
      {0, {0.0558, 22.2}}, {1, {0.0420, 14.6}}, {2, {0.0332, 15.2}}, {3, {0.0302, 15.8}}, {4, {0.0269, 17.2}}};
  auto front = pareto_front(rows);
  std::sort(front.begin(), front.end());
  if (front != std::vector<int>{1, 2, 3, 4}) return fail("front is not the four non-default rows");

  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli({"report", "--samples", testing::data_file("five-runs.jsonl").string(), "--json"}, out, err);
  if (code != 0) return fail("report exited " + std::to_string(code) + ": " + err.str());
  const auto j = Json::parse(out.str());
  const double speedup = j["improvement_vs_default"]["runtime_s"];
  const double accuracy = j["improvement_vs_default"]["ate_m"];
  if (std::fabs(speedup - 1.52) > 0.005) return fail("speedup " + fmt(speedup));
  if (std::fabs(accuracy - 2.07) > 0.01) return fail("accuracy ratio " + fmt(accuracy));
  return {true, "speedup " + fmt(speedup) + "x, accuracy " + fmt(accuracy) + "x"};
}

Outcome dominance_oracle() {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> size(0, 1000);
  for (int trial = 0; trial < 1000; ++trial) {
    // Alternate coarse grids (many ties) with continuous values.
    const bool coarse = trial % 2 == 0;
    std::uniform_int_distribution<int> level(0, 25);
    std::uniform_real_distribution<double> real(0.0, 1.0);
    const std::size_t n = size(rng);
    std::vector<std::vector<double>> pts;
    std::vector<std::pair<std::size_t, ObjectiveVector>> keyed;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> p = coarse ? std::vector<double>{level(rng) / 4.0, level(rng) / 4.0}
                                     : std::vector<double>{real(rng), real(rng)};
      pts.push_back(p);
      keyed.emplace_back(i, p);
    }
    auto got = pareto_front(keyed);
    std::sort(got.begin(), got.end());
    if (got != testing::brute_front(pts)) return fail("mismatch on set " + std::to_string(trial));
  }
  return {true, "1000 sets"};
}

Outcome hypervolume_oracle() {
  const std::vector<double> ref2 = {2.0, 2.0};
  const double one = hypervolume_2d(std::vector<ObjectiveVector>{{1.0, 1.0}}, ref2);
  const double two = hypervolume_2d(std::vector<ObjectiveVector>{{0.0, 1.0}, {1.0, 0.0}}, ref2);
  if (std::fabs(one - 1.0) > 1e-9) return fail("{(1,1)} gives " + fmt(one));
  if (std::fabs(two - 3.0) > 1e-9 * 3.0) return fail("{(0,1),(1,0)} gives " + fmt(two));

  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::vector<double> ref = {1.1, 1.1};
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::vector<double>> pts;
    for (int i = 0; i < 2 + trial % 40; ++i) pts.push_back({u(rng), u(rng)});
    std::vector<ObjectiveVector> front;
    for (auto i : testing::brute_front(pts)) front.push_back(pts[i]);
    const double hv = hypervolume_2d(front, ref);
    const double mc = testing::monte_carlo_hypervolume(front, ref, 1'000'000, 1000 + trial);
    const double rel = std::fabs(hv - mc) / mc;
    worst = std::max(worst, rel);
    if (rel > 0.01) return fail("front " + std::to_string(trial) + " off by " + fmt(rel * 100) + "%");
  }
  return {true, "worst Monte Carlo deviation " + fmt(worst * 100) + "%"};
}

Outcome forest_interpolation() {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t width = 1 + trial % 6;
    const std::size_t n = 5 + (trial * 37) % 300;
    std::uniform_int_distribution<int> level(0, 9);
    std::normal_distribution<double> label(0.0, 10.0);
    std::set<FeatureVector> seen;
    std::vector<FeatureVector> xs;
    std::vector<double> ys;
    for (std::size_t tries = 0; xs.size() < n && tries < 100 * n; ++tries) {
      FeatureVector x(width);
      for (auto& v : x) v = level(rng) * 0.5;
      if (!seen.insert(x).second) continue;
      xs.push_back(x);
      ys.push_back(label(rng));
    }
    ForestParams p;
    p.n_trees = 1;
    p.bootstrap = false;
    p.min_samples_leaf = 1;
    p.feature_subsample = 1.0;
    p.seed = trial;
    const auto model = fit_forest(xs, ys, p);
    for (std::size_t i = 0; i < xs.size(); ++i)
      if (model.predict(xs[i]) != ys[i]) return fail("dataset " + std::to_string(trial) + " misses a label");
  }

  // Range containment under the default forest.
  std::uniform_real_distribution<double> u(-1.0, 2.0);
  std::size_t checked = 0;
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<FeatureVector> xs;
    std::vector<double> ys;
    for (int i = 0; i < 200; ++i) {
      xs.push_back({u(rng), u(rng), u(rng), u(rng)});
      ys.push_back(std::sin(3 * xs.back()[0]) + xs.back()[1] * xs.back()[2] + u(rng));
    }
    ForestParams p;
    p.n_trees = 30;
    p.seed = trial;
    const auto model = fit_forest(xs, ys, p);
    const double lo = *std::min_element(ys.begin(), ys.end());
    const double hi = *std::max_element(ys.begin(), ys.end());
    std::uniform_real_distribution<double> wide(-5.0, 5.0);
    for (int i = 0; i < 10'000; ++i, ++checked) {
      const FeatureVector x = {wide(rng), wide(rng), wide(rng), wide(rng)};
      const double y = model.predict(x);
      if (y < lo || y > hi) return fail("prediction " + fmt(y) + " outside [" + fmt(lo) + ", " + fmt(hi) + "]");
    }
  }
  return {true, "100 datasets, " + std::to_string(checked) + " range checks"};
}

Outcome small_space_exactness() {
  const auto space = load_space(testing::data_file("kfusion-10368.space").string());
  if (space.cardinality() != 10368) return fail("sub-grid has " + std::to_string(space.cardinality()) + " points");
  const auto grid = testing::kfusion_grid(space, true);
  const double truth = grid_front_hypervolume(grid);
  int good = 0;
  std::string ratios;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    SessionOptions o;
    o.rs = 500;
    o.total_budget = 1500;
    o.seed = seed;
    BuiltinEvaluator ev(Benchmark::synth_kfusion);
    const auto s = run_session(space, kRuntimeFirst, ev, o);
    if (s.samples().size() > 1500) return fail("seed " + std::to_string(seed) + " used too many evaluations");
    const double ratio = hypervolume_2d(objectives_of(s.measured_front()), grid.max) / truth;
    good += ratio >= 0.90;
    ratios += (ratios.empty() ? "" : " ") + fmt(ratio);
  }
  return {good >= 9, std::to_string(good) + "/10 seeds >= 0.90 of true hypervolume [" + ratios + "]"};
}

Outcome active_learning_benefit() {
  const auto space = bundled_space(Benchmark::synth_kfusion);
  int wins = 0;
  std::string margins;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    SessionOptions o;
    o.rs = 600;
    o.total_budget = 1000;
    o.seed = seed;
    BuiltinEvaluator ev(Benchmark::synth_kfusion);
    const auto s = run_session(space, kRuntimeFirst, ev, o);
    if (s.samples().size() > 1000) return fail("active learning exceeded the budget");

    std::vector<ObjectiveVector> random;
    for (const auto& c : sample_random(space, 1000, seed + 7919)) {
      const auto r = evaluate_builtin(Benchmark::synth_kfusion, space, c);
      random.push_back({r.metrics.at("runtime_s"), r.metrics.at("ate_m")});
    }
    std::vector<ObjectiveVector> learned;
    for (const auto& smp : s.samples())
      if (smp.ok()) learned.push_back(smp.objectives);

    // Common reference: componentwise max over both sample sets.
    ObjectiveVector ref = {-INFINITY, -INFINITY};
    for (const auto* set : {&random, &learned})
      for (const auto& p : *set)
        for (int k = 0; k < 2; ++k) ref[k] = std::max(ref[k], p[k]);
    auto front_hv = [&](const std::vector<ObjectiveVector>& pts) {
      std::vector<ObjectiveVector> front;
      std::vector<std::pair<std::size_t, ObjectiveVector>> keyed;
      for (std::size_t i = 0; i < pts.size(); ++i) keyed.emplace_back(i, pts[i]);
      for (auto i : pareto_front(keyed)) front.push_back(pts[i]);
      return hypervolume_2d(front, ref);
    };
    const double al = front_hv(learned);
    const double rnd = front_hv(random);
    wins += al >= rnd;
    margins += (margins.empty() ? "" : " ") + fmt(al / rnd);
  }
  return {wins >= 8, std::to_string(wins) + "/10 seeds; AL/random hypervolume [" + margins + "]"};
}

Outcome termination() {
  const char* elastic = R"({"parameters": [
    {"name": "icp_rgb_weight", "type": "ordinal", "values": [1, 5, 10]},
    {"name": "depth_cutoff", "type": "ordinal", "values": [1, 3, 6, 12]},
    {"name": "confidence_threshold", "type": "ordinal", "values": [2, 10]},
    {"name": "so3_disabled", "type": "boolean"},
    {"name": "open_loop", "type": "boolean"},
    {"name": "relocalisation", "type": "boolean"},
    {"name": "fast_odometry", "type": "boolean"},
    {"name": "ftf_rgb", "type": "boolean"}]})";
  struct Case {
    std::string name;
    ParameterSpace space;
    Benchmark bench;
    std::size_t rs;
  };
  const std::vector<Case> cases = {
      {"kfusion-4800", load_space(testing::data_file("kfusion-4800.space").string()), Benchmark::synth_kfusion, 50},
      {"kfusion-4800", load_space(testing::data_file("kfusion-4800.space").string()), Benchmark::synth_kfusion, 300},
      {"elastic-768", parse_space(elastic), Benchmark::synth_elasticfusion, 20},
      {"elastic-768", parse_space(elastic), Benchmark::synth_elasticfusion, 100},
  };
  std::size_t runs = 0;
  std::size_t evaluations = 0;
  for (const auto& c : cases) {
    if (c.space.cardinality() > 10'000) return fail(c.name + " is too large");
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      SessionOptions o;
      o.rs = c.rs;
      o.seed = seed;
      o.max_iterations = 1'000'000;
      o.per_iteration_cap.reset();
      BuiltinEvaluator ev(c.bench);
      auto s = run_session(c.space, kRuntimeFirst, ev, o);
      const std::string tag = c.name + " seed " + std::to_string(seed);
      if (s.status() != SessionStatus::converged) return fail(tag + " did not converge");
      std::unordered_set<std::uint64_t> keys;
      for (const auto& smp : s.samples())
        if (!keys.insert(smp.key).second) return fail(tag + " evaluated a configuration twice");
      if (ev.calls() != s.samples().size()) return fail(tag + " evaluator calls differ from samples");
      if (s.iterations().empty() || s.iterations().back().new_samples != 0) return fail(tag + " last step was not 0");
      if (s.active_learning_step(ev) != 0) return fail(tag + " found new front points after converging");
      ++runs;
      evaluations += s.samples().size();
    }
  }
  return {true, std::to_string(runs) + " runs converged, " + std::to_string(evaluations) + " evaluations"};
}

Outcome protocol_round_trip() {
  const auto space = bundled_space(Benchmark::synth_kfusion);
  const auto configs = sample_random(space, 1000, 99);
  std::vector<EvaluationRequest> reqs;
  for (std::size_t i = 0; i < configs.size(); ++i) reqs.push_back({i, configs[i]});
  const std::string command = std::string(PARETOTUNE_MOCK_EVALUATOR) + " --kfusion --error-every 13";
  const auto got = evaluate_subprocess(command, space, reqs, std::chrono::seconds(60));
  if (got.size() != reqs.size()) return fail("got " + std::to_string(got.size()) + " results");
  std::size_t errors = 0;
  for (std::size_t i = 0; i < reqs.size(); ++i) {
    if (got[i].id != i) return fail("result " + std::to_string(i) + " out of order");
    if (i % 13 == 12) {
      if (got[i].ok() || *got[i].error != "diverged") return fail("id " + std::to_string(i) + " lost its error");
      ++errors;
      continue;
    }
    const auto expected = evaluate_builtin(Benchmark::synth_kfusion, space, configs[i], i);
    if (!got[i].ok()) return fail("id " + std::to_string(i) + " failed: " + *got[i].error);
    if (got[i].metrics != expected.metrics) return fail("id " + std::to_string(i) + " differs from builtin");
  }
  return {true, "1000 configs, " + std::to_string(errors) + " injected errors"};
}

Outcome crash_resume() {
  testing::TempDir dir;
  const auto space = load_space(testing::data_file("kfusion-4800.space").string());
  SessionOptions o;
  o.rs = 20;
  o.max_iterations = 4;
  o.per_iteration_cap = 8;
  o.seed = 5;
  BuiltinEvaluator ev(Benchmark::synth_kfusion);
  const auto full_path = dir / "full.jsonl";
  const auto reference = front_csv(run_session(space, kRuntimeFirst, ev, o, full_path));

  std::vector<std::string> lines;
  {
    std::istringstream in(testing::slurp(full_path));
    for (std::string line; std::getline(in, line);) lines.push_back(line);
  }
  for (std::size_t keep = 1; keep <= lines.size(); ++keep) {
    std::string text;
    for (std::size_t i = 0; i < keep; ++i) text += lines[i] + "\n";
    const auto path = dir / "cut.jsonl";
    testing::spit(path, text);
    auto s = resume(path);
    BuiltinEvaluator again(Benchmark::synth_kfusion);
    s.run(again);
    if (front_csv(s) != reference) return fail("front differs after keeping " + std::to_string(keep) + " records");
    if (without_timing(path) != without_timing(full_path))
      return fail("journal differs after keeping " + std::to_string(keep) + " records");
  }
  return {true, std::to_string(lines.size()) + " boundaries"};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) only = argv[1];
  criterion("Five-run front fixture", five_run_fixture);
  criterion("Dominance oracle", dominance_oracle);
  criterion("Hypervolume oracle", hypervolume_oracle);
  criterion("Forest interpolation", forest_interpolation);
  criterion("Small-space exactness", small_space_exactness);
  criterion("Active-learning benefit", active_learning_benefit);
  criterion("Termination and set semantics", termination);
  criterion("Protocol round-trip", protocol_round_trip);
  criterion("Crash-resume", crash_resume);
  std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " FAILED") << std::endl;
  return failures == 0 ? 0 : 1;
}
