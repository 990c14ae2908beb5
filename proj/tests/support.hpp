#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include "paretotune/evaluator.hpp"
#include "paretotune/pareto.hpp"
#include "paretotune/space.hpp"

namespace testing {

namespace fs = std::filesystem;

inline fs::path data_file(const std::string& name) { return fs::path(PARETOTUNE_TEST_DATA) / name; }
inline fs::path space_file(const std::string& name) { return fs::path(PARETOTUNE_SPACES_DIR) / name; }

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("paretotune-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

// O(n^2) pairwise dominance check, written independently of the library.
inline bool weakly_better_everywhere_strictly_somewhere(const std::vector<double>& a, const std::vector<double>& b) {
  bool strict = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] > b[i]) return false;
    if (a[i] < b[i]) strict = true;
  }
  return strict;
}

inline std::vector<std::size_t> brute_front(const std::vector<std::vector<double>>& pts) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < pts.size() && !dominated; ++j)
      dominated = j != i && weakly_better_everywhere_strictly_somewhere(pts[j], pts[i]);
    if (!dominated) out.push_back(i);
  }
  return out;
}

// Synthetic KFusion surface, transcribed directly from the formulas.
struct KfusionPoint {
  double v, r, t, g, m, e, p1, p2, p3;
};

inline double kfusion_runtime(const KfusionPoint& k) {
  return 0.008 * std::pow(k.v / 64.0, 3) / k.r + 0.002 * (k.p1 + 2 * k.p2 + 4 * k.p3) / k.r + 0.010 / k.g +
         0.006 / k.t + 0.020 * (1 + std::sin(200 * k.m) * std::cos(1000 * k.e));
}

inline double kfusion_ate(const KfusionPoint& k) {
  return 0.012 * std::sqrt(256.0 / k.v) + 0.006 * (k.r - 1) + 0.004 * (k.t - 1) + 0.003 * (k.g - 1) +
         0.080 * std::fabs(k.m - 0.100) + 2.0 * std::fabs(k.e - 0.005) +
         0.002 * std::max(0.0, 9 - k.p1 - k.p2 - k.p3) + 0.005 * (1 + std::cos(150 * k.m + 800 * k.e));
}

struct ElasticPoint {
  double w, d, c, s, o, l, f, b;
};

inline double elastic_runtime(const ElasticPoint& x) {
  return 10.0 + 0.6 * std::pow(x.w, 0.5) + 0.4 * x.d + 0.3 * x.c - 3.0 * x.f - 1.5 * x.s + 2.0 * x.b +
         1.0 * (1 - x.o) + 0.5 * (1 + std::sin(3 * x.w) * std::cos(2 * x.d));
}

inline double elastic_ate(const ElasticPoint& x) {
  return 0.020 + 0.004 * std::fabs(x.w - 2) + 0.003 * std::fabs(x.d - 10) + 0.002 * std::fabs(x.c - 4) +
         0.010 * x.s * x.f * 0.5 + 0.008 * x.o + 0.006 * (1 - x.l) + 0.004 * x.b +
         0.003 * (1 + std::cos(2 * x.w + x.d)) * 0.5;
}

inline double numeric(const paretotune::ParamValue& v) {
  if (const auto* d = std::get_if<double>(&v)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  if (const auto* b = std::get_if<bool>(&v)) return *b ? 1.0 : 0.0;
  throw std::runtime_error("not numeric");
}

inline KfusionPoint kfusion_point(const paretotune::ParameterSpace& s, const paretotune::Configuration& c) {
  auto at = [&](const char* n) { return numeric(s.value(c, *s.find(n))); };
  return {at("volume_resolution"), at("compute_size_ratio"), at("tracking_rate"),
          at("integration_rate"),  at("mu"),                 at("icp_threshold"),
          at("pyramid_level1_iterations"), at("pyramid_level2_iterations"), at("pyramid_level3_iterations")};
}

inline ElasticPoint elastic_point(const paretotune::ParameterSpace& s, const paretotune::Configuration& c) {
  auto at = [&](const char* n) { return numeric(s.value(c, *s.find(n))); };
  return {at("icp_rgb_weight"), at("depth_cutoff"), at("confidence_threshold"), at("so3_disabled"),
          at("open_loop"),      at("relocalisation"), at("fast_odometry"),     at("ftf_rgb")};
}

// Area of the union of [p, ref] boxes by slab integration over distinct x
// coordinates; independent of the library's sweep.
inline double slab_hypervolume(std::vector<std::vector<double>> pts, const std::vector<double>& ref) {
  std::vector<double> xs;
  for (const auto& p : pts) xs.push_back(p[0]);
  xs.push_back(ref[0]);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  double area = 0.0;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    double lowest = ref[1];
    for (const auto& p : pts)
      if (p[0] <= xs[i]) lowest = std::min(lowest, p[1]);
    area += (xs[i + 1] - xs[i]) * (ref[1] - lowest);
  }
  return area;
}

inline double monte_carlo_hypervolume(const std::vector<std::vector<double>>& pts, const std::vector<double>& ref,
                                      std::size_t samples, std::uint64_t seed) {
  double lo0 = ref[0];
  double lo1 = ref[1];
  for (const auto& p : pts) {
    lo0 = std::min(lo0, p[0]);
    lo1 = std::min(lo1, p[1]);
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(lo0, ref[0]);
  std::uniform_real_distribution<double> uy(lo1, ref[1]);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < samples; ++i) {
    const double x = ux(rng);
    const double y = uy(rng);
    for (const auto& p : pts)
      if (p[0] <= x && p[1] <= y) {
        ++hits;
        break;
      }
  }
  return (ref[0] - lo0) * (ref[1] - lo1) * static_cast<double>(hits) / static_cast<double>(samples);
}

// Objective vectors [a, b] of the whole grid under a builtin surface.
struct GridTruth {
  std::vector<std::vector<double>> points;
  std::vector<double> max;
};

inline GridTruth kfusion_grid(const paretotune::ParameterSpace& space, bool runtime_first) {
  GridTruth out;
  out.max = {-INFINITY, -INFINITY};
  paretotune::enumerate(space, [&](const paretotune::Configuration& c) {
    const auto k = kfusion_point(space, c);
    std::vector<double> p = runtime_first ? std::vector<double>{kfusion_runtime(k), kfusion_ate(k)}
                                          : std::vector<double>{kfusion_ate(k), kfusion_runtime(k)};
    out.max[0] = std::max(out.max[0], p[0]);
    out.max[1] = std::max(out.max[1], p[1]);
    out.points.push_back(std::move(p));
    return true;
  });
  return out;
}

inline std::string read_command_output(const std::string& command, int* status = nullptr) {
  std::string out;
  FILE* pipe = ::popen(command.c_str(), "r");
  if (!pipe) return out;
  char buf[4096];
  for (std::size_t n; (n = std::fread(buf, 1, sizeof buf, pipe)) > 0;) out.append(buf, n);
  const int rc = ::pclose(pipe);
  if (status) *status = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  return out;
}

}  // namespace testing
