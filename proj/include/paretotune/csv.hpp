#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "paretotune/evaluator.hpp"
#include "paretotune/sample.hpp"
#include "paretotune/space.hpp"

namespace paretotune {

// Shortest decimal text that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view text);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// Comma-separated, header row, LF line endings. Fields containing a comma,
// quote or newline are quoted.
void write_csv_row(std::ostream& out, std::span<const std::string> fields);
CsvTable read_csv(std::istream& in);

// Parameters in space order, then objectives in session order, then provenance.
void write_front_csv(std::ostream& out, const ParameterSpace& space, std::span<const std::string> objectives,
                     std::span<const FrontEntry> front);

// Every sample, tagged random / active-learning.
void write_points_csv(std::ostream& out, const ParameterSpace& space, std::span<const std::string> objectives,
                      std::span<const Sample> samples);

// Configurations, with metric columns when results are given.
void write_configurations_csv(std::ostream& out, const ParameterSpace& space,
                              std::span<const Configuration> configs, std::span<const std::string> objectives,
                              std::span<const EvaluationResult> results);

}  // namespace paretotune
