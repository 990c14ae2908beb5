#include "paretotune/csv.hpp"

#include <charconv>
#include <system_error>

#include "paretotune/error.hpp"

namespace paretotune {

std::string format_double(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("cannot format number");
  return std::string(buf, end);
}

double parse_double(std::string_view text) {
  double v = 0.0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size())
    throw UsageError("'" + std::string(text) + "' is not a number");
  return v;
}

namespace {

std::vector<std::string> space_columns(const ParameterSpace& space, std::span<const std::string> objectives) {
  std::vector<std::string> cols;
  for (const auto& p : space.params()) cols.push_back(p.name());
  cols.insert(cols.end(), objectives.begin(), objectives.end());
  return cols;
}

std::vector<std::string> config_fields(const ParameterSpace& space, const Configuration& c) {
  std::vector<std::string> fields;
  for (std::size_t i = 0; i < space.dimension(); ++i) fields.push_back(space.param(i).value_text(c[i]));
  return fields;
}

}  // namespace

void write_csv_row(std::ostream& out, std::span<const std::string> fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    const auto& f = fields[i];
    if (f.find_first_of(",\"\n\r") == std::string::npos) {
      out << f;
      continue;
    }
    out << '"';
    for (char c : f) {
      if (c == '"') out << '"';
      out << c;
    }
    out << '"';
  }
  out << '\n';
}

CsvTable read_csv(std::istream& in) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  char c;
  while (in.get(c)) {
    any = true;
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field += '"';
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      row.push_back(std::move(field));
      field.clear();
      records.push_back(std::move(row));
      row.clear();
      any = false;
    } else if (c != '\r') {
      field += c;
    }
  }
  if (quoted) throw UsageError("unterminated quoted CSV field");
  if (any) {
    row.push_back(std::move(field));
    records.push_back(std::move(row));
  }
  CsvTable table;
  if (records.empty()) return table;
  table.header = std::move(records.front());
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].size() != table.header.size())
      throw UsageError("CSV row " + std::to_string(i) + " has " + std::to_string(records[i].size()) +
                       " fields, header has " + std::to_string(table.header.size()));
    table.rows.push_back(std::move(records[i]));
  }
  return table;
}

void write_front_csv(std::ostream& out, const ParameterSpace& space, std::span<const std::string> objectives,
                     std::span<const FrontEntry> front) {
  auto header = space_columns(space, objectives);
  header.push_back("provenance");
  write_csv_row(out, header);
  for (const auto& e : front) {
    auto fields = config_fields(space, e.config);
    for (double v : e.objectives) fields.push_back(format_double(v));
    fields.push_back(e.provenance == Provenance::measured ? "measured" : "predicted");
    write_csv_row(out, fields);
  }
}

void write_points_csv(std::ostream& out, const ParameterSpace& space, std::span<const std::string> objectives,
                      std::span<const Sample> samples) {
  auto header = space_columns(space, objectives);
  for (const char* extra : {"source", "iteration", "status"}) header.push_back(extra);
  write_csv_row(out, header);
  for (const auto& s : samples) {
    auto fields = config_fields(space, s.config);
    for (std::size_t j = 0; j < objectives.size(); ++j)
      fields.push_back(s.ok() ? format_double(s.objectives[j]) : std::string());
    fields.push_back(s.source == kRandomSource ? "random" : "active-learning");
    fields.push_back(std::to_string(s.source));
    fields.push_back(s.ok() ? "ok" : "failed: " + *s.error);
    write_csv_row(out, fields);
  }
}

void write_configurations_csv(std::ostream& out, const ParameterSpace& space,
                              std::span<const Configuration> configs, std::span<const std::string> objectives,
                              std::span<const EvaluationResult> results) {
  const bool with_metrics = !results.empty();
  auto header = space_columns(space, with_metrics ? objectives : std::span<const std::string>{});
  if (with_metrics) header.push_back("status");
  write_csv_row(out, header);
  for (std::size_t i = 0; i < configs.size(); ++i) {
    auto fields = config_fields(space, configs[i]);
    if (with_metrics) {
      const auto& r = results[i];
      for (const auto& name : objectives) {
        const auto it = r.metrics.find(name);
        fields.push_back(r.ok() && it != r.metrics.end() ? format_double(it->second) : std::string());
      }
      fields.push_back(r.ok() ? "ok" : "failed: " + *r.error);
    }
    write_csv_row(out, fields);
  }
}

}  // namespace paretotune
