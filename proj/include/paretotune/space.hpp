#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

namespace paretotune {

using Json = nlohmann::json;

enum class ParamKind { ordinal, int_range, boolean, categorical };

std::string_view to_string(ParamKind kind);

// A parameter value as it appears in configuration documents.
using ParamValue = std::variant<double, std::int64_t, bool, std::string>;

struct IntRange {
  std::int64_t lo = 0;
  std::int64_t hi = 0;
  std::int64_t step = 1;
};

class ParameterSpec {
 public:
  static ParameterSpec ordinal(std::string name, std::vector<double> values,
                               std::optional<std::size_t> default_index = {});
  static ParameterSpec int_range(std::string name, IntRange range,
                                 std::optional<std::size_t> default_index = {});
  static ParameterSpec boolean(std::string name, std::optional<std::size_t> default_index = {});
  static ParameterSpec categorical(std::string name, std::vector<std::string> labels,
                                   std::optional<std::size_t> default_index = {});

  const std::string& name() const { return name_; }
  ParamKind kind() const { return kind_; }
  std::size_t size() const;
  const std::vector<double>& numeric_values() const { return numeric_; }
  const std::vector<std::string>& labels() const { return labels_; }
  const IntRange& range() const { return range_; }
  std::optional<std::size_t> default_index() const { return default_index_; }

  ParamValue value(std::size_t index) const;
  // Index of an admissible value, or nullopt.
  std::optional<std::size_t> index_of(const ParamValue& value) const;
  std::optional<std::size_t> index_of_json(const Json& value) const;
  Json value_json(std::size_t index) const;
  std::string value_text(std::size_t index) const;

  // Number of feature components this parameter contributes to an encoding.
  std::size_t encoding_width() const;

  Json to_json() const;

 private:
  ParameterSpec() = default;
  void check_default() const;

  std::string name_;
  ParamKind kind_ = ParamKind::ordinal;
  std::vector<double> numeric_;
  std::vector<std::string> labels_;
  IntRange range_;
  std::optional<std::size_t> default_index_;
};

// One value per parameter, stored as value indices in space order.
class Configuration {
 public:
  Configuration() = default;
  explicit Configuration(std::vector<std::uint32_t> indices) : indices_(std::move(indices)) {}

  std::span<const std::uint32_t> indices() const { return indices_; }
  std::uint32_t operator[](std::size_t i) const { return indices_[i]; }
  std::size_t size() const { return indices_.size(); }

  friend auto operator<=>(const Configuration&, const Configuration&) = default;
  friend bool operator==(const Configuration&, const Configuration&) = default;

 private:
  std::vector<std::uint32_t> indices_;
};

using FeatureVector = std::vector<double>;

// Maps one encoded feature back to the parameter it came from. feature_values[i]
// is the component's value when the parameter takes value index i.
struct FeatureSlot {
  std::size_t param = 0;
  std::vector<double> feature_values;
};

class ParameterSpace {
 public:
  explicit ParameterSpace(std::vector<ParameterSpec> params);

  const std::vector<ParameterSpec>& params() const { return params_; }
  std::size_t dimension() const { return params_.size(); }
  const ParameterSpec& param(std::size_t i) const { return params_[i]; }
  std::optional<std::size_t> find(std::string_view name) const;

  std::uint64_t cardinality() const { return cardinality_; }

  // Canonical key: position of the configuration in enumeration order.
  std::uint64_t rank(const Configuration& config) const;
  Configuration unrank(std::uint64_t rank) const;
  // Enumeration stride of parameter i (last parameter varies fastest).
  std::uint64_t stride(std::size_t i) const { return strides_[i]; }

  bool is_valid(const Configuration& config) const;
  std::optional<Configuration> default_configuration() const;

  ParamValue value(const Configuration& config, std::size_t param) const;

  Json config_to_json(const Configuration& config) const;
  // Rejects missing, extra and inadmissible values.
  Configuration config_from_json(const Json& doc) const;

  std::size_t encoding_width() const { return slots_.size(); }
  const std::vector<FeatureSlot>& feature_slots() const { return slots_; }
  FeatureVector encode(const Configuration& config) const;
  void encode_into(const Configuration& config, std::span<double> out) const;

  Json to_json() const;

 private:
  std::vector<ParameterSpec> params_;
  std::vector<std::uint64_t> strides_;
  std::vector<FeatureSlot> slots_;
  std::uint64_t cardinality_ = 1;
};

ParameterSpace parse_space(std::string_view doc);
ParameterSpace parse_space(const Json& doc);
inline ParameterSpace parse_space(const char* doc) { return parse_space(std::string_view(doc)); }
inline ParameterSpace parse_space(const std::string& doc) { return parse_space(std::string_view(doc)); }
ParameterSpace load_space(const std::string& path);

inline std::uint64_t cardinality(const ParameterSpace& space) { return space.cardinality(); }

// n pairwise-distinct configurations drawn uniformly without replacement.
std::vector<Configuration> sample_random(const ParameterSpace& space, std::uint64_t n,
                                         std::uint64_t seed);

// Visits every configuration in lexicographic order of value indices. The
// visitor returns false to stop early.
void enumerate(const ParameterSpace& space,
               const std::function<bool(const Configuration&)>& visit);

// Lazy single-pass enumeration.
class ConfigurationStream {
 public:
  explicit ConfigurationStream(const ParameterSpace& space);
  bool done() const { return done_; }
  const Configuration& current() const { return current_; }
  void advance();

 private:
  const ParameterSpace* space_;
  std::vector<std::uint32_t> idx_;
  Configuration current_;
  bool done_ = false;
};

inline FeatureVector encode(const ParameterSpace& space, const Configuration& config) {
  return space.encode(config);
}

}  // namespace paretotune
