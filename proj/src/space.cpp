#include "paretotune/space.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "paretotune/error.hpp"
#include "paretotune/rng.hpp"

namespace paretotune {

namespace {

std::string where(std::size_t position, const std::string& name) {
  std::ostringstream os;
  os << "parameters[" << position << "]";
  if (!name.empty()) os << " '" << name << "'";
  return os.str();
}

std::string format_number(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string_view to_string(ParamKind kind) {
  switch (kind) {
    case ParamKind::ordinal:
      return "ordinal";
    case ParamKind::int_range:
      return "int_range";
    case ParamKind::boolean:
      return "boolean";
    case ParamKind::categorical:
      return "categorical";
  }
  return "?";
}

ParameterSpec ParameterSpec::ordinal(std::string name, std::vector<double> values,
                                     std::optional<std::size_t> default_index) {
  if (values.empty()) throw SpaceError("parameter '" + name + "': empty value list");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i]))
      throw SpaceError("parameter '" + name + "': non-finite ordinal value");
    if (i > 0 && !(values[i - 1] < values[i]))
      throw SpaceError("parameter '" + name + "': non-increasing ordinal list at value " +
                       std::to_string(i));
  }
  ParameterSpec spec;
  spec.name_ = std::move(name);
  spec.kind_ = ParamKind::ordinal;
  spec.numeric_ = std::move(values);
  spec.default_index_ = default_index;
  spec.check_default();
  return spec;
}

ParameterSpec ParameterSpec::int_range(std::string name, IntRange range,
                                       std::optional<std::size_t> default_index) {
  if (range.step < 1) throw SpaceError("parameter '" + name + "': int_range step must be >= 1");
  if (range.hi < range.lo) throw SpaceError("parameter '" + name + "': empty value list (hi < lo)");
  const auto count = static_cast<std::uint64_t>((range.hi - range.lo) / range.step) + 1;
  if (count > std::numeric_limits<std::uint32_t>::max())
    throw SpaceError("parameter '" + name + "': int_range has too many values");
  ParameterSpec spec;
  spec.name_ = std::move(name);
  spec.kind_ = ParamKind::int_range;
  spec.range_ = range;
  spec.numeric_.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i)
    spec.numeric_.push_back(static_cast<double>(range.lo + static_cast<std::int64_t>(i) * range.step));
  spec.default_index_ = default_index;
  spec.check_default();
  return spec;
}

ParameterSpec ParameterSpec::boolean(std::string name, std::optional<std::size_t> default_index) {
  ParameterSpec spec;
  spec.name_ = std::move(name);
  spec.kind_ = ParamKind::boolean;
  spec.numeric_ = {0.0, 1.0};
  spec.default_index_ = default_index;
  spec.check_default();
  return spec;
}

ParameterSpec ParameterSpec::categorical(std::string name, std::vector<std::string> labels,
                                         std::optional<std::size_t> default_index) {
  if (labels.empty()) throw SpaceError("parameter '" + name + "': empty value list");
  std::unordered_set<std::string> seen;
  for (const auto& label : labels)
    if (!seen.insert(label).second)
      throw SpaceError("parameter '" + name + "': duplicate label '" + label + "'");
  ParameterSpec spec;
  spec.name_ = std::move(name);
  spec.kind_ = ParamKind::categorical;
  spec.labels_ = std::move(labels);
  spec.default_index_ = default_index;
  spec.check_default();
  return spec;
}

void ParameterSpec::check_default() const {
  if (default_index_ && *default_index_ >= size())
    throw SpaceError("parameter '" + name_ + "': default out of range");
}

std::size_t ParameterSpec::size() const {
  return kind_ == ParamKind::categorical ? labels_.size() : numeric_.size();
}

ParamValue ParameterSpec::value(std::size_t index) const {
  switch (kind_) {
    case ParamKind::ordinal:
      return numeric_.at(index);
    case ParamKind::int_range:
      return static_cast<std::int64_t>(numeric_.at(index));
    case ParamKind::boolean:
      return index != 0;
    case ParamKind::categorical:
      return labels_.at(index);
  }
  return {};
}

std::optional<std::size_t> ParameterSpec::index_of(const ParamValue& value) const {
  switch (kind_) {
    case ParamKind::ordinal:
    case ParamKind::int_range: {
      double v;
      if (const auto* d = std::get_if<double>(&value))
        v = *d;
      else if (const auto* i = std::get_if<std::int64_t>(&value))
        v = static_cast<double>(*i);
      else
        return std::nullopt;
      const auto it = std::lower_bound(numeric_.begin(), numeric_.end(), v);
      if (it == numeric_.end() || *it != v) return std::nullopt;
      return static_cast<std::size_t>(it - numeric_.begin());
    }
    case ParamKind::boolean:
      if (const auto* b = std::get_if<bool>(&value)) return *b ? 1 : 0;
      if (const auto* i = std::get_if<std::int64_t>(&value); i && (*i == 0 || *i == 1))
        return static_cast<std::size_t>(*i);
      return std::nullopt;
    case ParamKind::categorical:
      if (const auto* s = std::get_if<std::string>(&value)) {
        const auto it = std::find(labels_.begin(), labels_.end(), *s);
        if (it != labels_.end()) return static_cast<std::size_t>(it - labels_.begin());
      }
      return std::nullopt;
  }
  return std::nullopt;
}

std::optional<std::size_t> ParameterSpec::index_of_json(const Json& value) const {
  if (value.is_boolean()) return index_of(ParamValue{value.get<bool>()});
  if (value.is_number_integer()) return index_of(ParamValue{value.get<std::int64_t>()});
  if (value.is_number()) return index_of(ParamValue{value.get<double>()});
  if (value.is_string()) return index_of(ParamValue{value.get<std::string>()});
  return std::nullopt;
}

Json ParameterSpec::value_json(std::size_t index) const {
  switch (kind_) {
    case ParamKind::ordinal:
      return numeric_.at(index);
    case ParamKind::int_range:
      return static_cast<std::int64_t>(numeric_.at(index));
    case ParamKind::boolean:
      return index != 0;
    case ParamKind::categorical:
      return labels_.at(index);
  }
  return nullptr;
}

std::string ParameterSpec::value_text(std::size_t index) const {
  switch (kind_) {
    case ParamKind::ordinal:
      return format_number(numeric_.at(index));
    case ParamKind::int_range:
      return std::to_string(static_cast<std::int64_t>(numeric_.at(index)));
    case ParamKind::boolean:
      return index != 0 ? "1" : "0";
    case ParamKind::categorical:
      return labels_.at(index);
  }
  return {};
}

std::size_t ParameterSpec::encoding_width() const {
  return kind_ == ParamKind::categorical ? labels_.size() : 1;
}

Json ParameterSpec::to_json() const {
  Json j;
  j["name"] = name_;
  j["type"] = std::string(to_string(kind_));
  switch (kind_) {
    case ParamKind::ordinal:
      j["values"] = numeric_;
      break;
    case ParamKind::int_range:
      j["lo"] = range_.lo;
      j["hi"] = range_.hi;
      j["step"] = range_.step;
      break;
    case ParamKind::boolean:
      break;
    case ParamKind::categorical:
      j["labels"] = labels_;
      break;
  }
  if (default_index_) j["default"] = value_json(*default_index_);
  return j;
}

ParameterSpace::ParameterSpace(std::vector<ParameterSpec> params) : params_(std::move(params)) {
  std::unordered_set<std::string> names;
  for (std::size_t i = 0; i < params_.size(); ++i)
    if (!names.insert(params_[i].name()).second)
      throw SpaceError(where(i, params_[i].name()) + ": duplicate parameter name");

  strides_.assign(params_.size(), 1);
  cardinality_ = 1;
  for (std::size_t i = params_.size(); i-- > 0;) {
    strides_[i] = cardinality_;
    const std::uint64_t n = params_[i].size();
    if (cardinality_ > std::numeric_limits<std::uint64_t>::max() / n)
      throw SpaceError("space cardinality exceeds 2^64");
    cardinality_ *= n;
  }

  for (std::size_t p = 0; p < params_.size(); ++p) {
    const auto& spec = params_[p];
    if (spec.kind() == ParamKind::categorical) {
      for (std::size_t label = 0; label < spec.size(); ++label) {
        FeatureSlot slot{p, std::vector<double>(spec.size(), 0.0)};
        slot.feature_values[label] = 1.0;
        slots_.push_back(std::move(slot));
      }
    } else {
      slots_.push_back(FeatureSlot{p, spec.numeric_values()});
    }
  }
}

std::optional<std::size_t> ParameterSpace::find(std::string_view name) const {
  for (std::size_t i = 0; i < params_.size(); ++i)
    if (params_[i].name() == name) return i;
  return std::nullopt;
}

std::uint64_t ParameterSpace::rank(const Configuration& config) const {
  std::uint64_t r = 0;
  for (std::size_t i = 0; i < params_.size(); ++i) r += config[i] * strides_[i];
  return r;
}

Configuration ParameterSpace::unrank(std::uint64_t rank) const {
  std::vector<std::uint32_t> idx(params_.size());
  for (std::size_t i = 0; i < params_.size(); ++i) {
    idx[i] = static_cast<std::uint32_t>(rank / strides_[i]);
    rank %= strides_[i];
  }
  return Configuration(std::move(idx));
}

bool ParameterSpace::is_valid(const Configuration& config) const {
  if (config.size() != params_.size()) return false;
  for (std::size_t i = 0; i < params_.size(); ++i)
    if (config[i] >= params_[i].size()) return false;
  return true;
}

std::optional<Configuration> ParameterSpace::default_configuration() const {
  std::vector<std::uint32_t> idx;
  for (const auto& p : params_) {
    if (!p.default_index()) return std::nullopt;
    idx.push_back(static_cast<std::uint32_t>(*p.default_index()));
  }
  return Configuration(std::move(idx));
}

ParamValue ParameterSpace::value(const Configuration& config, std::size_t param) const {
  return params_.at(param).value(config[param]);
}

Json ParameterSpace::config_to_json(const Configuration& config) const {
  Json j = Json::object();
  for (std::size_t i = 0; i < params_.size(); ++i) j[params_[i].name()] = params_[i].value_json(config[i]);
  return j;
}

Configuration ParameterSpace::config_from_json(const Json& doc) const {
  if (!doc.is_object()) throw UsageError("configuration must be a JSON object");
  std::vector<std::uint32_t> idx(params_.size());
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& name = params_[i].name();
    const auto it = doc.find(name);
    if (it == doc.end()) throw UsageError("configuration is missing parameter '" + name + "'");
    const auto index = params_[i].index_of_json(*it);
    if (!index)
      throw UsageError("configuration value " + it->dump() + " is not admissible for parameter '" +
                       name + "'");
    idx[i] = static_cast<std::uint32_t>(*index);
  }
  for (const auto& [key, _] : doc.items())
    if (!find(key)) throw UsageError("configuration has unknown parameter '" + key + "'");
  return Configuration(std::move(idx));
}

void ParameterSpace::encode_into(const Configuration& config, std::span<double> out) const {
  for (std::size_t f = 0; f < slots_.size(); ++f) out[f] = slots_[f].feature_values[config[slots_[f].param]];
}

FeatureVector ParameterSpace::encode(const Configuration& config) const {
  if (!is_valid(config)) throw UsageError("configuration is not valid for this space");
  FeatureVector out(slots_.size());
  encode_into(config, out);
  return out;
}

Json ParameterSpace::to_json() const {
  Json params = Json::array();
  for (const auto& p : params_) params.push_back(p.to_json());
  return Json{{"parameters", params}};
}

ParameterSpace parse_space(const Json& doc) {
  if (!doc.is_object() || !doc.contains("parameters") || !doc["parameters"].is_array())
    throw SpaceError("malformed space document: expected an object with a \"parameters\" array");
  std::vector<ParameterSpec> specs;
  const auto& list = doc["parameters"];
  for (std::size_t i = 0; i < list.size(); ++i) {
    const auto& p = list[i];
    if (!p.is_object()) throw SpaceError(where(i, "") + ": expected an object");
    if (!p.contains("name") || !p["name"].is_string() || p["name"].get<std::string>().empty())
      throw SpaceError(where(i, "") + ": missing \"name\"");
    const auto name = p["name"].get<std::string>();
    if (!p.contains("type") || !p["type"].is_string())
      throw SpaceError(where(i, name) + ": missing \"type\"");
    const auto type = p["type"].get<std::string>();
    try {
      std::optional<ParameterSpec> spec;
      if (type == "ordinal") {
        if (!p.contains("values") || !p["values"].is_array())
          throw SpaceError("missing \"values\" list");
        std::vector<double> values;
        for (const auto& v : p["values"]) {
          if (!v.is_number()) throw SpaceError("ordinal values must be numbers");
          values.push_back(v.get<double>());
        }
        spec = ParameterSpec::ordinal(name, std::move(values));
      } else if (type == "int_range") {
        for (const char* key : {"lo", "hi"})
          if (!p.contains(key) || !p[key].is_number_integer())
            throw SpaceError(std::string("missing integer \"") + key + "\"");
        IntRange range{p["lo"].get<std::int64_t>(), p["hi"].get<std::int64_t>(), 1};
        if (p.contains("step")) {
          if (!p["step"].is_number_integer()) throw SpaceError("\"step\" must be an integer");
          range.step = p["step"].get<std::int64_t>();
        }
        spec = ParameterSpec::int_range(name, range);
      } else if (type == "boolean") {
        spec = ParameterSpec::boolean(name);
      } else if (type == "categorical") {
        if (!p.contains("labels") || !p["labels"].is_array())
          throw SpaceError("missing \"labels\" list");
        std::vector<std::string> labels;
        for (const auto& v : p["labels"]) {
          if (!v.is_string()) throw SpaceError("labels must be strings");
          labels.push_back(v.get<std::string>());
        }
        spec = ParameterSpec::categorical(name, std::move(labels));
      } else {
        throw SpaceError("unknown type \"" + type + "\"");
      }
      if (p.contains("default")) {
        const auto index = spec->index_of_json(p["default"]);
        if (!index) throw SpaceError("default " + p["default"].dump() + " is not an admissible value");
        switch (spec->kind()) {
          case ParamKind::ordinal:
            spec = ParameterSpec::ordinal(name, spec->numeric_values(), index);
            break;
          case ParamKind::int_range:
            spec = ParameterSpec::int_range(name, spec->range(), index);
            break;
          case ParamKind::boolean:
            spec = ParameterSpec::boolean(name, index);
            break;
          case ParamKind::categorical:
            spec = ParameterSpec::categorical(name, spec->labels(), index);
            break;
        }
      }
      specs.push_back(std::move(*spec));
    } catch (const SpaceError& e) {
      std::string msg = e.what();
      const std::string prefix = "parameter '" + name + "': ";
      if (msg.rfind(prefix, 0) == 0) msg = msg.substr(prefix.size());
      throw SpaceError(where(i, name) + ": " + msg);
    }
  }
  if (specs.empty()) throw SpaceError("space has no parameters");
  return ParameterSpace(std::move(specs));
}

ParameterSpace parse_space(std::string_view doc) {
  Json j;
  try {
    j = Json::parse(doc);
  } catch (const Json::parse_error& e) {
    throw SpaceError(std::string("malformed space document: ") + e.what());
  }
  return parse_space(j);
}

ParameterSpace load_space(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open space file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_space(std::string_view(ss.str()));
  } catch (const SpaceError& e) {
    throw SpaceError(path + ": " + e.what());
  }
}

std::vector<Configuration> sample_random(const ParameterSpace& space, std::uint64_t n,
                                         std::uint64_t seed) {
  const std::uint64_t card = space.cardinality();
  if (n > card)
    throw UsageError("cannot draw " + std::to_string(n) + " distinct configurations from a space of " +
                     std::to_string(card));
  std::vector<Configuration> out;
  out.reserve(n);
  Rng rng = make_rng(seed, 0x5a3e);
  if (n <= card / 2) {
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(n * 2);
    while (out.size() < n) {
      const std::uint64_t r = uniform_below(rng, card);
      if (seen.insert(r).second) out.push_back(space.unrank(r));
    }
  } else {
    // n > card/2 implies card < 2n, so the index list fits in memory.
    std::vector<std::uint64_t> ranks(card);
    std::iota(ranks.begin(), ranks.end(), std::uint64_t{0});
    for (std::uint64_t i = 0; i < n; ++i) {
      const std::uint64_t j = i + uniform_below(rng, card - i);
      std::swap(ranks[i], ranks[j]);
      out.push_back(space.unrank(ranks[i]));
    }
  }
  return out;
}

void enumerate(const ParameterSpace& space, const std::function<bool(const Configuration&)>& visit) {
  for (ConfigurationStream s(space); !s.done(); s.advance())
    if (!visit(s.current())) return;
}

ConfigurationStream::ConfigurationStream(const ParameterSpace& space)
    : space_(&space), idx_(space.dimension(), 0), current_(idx_) {}

void ConfigurationStream::advance() {
  if (done_) return;
  for (std::size_t i = idx_.size(); i-- > 0;) {
    if (++idx_[i] < space_->param(i).size()) {
      current_ = Configuration(idx_);
      return;
    }
    idx_[i] = 0;
  }
  done_ = true;
}

}  // namespace paretotune
