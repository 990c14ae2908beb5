#include <doctest.h>

#include <map>
#include <unordered_set>

#include "paretotune/error.hpp"
#include "paretotune/evaluator.hpp"
#include "paretotune/space.hpp"
#include "support.hpp"

using namespace paretotune;

namespace {

std::string error_of(const std::string& doc) {
  try {
    parse_space(doc);
  } catch (const SpaceError& e) {
    return e.what();
  }
  return {};
}

std::uint64_t product_of_counts(const Json& doc) {
  std::uint64_t n = 1;
  for (const auto& p : doc["parameters"]) {
    const std::string type = p["type"];
    if (type == "boolean")
      n *= 2;
    else if (type == "int_range")
      n *= (p["hi"].get<std::int64_t>() - p["lo"].get<std::int64_t>()) / p["step"].get<std::int64_t>() + 1;
    else if (type == "categorical")
      n *= p["labels"].size();
    else
      n *= p["values"].size();
  }
  return n;
}

const char* kMixed = R"({"parameters": [
  {"name": "colour", "type": "categorical", "labels": ["red", "green", "blue"]},
  {"name": "flag", "type": "boolean"},
  {"name": "level", "type": "int_range", "lo": 2, "hi": 10, "step": 4},
  {"name": "ratio", "type": "ordinal", "values": [0.5, 1, 4]}
]})";

}  // namespace

TEST_CASE("one boolean parameter gives two configurations") {
  const auto s = parse_space(R"({"parameters": [{"name": "open_loop", "type": "boolean"}]})");
  CHECK(s.cardinality() == 2);
  CHECK(cardinality(s) == 2);
}

TEST_CASE("bundled kfusion space") {
  const Json doc = Json::parse(testing::slurp(testing::space_file("synth-kfusion.space")));
  const auto s = load_space(testing::space_file("synth-kfusion.space").string());
  // Pyramid iterations are three parameters, one per level.
  CHECK(s.dimension() == 9);
  CHECK(s.cardinality() == product_of_counts(doc));
  CHECK(s.cardinality() == 3ull * 4 * 5 * 5 * 10 * 10 * 125);
  CHECK(s.encoding_width() == 9);
}

TEST_CASE("bundled elasticfusion space") {
  const Json doc = Json::parse(testing::slurp(testing::space_file("synth-elasticfusion.space")));
  const auto s = load_space(testing::space_file("synth-elasticfusion.space").string());
  CHECK(s.cardinality() == product_of_counts(doc));
  CHECK(s.cardinality() == 24ull * 24 * 24 * 32);
  CHECK(s.cardinality() == 442368);
}

TEST_CASE("space files match the embedded documents") {
  for (auto b : {Benchmark::synth_kfusion, Benchmark::synth_elasticfusion}) {
    const auto from_file = load_space(testing::space_file(std::string(benchmark_name(b)) + ".space").string());
    CHECK(from_file.to_json() == bundled_space(b).to_json());
  }
}

TEST_CASE("parse errors name the parameter") {
  const auto decreasing = error_of(R"({"parameters": [{"name": "ratio", "type": "ordinal", "values": [8, 4]}]})");
  CHECK(decreasing.find("non-increasing ordinal list") != std::string::npos);
  CHECK(decreasing.find("ratio") != std::string::npos);
  CHECK(decreasing.find("parameters[0]") != std::string::npos);

  const auto equal = error_of(R"({"parameters": [{"name": "r", "type": "ordinal", "values": [1, 2, 2]}]})");
  CHECK(equal.find("non-increasing ordinal list") != std::string::npos);

  const auto empty = error_of(R"({"parameters": [{"name": "x", "type": "ordinal", "values": []}]})");
  CHECK(empty.find("empty value list") != std::string::npos);

  const auto empty_labels = error_of(R"({"parameters": [{"name": "c", "type": "categorical", "labels": []}]})");
  CHECK(empty_labels.find("empty value list") != std::string::npos);

  const auto dup_labels =
      error_of(R"({"parameters": [{"name": "c", "type": "categorical", "labels": ["a", "b", "a"]}]})");
  CHECK(dup_labels.find("'c'") != std::string::npos);

  const auto dup = error_of(R"({"parameters": [{"name": "a", "type": "boolean"}, {"name": "a", "type": "boolean"}]})");
  CHECK(dup.find("duplicate") != std::string::npos);
  CHECK(dup.find("parameters[1]") != std::string::npos);

  CHECK(error_of("{not json").find("malformed") != std::string::npos);
  CHECK(error_of(R"({"params": []})").find("malformed") != std::string::npos);
  CHECK(!error_of(R"({"parameters": [{"name": "a", "type": "float"}]})").empty());
  CHECK(!error_of(R"({"parameters": [{"name": "a", "type": "int_range", "lo": 5, "hi": 1, "step": 1}]})").empty());
  CHECK(!error_of(R"({"parameters": [{"name": "a", "type": "int_range", "lo": 1, "hi": 5, "step": 0}]})").empty());
  CHECK(!error_of(R"({"parameters": [{"name": "a", "type": "ordinal", "values": [1, 2], "default": 3}]})").empty());
}

TEST_CASE("missing space file is a usage error") {
  CHECK_THROWS_AS(load_space("/nonexistent/x.space"), UsageError);
}

TEST_CASE("cardinality of a single ordinal parameter") {
  const auto s = parse_space(R"({"parameters": [{"name": "x", "type": "ordinal", "values": [1, 2, 3, 4, 5]}]})");
  CHECK(s.cardinality() == 5);
}

TEST_CASE("int_range values follow lo, hi, step") {
  const auto s = parse_space(kMixed);
  const auto& level = s.param(2);
  REQUIRE(level.size() == 3);
  CHECK(std::get<std::int64_t>(level.value(0)) == 2);
  CHECK(std::get<std::int64_t>(level.value(1)) == 6);
  CHECK(std::get<std::int64_t>(level.value(2)) == 10);
  CHECK(s.cardinality() == 3 * 2 * 3 * 3);
}

TEST_CASE("sample_random") {
  const auto six = parse_space(
      R"({"parameters": [{"name": "a", "type": "boolean"}, {"name": "b", "type": "ordinal", "values": [1, 2, 3]}]})");

  SUBCASE("n = 0") { CHECK(sample_random(six, 0, 1).empty()); }

  SUBCASE("n = cardinality returns every configuration once") {
    auto all = sample_random(six, 6, 9);
    REQUIRE(all.size() == 6);
    std::sort(all.begin(), all.end());
    std::vector<Configuration> expected;
    enumerate(six, [&](const Configuration& c) {
      expected.push_back(c);
      return true;
    });
    CHECK(all == expected);
  }

  SUBCASE("n > cardinality names both numbers") {
    try {
      sample_random(six, 7, 0);
      FAIL("expected an error");
    } catch (const UsageError& e) {
      const std::string msg = e.what();
      CHECK(msg.find('7') != std::string::npos);
      CHECK(msg.find('6') != std::string::npos);
    }
  }

  SUBCASE("3000 distinct kfusion configurations") {
    const auto kf = bundled_space(Benchmark::synth_kfusion);
    const auto a = sample_random(kf, 3000, 42);
    REQUIRE(a.size() == 3000);
    std::unordered_set<std::uint64_t> keys;
    for (const auto& c : a) {
      CHECK(kf.is_valid(c));
      keys.insert(kf.rank(c));
    }
    CHECK(keys.size() == 3000);
    CHECK(sample_random(kf, 3000, 42) == a);
    CHECK(sample_random(kf, 3000, 43) != a);
  }

  SUBCASE("dense regime stays distinct and valid") {
    const auto s = parse_space(testing::slurp(testing::data_file("kfusion-4800.space")));
    const auto a = sample_random(s, 4000, 5);
    std::unordered_set<std::uint64_t> keys;
    for (const auto& c : a) {
      CHECK(s.is_valid(c));
      keys.insert(s.rank(c));
    }
    CHECK(keys.size() == 4000);
    CHECK(sample_random(s, 4000, 5) == a);
  }
}

TEST_CASE("sampling frequencies are uniform") {
  const auto s = parse_space(
      R"({"parameters": [{"name": "x", "type": "ordinal", "values": [0, 1, 2, 3, 4, 5, 6, 7, 8, 9]}]})");
  std::vector<int> counts(10, 0);
  for (std::uint64_t seed = 0; seed < 100000; ++seed) ++counts[sample_random(s, 1, seed)[0][0]];
  for (int c : counts) {
    CHECK(c >= 9500);
    CHECK(c <= 10500);
  }
}

TEST_CASE("enumerate order") {
  SUBCASE("two booleans") {
    const auto s = parse_space(testing::slurp(testing::data_file("two-bool.space")));
    std::vector<std::vector<std::uint32_t>> seen;
    enumerate(s, [&](const Configuration& c) {
      seen.emplace_back(c.indices().begin(), c.indices().end());
      return true;
    });
    CHECK(seen == std::vector<std::vector<std::uint32_t>>{{0, 0}, {0, 1}, {1, 0}, {1, 1}});
  }
  SUBCASE("single parameter") {
    const auto s = parse_space(R"({"parameters": [{"name": "x", "type": "ordinal", "values": [3, 7, 9]}]})");
    std::vector<double> seen;
    enumerate(s, [&](const Configuration& c) {
      seen.push_back(std::get<double>(s.value(c, 0)));
      return true;
    });
    CHECK(seen == std::vector<double>{3, 7, 9});
  }
  SUBCASE("elasticfusion stream has no duplicates") {
    const auto s = bundled_space(Benchmark::synth_elasticfusion);
    std::unordered_set<std::uint64_t> keys;
    std::uint64_t count = 0;
    std::uint64_t position = 0;
    bool ranks_match = true;
    for (ConfigurationStream st(s); !st.done(); st.advance()) {
      ++count;
      keys.insert(s.rank(st.current()));
      ranks_match = ranks_match && s.rank(st.current()) == position++;
    }
    CHECK(count == 442368);
    CHECK(keys.size() == 442368);
    CHECK(ranks_match);
  }
  SUBCASE("visitor can stop early") {
    const auto s = parse_space(kMixed);
    int n = 0;
    enumerate(s, [&](const Configuration&) { return ++n < 5; });
    CHECK(n == 5);
  }
}

TEST_CASE("rank and unrank are inverse") {
  const auto s = parse_space(kMixed);
  for (std::uint64_t r = 0; r < s.cardinality(); ++r) CHECK(s.rank(s.unrank(r)) == r);
}

TEST_CASE("encode") {
  const auto s = parse_space(kMixed);
  const auto c = s.config_from_json(Json{{"colour", "red"}, {"flag", true}, {"level", 6}, {"ratio", 4}});
  const auto x = s.encode(c);
  REQUIRE(x.size() == 6);
  CHECK(x[0] == 1.0);  // one-hot "red"
  CHECK(x[1] == 0.0);
  CHECK(x[2] == 0.0);
  CHECK(x[3] == 1.0);  // boolean true
  CHECK(x[4] == 6.0);
  CHECK(x[5] == 4.0);

  const auto kf = bundled_space(Benchmark::synth_kfusion);
  CHECK(kf.encode(*kf.default_configuration()).size() == 9);
}

TEST_CASE("configuration documents reject bad values") {
  const auto s = parse_space(kMixed);
  const Json good{{"colour", "blue"}, {"flag", false}, {"level", 10}, {"ratio", 0.5}};
  CHECK(s.config_to_json(s.config_from_json(good)) == good);
  Json missing = good;
  missing.erase("flag");
  CHECK_THROWS_AS(s.config_from_json(missing), UsageError);
  Json extra = good;
  extra["other"] = 1;
  CHECK_THROWS_AS(s.config_from_json(extra), UsageError);
  Json bad = good;
  bad["level"] = 7;
  CHECK_THROWS_AS(s.config_from_json(bad), UsageError);
  bad = good;
  bad["colour"] = "purple";
  CHECK_THROWS_AS(s.config_from_json(bad), UsageError);
  CHECK_FALSE(s.is_valid(Configuration({0, 0, 3, 0})));
  CHECK_FALSE(s.is_valid(Configuration({0, 0, 0})));
}

TEST_CASE("encoding is injective") {
  for (const std::string doc : {testing::slurp(testing::data_file("kfusion-10368.space")), std::string(kMixed)}) {
    const auto s = parse_space(doc);
    std::set<FeatureVector> seen;
    enumerate(s, [&](const Configuration& c) {
      seen.insert(s.encode(c));
      return true;
    });
    CHECK(seen.size() == s.cardinality());
  }
}

TEST_CASE("sample_random is a subset of the space") {
  const auto s = parse_space(kMixed);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto a = sample_random(s, 30, seed);
    std::set<Configuration> distinct(a.begin(), a.end());
    CHECK(distinct.size() == a.size());
    for (const auto& c : a) CHECK(s.is_valid(c));
  }
}

TEST_CASE("defaults") {
  const auto kf = bundled_space(Benchmark::synth_kfusion);
  const auto d = kf.default_configuration();
  REQUIRE(d);
  CHECK(std::get<double>(kf.value(*d, 0)) == 256.0);
  CHECK(std::get<double>(kf.value(*d, *kf.find("mu"))) == 0.1);
  CHECK(std::get<std::int64_t>(kf.value(*d, *kf.find("pyramid_level3_iterations"))) == 4);
  CHECK_FALSE(parse_space(kMixed).default_configuration());
}

TEST_CASE("cardinality overflow is rejected") {
  Json doc{{"parameters", Json::array()}};
  for (int i = 0; i < 70; ++i) doc["parameters"].push_back(Json{{"name", "b" + std::to_string(i)}, {"type", "boolean"}});
  CHECK_THROWS_AS(parse_space(doc), SpaceError);
}
