#include "decon/config.hpp"
#include "decon/error.hpp"
#include "doctest.h"

using namespace decon;
using nlohmann::json;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected decon::Error");
  return ErrorKind::contract;
}

}  // namespace

TEST_CASE("defaults") {
  auto c = EngineConfig::defaults();
  auto p = resolve_policy("anything", c);
  CHECK(p.benchmark == "anything");
  CHECK(p.tau_i == 0.95);
  CHECK(p.tau_t == 0.8);
  CHECK(p.mode == PolicyMode::joint);
  CHECK(p.n_default == 4);
  CHECK(p.short_threshold == 10);
}

TEST_CASE("overrides inherit unspecified fields from the global default") {
  auto c = parse_config(json::parse(R"({
    "policies": {
      "*": {"tau_i": 0.93, "tau_t": 0.7},
      "refcoco": {"mode": "image_only", "tau_i": 0.995},
      "chartqa": {"tau_t": 0.5, "n_default": 5, "short_threshold": 12}
    }})"));
  auto ref = resolve_policy("refcoco", c);
  CHECK(ref.mode == PolicyMode::image_only);
  CHECK(ref.tau_t == 0.7);
  auto chart = resolve_policy("chartqa", c);
  CHECK(chart.tau_i == 0.93);
  CHECK(chart.tau_t == 0.5);
  CHECK(chart.n_default == 5);
  CHECK(resolve_policy("other", c).tau_i == 0.93);
}

TEST_CASE("the resolved form round-trips and hashes stably") {
  auto c = parse_config(json::parse(R"({"policies": {"*": {}, "x": {"tau_t": 0.6}}, "strip_list": ["<image>"]})"));
  auto again = parse_config(to_json(c));
  CHECK(to_json(again) == to_json(c));
  CHECK(config_hash(again) == config_hash(c));
  CHECK(config_hash(c).size() == 64);
  CHECK(config_hash(c) != config_hash(EngineConfig::defaults()));
}

TEST_CASE("invariant violations are config errors") {
  auto bad = [](const char* text) { return kind_of([&] { parse_config(json::parse(text)); }); };
  CHECK(bad(R"({"policies": {"x": {}}})") == ErrorKind::config);
  CHECK(bad(R"({"policies": {"*": {"tau_i": 0}}})") == ErrorKind::config);
  CHECK(bad(R"({"policies": {"*": {"tau_t": 1.2}}})") == ErrorKind::config);
  CHECK(bad(R"({"policies": {"*": {}, "r": {"mode": "image_only", "tau_i": 0.99}}})") == ErrorKind::config);
  CHECK(bad(R"({"policies": {"*": {"n_default": 2}}})") == ErrorKind::config);
  CHECK(bad(R"({"policies": {"*": {"n_default": 9, "short_threshold": 12}}})") == ErrorKind::config);
  CHECK(bad(R"({"policies": {"*": {"n_default": 5, "short_threshold": 4}}})") == ErrorKind::config);
  CHECK(bad(R"({"policies": {"*": {"tau": 0.5}}})") == ErrorKind::config);
  CHECK(bad(R"({"policies": {"*": {"mode": "text_only"}}})") == ErrorKind::config);
  CHECK(bad(R"({"policies": {"*": {}}, "extra": 1})") == ErrorKind::config);
  CHECK(bad(R"({"policies": {"*": {"tau_i": "high"}}})") == ErrorKind::config);
}

TEST_CASE("low image-only tau_i needs an explicit acknowledgment") {
  auto c = parse_config(json::parse(
      R"({"policies": {"*": {}, "pixmo": {"mode": "image_only", "tau_i": 0.98, "acknowledge_low_tau_i": true}}})"));
  CHECK(resolve_policy("pixmo", c).tau_i == 0.98);
  // The acknowledgment is per benchmark; it is not inherited from "*".
  CHECK(kind_of([] {
          parse_config(json::parse(
              R"({"policies": {"*": {"acknowledge_low_tau_i": true}, "p": {"mode": "image_only", "tau_i": 0.98}}})"));
        }) == ErrorKind::config);
}

TEST_CASE("apply_override validates the merged policy") {
  auto c = EngineConfig::defaults();
  auto next = apply_override(c, json::parse(R"({"benchmark": "ai2d", "tau_t": 0.6})"));
  CHECK(resolve_policy("ai2d", next).tau_t == 0.6);
  CHECK(resolve_policy("ai2d", c).tau_t == 0.8);
  CHECK(kind_of([&] { apply_override(c, json::parse(R"({"benchmark": "r", "mode": "image_only"})")); }) ==
        ErrorKind::config);
  CHECK(kind_of([&] { apply_override(c, json::parse(R"({"tau_t": 0.6})")); }) == ErrorKind::config);
  auto merged = merge_policy(resolve_policy("q", c), json::parse(R"({"tau_i": 0.5})"));
  CHECK(merged.tau_i == 0.5);
}
