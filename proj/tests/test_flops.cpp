#include <algorithm>
#include <cstdio>
#include <cmath>
#include <numeric>
#include <random>

#include "decon/error.hpp"
#include "decon/flops.hpp"
#include "doctest.h"
#include "support/published_data.hpp"

using namespace decon;
using nlohmann::json;

namespace {

bool within(double got, double want, double rel) { return std::abs(got - want) <= rel * std::abs(want); }

// Three significant figures, as printed in the efficiency table.
std::string sig3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

// All-pairs definition: keep p unless some q dominates it.
std::vector<ParetoPoint> frontier_oracle(const std::vector<ParetoPoint>& pts) {
  std::vector<ParetoPoint> out;
  for (const auto& p : pts) {
    bool dominated = false;
    for (const auto& q : pts) {
      const bool q_dom = q.cost <= p.cost && q.accuracy >= p.accuracy && (q.cost < p.cost || q.accuracy > p.accuracy);
      dominated = dominated || q_dom;
    }
    if (!dominated) out.push_back(p);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.cost != b.cost) return a.cost < b.cost;
    if (a.accuracy != b.accuracy) return a.accuracy > b.accuracy;
    return a.name < b.name;
  });
  return out;
}

}  // namespace

TEST_CASE("worked examples") {
  CHECK(sig3(train_flops(2.10e9, 25e9)) == "3.15e+20");
  CHECK(sig3(response_flops(2.10e9, 42.1)) == "1.77e+11");
  // 9.3654e11; the table truncates to 9.36e11.
  CHECK(within(response_flops(4.30e9, 108.9), 9.36e11, 1e-3));
  CHECK(train_flops(1e9, 0) == 0.0);
  CHECK_THROWS_AS(train_flops(0, 1), Error);
  CHECK_THROWS_AS(response_flops(1, -1), Error);
}

TEST_CASE("T is the unweighted mean of per-eval means") {
  ModelSpec s;
  s.name = "Datology 2B";
  s.active_params = 2.10e9;
  s.vl_tokens = 25e9;
  const auto& tokens = published::datology_2b_tokens();
  for (std::size_t i = 0; i < tokens.size(); ++i) s.per_eval_mean_tokens["eval" + std::to_string(i)] = tokens[i];
  const double expect = std::accumulate(tokens.begin(), tokens.end(), 0.0) / tokens.size();
  CHECK(mean_response_tokens(s) == doctest::Approx(expect));
  CHECK(std::round(mean_response_tokens(s) * 10) / 10 == doctest::Approx(42.1));
  auto r = efficiency(s);
  CHECK(sig3(r.f_response) == "1.77e+11");
  s.per_eval_mean_tokens.clear();
  CHECK_THROWS_AS(mean_response_tokens(s), Error);
}

TEST_CASE("curated models dominate their baselines on response FLOPs") {
  std::map<std::string, EfficiencyRecord> by_name;
  for (const auto& s : published::table10_specs()) by_name[s.name] = efficiency(s);
  for (const auto& [curated, baseline] : published::matched_pairs()) {
    const auto& c = by_name.at(curated);
    const auto& b = by_name.at(baseline);
    CHECK(dominates({c.f_response, *c.accuracy, c.name}, {b.f_response, *b.accuracy, b.name}));
    CHECK_FALSE(dominates({b.f_response, *b.accuracy, b.name}, {c.f_response, *c.accuracy, c.name}));
  }
}

TEST_CASE("frontier matches the all-pairs definition") {
  std::vector<ParetoPoint> pts;
  for (const auto& s : published::table10_specs()) {
    auto r = efficiency(s);
    pts.push_back({r.f_response, *r.accuracy, r.name});
  }
  CHECK(pareto_frontier(pts) == frontier_oracle(pts));

  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<ParetoPoint> random;
    const int n = 1 + rng() % 25;
    for (int i = 0; i < n; ++i) {
      // Small integer grids force plenty of exact ties.
      random.push_back({double(1 + rng() % 6), double(rng() % 6), "p" + std::to_string(i)});
    }
    REQUIRE(pareto_frontier(random) == frontier_oracle(random));
  }
}

TEST_CASE("exact ties are all kept") {
  std::vector<ParetoPoint> pts = {{1, 5, "a"}, {1, 5, "b"}, {2, 5, "c"}, {1, 4, "d"}};
  auto f = pareto_frontier(pts);
  REQUIRE(f.size() == 2);
  CHECK(f[0].name == "a");
  CHECK(f[1].name == "b");
  std::vector<ParetoPoint> zero = {{0, 1, "z"}};
  CHECK_THROWS_AS(pareto_frontier(zero), Error);
}

TEST_CASE("model spec parsing") {
  auto specs = parse_model_specs(json::parse(R"([
    {"name": "m", "active_params": 2e9, "vl_tokens": 1e10, "per_eval_mean_tokens": {"a": 10, "b": 20}, "accuracy": 50},
    {"name": "n", "active_params": 1e9, "vl_tokens": 0, "per_eval_mean_tokens": {"a": 1}}
  ])"));
  REQUIRE(specs.size() == 2);
  CHECK(mean_response_tokens(specs[0]) == 15.0);
  CHECK(*specs[0].accuracy == 50.0);
  CHECK_FALSE(specs[1].accuracy.has_value());

  auto kind = [](const char* text) {
    try {
      parse_model_specs(json::parse(text));
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::contract;
  };
  CHECK(kind(R"({})") == ErrorKind::schema);
  CHECK(kind(R"([{"name": "m"}])") == ErrorKind::schema);
  CHECK(kind(R"([{"name": "m", "active_params": 0, "vl_tokens": 1, "per_eval_mean_tokens": {}}])") == ErrorKind::schema);
  CHECK(kind(R"([{"name": "m", "active_params": 1, "vl_tokens": 1, "per_eval_mean_tokens": {"a": -1}}])") ==
        ErrorKind::schema);

  std::vector<EfficiencyRecord> recs = {efficiency(specs[0])};
  const auto tsv = render_flops_tsv(recs);
  CHECK(tsv == "model\tN\tD\tT\tF_train\tF_response\nm\t2.00e+09\t1.00e+10\t15.0\t1.20e+20\t6.00e+10\n");
  CHECK(to_json(recs[0]).at("f_response") == 6e10);
}
