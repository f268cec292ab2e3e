#include <set>

#include "decon/calibrate.hpp"
#include "decon/error.hpp"
#include "doctest.h"
#include "support/synthetic.hpp"

using namespace decon;

namespace {

std::size_t removed_under(const CascadeResult& r, const std::string& bench) {
  std::set<std::string> ids;
  for (const auto& m : r.matches) {
    if (m.benchmark == bench && m.decision == Decision::remove) ids.insert(m.training_doc_id);
  }
  return ids.size();
}

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

TEST_CASE("default grid") {
  auto g = default_grid();
  REQUIRE(g.size() == 13);
  CHECK(g.front() == 0.4);
  CHECK(g[8] == 0.8);
  CHECK(g.back() == 1.0);
}

TEST_CASE("sweep counts equal cascade removals at each grid point") {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    auto w = synth::make_world({.train_docs = 120, .eval_docs = 30, .benchmarks = 2, .near_misses = 60, .seed = seed});
    auto config = EngineConfig::defaults();
    CascadeEngine engine(w.training, w.evals, w.train_store, w.eval_store, config);
    const auto grid = default_grid();
    for (std::size_t b = 0; b < engine.index().benchmark_count(); ++b) {
      const std::string name = engine.index().benchmark_name(b);
      auto t_profile = sweep_tau_t(engine, name, grid);
      auto i_profile = sweep_tau_i(engine, name, std::vector<double>{0.85, 0.9, 0.95, 0.97, 0.99, 1.0});
      for (std::size_t g = 0; g < grid.size(); ++g) {
        auto c = config;
        c.policies[name] = resolve_policy(name, config);
        c.policies[name].tau_t = grid[g];
        auto r = run_cascade(w.training, w.evals, w.train_store, w.eval_store, c);
        CHECK(t_profile.flagged_counts[g] == removed_under(r, name));
      }
      for (std::size_t g = 0; g < i_profile.grid.size(); ++g) {
        auto c = config;
        c.policies[name] = resolve_policy(name, config);
        c.policies[name].tau_i = i_profile.grid[g];
        auto r = run_cascade(w.training, w.evals, w.train_store, w.eval_store, c);
        CHECK(i_profile.flagged_counts[g] == removed_under(r, name));
      }
    }
  }
}

TEST_CASE("flagged counts never increase along the grid") {
  for (std::uint64_t seed = 10; seed < 20; ++seed) {
    auto w = synth::make_world({.train_docs = 100, .eval_docs = 30, .near_misses = 50, .seed = seed});
    CascadeEngine engine(w.training, w.evals, w.train_store, w.eval_store, synth::random_config(w, seed));
    for (std::size_t b = 0; b < engine.index().benchmark_count(); ++b) {
      for (auto profile : {sweep_tau_t(engine, engine.index().benchmark_name(b), default_grid()),
                           sweep_tau_i(engine, engine.index().benchmark_name(b), default_grid())}) {
        for (std::size_t g = 1; g < profile.flagged_counts.size(); ++g) {
          REQUIRE(profile.flagged_counts[g] <= profile.flagged_counts[g - 1]);
        }
      }
    }
  }
}

TEST_CASE("samples are seeded subsets of the flagged pairs") {
  auto w = synth::make_world({.train_docs = 150, .eval_docs = 20, .benchmarks = 1, .leaks = 15, .near_misses = 60, .seed = 8});
  CascadeEngine engine(w.training, w.evals, w.train_store, w.eval_store, EngineConfig::defaults());
  auto profile = sweep_tau_t(engine, "bench_0", default_grid());
  REQUIRE(profile.flagged_counts.front() > 5);
  auto a = sample_flagged(profile, 5, 42);
  auto b = sample_flagged(profile, 5, 42);
  auto c = sample_flagged(profile, 5, 43);
  CHECK(a == b);
  bool differs = false;
  for (std::size_t g = 0; g < a.size(); ++g) {
    CHECK(a[g].size() == std::min<std::size_t>(5, profile.flagged_counts[g]));
    std::set<std::string> ids;
    for (const auto& m : a[g]) {
      CHECK(m.c_text.value_or(1.0) >= profile.grid[g]);
      ids.insert(m.training_doc_id);
    }
    CHECK(ids.size() == a[g].size());
    differs = differs || a[g] != c[g];
  }
  CHECK(differs);
  CHECK(kind_of([&] { sample_flagged(profile, 0, 1); }) == ErrorKind::config);
  attach_samples(profile, 3, 1);
  auto j = to_json(profile);
  CHECK(j.at("axis") == "tau_t");
  CHECK(j.at("sampled_pairs").size() == profile.grid.size());
}

TEST_CASE("sweep input validation") {
  auto w = synth::make_world({.train_docs = 20, .eval_docs = 5, .benchmarks = 1, .seed = 3});
  CascadeEngine engine(w.training, w.evals, w.train_store, w.eval_store, EngineConfig::defaults());
  CHECK(kind_of([&] { sweep_tau_t(engine, "bench_0", std::vector<double>{}); }) == ErrorKind::config);
  CHECK(kind_of([&] { sweep_tau_t(engine, "bench_0", std::vector<double>{0.5, 0.5}); }) == ErrorKind::config);
  CHECK(kind_of([&] { sweep_tau_t(engine, "bench_0", std::vector<double>{0.0, 0.5}); }) == ErrorKind::config);
  CHECK(kind_of([&] { sweep_tau_i(engine, "bench_0", std::vector<double>{0.5, 1.5}); }) == ErrorKind::config);
  CHECK(kind_of([&] { sweep_tau_t(engine, "nope", default_grid()); }) == ErrorKind::schema);
}
