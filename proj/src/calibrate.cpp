#include "decon/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "decon/error.hpp"

namespace decon {

std::string_view to_string(SweepAxis axis) { return axis == SweepAxis::tau_t ? "tau_t" : "tau_i"; }

std::vector<double> default_grid() {
  std::vector<double> grid;
  for (int i = 0; i <= 12; ++i) grid.push_back(std::round((0.40 + 0.05 * i) * 100.0) / 100.0);
  return grid;
}

namespace {

void check_grid(std::span<const double> grid) {
  if (grid.empty()) throw Error(ErrorKind::config, "sweep grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0 && grid[i] <= 1.0)) throw Error(ErrorKind::config, "grid values must lie in (0, 1]");
    if (i > 0 && grid[i] <= grid[i - 1]) throw Error(ErrorKind::config, "grid must be strictly ascending");
  }
}

std::uint32_t require_benchmark(const CascadeEngine& engine, std::string_view benchmark) {
  auto b = engine.index().find_benchmark(benchmark);
  if (!b) throw Error(ErrorKind::schema, "unknown benchmark " + std::string(benchmark));
  return *b;
}

// Best-scoring pair of a candidate within benchmark b; its c_text decides
// every tau_t threshold for that (candidate, benchmark).
ContaminationMatch best_text_pair(const CascadeEngine& engine, std::size_t doc, std::uint32_t b,
                                  ContainmentScorer& scorer) {
  std::vector<char> mask(engine.index().benchmark_count(), 0);
  mask[b] = 1;
  const auto scores = engine.score_text(doc, mask, scorer);
  if (scores.empty()) {
    return engine.make_match(doc, engine.index().column_owner(engine.stage1(doc, b).eval_column), 0.0,
                             Decision::keep, 2);
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i].c_text > scores[best].c_text) best = i;
  }
  return engine.make_match(doc, scores[best].eval_doc, scores[best].c_text, Decision::keep, 2);
}

void count_flags(SweepProfile& profile) {
  profile.flagged_counts.assign(profile.grid.size(), 0);
  for (std::size_t g = 0; g < profile.grid.size(); ++g) {
    for (double v : profile.flag_value) {
      if (v >= profile.grid[g]) ++profile.flagged_counts[g];
    }
  }
}

}  // namespace

SweepProfile sweep_tau_t(const CascadeEngine& engine, std::string_view benchmark,
                         std::span<const double> grid) {
  check_grid(grid);
  const auto b = require_benchmark(engine, benchmark);
  const auto& policy = engine.index().policy(b);
  SweepProfile profile;
  profile.benchmark = std::string(benchmark);
  profile.axis = SweepAxis::tau_t;
  profile.grid.assign(grid.begin(), grid.end());

  ContainmentScorer scorer(engine.index());
  for (std::size_t d = 0; d < engine.training().size(); ++d) {
    const auto& cell = engine.stage1(d, b);
    if (!cell.present() || cell.sim < policy.tau_i) continue;
    if (policy.mode == PolicyMode::image_only) {
      // Text never gates an image-only benchmark: flagged at every tau_t.
      profile.candidates.push_back(engine.make_match(
          d, engine.index().column_owner(cell.eval_column), std::nullopt, Decision::remove, 1));
      profile.flag_value.push_back(1.0);
      continue;
    }
    profile.candidates.push_back(best_text_pair(engine, d, b, scorer));
    profile.flag_value.push_back(*profile.candidates.back().c_text);
  }
  count_flags(profile);
  return profile;
}

SweepProfile sweep_tau_i(const CascadeEngine& engine, std::string_view benchmark,
                         std::span<const double> grid) {
  check_grid(grid);
  const auto b = require_benchmark(engine, benchmark);
  const auto& policy = engine.index().policy(b);
  SweepProfile profile;
  profile.benchmark = std::string(benchmark);
  profile.axis = SweepAxis::tau_i;
  profile.grid.assign(grid.begin(), grid.end());

  ContainmentScorer scorer(engine.index());
  for (std::size_t d = 0; d < engine.training().size(); ++d) {
    const auto& cell = engine.stage1(d, b);
    if (!cell.present() || cell.sim < grid.front()) continue;
    if (policy.mode == PolicyMode::joint) {
      auto pair = best_text_pair(engine, d, b, scorer);
      if (*pair.c_text < policy.tau_t) continue;
      profile.candidates.push_back(std::move(pair));
    } else {
      profile.candidates.push_back(engine.make_match(
          d, engine.index().column_owner(cell.eval_column), std::nullopt, Decision::remove, 1));
    }
    profile.flag_value.push_back(cell.sim);
  }
  count_flags(profile);
  return profile;
}

std::vector<std::vector<ContaminationMatch>> sample_flagged(const SweepProfile& profile,
                                                            std::size_t k, std::uint64_t seed) {
  if (k == 0) throw Error(ErrorKind::config, "sample size k must be >= 1");
  std::vector<std::vector<ContaminationMatch>> out(profile.grid.size());
  for (std::size_t g = 0; g < profile.grid.size(); ++g) {
    std::vector<std::size_t> flagged;
    for (std::size_t i = 0; i < profile.flag_value.size(); ++i) {
      if (profile.flag_value[i] >= profile.grid[g]) flagged.push_back(i);
    }
    // Partial Fisher-Yates, one engine per grid point so points are independent.
    std::mt19937_64 rng(seed ^ (0x9e3779b97f4a7c15ULL * (g + 1)));
    const std::size_t take = std::min(k, flagged.size());
    for (std::size_t i = 0; i < take; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, flagged.size() - 1);
      std::swap(flagged[i], flagged[pick(rng)]);
      auto m = profile.candidates[flagged[i]];
      m.decision = Decision::remove;
      out[g].push_back(std::move(m));
    }
  }
  return out;
}

void attach_samples(SweepProfile& profile, std::size_t k, std::uint64_t seed) {
  profile.sampled_pairs = sample_flagged(profile, k, seed);
}

nlohmann::json to_json(const SweepProfile& profile) {
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& point : profile.sampled_pairs) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& m : point) arr.push_back(to_json(m));
    samples.push_back(std::move(arr));
  }
  return {{"benchmark", profile.benchmark},
          {"axis", to_string(profile.axis)},
          {"grid", profile.grid},
          {"flagged_counts", profile.flagged_counts},
          {"candidates", profile.candidates.size()},
          {"sampled_pairs", samples}};
}

}  // namespace decon
