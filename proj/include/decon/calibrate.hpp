#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "decon/cascade.hpp"
#include "json.hpp"

namespace decon {

enum class SweepAxis { tau_t, tau_i };

std::string_view to_string(SweepAxis axis);

/// Flagged counts for one benchmark over an ascending threshold grid. Scores
/// are computed once per (candidate, eval) pair and thresholded per grid
/// point, so counts are non-increasing along the grid.
struct SweepProfile {
  std::string benchmark;
  SweepAxis axis = SweepAxis::tau_t;
  std::vector<double> grid;
  std::vector<std::size_t> flagged_counts;
  // Per grid point, filled by attach_samples.
  std::vector<std::vector<ContaminationMatch>> sampled_pairs;
  // Cached per-candidate best pair; flagged at grid[i] iff flag_value >= grid[i].
  std::vector<ContaminationMatch> candidates;
  std::vector<double> flag_value;
};

/// 0.40, 0.45, ..., 1.00.
std::vector<double> default_grid();

/// Stage 1 at the benchmark's tau_i, then text thresholds from the grid.
/// Throws Error{config} for an empty, unsorted or out-of-range grid and
/// Error{schema} for an unknown benchmark.
SweepProfile sweep_tau_t(const CascadeEngine& engine, std::string_view benchmark,
                         std::span<const double> grid);

/// Image thresholds from the grid at the benchmark's tau_t (or Stage 1 alone
/// for image-only benchmarks).
SweepProfile sweep_tau_i(const CascadeEngine& engine, std::string_view benchmark,
                         std::span<const double> grid);

/// Seeded sample without replacement of min(k, flagged) pairs per grid
/// point. Same seed, same profile: same sample. k must be >= 1.
std::vector<std::vector<ContaminationMatch>> sample_flagged(const SweepProfile& profile,
                                                            std::size_t k, std::uint64_t seed);

void attach_samples(SweepProfile& profile, std::size_t k, std::uint64_t seed);

/// Profile export; candidate pairs are omitted (samples carry the detail).
nlohmann::json to_json(const SweepProfile& profile);

}  // namespace decon
