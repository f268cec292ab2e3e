#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "decon/cascade.hpp"
#include "json.hpp"

namespace decon {

struct BenchmarkShare {
  std::string benchmark;
  std::size_t flagged = 0;
  double share = 0.0;  // flagged / total
};

/// Contamination volume over removed documents. A removed doc counts once
/// per benchmark it matched in per_benchmark and once overall in the union,
/// so the union never exceeds the row sum.
struct VolumeReport {
  std::size_t total_training_docs = 0;
  std::vector<BenchmarkShare> per_benchmark;  // descending share, then name
  std::size_t union_count = 0;
  double union_share = 0.0;
  // Evaluations checked, flagged or not; shown in the union row label.
  std::size_t evaluations = 0;

  // Layout: the top_k benchmarks, plus any other at or above tail_cutoff,
  // get their own row; the rest fold into the tail bucket.
  double tail_cutoff = 1e-4;
  std::size_t top_k = 5;
  std::vector<BenchmarkShare> rows;
  std::size_t tail_benchmarks = 0;
  std::size_t tail_count = 0;
  double tail_share = 0.0;
};

inline constexpr double kDefaultTailCutoff = 1e-4;  // 0.01%
inline constexpr std::size_t kDefaultTopRows = 5;

/// Only matches with decision == remove are counted. total must be >= 1.
/// evaluations = 0 falls back to the number of benchmarks with a removal.
VolumeReport build_report(std::span<const ContaminationMatch> matches, std::size_t total,
                          double tail_cutoff = kDefaultTailCutoff,
                          std::size_t top_k = kDefaultTopRows, std::size_t evaluations = 0);

/// Share as a percentage with three decimals, e.g. "0.071%".
std::string format_share(double share);

nlohmann::json to_json(const VolumeReport& report);
std::string render_tsv(const VolumeReport& report);
/// Aligned plain-text table: benchmark rows, tail bucket, unique-union row.
std::string render_table(const VolumeReport& report);

/// Sorted, de-duplicated removed ids, one per line.
std::string render_removal_manifest(std::vector<std::string> removed_ids);

}  // namespace decon
