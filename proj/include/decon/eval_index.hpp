#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "decon/config.hpp"
#include "decon/corpus.hpp"
#include "decon/embedstore.hpp"
#include "decon/textnorm.hpp"

namespace decon {

/// Word n-gram over interned token ids; slot 0 holds n, unused slots are 0.
using GramKey = std::array<std::uint32_t, kMaxNgram + 1>;

struct GramKeyHash {
  std::size_t operator()(const GramKey& key) const noexcept;
};

struct EvalDocInfo {
  std::uint32_t benchmark = 0;
  int n = 4;
  std::uint32_t gram_count = 0;  // |N(e)|
};

/// Immutable eval-side state shared by every cascade worker: benchmark
/// grouping with resolved policies, eval image columns grouped by benchmark,
/// and an inverted index from eval n-grams to the eval docs containing them.
///
/// Token ids come from eval text only. A training window with an
/// out-of-vocabulary token cannot equal any eval gram, so skipping it leaves
/// the intersection |N(e) ∩ N(t)| unchanged.
class EvalIndex {
 public:
  EvalIndex(const Corpus& evals, const EmbeddingStore& eval_store, const EngineConfig& config,
            const TextNormalizer& normalizer);

  std::size_t benchmark_count() const { return benchmarks_.size(); }
  const std::string& benchmark_name(std::size_t b) const { return benchmarks_[b]; }
  const BenchmarkPolicy& policy(std::size_t b) const { return policies_[b]; }
  std::optional<std::uint32_t> find_benchmark(std::string_view name) const;

  std::size_t eval_count() const { return docs_.size(); }
  const EvalDocInfo& eval_doc(std::size_t e) const { return docs_[e]; }
  std::span<const std::uint32_t> docs_of(std::size_t b) const { return docs_by_benchmark_[b]; }

  /// Eval image columns (store rows) grouped by benchmark.
  ColumnGroups column_groups() const { return {columns_, column_offsets_}; }
  std::uint32_t column_row(std::uint32_t column) const { return columns_[column]; }
  /// First eval doc of the column's benchmark that references the image.
  std::uint32_t column_owner(std::uint32_t column) const { return column_owner_[column]; }

  /// Distinct eval-side n values used by a benchmark, ascending.
  std::span<const int> ngram_sizes(std::size_t b) const { return sizes_by_benchmark_[b]; }

  /// 0 for tokens never seen on the eval side.
  std::uint32_t token_id(std::string_view token) const;

  /// Eval docs (ascending) whose gram set contains `key`; empty if none.
  std::span<const std::uint32_t> postings(const GramKey& key) const;

 private:
  std::vector<std::string> benchmarks_;
  std::vector<BenchmarkPolicy> policies_;
  std::vector<EvalDocInfo> docs_;
  std::vector<std::vector<std::uint32_t>> docs_by_benchmark_;
  std::vector<std::vector<int>> sizes_by_benchmark_;

  std::vector<std::uint32_t> columns_;
  std::vector<std::size_t> column_offsets_;
  std::vector<std::uint32_t> column_owner_;

  std::unordered_map<std::string, std::uint32_t> vocab_;
  std::unordered_map<GramKey, std::uint32_t, GramKeyHash> gram_ids_;
  std::vector<std::size_t> posting_offsets_;
  std::vector<std::uint32_t> posting_docs_;
};

/// Shared-gram count and containment of one (training doc, eval doc) pair.
struct PairScore {
  std::uint32_t eval_doc = 0;
  std::uint32_t shared = 0;
  double c_text = 0.0;
};

/// Per-thread scratch for scoring one training text against many eval docs
/// through the inverted index. Not thread-safe; use one per worker.
class ContainmentScorer {
 public:
  explicit ContainmentScorer(const EvalIndex& index);

  /// Containment of `training_text` against every eval doc whose benchmark
  /// has benchmark_mask[b] set. Only pairs with at least one shared gram are
  /// returned (the rest score 0), ascending by eval doc.
  std::vector<PairScore> score(const NormalizedText& training_text,
                               std::span<const char> benchmark_mask);

 private:
  const EvalIndex& index_;
  std::vector<std::uint32_t> counts_;
  std::vector<std::uint32_t> touched_;
};

}  // namespace decon
