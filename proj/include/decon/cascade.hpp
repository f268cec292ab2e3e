#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "decon/config.hpp"
#include "decon/corpus.hpp"
#include "decon/embedstore.hpp"
#include "decon/eval_index.hpp"
#include "decon/kernels.hpp"
#include "decon/textnorm.hpp"
#include "json.hpp"

namespace decon {

enum class Decision { remove, keep };

std::string_view to_string(Decision decision);

/// One scored (training doc, eval doc) pair. sim_img is the training doc's
/// max image similarity to the eval doc's benchmark group, i.e. the value
/// that was compared with tau_i. c_text is absent when Stage 2 did not run
/// for the pair (Stage-1 records and image-only removals).
struct ContaminationMatch {
  std::string training_doc_id;
  std::string eval_doc_id;
  std::string benchmark;
  double sim_img = 0.0;
  std::optional<double> c_text;
  Decision decision = Decision::keep;
  int stage_reached = 1;
  std::string train_image_id;  // argmax pair behind sim_img
  std::string eval_image_id;

  bool operator==(const ContaminationMatch&) const = default;
};

nlohmann::json to_json(const ContaminationMatch& match);
ContaminationMatch match_from_json(const nlohmann::json& obj);

/// Degenerate inputs seen during a run: "no_images" (training doc that can
/// never pass Stage 1) and "text_ungateable" (eval doc with no n-grams).
struct AuditEntry {
  std::string kind;
  std::string id;
  std::string benchmark;
};

struct CascadeStats {
  std::size_t training_docs = 0;
  std::size_t eval_docs = 0;
  std::size_t stage1_survivors = 0;
  std::size_t removed = 0;
  std::uint64_t containment_pairs = 0;
};

struct CascadeResult {
  std::vector<std::string> removed_ids;  // training-corpus order
  std::vector<ContaminationMatch> matches;
  std::vector<AuditEntry> audit;
  CascadeStats stats;
};

struct Progress {
  std::string_view stage;  // "stage1" or "stage2"
  std::size_t done = 0;
  std::size_t total = 0;
};

struct CascadeOptions {
  int threads = 0;               // 0: OpenMP default
  std::size_t shard_size = 4096; // training docs per progress step
  KernelOptions kernel;
  std::function<void(const Progress&)> progress;
};

/// Per (training doc, benchmark) Stage-1 result: max similarity between the
/// doc's images and the benchmark's eval images.
struct Stage1Cell {
  double sim = 0.0;
  std::uint32_t train_row = kNoColumn;   // kNoColumn: no value (no images / empty group)
  std::uint32_t eval_column = kNoColumn;

  bool present() const { return train_row != kNoColumn; }
};

/// Two-stage decontamination over one (training, eval) corpus pair.
///
/// Stage 1 runs in the constructor: every training doc gets its max image
/// similarity per benchmark group. run() applies the per-benchmark gates:
/// image-only benchmarks remove on Stage 1 alone; joint benchmarks whose
/// gate passes send the doc to Stage 2, which scores containment against
/// every eval doc of every gating benchmark. Within a benchmark the first
/// eval doc (corpus order) with c_text >= tau_t removes the doc; the other
/// gating benchmarks are still resolved so per-benchmark accounting can
/// count a doc under each benchmark it matched.
///
/// The corpora and stores must outlive the engine.
class CascadeEngine {
 public:
  CascadeEngine(const Corpus& training, const Corpus& evals, const EmbeddingStore& train_store,
                const EmbeddingStore& eval_store, EngineConfig config, CascadeOptions options = {});
  ~CascadeEngine();

  CascadeEngine(const CascadeEngine&) = delete;
  CascadeEngine& operator=(const CascadeEngine&) = delete;

  CascadeResult run() const;

  const Corpus& training() const { return training_; }
  const Corpus& evals() const { return evals_; }
  const EmbeddingStore& train_store() const { return train_store_; }
  const EmbeddingStore& eval_store() const { return eval_store_; }
  const EngineConfig& config() const { return config_; }
  const EvalIndex& index() const { return *index_; }
  const TextNormalizer& normalizer() const { return normalizer_; }
  const CascadeOptions& options() const { return options_; }

  bool has_images(std::size_t doc) const { return !training_.documents[doc].image_ids.empty(); }
  const Stage1Cell& stage1(std::size_t doc, std::size_t benchmark) const {
    return stage1_[doc * index_->benchmark_count() + benchmark];
  }

  /// Normalized training Q+A.
  NormalizedText training_text(std::size_t doc) const;

  /// Containment of training doc `doc` against the eval docs of masked
  /// benchmarks (see ContainmentScorer::score). Adds one per (doc, eval doc)
  /// pair covered by the mask to the containment-pair counter.
  std::vector<PairScore> score_text(std::size_t doc, std::span<const char> benchmark_mask,
                                    ContainmentScorer& scorer) const;

  std::uint64_t containment_pairs() const { return containment_pairs_.load(); }

  /// A match record for (doc, eval doc) filled from the Stage-1 table.
  ContaminationMatch make_match(std::size_t doc, std::uint32_t eval_doc, std::optional<double> c_text,
                                Decision decision, int stage) const;

 private:
  void compute_stage1();

  const Corpus& training_;
  const Corpus& evals_;
  const EmbeddingStore& train_store_;
  const EmbeddingStore& eval_store_;
  EngineConfig config_;
  CascadeOptions options_;
  TextNormalizer normalizer_;
  std::unique_ptr<EvalIndex> index_;
  std::vector<Stage1Cell> stage1_;
  mutable std::atomic<std::uint64_t> containment_pairs_{0};
};

/// One-shot convenience wrapper.
CascadeResult run_cascade(const Corpus& training, const Corpus& evals,
                          const EmbeddingStore& train_store, const EmbeddingStore& eval_store,
                          const EngineConfig& config, const CascadeOptions& options = {});

/// Removal set from the contamination criterion applied directly to every
/// (training, eval) pair with plain loops and no cascade shortcuts: no
/// kernels, no inverted index, no early exit. Meant for small inputs
/// (up to about 1k training docs) as a test oracle.
std::set<std::string> brute_force_oracle(const Corpus& training, const Corpus& evals,
                                         const EmbeddingStore& train_store,
                                         const EmbeddingStore& eval_store,
                                         const EngineConfig& config);

}  // namespace decon
