#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "decon/corpus.hpp"
#include "decon/kernels.hpp"

namespace decon {

/// Dense row-major image-embedding matrix plus its image-id manifest.
/// Rows are L2-normalized on construction, so cosine similarity is a dot
/// product. Immutable after construction.
///
/// On-disk vectors use the DEMB layout (little-endian):
///   "DEMB" | u16 version = 1 | u16 reserved = 0 | u32 dim | u64 count |
///   count * dim float32, row-major
/// The manifest is JSONL with one {"image_id": str, "row": int} per row.
class EmbeddingStore {
 public:
  EmbeddingStore() = default;

  static EmbeddingStore load(const std::filesystem::path& vectors_path,
                             const std::filesystem::path& manifest_path);

  /// Builds a store from raw (unnormalized) rows; image_ids[i] names row i.
  static EmbeddingStore from_rows(std::uint32_t dim, std::vector<float> values,
                                  std::vector<std::string> image_ids);

  std::uint32_t dim() const { return dim_; }
  std::size_t count() const { return ids_.size(); }

  std::span<const float> row(std::size_t r) const {
    return {values_.data() + r * dim_, dim_};
  }
  const float* data() const { return values_.data(); }
  MatrixView view() const { return {values_.data(), count(), dim_}; }

  const std::string& image_id(std::size_t r) const { return ids_[r]; }
  std::optional<std::uint32_t> find(std::string_view image_id) const;

 private:
  std::uint32_t dim_ = 0;
  std::vector<float> values_;
  std::vector<std::string> ids_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

/// Writes raw vectors in the DEMB layout.
void write_demb(const std::filesystem::path& path, std::uint32_t dim, std::span<const float> values);
void write_manifest(const std::filesystem::path& path, const std::vector<std::string>& image_ids);

/// Stage-1 aggregation for one training document.
struct DocSimilarity {
  std::string training_doc_id;
  std::optional<double> max_sim;  // absent iff the doc has no images
  std::optional<std::string> argmax_eval_image_id;
};

/// For each training doc, the max cosine similarity between any of its images
/// and any eval-store image. Output order is input order for every thread
/// count. Unresolvable image ids throw Error{schema}.
std::vector<DocSimilarity> doc_max_similarity(std::span<const Document> training_docs,
                                              const EmbeddingStore& eval_store,
                                              const EmbeddingStore& train_store,
                                              const KernelOptions& options = {});

/// Ids whose max_sim >= tau_i. tau_i must lie in (0, 1].
std::set<std::string> stage1_candidates(std::span<const DocSimilarity> sims, double tau_i);

}  // namespace decon
