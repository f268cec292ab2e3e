#include "decon/eval_index.hpp"

#include <algorithm>
#include <map>

#include "decon/error.hpp"

namespace decon {

namespace {

std::uint64_t mix(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

// Appends the keys of every full window of `ids` at size n, skipping windows
// that contain token id 0.
template <typename Fn>
void for_each_window(std::span<const std::uint32_t> ids, int n, Fn&& fn) {
  const auto width = static_cast<std::size_t>(n);
  if (ids.size() < width) return;
  std::size_t last_oov = 0;
  bool seen_oov = false;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] == 0) {
      last_oov = i;
      seen_oov = true;
    }
    if (i + 1 < width) continue;
    const std::size_t start = i + 1 - width;
    if (seen_oov && last_oov >= start) continue;
    GramKey key{};
    key[0] = static_cast<std::uint32_t>(n);
    for (std::size_t k = 0; k < width; ++k) key[k + 1] = ids[start + k];
    fn(key);
  }
}

}  // namespace

std::size_t GramKeyHash::operator()(const GramKey& key) const noexcept {
  std::uint64_t h = 0x9e3779b97f4a7c15ULL;
  for (std::uint32_t v : key) h = mix(h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6)));
  return static_cast<std::size_t>(h);
}

EvalIndex::EvalIndex(const Corpus& evals, const EmbeddingStore& eval_store,
                     const EngineConfig& config, const TextNormalizer& normalizer) {
  std::map<std::string, std::uint32_t> bench_ids;
  for (const auto& doc : evals.documents) bench_ids.emplace(doc.benchmark, 0);
  for (auto& [name, id] : bench_ids) {
    id = static_cast<std::uint32_t>(benchmarks_.size());
    benchmarks_.push_back(name);
    policies_.push_back(resolve_policy(name, config));
  }
  docs_by_benchmark_.resize(benchmarks_.size());
  sizes_by_benchmark_.resize(benchmarks_.size());

  // Text side: intern eval tokens, collect (key, doc) pairs.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> gram_doc;
  std::vector<std::uint32_t> ids;
  docs_.reserve(evals.size());
  for (std::size_t e = 0; e < evals.size(); ++e) {
    const auto& doc = evals.documents[e];
    EvalDocInfo info;
    info.benchmark = bench_ids.at(doc.benchmark);
    const auto& policy = policies_[info.benchmark];
    auto text = qa_concat(normalizer.normalize(doc.question), normalizer.normalize(doc.answer));
    info.n = select_ngram_size(text.word_count, policy.n_default, policy.short_threshold);

    ids.clear();
    for (auto token : word_tokens(text.text)) {
      auto [it, inserted] =
          vocab_.emplace(std::string(token), static_cast<std::uint32_t>(vocab_.size() + 1));
      ids.push_back(it->second);
    }
    std::vector<std::uint32_t> doc_grams;
    for_each_window(ids, info.n, [&](const GramKey& key) {
      auto [it, inserted] =
          gram_ids_.emplace(key, static_cast<std::uint32_t>(gram_ids_.size()));
      doc_grams.push_back(it->second);
    });
    std::sort(doc_grams.begin(), doc_grams.end());
    doc_grams.erase(std::unique(doc_grams.begin(), doc_grams.end()), doc_grams.end());
    info.gram_count = static_cast<std::uint32_t>(doc_grams.size());
    for (auto g : doc_grams) gram_doc.emplace_back(g, static_cast<std::uint32_t>(e));

    auto& sizes = sizes_by_benchmark_[info.benchmark];
    if (std::find(sizes.begin(), sizes.end(), info.n) == sizes.end()) {
      sizes.push_back(info.n);
      std::sort(sizes.begin(), sizes.end());
    }
    docs_by_benchmark_[info.benchmark].push_back(static_cast<std::uint32_t>(e));
    docs_.push_back(info);
  }

  std::sort(gram_doc.begin(), gram_doc.end());
  posting_offsets_.assign(gram_ids_.size() + 1, 0);
  posting_docs_.reserve(gram_doc.size());
  for (const auto& [g, e] : gram_doc) {
    ++posting_offsets_[g + 1];
    posting_docs_.push_back(e);
  }
  for (std::size_t g = 0; g < gram_ids_.size(); ++g) posting_offsets_[g + 1] += posting_offsets_[g];

  // Image side: per benchmark, the distinct eval image rows in first-seen order.
  column_offsets_.push_back(0);
  for (std::size_t b = 0; b < benchmarks_.size(); ++b) {
    std::unordered_map<std::uint32_t, std::uint32_t> seen;
    for (auto e : docs_by_benchmark_[b]) {
      const auto& doc = evals.documents[e];
      for (const auto& image_id : doc.image_ids) {
        auto row = eval_store.find(image_id);
        if (!row) throw Error(ErrorKind::schema, "eval doc " + doc.id + ": unknown image_id " + image_id);
        if (seen.emplace(*row, e).second) {
          columns_.push_back(*row);
          column_owner_.push_back(e);
        }
      }
    }
    column_offsets_.push_back(columns_.size());
  }
}

std::optional<std::uint32_t> EvalIndex::find_benchmark(std::string_view name) const {
  auto it = std::lower_bound(benchmarks_.begin(), benchmarks_.end(), name);
  if (it == benchmarks_.end() || *it != name) return std::nullopt;
  return static_cast<std::uint32_t>(it - benchmarks_.begin());
}

std::uint32_t EvalIndex::token_id(std::string_view token) const {
  auto it = vocab_.find(std::string(token));
  return it == vocab_.end() ? 0 : it->second;
}

std::span<const std::uint32_t> EvalIndex::postings(const GramKey& key) const {
  auto it = gram_ids_.find(key);
  if (it == gram_ids_.end()) return {};
  const auto g = it->second;
  return {posting_docs_.data() + posting_offsets_[g], posting_offsets_[g + 1] - posting_offsets_[g]};
}

ContainmentScorer::ContainmentScorer(const EvalIndex& index)
    : index_(index), counts_(index.eval_count(), 0) {}

std::vector<PairScore> ContainmentScorer::score(const NormalizedText& training_text,
                                                std::span<const char> benchmark_mask) {
  std::vector<int> sizes;
  for (std::size_t b = 0; b < index_.benchmark_count(); ++b) {
    if (!benchmark_mask[b]) continue;
    for (int n : index_.ngram_sizes(b)) {
      if (std::find(sizes.begin(), sizes.end(), n) == sizes.end()) sizes.push_back(n);
    }
  }

  std::vector<std::uint32_t> ids;
  for (auto token : word_tokens(training_text.text)) ids.push_back(index_.token_id(token));

  touched_.clear();
  for (int n : sizes) {
    // Distinct training grams at this n, so each shared gram counts once.
    std::vector<GramKey> keys;
    for_each_window(ids, n, [&](const GramKey& key) { keys.push_back(key); });
    std::sort(keys.begin(), keys.end());
    keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
    for (const auto& key : keys) {
      for (auto e : index_.postings(key)) {
        if (!benchmark_mask[index_.eval_doc(e).benchmark]) continue;
        if (counts_[e]++ == 0) touched_.push_back(e);
      }
    }
  }

  std::sort(touched_.begin(), touched_.end());
  std::vector<PairScore> out;
  out.reserve(touched_.size());
  for (auto e : touched_) {
    const auto total = index_.eval_doc(e).gram_count;
    out.push_back({e, counts_[e], static_cast<double>(counts_[e]) / static_cast<double>(total)});
    counts_[e] = 0;
  }
  return out;
}

}  // namespace decon
