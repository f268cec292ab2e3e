#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace decon {

/// Case-folded text with markers stripped and whitespace collapsed to single
/// spaces. word_count is the number of word tokens (see word_tokens).
struct NormalizedText {
  std::string text;
  std::size_t word_count = 0;

  bool operator==(const NormalizedText&) const = default;
};

/// Image tags and role markers removed by default.
std::vector<std::string> default_strip_list();

class TextNormalizer {
 public:
  TextNormalizer();
  explicit TextNormalizer(const std::vector<std::string>& strip_list);

  /// Unicode simple case folding, marker removal, whitespace collapse and
  /// trim. Idempotent: normalize(normalize(x).text) == normalize(x).
  NormalizedText normalize(std::string_view raw) const;

  /// Folded markers, longest first.
  const std::vector<std::string>& markers() const { return markers_; }

 private:
  std::vector<std::string> markers_;
};

/// Unicode simple case folding of a UTF-8 string. Ill-formed sequences are
/// replaced by U+FFFD.
std::string fold_case(std::string_view utf8);

/// Splits normalized text on spaces, trims leading and trailing ASCII
/// punctuation from each token and drops tokens that become empty.
std::vector<std::string_view> word_tokens(std::string_view normalized);

/// Question and answer joined by one space; empty sides are omitted.
NormalizedText qa_concat(const NormalizedText& question, const NormalizedText& answer);

/// n = 3 below short_threshold words, n_default otherwise.
int select_ngram_size(std::size_t word_count, int n_default = 4, int short_threshold = 10);

/// Set of contiguous word n-grams. Each gram is its n tokens joined by single
/// spaces (tokens never contain spaces, so the encoding is injective).
/// grams is sorted and unique.
struct NgramSet {
  int n = 4;
  std::vector<std::string> grams;
  std::size_t source_word_count = 0;

  std::size_t size() const { return grams.size(); }
  bool empty() const { return grams.empty(); }
};

/// Eval-side gram set: n chosen by select_ngram_size.
NgramSet ngram_set(const NormalizedText& text, int n_default = 4, int short_threshold = 10);

/// Gram set at a fixed n, used to build the training side at the eval side's n.
NgramSet ngram_set_at(const NormalizedText& text, int n);

/// Directional containment |N(e) ∩ N(t)| / |N(e)|. Returns 0 when the eval
/// side has no grams. Throws Error{contract} when the two sides differ in n.
double containment(const NgramSet& eval_grams, const NgramSet& train_grams);

/// An eval text with no n-grams cannot pass the text gate.
inline bool text_ungateable(const NgramSet& eval_grams) { return eval_grams.empty(); }

}  // namespace decon
