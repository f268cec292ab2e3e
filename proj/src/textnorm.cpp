#include "decon/textnorm.hpp"

#include <algorithm>
#include <cstdint>

#include <unicode/uchar.h>
#include <unicode/utf8.h>

#include "decon/error.hpp"

namespace decon {

namespace {

template <typename Fn>
void for_each_code_point(std::string_view s, Fn&& fn) {
  const auto* bytes = reinterpret_cast<const std::uint8_t*>(s.data());
  const auto length = static_cast<std::int32_t>(s.size());
  std::int32_t i = 0;
  while (i < length) {
    UChar32 c;
    U8_NEXT(bytes, i, length, c);
    fn(c < 0 ? 0xFFFD : c);
  }
}

void append_utf8(std::string& out, UChar32 c) {
  std::uint8_t buf[U8_MAX_LENGTH];
  std::int32_t n = 0;
  U8_APPEND_UNSAFE(buf, n, c);
  out.append(reinterpret_cast<const char*>(buf), static_cast<std::size_t>(n));
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending = false;
  for_each_code_point(s, [&](UChar32 c) {
    if (u_isUWhiteSpace(c)) {
      pending = true;
      return;
    }
    if (pending && !out.empty()) out += ' ';
    pending = false;
    append_utf8(out, c);
  });
  return out;
}

// Replaces every marker occurrence with a space so neighbouring words stay apart.
bool strip_markers(std::string& s, const std::vector<std::string>& markers) {
  bool changed = false;
  for (const auto& marker : markers) {
    std::size_t pos = 0;
    while ((pos = s.find(marker, pos)) != std::string::npos) {
      s.replace(pos, marker.size(), " ");
      changed = true;
    }
  }
  return changed;
}

bool is_ascii_punct(char c) {
  return (c >= '!' && c <= '/') || (c >= ':' && c <= '@') || (c >= '[' && c <= '`') ||
         (c >= '{' && c <= '~');
}

std::vector<std::string> window_grams(const NormalizedText& text, int n) {
  auto tokens = word_tokens(text.text);
  std::vector<std::string> grams;
  if (n <= 0 || tokens.size() < static_cast<std::size_t>(n)) return grams;
  grams.reserve(tokens.size() - static_cast<std::size_t>(n) + 1);
  for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= tokens.size(); ++i) {
    std::string gram(tokens[i]);
    for (int k = 1; k < n; ++k) {
      gram += ' ';
      gram += tokens[i + static_cast<std::size_t>(k)];
    }
    grams.push_back(std::move(gram));
  }
  std::sort(grams.begin(), grams.end());
  grams.erase(std::unique(grams.begin(), grams.end()), grams.end());
  return grams;
}

}  // namespace

std::vector<std::string> default_strip_list() {
  return {"<image>",          "<img>",           "</img>",
          "<|image|>",        "<image_placeholder>",
          "<|im_start|>user", "<|im_start|>assistant",
          "<|im_start|>system", "<|im_start|>", "<|im_end|>",
          "<|user|>",         "<|assistant|>",   "<|system|>",
          "USER:",            "ASSISTANT:",      "SYSTEM:",
          "Human:",           "Assistant:",      "### Human:",
          "### Assistant:",   "<s>",             "</s>"};
}

std::string fold_case(std::string_view utf8) {
  std::string out;
  out.reserve(utf8.size());
  for_each_code_point(utf8, [&](UChar32 c) { append_utf8(out, u_foldCase(c, U_FOLD_CASE_DEFAULT)); });
  return out;
}

TextNormalizer::TextNormalizer() : TextNormalizer(default_strip_list()) {}

TextNormalizer::TextNormalizer(const std::vector<std::string>& strip_list) {
  for (const auto& raw : strip_list) {
    auto folded = fold_case(raw);
    if (folded.empty()) continue;
    markers_.push_back(std::move(folded));
  }
  std::sort(markers_.begin(), markers_.end(), [](const std::string& a, const std::string& b) {
    return a.size() != b.size() ? a.size() > b.size() : a < b;
  });
  markers_.erase(std::unique(markers_.begin(), markers_.end()), markers_.end());
}

NormalizedText TextNormalizer::normalize(std::string_view raw) const {
  std::string text = fold_case(raw);
  // Stripping and collapsing can each expose a new marker; iterate to a fixpoint.
  for (;;) {
    bool stripped = strip_markers(text, markers_);
    std::string collapsed = collapse_whitespace(text);
    bool changed = stripped || collapsed != text;
    text = std::move(collapsed);
    if (!changed) break;
  }
  NormalizedText out;
  out.word_count = word_tokens(text).size();
  out.text = std::move(text);
  return out;
}

std::vector<std::string_view> word_tokens(std::string_view normalized) {
  std::vector<std::string_view> tokens;
  std::size_t pos = 0;
  while (pos < normalized.size()) {
    std::size_t end = normalized.find(' ', pos);
    if (end == std::string_view::npos) end = normalized.size();
    std::string_view token = normalized.substr(pos, end - pos);
    while (!token.empty() && is_ascii_punct(token.front())) token.remove_prefix(1);
    while (!token.empty() && is_ascii_punct(token.back())) token.remove_suffix(1);
    if (!token.empty()) tokens.push_back(token);
    pos = end + 1;
  }
  return tokens;
}

NormalizedText qa_concat(const NormalizedText& question, const NormalizedText& answer) {
  NormalizedText out;
  if (question.text.empty()) {
    out.text = answer.text;
  } else if (answer.text.empty()) {
    out.text = question.text;
  } else {
    out.text = question.text + ' ' + answer.text;
  }
  out.word_count = question.word_count + answer.word_count;
  return out;
}

int select_ngram_size(std::size_t word_count, int n_default, int short_threshold) {
  return word_count < static_cast<std::size_t>(short_threshold) ? 3 : n_default;
}

NgramSet ngram_set(const NormalizedText& text, int n_default, int short_threshold) {
  return ngram_set_at(text, select_ngram_size(text.word_count, n_default, short_threshold));
}

NgramSet ngram_set_at(const NormalizedText& text, int n) {
  NgramSet out;
  out.n = n;
  out.source_word_count = text.word_count;
  out.grams = window_grams(text, n);
  return out;
}

double containment(const NgramSet& eval_grams, const NgramSet& train_grams) {
  if (eval_grams.n != train_grams.n) {
    throw Error(ErrorKind::contract, "containment: n mismatch (" + std::to_string(eval_grams.n) +
                                         " vs " + std::to_string(train_grams.n) + ")");
  }
  if (eval_grams.grams.empty()) return 0.0;
  std::size_t shared = 0;
  auto a = eval_grams.grams.begin();
  auto b = train_grams.grams.begin();
  while (a != eval_grams.grams.end() && b != train_grams.grams.end()) {
    if (*a < *b) {
      ++a;
    } else if (*b < *a) {
      ++b;
    } else {
      ++shared;
      ++a;
      ++b;
    }
  }
  return static_cast<double>(shared) / static_cast<double>(eval_grams.grams.size());
}

}  // namespace decon
