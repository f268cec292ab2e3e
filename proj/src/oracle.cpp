#include <map>
#include <unordered_map>

#include "decon/cascade.hpp"
#include "decon/error.hpp"

namespace decon {

namespace {

using Window = std::vector<std::string>;

std::vector<Window> all_windows(const std::vector<std::string>& tokens, std::size_t n) {
  std::vector<Window> out;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    out.emplace_back(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                     tokens.begin() + static_cast<std::ptrdiff_t>(i + n));
  }
  return out;
}

bool contains(const std::vector<Window>& windows, const Window& w) {
  for (const auto& x : windows) {
    if (x == w) return true;
  }
  return false;
}

// Distinct eval windows found among the training windows, over distinct eval windows.
double naive_containment(const std::vector<std::string>& eval_tokens,
                         const std::vector<std::string>& train_tokens, std::size_t n) {
  std::vector<Window> distinct;
  for (auto& w : all_windows(eval_tokens, n)) {
    if (!contains(distinct, w)) distinct.push_back(std::move(w));
  }
  if (distinct.empty()) return 0.0;
  const auto train_windows = all_windows(train_tokens, n);
  std::size_t shared = 0;
  for (const auto& w : distinct) {
    if (contains(train_windows, w)) ++shared;
  }
  return static_cast<double>(shared) / static_cast<double>(distinct.size());
}

std::vector<std::string> tokens_of(const TextNormalizer& norm, const Document& doc) {
  auto text = qa_concat(norm.normalize(doc.question), norm.normalize(doc.answer));
  std::vector<std::string> out;
  for (auto t : word_tokens(text.text)) out.emplace_back(t);
  return out;
}

double plain_cosine(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += static_cast<double>(a[k]) * static_cast<double>(b[k]);
  return s;
}

}  // namespace

std::set<std::string> brute_force_oracle(const Corpus& training, const Corpus& evals,
                                         const EmbeddingStore& train_store,
                                         const EmbeddingStore& eval_store,
                                         const EngineConfig& config) {
  const TextNormalizer norm(config.strip_list);

  // Image rows of every eval doc per benchmark; sim_img(t, e) is taken
  // against the whole benchmark group of e.
  std::map<std::string, std::vector<std::uint32_t>> bench_rows;
  for (const auto& e : evals.documents) {
    auto& rows = bench_rows[e.benchmark];
    for (const auto& id : e.image_ids) {
      auto row = eval_store.find(id);
      if (!row) throw Error(ErrorKind::schema, "eval doc " + e.id + ": unknown image_id " + id);
      rows.push_back(*row);
    }
  }
  std::vector<std::vector<std::string>> eval_tokens;
  for (const auto& e : evals.documents) eval_tokens.push_back(tokens_of(norm, e));

  std::set<std::string> removed;
  for (const auto& t : training.documents) {
    std::vector<std::uint32_t> t_rows;
    for (const auto& id : t.image_ids) {
      auto row = train_store.find(id);
      if (!row) throw Error(ErrorKind::schema, "training doc " + t.id + ": unknown image_id " + id);
      t_rows.push_back(*row);
    }
    const auto t_tokens = tokens_of(norm, t);
    std::unordered_map<std::string, std::optional<double>> sim_memo;

    for (std::size_t ei = 0; ei < evals.size(); ++ei) {
      const auto& e = evals.documents[ei];
      const auto policy = resolve_policy(e.benchmark, config);

      auto [it, fresh] = sim_memo.try_emplace(e.benchmark);
      if (fresh) {
        for (auto tr : t_rows) {
          for (auto er : bench_rows[e.benchmark]) {
            double s = plain_cosine(train_store.row(tr), eval_store.row(er));
            if (!it->second || s > *it->second) it->second = s;
          }
        }
      }
      const auto& sim = it->second;
      if (!sim || *sim < policy.tau_i) continue;

      bool contaminated = policy.mode == PolicyMode::image_only;
      if (!contaminated) {
        const auto n = static_cast<std::size_t>(
            select_ngram_size(eval_tokens[ei].size(), policy.n_default, policy.short_threshold));
        contaminated = naive_containment(eval_tokens[ei], t_tokens, n) >= policy.tau_t;
      }
      if (contaminated) removed.insert(t.id);
    }
  }
  return removed;
}

}  // namespace decon
