#include "decon/cascade.hpp"

#include <algorithm>
#include <tuple>
#include <unordered_set>

#include <omp.h>

#include "decon/error.hpp"

namespace decon {

using nlohmann::json;

std::string_view to_string(Decision decision) {
  return decision == Decision::remove ? "remove" : "keep";
}

json to_json(const ContaminationMatch& m) {
  return {{"id", m.training_doc_id},
          {"eval_id", m.eval_doc_id},
          {"benchmark", m.benchmark},
          {"sim_img", m.sim_img},
          {"c_text", m.c_text ? json(*m.c_text) : json(nullptr)},
          {"decision", to_string(m.decision)},
          {"stage", m.stage_reached},
          {"train_image_id", m.train_image_id},
          {"eval_image_id", m.eval_image_id}};
}

ContaminationMatch match_from_json(const json& obj) {
  try {
    ContaminationMatch m;
    m.training_doc_id = obj.at("id").get<std::string>();
    m.eval_doc_id = obj.at("eval_id").get<std::string>();
    m.benchmark = obj.at("benchmark").get<std::string>();
    m.sim_img = obj.at("sim_img").get<double>();
    if (auto it = obj.find("c_text"); it != obj.end() && !it->is_null()) m.c_text = it->get<double>();
    auto decision = obj.value("decision", std::string("remove"));
    if (decision != "remove" && decision != "keep") {
      throw Error(ErrorKind::schema, "unknown decision \"" + decision + "\"");
    }
    m.decision = decision == "remove" ? Decision::remove : Decision::keep;
    m.stage_reached = obj.at("stage").get<int>();
    m.train_image_id = obj.value("train_image_id", std::string());
    m.eval_image_id = obj.value("eval_image_id", std::string());
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::schema, std::string("malformed match record: ") + e.what());
  }
}

CascadeEngine::CascadeEngine(const Corpus& training, const Corpus& evals,
                             const EmbeddingStore& train_store, const EmbeddingStore& eval_store,
                             EngineConfig config, CascadeOptions options)
    : training_(training),
      evals_(evals),
      train_store_(train_store),
      eval_store_(eval_store),
      config_(std::move(config)),
      options_(std::move(options)),
      normalizer_(config_.strip_list) {
  if (training_.split != Split::training || evals_.split != Split::eval) {
    throw Error(ErrorKind::contract, "cascade needs a training corpus and an eval corpus");
  }
  for (const auto& [name, policy] : config_.policies) validate_policy(policy);
  resolve_policy(kDefaultPolicyKey, config_);

  std::unordered_set<std::string_view> eval_ids;
  eval_ids.reserve(evals_.size());
  for (const auto& doc : evals_.documents) eval_ids.insert(doc.id);
  for (const auto& doc : training_.documents) {
    if (eval_ids.count(doc.id)) {
      throw Error(ErrorKind::schema, "id " + doc.id + " appears in both training and eval corpora");
    }
  }
  if (train_store_.count() > 0 && eval_store_.count() > 0 && train_store_.dim() != eval_store_.dim()) {
    throw Error(ErrorKind::format, "training and eval embeddings differ in dim");
  }
  if (options_.kernel.threads == 0) options_.kernel.threads = options_.threads;
  index_ = std::make_unique<EvalIndex>(evals_, eval_store_, config_, normalizer_);
  compute_stage1();
}

CascadeEngine::~CascadeEngine() = default;

void CascadeEngine::compute_stage1() {
  const std::size_t n_docs = training_.size();
  const std::size_t n_bench = index_->benchmark_count();
  stage1_.assign(n_docs * n_bench, Stage1Cell{});
  const std::size_t shard = std::max<std::size_t>(1, options_.shard_size);
  const auto groups = index_->column_groups();

  std::vector<std::uint32_t> query_rows;
  std::vector<std::size_t> doc_offsets;
  GroupMaxTable table;
  for (std::size_t d0 = 0; d0 < n_docs; d0 += shard) {
    const std::size_t d1 = std::min(n_docs, d0 + shard);
    query_rows.clear();
    doc_offsets.assign(1, 0);
    for (std::size_t d = d0; d < d1; ++d) {
      const auto& doc = training_.documents[d];
      for (const auto& image_id : doc.image_ids) {
        auto row = train_store_.find(image_id);
        if (!row) throw Error(ErrorKind::schema, "training doc " + doc.id + ": unknown image_id " + image_id);
        query_rows.push_back(*row);
      }
      doc_offsets.push_back(query_rows.size());
    }
    group_max_parallel(train_store_.view(), query_rows, eval_store_.view(), groups, table,
                       options_.kernel);
    for (std::size_t d = d0; d < d1; ++d) {
      for (std::size_t q = doc_offsets[d - d0]; q < doc_offsets[d - d0 + 1]; ++q) {
        for (std::size_t b = 0; b < n_bench; ++b) {
          if (table.arg(q, b) == kNoColumn) continue;
          auto& cell = stage1_[d * n_bench + b];
          if (!cell.present() || table.at(q, b) > cell.sim) {
            cell.sim = table.at(q, b);
            cell.train_row = query_rows[q];
            cell.eval_column = table.arg(q, b);
          }
        }
      }
    }
    if (options_.progress) options_.progress({"stage1", d1, n_docs});
  }
}

NormalizedText CascadeEngine::training_text(std::size_t doc) const {
  const auto& d = training_.documents[doc];
  return qa_concat(normalizer_.normalize(d.question), normalizer_.normalize(d.answer));
}

std::vector<PairScore> CascadeEngine::score_text(std::size_t doc, std::span<const char> benchmark_mask,
                                                 ContainmentScorer& scorer) const {
  std::uint64_t pairs = 0;
  for (std::size_t b = 0; b < index_->benchmark_count(); ++b) {
    if (benchmark_mask[b]) pairs += index_->docs_of(b).size();
  }
  containment_pairs_.fetch_add(pairs, std::memory_order_relaxed);
  return scorer.score(training_text(doc), benchmark_mask);
}

ContaminationMatch CascadeEngine::make_match(std::size_t doc, std::uint32_t eval_doc,
                                             std::optional<double> c_text, Decision decision,
                                             int stage) const {
  const auto b = index_->eval_doc(eval_doc).benchmark;
  const auto& cell = stage1(doc, b);
  ContaminationMatch m;
  m.training_doc_id = training_.documents[doc].id;
  m.eval_doc_id = evals_.documents[eval_doc].id;
  m.benchmark = index_->benchmark_name(b);
  m.sim_img = cell.sim;
  m.c_text = c_text;
  m.decision = decision;
  m.stage_reached = stage;
  if (cell.present()) {
    m.train_image_id = train_store_.image_id(cell.train_row);
    m.eval_image_id = eval_store_.image_id(index_->column_row(cell.eval_column));
  }
  return m;
}

namespace {

struct DocOutcome {
  bool removed = false;
  bool survived_stage1 = false;
  bool no_images = false;
  // (benchmark, eval doc, stage) sort key alongside each match
  std::vector<std::tuple<std::uint32_t, std::uint32_t, int, ContaminationMatch>> matches;
};

DocOutcome evaluate_doc(const CascadeEngine& engine, std::size_t d, ContainmentScorer& scorer) {
  DocOutcome out;
  if (!engine.has_images(d)) {
    out.no_images = true;
    return out;
  }
  const auto& index = engine.index();
  const auto& config = engine.config();
  const std::size_t n_bench = index.benchmark_count();

  auto add = [&](std::uint32_t eval_doc, std::optional<double> c, Decision decision, int stage) {
    out.matches.emplace_back(index.eval_doc(eval_doc).benchmark, eval_doc, stage,
                             engine.make_match(d, eval_doc, c, decision, stage));
  };

  std::vector<char> joint_mask(n_bench, 0);
  bool any_joint = false;
  for (std::size_t b = 0; b < n_bench; ++b) {
    const auto& cell = engine.stage1(d, b);
    if (!cell.present()) continue;
    const auto& policy = index.policy(b);
    const auto owner = index.column_owner(cell.eval_column);
    if (cell.sim >= policy.tau_i) {
      out.survived_stage1 = true;
      if (policy.mode == PolicyMode::image_only) {
        add(owner, std::nullopt, Decision::remove, 1);
        out.removed = true;
      } else {
        joint_mask[b] = 1;
        any_joint = true;
      }
    } else if (cell.sim >= policy.tau_i - config.report_sim_margin) {
      add(owner, std::nullopt, Decision::keep, 1);
    }
  }
  if (!any_joint) return out;

  const auto scores = engine.score_text(d, joint_mask, scorer);
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::vector<std::size_t> first_hit(n_bench, kNone), best(n_bench, kNone);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto b = index.eval_doc(scores[i].eval_doc).benchmark;
    if (first_hit[b] == kNone && scores[i].c_text >= index.policy(b).tau_t) first_hit[b] = i;
    if (best[b] == kNone || scores[i].c_text > scores[best[b]].c_text) best[b] = i;
  }
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto b = index.eval_doc(scores[i].eval_doc).benchmark;
    const bool removes = first_hit[b] == i;
    if (removes || best[b] == i || scores[i].c_text >= config.report_c_floor) {
      add(scores[i].eval_doc, scores[i].c_text, removes ? Decision::remove : Decision::keep, 2);
    }
    out.removed = out.removed || removes;
  }
  // Gating benchmarks where no eval doc shares a gram: log the image-nearest pair at 0.
  for (std::size_t b = 0; b < n_bench; ++b) {
    if (joint_mask[b] && best[b] == kNone) {
      add(index.column_owner(engine.stage1(d, b).eval_column), 0.0, Decision::keep, 2);
    }
  }
  std::sort(out.matches.begin(), out.matches.end(), [](const auto& x, const auto& y) {
    return std::tie(std::get<0>(x), std::get<1>(x), std::get<2>(x)) <
           std::tie(std::get<0>(y), std::get<1>(y), std::get<2>(y));
  });
  return out;
}

}  // namespace

CascadeResult CascadeEngine::run() const {
  CascadeResult result;
  const std::size_t n_docs = training_.size();
  result.stats.training_docs = n_docs;
  result.stats.eval_docs = evals_.size();
  const std::uint64_t pairs_before = containment_pairs();

  for (std::size_t e = 0; e < evals_.size(); ++e) {
    if (index_->eval_doc(e).gram_count == 0) {
      result.audit.push_back({"text_ungateable", evals_.documents[e].id, evals_.documents[e].benchmark});
    }
  }

  const std::size_t shard = std::max<std::size_t>(1, options_.shard_size);
  std::vector<DocOutcome> outcomes;
  for (std::size_t d0 = 0; d0 < n_docs; d0 += shard) {
    const std::size_t d1 = std::min(n_docs, d0 + shard);
    outcomes.assign(d1 - d0, DocOutcome{});
#pragma omp parallel num_threads(effective_threads(options_.threads))
    {
      ContainmentScorer scorer(*index_);
#pragma omp for schedule(dynamic, 16)
      for (std::int64_t d = static_cast<std::int64_t>(d0); d < static_cast<std::int64_t>(d1); ++d) {
        outcomes[static_cast<std::size_t>(d) - d0] = evaluate_doc(*this, static_cast<std::size_t>(d), scorer);
      }
    }
    // Merge in training order so output is independent of scheduling.
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
      auto& o = outcomes[i];
      const auto& doc = training_.documents[d0 + i];
      if (o.no_images) result.audit.push_back({"no_images", doc.id, ""});
      if (o.survived_stage1) ++result.stats.stage1_survivors;
      if (o.removed) result.removed_ids.push_back(doc.id);
      for (auto& entry : o.matches) result.matches.push_back(std::move(std::get<3>(entry)));
    }
    if (options_.progress) options_.progress({"stage2", d1, n_docs});
  }
  result.stats.removed = result.removed_ids.size();
  result.stats.containment_pairs = containment_pairs() - pairs_before;
  return result;
}

CascadeResult run_cascade(const Corpus& training, const Corpus& evals,
                          const EmbeddingStore& train_store, const EmbeddingStore& eval_store,
                          const EngineConfig& config, const CascadeOptions& options) {
  CascadeEngine engine(training, evals, train_store, eval_store, config, options);
  return engine.run();
}

}  // namespace decon
