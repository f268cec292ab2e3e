#include "decon/run.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "decon/calibrate.hpp"
#include "decon/digest.hpp"
#include "decon/error.hpp"
#include "decon/report.hpp"

namespace decon {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::size_t kExcerptBytes = 400;

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Cuts at a UTF-8 boundary.
std::string excerpt(const std::string& s) {
  if (s.size() <= kExcerptBytes) return s;
  std::size_t cut = kExcerptBytes;
  while (cut > 0 && (static_cast<unsigned char>(s[cut]) & 0xC0) == 0x80) --cut;
  return s.substr(0, cut) + "...";
}

json doc_detail(const Document& d) {
  return {{"question", excerpt(d.question)}, {"answer", excerpt(d.answer)}, {"image_ids", d.image_ids}};
}

class DocLookup {
 public:
  DocLookup(const Corpus& training, const Corpus& evals) {
    for (const auto& d : training.documents) train_.emplace(d.id, &d);
    for (const auto& d : evals.documents) eval_.emplace(d.id, &d);
  }

  // Match record plus text excerpts and image ids for reviewers.
  json detailed(const ContaminationMatch& m) const {
    json obj = to_json(m);
    if (auto it = train_.find(m.training_doc_id); it != train_.end()) obj["train"] = doc_detail(*it->second);
    if (auto it = eval_.find(m.eval_doc_id); it != eval_.end()) obj["eval"] = doc_detail(*it->second);
    return obj;
  }

 private:
  std::unordered_map<std::string_view, const Document*> train_;
  std::unordered_map<std::string_view, const Document*> eval_;
};

std::string jsonl(const std::vector<json>& rows) {
  std::string out;
  for (const auto& r : rows) {
    out += r.dump();
    out += '\n';
  }
  return out;
}

}  // namespace

void write_text_file(const fs::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(ErrorKind::io, "write failed: " + path.string());
}

fs::path default_manifest_path(const fs::path& vectors) {
  fs::path p = vectors;
  p.replace_extension(".manifest.jsonl");
  return p;
}

json to_json(const RunManifest& m) {
  return {{"run_id", m.run_id},
          {"config_hash", m.config_hash},
          {"inputs", m.inputs},
          {"counts",
           {{"training_docs", m.training_docs},
            {"eval_docs", m.eval_docs},
            {"removed", m.removed},
            {"skipped_training_lines", m.skipped_training_lines},
            {"skipped_eval_lines", m.skipped_eval_lines}}},
          {"benchmarks", m.benchmarks},
          {"removal_digest", m.removal_digest},
          {"report_digest", m.report_digest},
          {"started", m.started},
          {"finished", m.finished},
          {"engine_version", m.engine_version}};
}

RunManifest manifest_from_json(const json& obj) {
  try {
    RunManifest m;
    m.run_id = obj.at("run_id").get<std::string>();
    m.config_hash = obj.at("config_hash").get<std::string>();
    m.inputs = obj.at("inputs").get<std::map<std::string, std::string>>();
    const auto& c = obj.at("counts");
    m.training_docs = c.at("training_docs").get<std::size_t>();
    m.eval_docs = c.at("eval_docs").get<std::size_t>();
    m.removed = c.at("removed").get<std::size_t>();
    m.skipped_training_lines = c.value("skipped_training_lines", std::size_t{0});
    m.skipped_eval_lines = c.value("skipped_eval_lines", std::size_t{0});
    m.benchmarks = obj.at("benchmarks").get<std::vector<std::string>>();
    m.removal_digest = obj.at("removal_digest").get<std::string>();
    m.report_digest = obj.value("report_digest", std::string{});
    m.started = obj.value("started", std::string{});
    m.finished = obj.value("finished", std::string{});
    m.engine_version = obj.value("engine_version", std::string{});
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::schema, std::string("malformed run manifest: ") + e.what());
  }
}

RunManifest load_run_manifest(const fs::path& run_dir) {
  const fs::path p = run_dir / run_files::manifest;
  std::ifstream in(p);
  if (!in) throw Error(ErrorKind::io, "cannot open " + p.string());
  try {
    return manifest_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::schema, p.string() + ": invalid JSON: " + e.what());
  }
}

std::vector<ContaminationMatch> load_matches(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  std::vector<ContaminationMatch> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(match_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::schema, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::string write_report_files(const fs::path& dir, const std::vector<ContaminationMatch>& matches,
                               std::size_t total, std::size_t evaluations) {
  const VolumeReport report = build_report(matches, total, kDefaultTailCutoff, kDefaultTopRows, evaluations);
  const std::string body = to_json(report).dump(2) + "\n";
  write_text_file(dir / run_files::report_json, body);
  write_text_file(dir / run_files::report_tsv, render_tsv(report));
  write_text_file(dir / run_files::report_txt, render_table(report));
  return sha256_hex(body);
}

RunManifest execute_run(const RunInputs& in) {
  RunManifest manifest;
  manifest.started = utc_now();

  const EngineConfig config = in.config ? load_config(*in.config) : EngineConfig::defaults();
  const LoadOptions load_opts{in.strict};
  const Corpus training = load_corpus(in.train, Split::training, load_opts);
  const Corpus evals = load_corpus(in.eval, Split::eval, load_opts);
  const fs::path train_manifest = in.train_manifest.empty() ? default_manifest_path(in.train_emb) : in.train_manifest;
  const fs::path eval_manifest = in.eval_manifest.empty() ? default_manifest_path(in.eval_emb) : in.eval_manifest;
  const EmbeddingStore train_store = EmbeddingStore::load(in.train_emb, train_manifest);
  const EmbeddingStore eval_store = EmbeddingStore::load(in.eval_emb, eval_manifest);

  CascadeOptions opts;
  opts.threads = in.threads;
  opts.shard_size = in.shard_size;
  opts.kernel.threads = in.threads;
  opts.progress = in.progress;
  const CascadeEngine engine(training, evals, train_store, eval_store, config, opts);
  const CascadeResult result = engine.run();

  std::error_code ec;
  fs::create_directories(in.out, ec);
  if (ec) throw Error(ErrorKind::io, "cannot create " + in.out.string() + ": " + ec.message());

  const DocLookup lookup(training, evals);
  std::vector<json> removals, matches, audit;
  for (const auto& m : result.matches) {
    if (m.decision == Decision::remove) removals.push_back(to_json(m));
    matches.push_back(lookup.detailed(m));
  }
  for (const auto& a : result.audit) {
    json row = {{"kind", a.kind}, {"id", a.id}};
    if (!a.benchmark.empty()) row["benchmark"] = a.benchmark;
    audit.push_back(std::move(row));
  }
  write_text_file(in.out / run_files::config, to_json(config).dump(2) + "\n");
  write_text_file(in.out / run_files::removals, jsonl(removals));
  write_text_file(in.out / run_files::matches, jsonl(matches));
  write_text_file(in.out / run_files::audit, jsonl(audit));
  const std::string removed_ids = render_removal_manifest(result.removed_ids);
  write_text_file(in.out / run_files::removed_ids, removed_ids);
  manifest.report_digest = write_report_files(in.out, result.matches, std::max<std::size_t>(training.size(), 1),
                                              engine.index().benchmark_count());

  {
    const fs::path p = in.out / run_files::decontaminated;
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, "cannot write " + p.string());
    const std::unordered_set<std::string> removed(result.removed_ids.begin(), result.removed_ids.end());
    write_filtered_corpus(in.train, Split::training, removed, out);
  }

  // Per-benchmark tau_t profiles with seeded samples for human review.
  const std::vector<double> grid = in.grid.empty() ? default_grid() : in.grid;
  json sweeps = json::object();
  std::vector<json> samples;
  for (std::size_t b = 0; b < engine.index().benchmark_count(); ++b) {
    const std::string& name = engine.index().benchmark_name(b);
    SweepProfile profile = sweep_tau_t(engine, name, grid);
    if (in.sample_k > 0) attach_samples(profile, in.sample_k, in.seed);
    sweeps[name] = to_json(profile);
    for (std::size_t g = 0; g < profile.sampled_pairs.size(); ++g) {
      for (const auto& m : profile.sampled_pairs[g]) {
        json row = lookup.detailed(m);
        row["threshold"] = profile.grid[g];
        row["axis"] = to_string(profile.axis);
        samples.push_back(std::move(row));
      }
    }
  }
  write_text_file(in.out / run_files::sweeps, sweeps.dump(2) + "\n");
  write_text_file(in.out / run_files::samples, jsonl(samples));

  manifest.config_hash = config_hash(config);
  manifest.inputs = {{"train", in.train.string()},
                     {"eval", in.eval.string()},
                     {"train_emb", in.train_emb.string()},
                     {"train_manifest", train_manifest.string()},
                     {"eval_emb", in.eval_emb.string()},
                     {"eval_manifest", eval_manifest.string()},
                     {"config", in.config ? in.config->string() : std::string{}}};
  manifest.training_docs = training.size();
  manifest.eval_docs = evals.size();
  manifest.removed = result.removed_ids.size();
  manifest.skipped_training_lines = training.skipped_lines;
  manifest.skipped_eval_lines = evals.skipped_lines;
  for (std::size_t b = 0; b < engine.index().benchmark_count(); ++b) {
    manifest.benchmarks.push_back(engine.index().benchmark_name(b));
  }
  manifest.removal_digest = sha256_hex(removed_ids);
  manifest.finished = utc_now();
  manifest.run_id = manifest.started + "-" + manifest.removal_digest.substr(0, 12);
  write_text_file(in.out / run_files::manifest, to_json(manifest).dump(2) + "\n");
  return manifest;
}

}  // namespace decon
