#include <fstream>
#include <set>

#include "decon/corpus.hpp"
#include "decon/error.hpp"
#include "decon/run.hpp"
#include "doctest.h"
#include "support/synthetic.hpp"

using namespace decon;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

RunInputs inputs_for(const fs::path& data, const fs::path& out) {
  RunInputs in;
  in.train = data / "train.jsonl";
  in.eval = data / "eval.jsonl";
  in.train_emb = data / "train.demb";
  in.eval_emb = data / "eval.demb";
  in.out = out;
  in.sample_k = 4;
  in.seed = 11;
  return in;
}

const std::vector<std::string> kDeterministic = {
    run_files::config,  run_files::removals,    run_files::removed_ids, run_files::matches,
    run_files::audit,   run_files::report_json, run_files::report_tsv,  run_files::report_txt,
    run_files::sweeps,  run_files::samples,     run_files::decontaminated};

}  // namespace

TEST_CASE("default manifest path") {
  CHECK(default_manifest_path("a/b/train.demb") == fs::path("a/b/train.manifest.jsonl"));
  CHECK(default_manifest_path("x") == fs::path("x.manifest.jsonl"));
}

TEST_CASE("a run writes every artifact and removes the planted leaks") {
  const auto dir = synth::temp_dir("run");
  auto world = synth::make_world({.train_docs = 150, .eval_docs = 40, .benchmarks = 3, .seed = 21});
  synth::write_world(world, dir / "data");
  auto m = execute_run(inputs_for(dir / "data", dir / "out"));
  for (const auto& f : kDeterministic) CHECK(fs::exists(dir / "out" / f));
  CHECK(fs::exists(dir / "out" / run_files::manifest));

  const auto removed_text = slurp(dir / "out" / run_files::removed_ids);
  std::set<std::string> removed;
  std::istringstream lines(removed_text);
  for (std::string line; std::getline(lines, line);) removed.insert(line);
  for (const auto& id : world.leak_ids) CHECK(removed.count(id) == 1);
  CHECK(m.removed == removed.size());
  CHECK(m.training_docs == world.training.size());
  CHECK(m.benchmarks.size() == 3);
  CHECK(m.removal_digest.size() == 64);
  CHECK(m.run_id.find(m.removal_digest.substr(0, 12)) != std::string::npos);

  // The decontaminated corpus is the input minus the removed docs.
  auto kept = load_corpus(dir / "out" / run_files::decontaminated, Split::training);
  CHECK(kept.size() + removed.size() == world.training.size());
  for (const auto& d : kept.documents) CHECK(removed.count(d.id) == 0);

  auto again = load_run_manifest(dir / "out");
  CHECK(to_json(again) == to_json(m));

  auto matches = load_matches(dir / "out" / run_files::matches);
  std::set<std::string> from_log;
  for (const auto& x : matches) {
    if (x.decision == Decision::remove) from_log.insert(x.training_doc_id);
  }
  CHECK(from_log == removed);
  fs::remove_all(dir);
}

TEST_CASE("artifacts are byte-identical across threads and shard sizes") {
  const auto dir = synth::temp_dir("run");
  auto world = synth::make_world({.train_docs = 200, .eval_docs = 50, .seed = 5});
  synth::write_world(world, dir / "data");
  std::vector<fs::path> outs;
  for (int threads : {1, 3}) {
    for (std::size_t shard : {5u, 4096u}) {
      auto in = inputs_for(dir / "data", dir / ("out_" + std::to_string(threads) + "_" + std::to_string(shard)));
      in.threads = threads;
      in.shard_size = shard;
      execute_run(in);
      outs.push_back(in.out);
    }
  }
  for (std::size_t i = 1; i < outs.size(); ++i) {
    for (const auto& f : kDeterministic) {
      INFO(f);
      CHECK(slurp(outs[0] / f) == slurp(outs[i] / f));
    }
    CHECK(load_run_manifest(outs[0]).removal_digest == load_run_manifest(outs[i]).removal_digest);
    CHECK(load_run_manifest(outs[0]).report_digest == load_run_manifest(outs[i]).report_digest);
  }
  fs::remove_all(dir);
}

TEST_CASE("input errors surface with their kind") {
  const auto dir = synth::temp_dir("run");
  auto in = inputs_for(dir / "missing", dir / "out");
  try {
    execute_run(in);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::io);
  }
  CHECK_THROWS_AS(load_run_manifest(dir), Error);
  fs::remove_all(dir);
}
