#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "decon/cascade.hpp"
#include "json.hpp"

namespace decon {

inline constexpr const char* kEngineVersion = "0.1.0";

/// Files of a run directory.
namespace run_files {
inline constexpr const char* manifest = "manifest.json";
inline constexpr const char* config = "config.json";
inline constexpr const char* removals = "removals.jsonl";
inline constexpr const char* removed_ids = "removed_ids.txt";
inline constexpr const char* matches = "matches.jsonl";
inline constexpr const char* audit = "audit.jsonl";
inline constexpr const char* report_json = "report.json";
inline constexpr const char* report_tsv = "report.tsv";
inline constexpr const char* report_txt = "report.txt";
inline constexpr const char* sweeps = "sweeps.json";
inline constexpr const char* samples = "flagged_samples.jsonl";
inline constexpr const char* decontaminated = "training.decontaminated.jsonl";
}  // namespace run_files

struct RunInputs {
  std::filesystem::path train;
  std::filesystem::path eval;
  std::filesystem::path train_emb;
  std::filesystem::path eval_emb;
  std::filesystem::path train_manifest;  // defaults to <train_emb stem>.manifest.jsonl
  std::filesystem::path eval_manifest;
  std::optional<std::filesystem::path> config;  // defaults when absent
  std::filesystem::path out;

  int threads = 0;
  std::size_t shard_size = 4096;
  bool strict = false;
  std::vector<double> grid;  // sweep grid; default_grid() when empty
  std::size_t sample_k = 10;
  std::uint64_t seed = 0;
  std::function<void(const Progress&)> progress;
};

/// Sibling manifest path used when none is given: a.demb -> a.manifest.jsonl.
std::filesystem::path default_manifest_path(const std::filesystem::path& vectors);

struct RunManifest {
  std::string run_id;
  std::string config_hash;
  std::map<std::string, std::string> inputs;
  std::size_t training_docs = 0;
  std::size_t eval_docs = 0;
  std::size_t removed = 0;
  std::size_t skipped_training_lines = 0;
  std::size_t skipped_eval_lines = 0;
  std::vector<std::string> benchmarks;
  std::string removal_digest;  // sha256 of removed_ids.txt
  std::string report_digest;   // sha256 of report.json
  std::string started;
  std::string finished;
  std::string engine_version = kEngineVersion;
};

nlohmann::json to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const nlohmann::json& obj);
RunManifest load_run_manifest(const std::filesystem::path& run_dir);

/// Loads inputs, runs the cascade and the per-benchmark tau_t sweeps, and
/// writes every run artifact into inputs.out. Everything except the
/// timestamps and run id in manifest.json is a pure function of the inputs.
RunManifest execute_run(const RunInputs& inputs);

/// Writes report.json/.tsv/.txt for a match log. Returns the report.json digest.
std::string write_report_files(const std::filesystem::path& dir,
                               const std::vector<ContaminationMatch>& matches, std::size_t total,
                               std::size_t evaluations = 0);

std::vector<ContaminationMatch> load_matches(const std::filesystem::path& path);

/// Writes `content` to `path` (truncating) or throws Error{io}.
void write_text_file(const std::filesystem::path& path, std::string_view content);

}  // namespace decon
