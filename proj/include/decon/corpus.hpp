#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "json.hpp"

namespace decon {

enum class Split { training, eval };

std::string_view to_string(Split split);

/// One training or evaluation sample. Multi-turn records are flattened at
/// ingestion: question holds the user turns, answer the assistant turns.
struct Document {
  std::string id;
  Split split = Split::training;
  std::string benchmark;  // required for eval documents
  std::string question;
  std::string answer;
  std::vector<std::string> image_ids;
  nlohmann::json meta = nlohmann::json::object();
};

struct Corpus {
  std::vector<Document> documents;
  Split split = Split::training;
  std::string source_path;
  std::size_t skipped_lines = 0;

  std::size_t size() const { return documents.size(); }
  bool empty() const { return documents.empty(); }
};

struct LoadOptions {
  // Malformed lines are counted and skipped unless strict is set.
  bool strict = false;
};

/// Parses one JSONL record. Throws Error{schema} on any violation.
Document parse_document(std::string_view line, Split split);

nlohmann::json to_json(const Document& doc);

/// Loads a single .jsonl file, or every *.jsonl file of a directory in
/// file-name order. Duplicate ids and eval records without a benchmark are
/// fatal; malformed lines are skipped and counted (fatal in strict mode).
Corpus load_corpus(const std::filesystem::path& path, Split split,
                   const LoadOptions& options = {});

/// Groups eval documents by benchmark, buckets in lexicographic order,
/// documents within a bucket in corpus order.
std::map<std::string, std::vector<const Document*>> partition_by_benchmark(
    const Corpus& corpus);

/// Shard files that make up a corpus path, in load order.
std::vector<std::filesystem::path> corpus_shards(
    const std::filesystem::path& path);

/// Streams the source records of a corpus path to `out`, dropping malformed
/// lines and records whose id is in `removed`. Surviving lines are copied
/// byte-for-byte in input order. Returns the number of lines written.
std::size_t write_filtered_corpus(
    const std::filesystem::path& path, Split split,
    const std::unordered_set<std::string>& removed, std::ostream& out);

}  // namespace decon
