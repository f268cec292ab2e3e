#include "decon/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>
#include <unordered_set>

#include "decon/error.hpp"

namespace decon {

using nlohmann::json;

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::io: return "io";
    case ErrorKind::schema: return "schema";
    case ErrorKind::format: return "format";
    case ErrorKind::config: return "config";
    case ErrorKind::contract: return "contract";
  }
  return "unknown";
}

std::string_view to_string(Split split) {
  return split == Split::training ? "training" : "eval";
}

namespace {

[[noreturn]] void schema_error(const std::string& msg) {
  throw Error(ErrorKind::schema, msg);
}

std::string required_string(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) schema_error(std::string("missing field \"") + key + "\"");
  if (!it->is_string()) schema_error(std::string("field \"") + key + "\" must be a string");
  return it->get<std::string>();
}

void append_turn(std::string& dst, const std::string& text) {
  if (text.empty()) return;
  if (!dst.empty()) dst += '\n';
  dst += text;
}

// Accepts {"role"|"from": ..., "content"|"text"|"value": ...} turn objects.
void flatten_turns(const json& turns, Document& doc) {
  if (!turns.is_array()) schema_error("\"turns\" must be an array");
  for (const auto& turn : turns) {
    if (!turn.is_object()) schema_error("turn must be an object");
    std::string role;
    for (const char* key : {"role", "from"}) {
      if (auto it = turn.find(key); it != turn.end() && it->is_string()) role = it->get<std::string>();
    }
    std::string text;
    bool has_text = false;
    for (const char* key : {"content", "text", "value"}) {
      if (auto it = turn.find(key); it != turn.end() && it->is_string()) {
        text = it->get<std::string>();
        has_text = true;
      }
    }
    if (!has_text) schema_error("turn without text");
    if (role == "user" || role == "human") {
      append_turn(doc.question, text);
    } else if (role == "assistant" || role == "gpt") {
      append_turn(doc.answer, text);
    } else if (role != "system") {
      schema_error("unknown turn role \"" + role + "\"");
    }
  }
}

}  // namespace

Document parse_document(std::string_view line, Split split) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::parse_error& e) {
    schema_error(std::string("invalid JSON: ") + e.what());
  }
  if (!obj.is_object()) schema_error("record is not a JSON object");

  Document doc;
  doc.split = split;
  doc.id = required_string(obj, "id");
  if (doc.id.empty()) schema_error("empty id");

  if (auto it = obj.find("split"); it != obj.end()) {
    if (!it->is_string()) schema_error("field \"split\" must be a string");
    if (it->get<std::string>() != to_string(split)) {
      schema_error("record " + doc.id + " has split \"" + it->get<std::string>() +
                   "\" in a " + std::string(to_string(split)) + " corpus");
    }
  }

  if (auto it = obj.find("benchmark"); it != obj.end() && !it->is_null()) {
    if (!it->is_string()) schema_error("field \"benchmark\" must be a string");
    doc.benchmark = it->get<std::string>();
  }

  bool has_qa = obj.contains("question") || obj.contains("answer");
  if (auto it = obj.find("turns"); it != obj.end()) {
    if (has_qa) schema_error("record " + doc.id + " has both turns and question/answer");
    flatten_turns(*it, doc);
  } else {
    doc.question = required_string(obj, "question");
    doc.answer = required_string(obj, "answer");
  }

  if (auto it = obj.find("image_ids"); it != obj.end()) {
    if (!it->is_array()) schema_error("field \"image_ids\" must be an array");
    for (const auto& v : *it) {
      if (!v.is_string()) schema_error("image ids must be strings");
      doc.image_ids.push_back(v.get<std::string>());
    }
  } else {
    schema_error("missing field \"image_ids\"");
  }

  if (auto it = obj.find("meta"); it != obj.end() && !it->is_null()) {
    if (!it->is_object()) schema_error("field \"meta\" must be an object");
    doc.meta = *it;
  }
  return doc;
}

json to_json(const Document& doc) {
  json obj = {{"id", doc.id},
              {"split", to_string(doc.split)},
              {"question", doc.question},
              {"answer", doc.answer},
              {"image_ids", doc.image_ids}};
  if (!doc.benchmark.empty()) obj["benchmark"] = doc.benchmark;
  if (!doc.meta.empty()) obj["meta"] = doc.meta;
  return obj;
}

std::vector<std::filesystem::path> corpus_shards(const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (fs::is_directory(path, ec)) {
    std::vector<fs::path> shards;
    for (const auto& entry : fs::directory_iterator(path, ec)) {
      if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
        shards.push_back(entry.path());
      }
    }
    std::sort(shards.begin(), shards.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
    if (shards.empty()) throw Error(ErrorKind::io, "no .jsonl shards in " + path.string());
    return shards;
  }
  if (!fs::is_regular_file(path, ec)) {
    throw Error(ErrorKind::io, "cannot read corpus " + path.string());
  }
  return {path};
}

Corpus load_corpus(const std::filesystem::path& path, Split split, const LoadOptions& options) {
  Corpus corpus;
  corpus.split = split;
  corpus.source_path = path.string();
  std::unordered_set<std::string> seen;

  for (const auto& shard : corpus_shards(path)) {
    std::ifstream in(shard, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "cannot open " + shard.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") == std::string::npos) continue;

      Document doc;
      try {
        doc = parse_document(line, split);
      } catch (const Error& e) {
        if (options.strict) {
          throw Error(ErrorKind::schema,
                      shard.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
        ++corpus.skipped_lines;
        continue;
      }
      if (split == Split::eval && doc.benchmark.empty()) {
        throw Error(ErrorKind::schema, "eval record " + doc.id + " has no benchmark");
      }
      if (!seen.insert(doc.id).second) {
        throw Error(ErrorKind::schema, "duplicate id " + doc.id);
      }
      corpus.documents.push_back(std::move(doc));
    }
    if (in.bad()) throw Error(ErrorKind::io, "read failure on " + shard.string());
  }

  if (corpus.documents.empty()) {
    throw Error(ErrorKind::schema, "corpus " + path.string() + " has no valid records");
  }
  return corpus;
}

std::map<std::string, std::vector<const Document*>> partition_by_benchmark(const Corpus& corpus) {
  if (corpus.split != Split::eval) {
    throw Error(ErrorKind::contract, "partition_by_benchmark requires an eval corpus");
  }
  std::map<std::string, std::vector<const Document*>> buckets;
  for (const auto& doc : corpus.documents) buckets[doc.benchmark].push_back(&doc);
  return buckets;
}

std::size_t write_filtered_corpus(const std::filesystem::path& path, Split split,
                                  const std::unordered_set<std::string>& removed,
                                  std::ostream& out) {
  std::size_t written = 0;
  for (const auto& shard : corpus_shards(path)) {
    std::ifstream in(shard, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "cannot open " + shard.string());
    std::string line;
    while (std::getline(in, line)) {
      std::string_view body = line;
      if (!body.empty() && body.back() == '\r') body.remove_suffix(1);
      if (body.find_first_not_of(" \t") == std::string_view::npos) continue;
      std::string id;
      try {
        id = parse_document(body, split).id;
      } catch (const Error&) {
        continue;
      }
      if (removed.count(id)) continue;
      out << line << '\n';
      ++written;
    }
  }
  if (!out) throw Error(ErrorKind::io, "write failure while emitting corpus");
  return written;
}

}  // namespace decon
