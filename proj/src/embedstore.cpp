#include "decon/embedstore.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "decon/error.hpp"
#include "json.hpp"

namespace decon {

static_assert(std::endian::native == std::endian::little, "DEMB I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'D', 'E', 'M', 'B'};
constexpr std::uint16_t kVersion = 1;
constexpr std::size_t kHeaderBytes = 20;

[[noreturn]] void format_error(const std::string& msg) { throw Error(ErrorKind::format, msg); }

template <typename T>
T read_le(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

std::vector<std::string> load_manifest(const std::filesystem::path& path, std::size_t count) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open manifest " + path.string());
  std::vector<std::string> ids(count);
  std::vector<bool> covered(count, false);
  std::unordered_map<std::string, std::size_t> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto where = path.string() + ":" + std::to_string(line_no);
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorKind::schema, where + ": invalid JSON: " + e.what());
    }
    if (!rec.is_object() || !rec.contains("image_id") || !rec["image_id"].is_string() ||
        !rec.contains("row") || !rec["row"].is_number_integer()) {
      throw Error(ErrorKind::schema, where + ": expected {\"image_id\": str, \"row\": int}");
    }
    auto id = rec["image_id"].get<std::string>();
    auto row = rec["row"].get<std::int64_t>();
    if (row < 0 || static_cast<std::uint64_t>(row) >= count) {
      throw Error(ErrorKind::schema, where + ": row " + std::to_string(row) +
                                         " out of range for " + std::to_string(count) + " vectors");
    }
    if (!seen.emplace(id, line_no).second) {
      throw Error(ErrorKind::schema, where + ": duplicate image_id " + id);
    }
    if (covered[static_cast<std::size_t>(row)]) {
      throw Error(ErrorKind::schema, where + ": row " + std::to_string(row) + " mapped twice");
    }
    covered[static_cast<std::size_t>(row)] = true;
    ids[static_cast<std::size_t>(row)] = std::move(id);
  }
  for (std::size_t r = 0; r < count; ++r) {
    if (!covered[r]) throw Error(ErrorKind::schema, path.string() + ": row " + std::to_string(r) + " has no image_id");
  }
  return ids;
}

}  // namespace

EmbeddingStore EmbeddingStore::from_rows(std::uint32_t dim, std::vector<float> values,
                                         std::vector<std::string> image_ids) {
  if (dim == 0) format_error("embedding dim must be positive");
  if (values.size() != static_cast<std::size_t>(dim) * image_ids.size()) {
    format_error("embedding payload holds " + std::to_string(values.size()) + " floats, expected " +
                 std::to_string(static_cast<std::size_t>(dim) * image_ids.size()));
  }
  EmbeddingStore store;
  store.dim_ = dim;
  store.values_ = std::move(values);
  store.ids_ = std::move(image_ids);
  store.index_.reserve(store.ids_.size());
  for (std::size_t r = 0; r < store.ids_.size(); ++r) {
    if (!store.index_.emplace(store.ids_[r], static_cast<std::uint32_t>(r)).second) {
      throw Error(ErrorKind::schema, "duplicate image_id " + store.ids_[r]);
    }
    float* v = store.values_.data() + r * dim;
    double norm2 = 0.0;
    for (std::uint32_t k = 0; k < dim; ++k) {
      if (!std::isfinite(v[k])) format_error("non-finite value in vector " + store.ids_[r]);
      norm2 += static_cast<double>(v[k]) * static_cast<double>(v[k]);
    }
    if (norm2 == 0.0) format_error("zero-norm vector for image " + store.ids_[r]);
    const double inv = 1.0 / std::sqrt(norm2);
    for (std::uint32_t k = 0; k < dim; ++k) v[k] = static_cast<float>(v[k] * inv);
  }
  return store;
}

EmbeddingStore EmbeddingStore::load(const std::filesystem::path& vectors_path,
                                    const std::filesystem::path& manifest_path) {
  std::ifstream in(vectors_path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open embeddings " + vectors_path.string());
  char header[kHeaderBytes];
  if (!in.read(header, kHeaderBytes)) format_error(vectors_path.string() + ": truncated DEMB header");
  if (std::memcmp(header, kMagic, 4) != 0) format_error(vectors_path.string() + ": bad magic");
  auto version = read_le<std::uint16_t>(header + 4);
  if (version != kVersion) {
    format_error(vectors_path.string() + ": unsupported DEMB version " + std::to_string(version));
  }
  auto dim = read_le<std::uint32_t>(header + 8);
  auto count = read_le<std::uint64_t>(header + 12);
  if (dim == 0) format_error(vectors_path.string() + ": dim must be positive");

  std::error_code ec;
  auto file_size = std::filesystem::file_size(vectors_path, ec);
  if (ec) throw Error(ErrorKind::io, "cannot stat " + vectors_path.string());
  const std::uint64_t expected = static_cast<std::uint64_t>(dim) * count * sizeof(float);
  if (count != 0 && expected / count / sizeof(float) != dim) format_error(vectors_path.string() + ": size overflow");
  if (file_size - kHeaderBytes != expected) {
    format_error(vectors_path.string() + ": payload is " + std::to_string(file_size - kHeaderBytes) +
                 " bytes, header declares " + std::to_string(expected) + " (dim " + std::to_string(dim) +
                 " x count " + std::to_string(count) + ")");
  }
  std::vector<float> values(static_cast<std::size_t>(dim) * count);
  if (!in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(expected))) {
    throw Error(ErrorKind::io, "read failure on " + vectors_path.string());
  }
  auto ids = load_manifest(manifest_path, static_cast<std::size_t>(count));
  return from_rows(dim, std::move(values), std::move(ids));
}

std::optional<std::uint32_t> EmbeddingStore::find(std::string_view image_id) const {
  auto it = index_.find(std::string(image_id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void write_demb(const std::filesystem::path& path, std::uint32_t dim, std::span<const float> values) {
  if (dim == 0 || values.size() % dim != 0) {
    throw Error(ErrorKind::contract, "write_demb: payload is not a whole number of rows");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  const std::uint16_t version = kVersion, reserved = 0;
  const std::uint64_t count = values.size() / dim;
  out.write(kMagic, 4);
  out.write(reinterpret_cast<const char*>(&version), sizeof version);
  out.write(reinterpret_cast<const char*>(&reserved), sizeof reserved);
  out.write(reinterpret_cast<const char*>(&dim), sizeof dim);
  out.write(reinterpret_cast<const char*>(&count), sizeof count);
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size_bytes()));
  if (!out) throw Error(ErrorKind::io, "write failure on " + path.string());
}

void write_manifest(const std::filesystem::path& path, const std::vector<std::string>& image_ids) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  for (std::size_t r = 0; r < image_ids.size(); ++r) {
    out << nlohmann::json{{"image_id", image_ids[r]}, {"row", r}}.dump() << '\n';
  }
  if (!out) throw Error(ErrorKind::io, "write failure on " + path.string());
}

std::vector<DocSimilarity> doc_max_similarity(std::span<const Document> training_docs,
                                              const EmbeddingStore& eval_store,
                                              const EmbeddingStore& train_store,
                                              const KernelOptions& options) {
  if (eval_store.count() > 0 && train_store.count() > 0 && eval_store.dim() != train_store.dim()) {
    throw Error(ErrorKind::format, "training and eval embeddings differ in dim");
  }
  std::vector<std::uint32_t> query_rows;
  std::vector<std::size_t> doc_offsets{0};
  for (const auto& doc : training_docs) {
    for (const auto& image_id : doc.image_ids) {
      auto row = train_store.find(image_id);
      if (!row) throw Error(ErrorKind::schema, "doc " + doc.id + ": unknown image_id " + image_id);
      query_rows.push_back(*row);
    }
    doc_offsets.push_back(query_rows.size());
  }

  std::vector<std::uint32_t> columns(eval_store.count());
  std::iota(columns.begin(), columns.end(), 0u);
  std::vector<std::size_t> offsets{0, columns.size()};
  GroupMaxTable table;
  group_max_parallel(train_store.view(), query_rows, eval_store.view(), {columns, offsets}, table,
                     options);

  std::vector<DocSimilarity> sims(training_docs.size());
  for (std::size_t d = 0; d < training_docs.size(); ++d) {
    sims[d].training_doc_id = training_docs[d].id;
    double best = -std::numeric_limits<double>::infinity();
    std::uint32_t best_col = kNoColumn;
    for (std::size_t q = doc_offsets[d]; q < doc_offsets[d + 1]; ++q) {
      if (table.arg(q, 0) != kNoColumn && table.at(q, 0) > best) {
        best = table.at(q, 0);
        best_col = table.arg(q, 0);
      }
    }
    if (best_col != kNoColumn) {
      sims[d].max_sim = best;
      sims[d].argmax_eval_image_id = eval_store.image_id(columns[best_col]);
    }
  }
  return sims;
}

std::set<std::string> stage1_candidates(std::span<const DocSimilarity> sims, double tau_i) {
  if (!(tau_i > 0.0 && tau_i <= 1.0)) {
    throw Error(ErrorKind::config, "tau_i must lie in (0, 1]");
  }
  std::set<std::string> out;
  for (const auto& s : sims) {
    if (s.max_sim && *s.max_sim >= tau_i) out.insert(s.training_doc_id);
  }
  return out;
}

}  // namespace decon
