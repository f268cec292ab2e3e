#include "decon/report.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "decon/error.hpp"

namespace decon {

VolumeReport build_report(std::span<const ContaminationMatch> matches, std::size_t total,
                          double tail_cutoff, std::size_t top_k, std::size_t evaluations) {
  if (total == 0) throw Error(ErrorKind::contract, "build_report: total must be >= 1");
  std::map<std::string, std::set<std::string>> docs_by_benchmark;
  std::set<std::string> all_docs;
  for (const auto& m : matches) {
    if (m.decision != Decision::remove) continue;
    docs_by_benchmark[m.benchmark].insert(m.training_doc_id);
    all_docs.insert(m.training_doc_id);
  }

  VolumeReport r;
  r.total_training_docs = total;
  r.tail_cutoff = tail_cutoff;
  r.top_k = top_k;
  const auto denom = static_cast<double>(total);
  for (const auto& [name, docs] : docs_by_benchmark) {
    r.per_benchmark.push_back({name, docs.size(), static_cast<double>(docs.size()) / denom});
  }
  std::sort(r.per_benchmark.begin(), r.per_benchmark.end(), [](const auto& a, const auto& b) {
    return a.flagged != b.flagged ? a.flagged > b.flagged : a.benchmark < b.benchmark;
  });
  r.union_count = all_docs.size();
  r.union_share = static_cast<double>(r.union_count) / denom;
  r.evaluations = std::max(evaluations, r.per_benchmark.size());

  for (std::size_t i = 0; i < r.per_benchmark.size(); ++i) {
    const auto& row = r.per_benchmark[i];
    if (i < top_k || row.share >= tail_cutoff) {
      r.rows.push_back(row);
    } else {
      ++r.tail_benchmarks;
      r.tail_count += row.flagged;
    }
  }
  r.tail_share = static_cast<double>(r.tail_count) / denom;
  return r;
}

std::string format_share(double share) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f%%", share * 100.0);
  return buf;
}

nlohmann::json to_json(const VolumeReport& r) {
  auto rows = [](const std::vector<BenchmarkShare>& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& s : v) {
      arr.push_back({{"benchmark", s.benchmark}, {"flagged", s.flagged}, {"share", s.share}});
    }
    return arr;
  };
  return {{"total_training_docs", r.total_training_docs},
          {"per_benchmark", rows(r.per_benchmark)},
          {"rows", rows(r.rows)},
          {"tail", {{"benchmarks", r.tail_benchmarks},
                    {"flagged", r.tail_count},
                    {"share", r.tail_share},
                    {"cutoff", r.tail_cutoff}}},
          {"union", {{"flagged", r.union_count}, {"share", r.union_share}}},
          {"evaluations", r.evaluations}};
}

namespace {

std::string tail_label(const VolumeReport& r) {
  return "Other benchmarks (each <" + format_share(r.tail_cutoff) + ")";
}

std::string union_label(const VolumeReport& r) {
  return "Unique union (" + std::to_string(r.evaluations) + " evaluations)";
}

}  // namespace

std::string render_tsv(const VolumeReport& r) {
  std::ostringstream out;
  out << "benchmark\tflagged\tshare\n";
  for (const auto& row : r.rows) out << row.benchmark << '\t' << row.flagged << '\t' << format_share(row.share) << '\n';
  if (r.tail_benchmarks > 0) out << tail_label(r) << '\t' << r.tail_count << '\t' << format_share(r.tail_share) << '\n';
  out << union_label(r) << '\t' << r.union_count << '\t' << format_share(r.union_share) << '\n';
  return out.str();
}

std::string render_table(const VolumeReport& r) {
  std::vector<std::pair<std::string, std::string>> lines;
  for (const auto& row : r.rows) lines.emplace_back(row.benchmark, format_share(row.share));
  if (r.tail_benchmarks > 0) lines.emplace_back(tail_label(r), format_share(r.tail_share));
  const std::pair<std::string, std::string> header{"Benchmark", "% of corpus"};
  const std::pair<std::string, std::string> footer{union_label(r), format_share(r.union_share)};

  std::size_t w0 = std::max(header.first.size(), footer.first.size());
  std::size_t w1 = std::max(header.second.size(), footer.second.size());
  for (const auto& [a, b] : lines) {
    w0 = std::max(w0, a.size());
    w1 = std::max(w1, b.size());
  }
  auto emit = [&](std::ostringstream& out, const std::string& a, const std::string& b) {
    out << a << std::string(w0 - a.size() + 2, ' ') << std::string(w1 - b.size(), ' ') << b << '\n';
  };
  const std::string rule(w0 + 2 + w1, '-');
  std::ostringstream out;
  emit(out, header.first, header.second);
  out << rule << '\n';
  for (const auto& [a, b] : lines) emit(out, a, b);
  out << rule << '\n';
  emit(out, footer.first, footer.second);
  return out.str();
}

std::string render_removal_manifest(std::vector<std::string> removed_ids) {
  std::sort(removed_ids.begin(), removed_ids.end());
  removed_ids.erase(std::unique(removed_ids.begin(), removed_ids.end()), removed_ids.end());
  std::string out;
  for (const auto& id : removed_ids) {
    out += id;
    out += '\n';
  }
  return out;
}

}  // namespace decon
