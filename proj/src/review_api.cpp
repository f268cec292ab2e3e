#include "decon/review_api.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <thread>

#include "decon/error.hpp"
#include "httplib.h"

namespace decon {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::size_t kDefaultPageSize = 50;
constexpr std::size_t kMaxPageSize = 1000;

json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw Error(ErrorKind::io, "cannot open " + p.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::schema, p.string() + ": invalid JSON: " + e.what());
  }
}

std::vector<json> read_jsonl(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw Error(ErrorKind::io, "cannot open " + p.string());
  std::vector<json> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      rows.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw Error(ErrorKind::schema, p.string() + ": invalid JSON line: " + e.what());
    }
  }
  return rows;
}

ApiResponse error(int status, const std::string& message) {
  return {status, {{"error", message}}};
}

// Single-valued lookup; a repeated key is malformed.
std::optional<std::string> single(const QueryParams& q, const std::string& key) {
  auto [lo, hi] = q.equal_range(key);
  if (lo == hi) return std::nullopt;
  if (std::next(lo) != hi) throw std::invalid_argument("repeated query parameter " + key);
  return lo->second;
}

double parse_double(const std::string& key, const std::string& s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw std::invalid_argument(key + " must be a number");
  }
  return v;
}

std::size_t parse_count(const std::string& key, const std::string& s) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw std::invalid_argument(key + " must be a non-negative integer");
  return v;
}

json frontier_json(const std::vector<EfficiencyRecord>& records, bool by_response) {
  std::vector<ParetoPoint> pts;
  for (const auto& r : records) {
    if (r.accuracy) pts.push_back({by_response ? r.f_response : r.f_train, *r.accuracy, r.name});
  }
  json arr = json::array();
  for (const auto& p : pareto_frontier(pts)) arr.push_back({{"name", p.name}, {"cost", p.cost}, {"accuracy", p.accuracy}});
  return arr;
}

}  // namespace

ReviewApi::ReviewApi(const fs::path& run_dir, std::optional<fs::path> model_specs)
    : manifest_(load_run_manifest(run_dir)),
      config_(parse_config(read_json(run_dir / run_files::config))),
      report_(read_json(run_dir / run_files::report_json)),
      sweeps_(read_json(run_dir / run_files::sweeps)),
      matches_(read_jsonl(run_dir / run_files::matches)),
      draft_(config_) {
  if (model_specs) {
    for (const auto& spec : load_model_specs(*model_specs)) models_.push_back(efficiency(spec));
  }
}

bool ReviewApi::known(std::string_view benchmark) const {
  for (const auto& b : manifest_.benchmarks) {
    if (b == benchmark) return true;
  }
  return false;
}

ApiResponse ReviewApi::benchmarks() const {
  std::map<std::string, json> flagged;
  for (const auto& row : report_.at("per_benchmark")) flagged[row.at("benchmark").get<std::string>()] = row;
  json arr = json::array();
  for (const auto& b : manifest_.benchmarks) {
    json entry = {{"name", b}, {"policy", to_json(resolve_policy(b, config_))}, {"flagged", 0}, {"share", 0.0}};
    if (auto it = flagged.find(b); it != flagged.end()) {
      entry["flagged"] = it->second.at("flagged");
      entry["share"] = it->second.at("share");
    }
    arr.push_back(std::move(entry));
  }
  return {200, {{"run_id", manifest_.run_id}, {"benchmarks", std::move(arr)}}};
}

ApiResponse ReviewApi::flagged(const QueryParams& query) const {
  std::optional<std::string> benchmark, decision;
  double min_sim = -1.0, min_c = -1.0;
  std::size_t page = 1, page_size = kDefaultPageSize;
  try {
    for (const auto& [key, value] : query) {
      if (key != "benchmark" && key != "decision" && key != "min_sim" && key != "min_c" && key != "page" &&
          key != "page_size") {
        throw std::invalid_argument("unknown query parameter " + key);
      }
    }
    benchmark = single(query, "benchmark");
    decision = single(query, "decision");
    if (auto v = single(query, "min_sim")) min_sim = parse_double("min_sim", *v);
    if (auto v = single(query, "min_c")) min_c = parse_double("min_c", *v);
    if (auto v = single(query, "page")) page = parse_count("page", *v);
    if (auto v = single(query, "page_size")) page_size = parse_count("page_size", *v);
    if (page == 0) throw std::invalid_argument("page starts at 1");
    if (page_size == 0 || page_size > kMaxPageSize) throw std::invalid_argument("page_size must lie in [1, 1000]");
    if (decision && *decision != "remove" && *decision != "keep") throw std::invalid_argument("decision must be remove or keep");
  } catch (const std::invalid_argument& e) {
    return error(400, e.what());
  }
  if (benchmark && !known(*benchmark)) return error(404, "unknown benchmark " + *benchmark);

  std::vector<const json*> hits;
  for (const auto& m : matches_) {
    if (benchmark && m.at("benchmark") != *benchmark) continue;
    if (decision && m.at("decision") != *decision) continue;
    if (m.at("sim_img").get<double>() < min_sim) continue;
    if (min_c >= 0.0) {
      const auto& c = m.at("c_text");
      if (c.is_null() || c.get<double>() < min_c) continue;
    }
    hits.push_back(&m);
  }
  json items = json::array();
  const std::size_t first = (page - 1) * page_size;
  for (std::size_t i = first; i < hits.size() && i < first + page_size; ++i) items.push_back(*hits[i]);
  return {200, {{"total", hits.size()}, {"page", page}, {"page_size", page_size}, {"items", std::move(items)}}};
}

ApiResponse ReviewApi::sweep(std::string_view benchmark) const {
  const std::string name(benchmark);
  if (!known(name) || !sweeps_.contains(name)) return error(404, "unknown benchmark " + name);
  return {200, sweeps_.at(name)};
}

ApiResponse ReviewApi::post_override(std::string_view body) {
  json patch;
  try {
    patch = json::parse(body);
  } catch (const json::parse_error& e) {
    return error(400, std::string("invalid JSON: ") + e.what());
  }
  if (!patch.is_object()) return error(400, "override must be a JSON object");
  auto name = patch.find("benchmark");
  if (name == patch.end() || !name->is_string()) return error(400, "override needs a string \"benchmark\"");
  const std::string benchmark = name->get<std::string>();
  if (benchmark != kDefaultPolicyKey && !known(benchmark)) return error(404, "unknown benchmark " + benchmark);

  std::lock_guard lock(draft_mutex_);
  const BenchmarkPolicy before = resolve_policy(benchmark, draft_);
  BenchmarkPolicy after;
  try {
    after = merge_policy(before, patch);
  } catch (const Error& e) {
    return error(400, e.what());
  }
  try {
    validate_policy(after);
  } catch (const Error& e) {
    return error(409, e.what());
  }
  draft_.policies[benchmark] = after;
  return {200, {{"benchmark", benchmark},
                {"before", to_json(before)},
                {"after", to_json(after)},
                {"draft_config", to_json(draft_)},
                {"draft_hash", config_hash(draft_)}}};
}

ApiResponse ReviewApi::draft() const {
  std::lock_guard lock(draft_mutex_);
  return {200, {{"draft_config", to_json(draft_)}, {"draft_hash", config_hash(draft_)}, {"run_config_hash", manifest_.config_hash}}};
}

ApiResponse ReviewApi::frontier() const {
  json records = json::array();
  for (const auto& r : models_) records.push_back(to_json(r));
  return {200, {{"records", std::move(records)},
                {"frontier", {{"f_response", frontier_json(models_, true)}, {"f_train", frontier_json(models_, false)}}}}};
}

struct ReviewServer::Impl {
  httplib::Server server;
  std::thread thread;
};

namespace {

void reply(httplib::Response& res, const ApiResponse& r) {
  res.status = r.status;
  res.set_content(r.body.dump(), "application/json");
}

}  // namespace

ReviewServer::ReviewServer(ReviewApi& api) : impl_(std::make_unique<Impl>()) {
  auto& s = impl_->server;
  s.Get("/benchmarks", [&api](const httplib::Request&, httplib::Response& res) { reply(res, api.benchmarks()); });
  s.Get("/flagged", [&api](const httplib::Request& req, httplib::Response& res) {
    QueryParams q(req.params.begin(), req.params.end());
    reply(res, api.flagged(q));
  });
  s.Get(R"(/sweep/(.+))", [&api](const httplib::Request& req, httplib::Response& res) {
    reply(res, api.sweep(req.matches[1].str()));
  });
  s.Post("/overrides", [&api](const httplib::Request& req, httplib::Response& res) { reply(res, api.post_override(req.body)); });
  s.Get("/overrides", [&api](const httplib::Request&, httplib::Response& res) { reply(res, api.draft()); });
  s.Get("/frontier", [&api](const httplib::Request&, httplib::Response& res) { reply(res, api.frontier()); });
  s.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    reply(res, error(500, what));
  });
}

ReviewServer::~ReviewServer() { stop(); }

int ReviewServer::start(const std::string& host, int port) {
  auto& s = impl_->server;
  const int bound = port == 0 ? s.bind_to_any_port(host) : (s.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error(ErrorKind::io, "cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([&s] { s.listen_after_bind(); });
  s.wait_until_ready();
  return bound;
}

void ReviewServer::listen(const std::string& host, int port) {
  if (!impl_->server.listen(host, port)) throw Error(ErrorKind::io, "cannot bind " + host + ":" + std::to_string(port));
}

void ReviewServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace decon
