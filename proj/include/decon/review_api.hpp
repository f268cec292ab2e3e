#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "decon/config.hpp"
#include "decon/flops.hpp"
#include "decon/run.hpp"
#include "json.hpp"

namespace decon {

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

using QueryParams = std::multimap<std::string, std::string>;

/// Read-mostly view of a finished run directory for the review UI.
///
///   GET  /benchmarks                  policies and flagged counts
///   GET  /flagged?benchmark=&min_sim=&min_c=&page=&page_size=
///   GET  /sweep/{benchmark}           tau_t profile with samples
///   POST /overrides                   stage a policy change in a draft config
///   GET  /overrides                   current draft
///   GET  /frontier                    efficiency records and Pareto frontier
///
/// Unknown benchmark: 404. Malformed query or body: 400. An override that
/// breaks a policy invariant: 409. The run's own config is never modified;
/// overrides accumulate in an in-memory draft.
class ReviewApi {
 public:
  explicit ReviewApi(const std::filesystem::path& run_dir,
                     std::optional<std::filesystem::path> model_specs = std::nullopt);

  ApiResponse benchmarks() const;
  ApiResponse flagged(const QueryParams& query) const;
  ApiResponse sweep(std::string_view benchmark) const;
  ApiResponse post_override(std::string_view body);
  ApiResponse draft() const;
  ApiResponse frontier() const;

  const RunManifest& manifest() const { return manifest_; }

 private:
  bool known(std::string_view benchmark) const;

  RunManifest manifest_;
  EngineConfig config_;
  nlohmann::json report_;
  nlohmann::json sweeps_;
  std::vector<nlohmann::json> matches_;
  std::vector<EfficiencyRecord> models_;

  mutable std::mutex draft_mutex_;
  EngineConfig draft_;
};

/// HTTP front end over a ReviewApi. The api must outlive the server.
class ReviewServer {
 public:
  explicit ReviewServer(ReviewApi& api);
  ~ReviewServer();

  /// Binds and serves on a background thread. Port 0 picks a free port.
  /// Returns the bound port; throws Error{io} when binding fails.
  int start(const std::string& host, int port);
  /// Binds and serves on the calling thread until stop().
  void listen(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace decon
