#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace decon {

enum class PolicyMode { joint, image_only };

std::string_view to_string(PolicyMode mode);

inline constexpr const char* kDefaultPolicyKey = "*";
inline constexpr int kMaxNgram = 8;
inline constexpr double kImageOnlyMinTauI = 0.995;

/// Per-benchmark thresholds. The "*" entry is the global default.
struct BenchmarkPolicy {
  std::string benchmark = kDefaultPolicyKey;
  double tau_i = 0.95;
  double tau_t = 0.8;
  PolicyMode mode = PolicyMode::joint;
  int n_default = 4;
  int short_threshold = 10;
  // Permits an image-only policy with tau_i below 0.995.
  bool acknowledge_low_tau_i = false;

  bool operator==(const BenchmarkPolicy&) const = default;
};

/// Throws Error{config} naming the violated invariant.
void validate_policy(const BenchmarkPolicy& policy);

struct EngineConfig {
  std::vector<std::string> strip_list;
  std::map<std::string, BenchmarkPolicy> policies;  // must contain "*"
  // Kept pairs are logged when sim_img >= tau_i - report_sim_margin or
  // c_text >= report_c_floor.
  double report_sim_margin = 0.02;
  double report_c_floor = 0.4;

  /// Defaults: tau_i 0.95, tau_t 0.8, joint, n 4 (3 below ten words).
  static EngineConfig defaults();
};

/// Override fields missing from a benchmark entry inherit from "*".
EngineConfig parse_config(const nlohmann::json& doc);
EngineConfig load_config(const std::filesystem::path& path);

/// Fully resolved form; parse_config(to_json(c)) == c.
nlohmann::json to_json(const EngineConfig& config);
nlohmann::json to_json(const BenchmarkPolicy& policy);

/// Exact-name override if present, else the "*" default (renamed to the
/// requested benchmark). Throws Error{config} when "*" is missing.
BenchmarkPolicy resolve_policy(std::string_view benchmark, const EngineConfig& config);

/// Applies the policy fields present in `patch` on top of `base` without
/// validating the result. Throws Error{config} for unknown or mistyped fields.
BenchmarkPolicy merge_policy(BenchmarkPolicy base, const nlohmann::json& patch);

/// Merges `patch` (a partial policy object with a "benchmark" field) into a
/// copy of `config`. Throws Error{config} if the result violates an invariant.
EngineConfig apply_override(const EngineConfig& config, const nlohmann::json& patch);

/// SHA-256 hex of the canonical resolved config.
std::string config_hash(const EngineConfig& config);

}  // namespace decon
