#include "decon/config.hpp"

#include <fstream>

#include "decon/digest.hpp"
#include "decon/error.hpp"
#include "decon/textnorm.hpp"

namespace decon {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorKind::config, msg); }

double number_field(const json& v, const std::string& name) {
  if (!v.is_number()) config_error(name + " must be a number");
  return v.get<double>();
}

int int_field(const json& v, const std::string& name) {
  if (!v.is_number_integer()) config_error(name + " must be an integer");
  return v.get<int>();
}

// Applies the fields present in `obj` on top of `policy`.
void merge_policy_fields(BenchmarkPolicy& policy, const json& obj) {
  if (!obj.is_object()) config_error("policy for " + policy.benchmark + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    const std::string where = policy.benchmark + "." + key;
    if (key == "tau_i") {
      policy.tau_i = number_field(value, where);
    } else if (key == "tau_t") {
      if (!value.is_null()) policy.tau_t = number_field(value, where);
    } else if (key == "mode") {
      if (!value.is_string()) config_error(where + " must be a string");
      auto mode = value.get<std::string>();
      if (mode == "joint") {
        policy.mode = PolicyMode::joint;
      } else if (mode == "image_only") {
        policy.mode = PolicyMode::image_only;
      } else {
        config_error(where + ": unknown mode \"" + mode + "\"");
      }
    } else if (key == "n_default") {
      policy.n_default = int_field(value, where);
    } else if (key == "short_threshold") {
      policy.short_threshold = int_field(value, where);
    } else if (key == "acknowledge_low_tau_i") {
      if (!value.is_boolean()) config_error(where + " must be a boolean");
      policy.acknowledge_low_tau_i = value.get<bool>();
    } else if (key != "benchmark") {
      config_error("unknown policy field " + where);
    }
  }
}

}  // namespace

std::string_view to_string(PolicyMode mode) {
  return mode == PolicyMode::joint ? "joint" : "image_only";
}

void validate_policy(const BenchmarkPolicy& p) {
  const std::string who = "policy " + p.benchmark + ": ";
  if (!(p.tau_i > 0.0 && p.tau_i <= 1.0)) config_error(who + "tau_i must lie in (0, 1]");
  if (!(p.tau_t > 0.0 && p.tau_t <= 1.0)) config_error(who + "tau_t must lie in (0, 1]");
  if (p.n_default < 3 || p.n_default > kMaxNgram) {
    config_error(who + "n_default must lie in [3, " + std::to_string(kMaxNgram) + "]");
  }
  if (p.short_threshold < p.n_default) config_error(who + "short_threshold must be >= n_default");
  if (p.mode == PolicyMode::image_only && p.tau_i < kImageOnlyMinTauI && !p.acknowledge_low_tau_i) {
    config_error(who + "image_only requires tau_i >= 0.995 unless acknowledge_low_tau_i is set");
  }
}

EngineConfig EngineConfig::defaults() {
  EngineConfig config;
  config.strip_list = default_strip_list();
  config.policies.emplace(kDefaultPolicyKey, BenchmarkPolicy{});
  return config;
}

EngineConfig parse_config(const json& doc) {
  if (!doc.is_object()) config_error("config must be a JSON object");
  EngineConfig config;
  config.strip_list = default_strip_list();
  if (auto it = doc.find("strip_list"); it != doc.end()) {
    if (!it->is_array()) config_error("strip_list must be an array");
    config.strip_list.clear();
    for (const auto& s : *it) {
      if (!s.is_string()) config_error("strip_list entries must be strings");
      config.strip_list.push_back(s.get<std::string>());
    }
  }
  if (auto it = doc.find("report_sim_margin"); it != doc.end()) {
    config.report_sim_margin = number_field(*it, "report_sim_margin");
  }
  if (auto it = doc.find("report_c_floor"); it != doc.end()) {
    config.report_c_floor = number_field(*it, "report_c_floor");
  }
  for (const auto& [key, value] : doc.items()) {
    if (key != "strip_list" && key != "policies" && key != "report_sim_margin" &&
        key != "report_c_floor") {
      config_error("unknown config field " + key);
    }
  }

  auto policies = doc.find("policies");
  if (policies == doc.end() || !policies->is_object()) config_error("config needs a \"policies\" object");
  auto global = policies->find(kDefaultPolicyKey);
  if (global == policies->end()) config_error("policies must contain a \"*\" default");

  BenchmarkPolicy base;
  merge_policy_fields(base, *global);
  validate_policy(base);
  config.policies.emplace(kDefaultPolicyKey, base);
  for (const auto& [name, value] : policies->items()) {
    if (name == kDefaultPolicyKey) continue;
    if (name.empty()) config_error("empty benchmark name in policies");
    BenchmarkPolicy p = base;
    p.benchmark = name;
    p.acknowledge_low_tau_i = false;
    merge_policy_fields(p, value);
    validate_policy(p);
    config.policies.emplace(name, p);
  }
  return config;
}

EngineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    config_error(path.string() + ": invalid JSON: " + e.what());
  }
  return parse_config(doc);
}

json to_json(const BenchmarkPolicy& p) {
  json obj = {{"tau_i", p.tau_i},
              {"tau_t", p.tau_t},
              {"mode", to_string(p.mode)},
              {"n_default", p.n_default},
              {"short_threshold", p.short_threshold}};
  if (p.acknowledge_low_tau_i) obj["acknowledge_low_tau_i"] = true;
  return obj;
}

json to_json(const EngineConfig& config) {
  json policies = json::object();
  for (const auto& [name, p] : config.policies) policies[name] = to_json(p);
  return {{"strip_list", config.strip_list},
          {"policies", policies},
          {"report_sim_margin", config.report_sim_margin},
          {"report_c_floor", config.report_c_floor}};
}

BenchmarkPolicy merge_policy(BenchmarkPolicy base, const json& patch) {
  merge_policy_fields(base, patch);
  return base;
}

BenchmarkPolicy resolve_policy(std::string_view benchmark, const EngineConfig& config) {
  if (auto it = config.policies.find(std::string(benchmark)); it != config.policies.end()) {
    return it->second;
  }
  auto global = config.policies.find(kDefaultPolicyKey);
  if (global == config.policies.end()) config_error("config has no \"*\" default policy");
  BenchmarkPolicy p = global->second;
  p.benchmark = std::string(benchmark);
  return p;
}

EngineConfig apply_override(const EngineConfig& config, const json& patch) {
  if (!patch.is_object()) config_error("override must be a JSON object");
  auto name = patch.find("benchmark");
  if (name == patch.end() || !name->is_string() || name->get<std::string>().empty()) {
    config_error("override needs a non-empty \"benchmark\"");
  }
  EngineConfig out = config;
  BenchmarkPolicy p = resolve_policy(name->get<std::string>(), config);
  merge_policy_fields(p, patch);
  validate_policy(p);
  out.policies[p.benchmark] = p;
  return out;
}

std::string config_hash(const EngineConfig& config) { return sha256_hex(to_json(config).dump()); }

}  // namespace decon
