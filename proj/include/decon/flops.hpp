#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace decon {

/// N counts every parameter active per token (vision encoder and projector
/// included). D counts vision-language training tokens only; language-only
/// pretraining of the backbone is folded into N and left out of D.
struct ModelSpec {
  std::string name;
  double active_params = 0.0;  // N
  double vl_tokens = 0.0;      // D
  std::map<std::string, double> per_eval_mean_tokens;
  std::optional<double> accuracy;
};

struct EfficiencyRecord {
  std::string name;
  double active_params = 0.0;
  double vl_tokens = 0.0;
  double mean_tokens = 0.0;  // T
  double f_train = 0.0;
  double f_response = 0.0;
  std::optional<double> accuracy;
};

/// 6 * N * D.
double train_flops(double active_params, double vl_tokens);
/// 2 * N * T, the decode-only forward pass per generated token.
double response_flops(double active_params, double mean_tokens);

/// Unweighted mean of the per-eval means. Throws Error{config} when empty.
double mean_response_tokens(const ModelSpec& spec);

EfficiencyRecord efficiency(const ModelSpec& spec);

struct ParetoPoint {
  double cost = 0.0;
  double accuracy = 0.0;
  std::string name;

  bool operator==(const ParetoPoint&) const = default;
};

/// p dominates q iff cost(p) <= cost(q) and acc(p) >= acc(q), one strictly.
bool dominates(const ParetoPoint& p, const ParetoPoint& q);

/// Non-dominated points sorted by ascending cost (then descending accuracy,
/// then name). Exact ties on both axes are all kept. Costs must be > 0.
std::vector<ParetoPoint> pareto_frontier(std::span<const ParetoPoint> points);

std::vector<ModelSpec> parse_model_specs(const nlohmann::json& doc);
std::vector<ModelSpec> load_model_specs(const std::filesystem::path& path);

nlohmann::json to_json(const EfficiencyRecord& record);
/// Columns: model, N, D, T, F_train, F_response.
std::string render_flops_tsv(std::span<const EfficiencyRecord> records);

}  // namespace decon
