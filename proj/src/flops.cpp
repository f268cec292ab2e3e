#include "decon/flops.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "decon/error.hpp"

namespace decon {

double train_flops(double active_params, double vl_tokens) {
  if (!(active_params > 0.0) || vl_tokens < 0.0) {
    throw Error(ErrorKind::config, "train_flops needs N > 0 and D >= 0");
  }
  return 6.0 * active_params * vl_tokens;
}

double response_flops(double active_params, double mean_tokens) {
  if (!(active_params > 0.0) || mean_tokens < 0.0) {
    throw Error(ErrorKind::config, "response_flops needs N > 0 and T >= 0");
  }
  return 2.0 * active_params * mean_tokens;
}

double mean_response_tokens(const ModelSpec& spec) {
  if (spec.per_eval_mean_tokens.empty()) {
    throw Error(ErrorKind::config, "model " + spec.name + " has no per-eval token means");
  }
  double sum = 0.0;
  for (const auto& [eval, tokens] : spec.per_eval_mean_tokens) sum += tokens;
  return sum / static_cast<double>(spec.per_eval_mean_tokens.size());
}

EfficiencyRecord efficiency(const ModelSpec& spec) {
  EfficiencyRecord r;
  r.name = spec.name;
  r.active_params = spec.active_params;
  r.vl_tokens = spec.vl_tokens;
  r.mean_tokens = mean_response_tokens(spec);
  r.f_train = train_flops(spec.active_params, spec.vl_tokens);
  r.f_response = response_flops(spec.active_params, r.mean_tokens);
  r.accuracy = spec.accuracy;
  return r;
}

bool dominates(const ParetoPoint& p, const ParetoPoint& q) {
  return p.cost <= q.cost && p.accuracy >= q.accuracy && (p.cost < q.cost || p.accuracy > q.accuracy);
}

std::vector<ParetoPoint> pareto_frontier(std::span<const ParetoPoint> points) {
  for (const auto& p : points) {
    if (!(p.cost > 0.0)) throw Error(ErrorKind::config, "pareto point " + p.name + " needs cost > 0");
  }
  std::vector<ParetoPoint> sorted(points.begin(), points.end());
  std::sort(sorted.begin(), sorted.end(), [](const ParetoPoint& a, const ParetoPoint& b) {
    if (a.cost != b.cost) return a.cost < b.cost;
    if (a.accuracy != b.accuracy) return a.accuracy > b.accuracy;
    return a.name < b.name;
  });

  // Walk cost groups in ascending order. Within a group only the top accuracy
  // can survive, and only if no strictly cheaper point reached it.
  std::vector<ParetoPoint> frontier;
  bool have_best = false;
  double best_cheaper = 0.0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j].cost == sorted[i].cost) ++j;
    const double top = sorted[i].accuracy;
    if (!have_best || top > best_cheaper) {
      for (std::size_t k = i; k < j && sorted[k].accuracy == top; ++k) frontier.push_back(sorted[k]);
    }
    if (!have_best || top > best_cheaper) best_cheaper = top;
    have_best = true;
    i = j;
  }
  return frontier;
}

std::vector<ModelSpec> parse_model_specs(const nlohmann::json& doc) {
  if (!doc.is_array()) throw Error(ErrorKind::schema, "model specs must be a JSON array");
  std::vector<ModelSpec> specs;
  for (const auto& obj : doc) {
    try {
      ModelSpec s;
      s.name = obj.at("name").get<std::string>();
      s.active_params = obj.at("active_params").get<double>();
      s.vl_tokens = obj.at("vl_tokens").get<double>();
      for (const auto& [eval, v] : obj.at("per_eval_mean_tokens").items()) {
        s.per_eval_mean_tokens[eval] = v.get<double>();
      }
      if (auto it = obj.find("accuracy"); it != obj.end() && !it->is_null()) s.accuracy = it->get<double>();
      if (!(s.active_params > 0.0) || s.vl_tokens < 0.0) {
        throw Error(ErrorKind::schema, "model " + s.name + ": needs N > 0 and D >= 0");
      }
      for (const auto& [eval, v] : s.per_eval_mean_tokens) {
        if (v < 0.0) throw Error(ErrorKind::schema, "model " + s.name + ": negative token mean for " + eval);
      }
      specs.push_back(std::move(s));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::schema, std::string("malformed model spec: ") + e.what());
    }
  }
  return specs;
}

std::vector<ModelSpec> load_model_specs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  try {
    return parse_model_specs(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::schema, path.string() + ": invalid JSON: " + e.what());
  }
}

nlohmann::json to_json(const EfficiencyRecord& r) {
  nlohmann::json obj = {{"name", r.name},        {"N", r.active_params},   {"D", r.vl_tokens},
                        {"T", r.mean_tokens},    {"f_train", r.f_train},  {"f_response", r.f_response}};
  obj["accuracy"] = r.accuracy ? nlohmann::json(*r.accuracy) : nlohmann::json(nullptr);
  return obj;
}

std::string render_flops_tsv(std::span<const EfficiencyRecord> records) {
  auto sci = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2e", v);
    return std::string(buf);
  };
  std::ostringstream out;
  out << "model\tN\tD\tT\tF_train\tF_response\n";
  for (const auto& r : records) {
    char t[32];
    std::snprintf(t, sizeof t, "%.1f", r.mean_tokens);
    out << r.name << '\t' << sci(r.active_params) << '\t' << sci(r.vl_tokens) << '\t' << t << '\t'
        << sci(r.f_train) << '\t' << sci(r.f_response) << '\n';
  }
  return out.str();
}

}  // namespace decon
