// decon: command-line front end for the decontamination engine.

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "decon/calibrate.hpp"
#include "decon/error.hpp"
#include "decon/flops.hpp"
#include "decon/report.hpp"
#include "decon/review_api.hpp"
#include "decon/run.hpp"
#include "json.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

int exit_code(decon::ErrorKind kind) {
  switch (kind) {
    case decon::ErrorKind::io:
      return 3;
    case decon::ErrorKind::contract:
      return 1;
    default:
      return 2;
  }
}

void print_error(std::string_view kind, std::string_view message) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << std::endl;
}

struct InputFlags {
  std::string train, eval, train_emb, eval_emb, train_manifest, eval_manifest, config;
  bool strict = false;

  void add(CLI::App* cmd, bool need_embeddings) {
    cmd->add_option("--train", train, "training corpus (.jsonl file or directory of shards)")->required();
    cmd->add_option("--eval", eval, "evaluation corpus (.jsonl file or directory of shards)")->required();
    auto* te = cmd->add_option("--train-emb", train_emb, "training image vectors (DEMB)");
    auto* ee = cmd->add_option("--eval-emb", eval_emb, "evaluation image vectors (DEMB)");
    if (need_embeddings) {
      te->required();
      ee->required();
    }
    cmd->add_option("--train-manifest", train_manifest, "training image manifest (default: <train-emb>.manifest.jsonl)");
    cmd->add_option("--eval-manifest", eval_manifest, "evaluation image manifest (default: <eval-emb>.manifest.jsonl)");
    cmd->add_option("--config", config, "policy config JSON (default thresholds when absent)");
    cmd->add_flag("--strict", strict, "treat malformed corpus lines as fatal");
  }

  fs::path manifest_for(const std::string& explicit_path, const std::string& vectors) const {
    return explicit_path.empty() ? decon::default_manifest_path(vectors) : fs::path(explicit_path);
  }
};

int resolve_threads(int flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("DECON_THREADS")) {
    try {
      const int v = std::stoi(env);
      if (v > 0) return v;
    } catch (const std::exception&) {
    }
    throw decon::Error(decon::ErrorKind::config, std::string("DECON_THREADS must be a positive integer, got ") + env);
  }
  return 0;
}

void emit_progress(const decon::Progress& p) {
  std::cerr << json{{"event", "progress"}, {"stage", p.stage}, {"done", p.done}, {"total", p.total}}.dump() << '\n';
}

std::pair<std::string, int> split_bind(const std::string& bind) {
  const auto colon = bind.rfind(':');
  if (colon == std::string::npos) throw decon::Error(decon::ErrorKind::config, "--bind expects host:port");
  try {
    const int port = std::stoi(bind.substr(colon + 1));
    if (port < 0 || port > 65535) throw std::out_of_range("port");
    return {bind.substr(0, colon), port};
  } catch (const std::exception&) {
    throw decon::Error(decon::ErrorKind::config, "invalid port in --bind " + bind);
  }
}

void write_or_print(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
  } else {
    decon::write_text_file(path, content);
  }
}

decon::ReviewServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Image-and-text decontamination of multimodal training corpora"};
  app.require_subcommand(1);
  int threads_flag = 0;
  app.add_option("--threads", threads_flag, "worker threads (default: DECON_THREADS, then all cores)");

  // run
  auto* run = app.add_subcommand("run", "run the cascade and write a run directory");
  InputFlags run_in;
  run_in.add(run, true);
  std::string run_out;
  std::size_t shard_size = 4096, sample_k = 10;
  std::uint64_t seed = 0;
  std::vector<double> grid;
  bool quiet = false;
  run->add_option("--out", run_out, "run directory")->required();
  run->add_option("--threads", threads_flag, "worker threads");
  run->add_option("--shard-size", shard_size, "training docs per progress step")->check(CLI::PositiveNumber);
  run->add_option("--grid", grid, "comma-separated tau_t sweep grid")->delimiter(',');
  run->add_option("--sample-k", sample_k, "sampled pairs per grid point (0 disables)");
  run->add_option("--seed", seed, "sampling seed");
  run->add_flag("--quiet", quiet, "no progress events on stderr");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "threshold sweep for one benchmark");
  InputFlags sweep_in;
  sweep_in.add(sweep, true);
  std::string sweep_bench, sweep_axis = "tau_t", sweep_out;
  std::vector<double> sweep_grid;
  std::size_t sweep_k = 10;
  std::uint64_t sweep_seed = 0;
  sweep->add_option("--benchmark", sweep_bench)->required();
  sweep->add_option("--axis", sweep_axis)->check(CLI::IsMember({"tau_t", "tau_i"}));
  sweep->add_option("--grid", sweep_grid, "comma-separated grid")->delimiter(',');
  sweep->add_option("--sample-k", sweep_k, "sampled pairs per grid point (0 disables)");
  sweep->add_option("--seed", sweep_seed);
  sweep->add_option("--threads", threads_flag, "worker threads");
  sweep->add_option("--out", sweep_out, "profile JSON path (default stdout)");

  // report
  auto* report = app.add_subcommand("report", "render the volume report from a match log");
  std::string report_run, report_matches, report_out, report_format = "table";
  std::size_t report_total = 0;
  double cutoff = 1e-4;
  std::size_t top_k = 5;
  report->add_option("--run", report_run, "run directory");
  report->add_option("--matches", report_matches, "match log (JSONL)");
  report->add_option("--total", report_total, "training corpus size (with --matches)");
  report->add_option("--tail-cutoff", cutoff, "share below which benchmarks join the tail");
  report->add_option("--top-k", top_k, "benchmarks always listed");
  report->add_option("--format", report_format)->check(CLI::IsMember({"table", "tsv", "json"}));
  report->add_option("--out", report_out, "output path (default stdout)");

  // flops
  auto* flops = app.add_subcommand("flops", "training and per-response FLOPs from model specs");
  std::string models_path, flops_format = "tsv";
  flops->add_option("--models", models_path, "model spec JSON array")->required();
  flops->add_option("--format", flops_format)->check(CLI::IsMember({"tsv", "json"}));

  // pareto
  auto* pareto = app.add_subcommand("pareto", "Pareto frontier of accuracy against FLOPs");
  std::string pareto_axis = "response";
  pareto->add_option("--models", models_path, "model spec JSON array")->required();
  pareto->add_option("--axis", pareto_axis)->check(CLI::IsMember({"response", "train"}));

  // serve
  auto* serve = app.add_subcommand("serve", "HTTP review API over a run directory");
  std::string serve_run, bind = "127.0.0.1:8080";
  serve->add_option("--run", serve_run, "run directory")->required();
  serve->add_option("--bind", bind, "host:port");
  serve->add_option("--models", models_path, "model spec JSON array for /frontier");

  // validate
  auto* validate = app.add_subcommand("validate", "check corpora, embeddings and config without running");
  InputFlags val_in;
  val_in.add(validate, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      decon::RunInputs in;
      in.train = run_in.train;
      in.eval = run_in.eval;
      in.train_emb = run_in.train_emb;
      in.eval_emb = run_in.eval_emb;
      in.train_manifest = run_in.train_manifest;
      in.eval_manifest = run_in.eval_manifest;
      if (!run_in.config.empty()) in.config = run_in.config;
      in.out = run_out;
      in.threads = resolve_threads(threads_flag);
      in.shard_size = shard_size;
      in.strict = run_in.strict;
      in.grid = grid;
      in.sample_k = sample_k;
      in.seed = seed;
      if (!quiet) in.progress = emit_progress;
      const auto manifest = decon::execute_run(in);
      std::cout << decon::to_json(manifest).dump(2) << std::endl;
    } else if (*sweep) {
      const auto config = sweep_in.config.empty() ? decon::EngineConfig::defaults() : decon::load_config(sweep_in.config);
      const decon::LoadOptions lo{sweep_in.strict};
      const auto training = decon::load_corpus(sweep_in.train, decon::Split::training, lo);
      const auto evals = decon::load_corpus(sweep_in.eval, decon::Split::eval, lo);
      const auto ts = decon::EmbeddingStore::load(sweep_in.train_emb, sweep_in.manifest_for(sweep_in.train_manifest, sweep_in.train_emb));
      const auto es = decon::EmbeddingStore::load(sweep_in.eval_emb, sweep_in.manifest_for(sweep_in.eval_manifest, sweep_in.eval_emb));
      decon::CascadeOptions opts;
      opts.threads = resolve_threads(threads_flag);
      opts.kernel.threads = opts.threads;
      const decon::CascadeEngine engine(training, evals, ts, es, config, opts);
      const auto g = sweep_grid.empty() ? decon::default_grid() : sweep_grid;
      auto profile = sweep_axis == "tau_t" ? decon::sweep_tau_t(engine, sweep_bench, g)
                                           : decon::sweep_tau_i(engine, sweep_bench, g);
      if (sweep_k > 0) decon::attach_samples(profile, sweep_k, sweep_seed);
      write_or_print(sweep_out, decon::to_json(profile).dump(2) + "\n");
    } else if (*report) {
      std::vector<decon::ContaminationMatch> matches;
      std::size_t total = report_total, evaluations = 0;
      if (!report_run.empty()) {
        matches = decon::load_matches(fs::path(report_run) / decon::run_files::matches);
        const auto manifest = decon::load_run_manifest(report_run);
        if (total == 0) total = manifest.training_docs;
        evaluations = manifest.benchmarks.size();
      } else if (!report_matches.empty()) {
        matches = decon::load_matches(report_matches);
      } else {
        throw decon::Error(decon::ErrorKind::config, "report needs --run or --matches");
      }
      if (total == 0) throw decon::Error(decon::ErrorKind::config, "report needs --total >= 1");
      const auto r = decon::build_report(matches, total, cutoff, top_k, evaluations);
      const std::string body = report_format == "json"  ? decon::to_json(r).dump(2) + "\n"
                               : report_format == "tsv" ? decon::render_tsv(r)
                                                        : decon::render_table(r);
      write_or_print(report_out, body);
    } else if (*flops) {
      std::vector<decon::EfficiencyRecord> records;
      for (const auto& s : decon::load_model_specs(models_path)) records.push_back(decon::efficiency(s));
      if (flops_format == "json") {
        json arr = json::array();
        for (const auto& r : records) arr.push_back(decon::to_json(r));
        std::cout << arr.dump(2) << std::endl;
      } else {
        std::cout << decon::render_flops_tsv(records);
      }
    } else if (*pareto) {
      std::vector<decon::ParetoPoint> pts;
      for (const auto& s : decon::load_model_specs(models_path)) {
        if (!s.accuracy) continue;
        const auto r = decon::efficiency(s);
        pts.push_back({pareto_axis == "response" ? r.f_response : r.f_train, *s.accuracy, s.name});
      }
      json arr = json::array();
      for (const auto& p : decon::pareto_frontier(pts)) {
        arr.push_back({{"name", p.name}, {"cost", p.cost}, {"accuracy", p.accuracy}});
      }
      std::cout << json{{"axis", pareto_axis}, {"frontier", arr}}.dump(2) << std::endl;
    } else if (*serve) {
      const auto [host, port] = split_bind(bind);
      std::optional<fs::path> models;
      if (!models_path.empty()) models = models_path;
      decon::ReviewApi api(serve_run, models);
      decon::ReviewServer server(api);
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << json{{"event", "listening"}, {"host", host}, {"port", port}}.dump() << std::endl;
      server.listen(host, port);
      g_server = nullptr;
    } else if (*validate) {
      const decon::LoadOptions lo{val_in.strict};
      const auto training = decon::load_corpus(val_in.train, decon::Split::training, lo);
      const auto evals = decon::load_corpus(val_in.eval, decon::Split::eval, lo);
      const auto config = val_in.config.empty() ? decon::EngineConfig::defaults() : decon::load_config(val_in.config);
      json summary = {{"training_docs", training.size()},
                      {"skipped_training_lines", training.skipped_lines},
                      {"eval_docs", evals.size()},
                      {"skipped_eval_lines", evals.skipped_lines},
                      {"benchmarks", decon::partition_by_benchmark(evals).size()},
                      {"config_hash", decon::config_hash(config)}};
      if (!val_in.train_emb.empty() && !val_in.eval_emb.empty()) {
        const auto ts = decon::EmbeddingStore::load(val_in.train_emb, val_in.manifest_for(val_in.train_manifest, val_in.train_emb));
        const auto es = decon::EmbeddingStore::load(val_in.eval_emb, val_in.manifest_for(val_in.eval_manifest, val_in.eval_emb));
        // The engine constructor checks ids, dimensions and image references.
        decon::CascadeOptions opts;
        opts.threads = resolve_threads(threads_flag);
        opts.kernel.threads = opts.threads;
        const decon::CascadeEngine engine(training, evals, ts, es, config, opts);
        summary["dim"] = ts.dim();
        summary["train_images"] = ts.count();
        summary["eval_images"] = es.count();
      }
      std::cout << summary.dump(2) << std::endl;
    }
  } catch (const decon::Error& e) {
    print_error(decon::to_string(e.kind()), e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    print_error("internal", e.what());
    return 1;
  }
  return 0;
}
