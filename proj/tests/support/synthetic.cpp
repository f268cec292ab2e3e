#include "support/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace synth {

namespace fs = std::filesystem;

namespace {

std::string word(const char* prefix, std::size_t i) { return prefix + std::to_string(i); }

std::string sentence(std::mt19937_64& rng, std::size_t words, std::size_t vocab, const char* prefix) {
  std::uniform_int_distribution<std::size_t> pick(0, vocab - 1);
  std::string out;
  for (std::size_t i = 0; i < words; ++i) {
    if (i) out += ' ';
    out += word(prefix, pick(rng));
  }
  return out;
}

std::vector<float> gaussian(std::mt19937_64& rng, std::uint32_t dim) {
  std::normal_distribution<float> n(0.0f, 1.0f);
  std::vector<float> v(dim);
  for (auto& x : v) x = n(rng);
  return v;
}

std::vector<float> unit(std::vector<float> v) {
  double s = 0;
  for (float x : v) s += double(x) * x;
  const float inv = static_cast<float>(1.0 / std::sqrt(s));
  for (auto& x : v) x *= inv;
  return v;
}

std::size_t count_words(const std::string& s) {
  std::size_t n = 0;
  bool in = false;
  for (char c : s) {
    if (c == ' ') {
      in = false;
    } else if (!in) {
      in = true;
      ++n;
    }
  }
  return n;
}

struct Builder {
  std::mt19937_64 rng;
  std::uint32_t dim;
  std::vector<float> train_raw, eval_raw;
  std::vector<std::string> train_img_ids, eval_img_ids;

  std::string add_train_image(const std::vector<float>& v) {
    train_raw.insert(train_raw.end(), v.begin(), v.end());
    train_img_ids.push_back(word("ti", train_img_ids.size()));
    return train_img_ids.back();
  }
  std::string add_eval_image(const std::vector<float>& v) {
    eval_raw.insert(eval_raw.end(), v.begin(), v.end());
    eval_img_ids.push_back(word("ei", eval_img_ids.size()));
    return eval_img_ids.back();
  }
  std::vector<float> eval_vector(const std::string& id) const {
    const std::size_t r = std::stoul(id.substr(2));
    return {eval_raw.begin() + r * dim, eval_raw.begin() + (r + 1) * dim};
  }
  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }
  std::size_t below(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); }
};

}  // namespace

std::string random_text(std::mt19937_64& rng, std::size_t words, std::size_t vocab) {
  return sentence(rng, words, vocab, "w");
}

World make_world(const Spec& spec) {
  Builder b{std::mt19937_64(spec.seed), spec.dim, {}, {}, {}, {}};
  World w;
  w.training.split = decon::Split::training;
  w.evals.split = decon::Split::eval;

  // Eval side. A third of the texts draw from a 40-word vocabulary so that
  // unrelated pairs still share some n-grams.
  std::vector<std::vector<std::string>> images_by_benchmark(spec.benchmarks);
  for (std::size_t i = 0; i < spec.eval_docs; ++i) {
    decon::Document d;
    d.id = word("e", i);
    d.split = decon::Split::eval;
    const std::size_t bench = b.below(spec.benchmarks);
    d.benchmark = "bench_" + std::to_string(bench);
    const std::size_t vocab = b.uniform() < 0.33 ? 40 : 3000;
    d.question = random_text(b.rng, 2 + b.below(13), vocab);
    d.answer = b.uniform() < 0.1 ? "" : random_text(b.rng, 1 + b.below(10), vocab);
    if (b.uniform() < 0.2) d.question = "<image>\n" + d.question;
    if (b.uniform() < 0.03) {
      d.question = "<image>";
      d.answer.clear();
    }
    const double r = b.uniform();
    const std::size_t n_images = r < 0.05 ? 0 : (r < 0.85 ? 1 : 2);
    for (std::size_t k = 0; k < n_images; ++k) {
      auto& pool = images_by_benchmark[bench];
      if (!pool.empty() && b.uniform() < spec.shared_image_rate) {
        d.image_ids.push_back(pool[b.below(pool.size())]);
      } else {
        d.image_ids.push_back(b.add_eval_image(gaussian(b.rng, spec.dim)));
        pool.push_back(d.image_ids.back());
      }
    }
    std::sort(d.image_ids.begin(), d.image_ids.end());
    d.image_ids.erase(std::unique(d.image_ids.begin(), d.image_ids.end()), d.image_ids.end());
    w.evals.documents.push_back(std::move(d));
  }

  // Eval docs usable as leak sources: at least one image, four or more words.
  std::vector<std::size_t> sources;
  for (std::size_t i = 0; i < w.evals.size(); ++i) {
    const auto& e = w.evals.documents[i];
    if (!e.image_ids.empty() && count_words(e.question) + count_words(e.answer) >= 5 &&
        e.question.rfind("<image>", 0) != 0) {
      sources.push_back(i);
    }
  }
  if (sources.empty() && (spec.leaks || spec.same_image || spec.template_text || spec.near_misses)) {
    throw std::runtime_error("synthetic world has no usable leak source");
  }

  struct Pending {
    decon::Document doc;
    int kind = 0;  // 0 random, 1 leak, 2 same image, 3 template
  };
  std::vector<Pending> pending;
  auto random_images = [&](decon::Document& d, std::size_t max_images) {
    const std::size_t n = b.below(max_images + 1);
    for (std::size_t k = 0; k < n; ++k) d.image_ids.push_back(b.add_train_image(gaussian(b.rng, spec.dim)));
  };
  auto padding = [&](std::size_t words) { return sentence(b.rng, words, 5000, "pad"); };

  for (std::size_t i = 0; i < spec.leaks; ++i) {
    const auto& e = w.evals.documents[sources[b.below(sources.size())]];
    decon::Document d;
    d.image_ids.push_back(b.add_train_image(b.eval_vector(e.image_ids[b.below(e.image_ids.size())])));
    if (b.uniform() < 0.5) random_images(d, 1);
    // Verbatim Q+A inside a text five times its length.
    const std::size_t len = count_words(e.question) + count_words(e.answer);
    const std::size_t before = b.below(4 * len + 1);
    d.question = padding(before) + (before ? " " : "") + e.question;
    d.answer = e.answer + " " + padding(4 * len - before + 1);
    pending.push_back({std::move(d), 1});
  }
  for (std::size_t i = 0; i < spec.same_image; ++i) {
    const auto& e = w.evals.documents[sources[b.below(sources.size())]];
    decon::Document d;
    d.image_ids.push_back(b.add_train_image(b.eval_vector(e.image_ids.front())));
    d.question = sentence(b.rng, 5 + b.below(10), 500, "other");
    d.answer = sentence(b.rng, 1 + b.below(8), 500, "other");
    pending.push_back({std::move(d), 2});
  }
  for (std::size_t i = 0; i < spec.template_text; ++i) {
    const auto& e = w.evals.documents[sources[b.below(sources.size())]];
    decon::Document d;
    d.image_ids.push_back(b.add_train_image(gaussian(b.rng, spec.dim)));
    d.question = e.question;
    d.answer = e.answer;
    pending.push_back({std::move(d), 3});
  }
  // Perturbed images with sims spread across roughly [0.85, 1] and texts with
  // a random share of words replaced.
  for (std::size_t i = 0; i < spec.near_misses; ++i) {
    const auto& e = w.evals.documents[sources[b.below(sources.size())]];
    decon::Document d;
    auto v = unit(b.eval_vector(e.image_ids[b.below(e.image_ids.size())]));
    const double sigma = b.uniform() * 0.6 / std::sqrt(double(spec.dim));
    const auto noise = gaussian(b.rng, spec.dim);
    for (std::size_t k = 0; k < v.size(); ++k) v[k] += static_cast<float>(sigma) * noise[k];
    d.image_ids.push_back(b.add_train_image(v));
    const double p = b.uniform() * 0.5;
    auto mutate = [&](const std::string& s) {
      std::string out, tok;
      std::size_t pos = 0;
      while (pos <= s.size()) {
        const auto sp = s.find(' ', pos);
        tok = s.substr(pos, sp == std::string::npos ? std::string::npos : sp - pos);
        if (!out.empty()) out += ' ';
        out += b.uniform() < p ? word("mut", b.below(100000)) : tok;
        if (sp == std::string::npos) break;
        pos = sp + 1;
      }
      return out;
    };
    d.question = (b.uniform() < 0.5 ? padding(b.below(10)) + " " : std::string()) + mutate(e.question);
    d.answer = mutate(e.answer);
    pending.push_back({std::move(d), 0});
  }
  const std::size_t planted = pending.size();
  for (std::size_t i = planted; i < std::max(spec.train_docs, planted); ++i) {
    decon::Document d;
    random_images(d, 3);
    const std::size_t vocab = b.uniform() < 0.3 ? 40 : 3000;
    d.question = random_text(b.rng, 3 + b.below(20), vocab);
    d.answer = random_text(b.rng, b.below(40), vocab);
    pending.push_back({std::move(d), 0});
  }

  std::shuffle(pending.begin(), pending.end(), b.rng);
  for (std::size_t i = 0; i < pending.size(); ++i) {
    auto& p = pending[i];
    p.doc.id = word("t", i);
    p.doc.split = decon::Split::training;
    if (p.kind == 1) w.leak_ids.push_back(p.doc.id);
    if (p.kind == 2) w.same_image_ids.push_back(p.doc.id);
    if (p.kind == 3) w.template_ids.push_back(p.doc.id);
    w.training.documents.push_back(std::move(p.doc));
  }

  w.train_raw = b.train_raw;
  w.eval_raw = b.eval_raw;
  w.train_store = decon::EmbeddingStore::from_rows(spec.dim, b.train_raw, b.train_img_ids);
  w.eval_store = decon::EmbeddingStore::from_rows(spec.dim, b.eval_raw, b.eval_img_ids);
  return w;
}

decon::EngineConfig random_config(const World& world, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto uniform = [&] { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); };
  auto pick = [&](std::initializer_list<double> xs) { return *(xs.begin() + std::uniform_int_distribution<std::size_t>(0, xs.size() - 1)(rng)); };

  decon::EngineConfig c = decon::EngineConfig::defaults();
  auto& base = c.policies.at(decon::kDefaultPolicyKey);
  base.tau_i = pick({0.9, 0.93, 0.95, 0.97});
  base.tau_t = pick({0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0});
  std::vector<std::string> names;
  for (const auto& e : world.evals.documents) names.push_back(e.benchmark);
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  for (const auto& name : names) {
    if (uniform() > 0.4) continue;
    decon::BenchmarkPolicy p = base;
    p.benchmark = name;
    const double r = uniform();
    if (r < 0.3) {
      p.mode = decon::PolicyMode::image_only;
      if (uniform() < 0.5) {
        p.tau_i = 0.995;
      } else {
        p.tau_i = pick({0.9, 0.95, 0.97});
        p.acknowledge_low_tau_i = true;
      }
    } else {
      p.tau_t = pick({0.3, 0.5, 0.75, 0.8, 0.95});
      p.tau_i = pick({0.9, 0.95, 0.99});
      p.n_default = static_cast<int>(pick({3, 4, 5}));
      p.short_threshold = p.n_default + static_cast<int>(pick({0, 3, 6}));
    }
    decon::validate_policy(p);
    c.policies[name] = p;
  }
  return c;
}

void write_world(const World& w, const fs::path& dir) {
  fs::create_directories(dir);
  auto write_corpus = [](const decon::Corpus& c, const fs::path& p) {
    std::ofstream out(p, std::ios::binary);
    for (const auto& d : c.documents) out << decon::to_json(d).dump() << '\n';
  };
  write_corpus(w.training, dir / "train.jsonl");
  write_corpus(w.evals, dir / "eval.jsonl");
  auto ids = [](const decon::EmbeddingStore& s) {
    std::vector<std::string> v;
    for (std::size_t r = 0; r < s.count(); ++r) v.push_back(s.image_id(r));
    return v;
  };
  decon::write_demb(dir / "train.demb", w.train_store.dim(), w.train_raw);
  decon::write_manifest(dir / "train.manifest.jsonl", ids(w.train_store));
  decon::write_demb(dir / "eval.demb", w.eval_store.dim(), w.eval_raw);
  decon::write_manifest(dir / "eval.manifest.jsonl", ids(w.eval_store));
}

fs::path temp_dir(const std::string& tag) {
  static std::mt19937_64 rng(std::random_device{}());
  for (;;) {
    char suffix[17];
    std::snprintf(suffix, sizeof suffix, "%016llx", static_cast<unsigned long long>(rng()));
    fs::path p = fs::temp_directory_path() / ("decon-" + tag + "-" + suffix);
    if (fs::create_directories(p)) return p;
  }
}

}  // namespace synth
