// SPDX-License-Identifier: Apache-2.0
//
// Batch experiment driver: data preparation, per-seed runs with a manifest,
// seed-averaged summaries, parameter sweeps, the language-model augmentation
// study and reservoir-threshold calibration. The command-line tool is a thin
// layer over the cmd_* functions here.

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "cvaegen/corpus.hpp"
#include "cvaegen/cvae/checkpoint.hpp"
#include "cvaegen/cvae/config.hpp"
#include "cvaegen/cvae/generate.hpp"
#include "cvaegen/cvae/trainer.hpp"
#include "cvaegen/embeddings.hpp"
#include "cvaegen/error.hpp"
#include "cvaegen/metrics.hpp"
#include "cvaegen/ngram_lm.hpp"
#include "cvaegen/proxy_corpus.hpp"
#include "cvaegen/rng.hpp"
#include "cvaegen/transfer.hpp"

namespace cvaegen::pipeline {

namespace fs = std::filesystem;

/// Relative data paths resolve against this directory when set.
inline constexpr const char* kDataRootEnv = "CVAEGEN_DATA_ROOT";

enum class TransferMode { kQueryTransfer, kPseudoLabel };

inline const char* mode_name(TransferMode m) {
  return m == TransferMode::kQueryTransfer ? "transfer" : "pseudo";
}

struct DataSources {
  std::string root;  // overrides the environment variable when non-empty
  // Either all three paths are set or none is; none selects the built-in proxy corpus.
  std::string train;
  std::string reservoir;
  std::string test;
  std::string embeddings;  // GloVe text file; empty trains co-occurrence vectors on train + reservoir
  int embedding_dim = 100;
  ProxyCorpusOptions proxy;

  bool uses_proxy() const { return train.empty() && reservoir.empty() && test.empty(); }

  fs::path resolve(const std::string& p) const {
    if (p.empty()) return {};
    fs::path path(p);
    if (path.is_absolute()) return path;
    std::string base = root;
    if (base.empty()) {
      if (const char* env = std::getenv(kDataRootEnv)) base = env;
    }
    return base.empty() ? path : fs::path(base) / path;
  }
};

struct LmStudyConfig {
  std::vector<std::size_t> d0_sizes{125, 250, 500, 1000};
  int order = 4;
  double discount = 0.75;
  std::size_t selected_models = 3;
};

struct ExperimentConfig {
  DataSources data;
  std::size_t d0_size = 200;
  std::size_t reservoir_size = 200;  // sentences drawn from the beta-selected pool
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  TransferMode mode = TransferMode::kQueryTransfer;
  double alpha = 0.2;
  double beta = 0.9;
  cvae::CvaeConfig cvae;
  std::size_t generation_budget = 1000;          // split evenly over the intents
  std::string originality_reference = "d0";      // "d0" or "mixture"
  double augmentation_ratio = 1.0;
  LmStudyConfig lm;
  bool save_checkpoints = true;
  // Execution settings: accepted from JSON but never serialized, so they do
  // not change any output file.
  int jobs = 1;
  std::string output_dir = "runs";

  void validate() const {
    if (seeds.empty()) throw ValidationError("config: seeds must not be empty");
    if (!(augmentation_ratio > 0.0)) throw ValidationError("config: augmentation_ratio must be > 0");
    if (alpha < 0.0) throw ValidationError("config: alpha must be >= 0");
    if (beta < -1.0 || beta > 1.0) throw ValidationError("config: beta must lie in [-1, 1]");
    if (d0_size == 0) throw ValidationError("config: d0_size must be positive");
    if (generation_budget == 0) throw ValidationError("config: generation_budget must be positive");
    if (originality_reference != "d0" && originality_reference != "mixture") {
      throw ValidationError("config: originality_reference must be \"d0\" or \"mixture\"");
    }
    if (jobs < 1) throw ValidationError("config: jobs must be >= 1");
    if (cvae.embed_dim != data.embedding_dim) {
      throw ValidationError("config: cvae.embed_dim must equal data.embedding_dim");
    }
    if (lm.d0_sizes.empty() || lm.selected_models == 0) throw ValidationError("config: empty lm study");
    const bool any = !data.train.empty() || !data.reservoir.empty() || !data.test.empty();
    const bool all = !data.train.empty() && !data.reservoir.empty() && !data.test.empty();
    if (any && !all) throw ValidationError("config: data.train, data.reservoir and data.test go together");
    for (const auto* p : {&data.train, &data.reservoir, &data.test, &data.embeddings}) {
      if (!p->empty() && !fs::exists(data.resolve(*p))) {
        throw IoError("config: path does not exist: " + data.resolve(*p).string());
      }
    }
  }
};

// ---------------------------------------------------------------------------
// JSON schema

inline void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  j = nlohmann::json{
      {"data",
       {{"root", c.data.root},
        {"train", c.data.train},
        {"reservoir", c.data.reservoir},
        {"test", c.data.test},
        {"embeddings", c.data.embeddings},
        {"embedding_dim", c.data.embedding_dim},
        {"proxy",
         {{"train_per_intent", c.data.proxy.train_per_intent},
          {"validate_per_intent", c.data.proxy.validate_per_intent},
          {"reservoir_per_intent", c.data.proxy.reservoir_per_intent},
          {"seed", c.data.proxy.seed}}}}},
      {"d0_size", c.d0_size},
      {"reservoir_size", c.reservoir_size},
      {"seeds", c.seeds},
      {"mode", mode_name(c.mode)},
      {"alpha", c.alpha},
      {"beta", c.beta},
      {"cvae", c.cvae},
      {"generation_budget", c.generation_budget},
      {"originality_reference", c.originality_reference},
      {"augmentation_ratio", c.augmentation_ratio},
      {"lm",
       {{"d0_sizes", c.lm.d0_sizes},
        {"order", c.lm.order},
        {"discount", c.lm.discount},
        {"selected_models", c.lm.selected_models}}},
      {"save_checkpoints", c.save_checkpoints}};
}

inline void from_json(const nlohmann::json& j, ExperimentConfig& c) {
  auto get = [](const nlohmann::json& obj, const char* key, auto& field) {
    if (obj.contains(key)) obj.at(key).get_to(field);
  };
  static const std::set<std::string> known{"data", "d0_size", "reservoir_size", "seeds", "mode", "alpha", "beta",
                                           "cvae", "generation_budget", "originality_reference",
                                           "augmentation_ratio", "lm", "jobs", "save_checkpoints", "output_dir"};
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw ValidationError("config: unknown key '" + key + "'");
  }
  if (j.contains("data")) {
    const auto& d = j.at("data");
    get(d, "root", c.data.root);
    get(d, "train", c.data.train);
    get(d, "reservoir", c.data.reservoir);
    get(d, "test", c.data.test);
    get(d, "embeddings", c.data.embeddings);
    get(d, "embedding_dim", c.data.embedding_dim);
    if (d.contains("proxy")) {
      const auto& p = d.at("proxy");
      get(p, "train_per_intent", c.data.proxy.train_per_intent);
      get(p, "validate_per_intent", c.data.proxy.validate_per_intent);
      get(p, "reservoir_per_intent", c.data.proxy.reservoir_per_intent);
      get(p, "seed", c.data.proxy.seed);
    }
  }
  get(j, "d0_size", c.d0_size);
  get(j, "reservoir_size", c.reservoir_size);
  get(j, "seeds", c.seeds);
  if (j.contains("mode")) {
    const auto m = j.at("mode").get<std::string>();
    if (m == "transfer") {
      c.mode = TransferMode::kQueryTransfer;
    } else if (m == "pseudo") {
      c.mode = TransferMode::kPseudoLabel;
    } else {
      throw ValidationError("config: mode must be \"transfer\" or \"pseudo\"");
    }
  }
  get(j, "alpha", c.alpha);
  get(j, "beta", c.beta);
  if (j.contains("cvae")) cvae::from_json(j.at("cvae"), c.cvae);
  get(j, "generation_budget", c.generation_budget);
  get(j, "originality_reference", c.originality_reference);
  get(j, "augmentation_ratio", c.augmentation_ratio);
  if (j.contains("lm")) {
    const auto& l = j.at("lm");
    get(l, "d0_sizes", c.lm.d0_sizes);
    get(l, "order", c.lm.order);
    get(l, "discount", c.lm.discount);
    get(l, "selected_models", c.lm.selected_models);
  }
  get(j, "jobs", c.jobs);
  get(j, "save_checkpoints", c.save_checkpoints);
  get(j, "output_dir", c.output_dir);
}

/// Applies "a.b.c=value" assignments. The value is parsed as JSON when it
/// can be (numbers, booleans, arrays) and taken as a string otherwise.
inline void apply_overrides(nlohmann::json& j, const std::vector<std::string>& assignments) {
  for (const auto& a : assignments) {
    const auto eq = a.find('=');
    if (eq == std::string::npos || eq == 0) throw ValidationError("override '" + a + "' is not key=value");
    std::string pointer = "/" + a.substr(0, eq);
    std::replace(pointer.begin(), pointer.end(), '.', '/');
    const std::string raw = a.substr(eq + 1);
    nlohmann::json value = nlohmann::json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;
    j[nlohmann::json::json_pointer(pointer)] = value;
  }
}

/// Reads a config file, or the "config" member of a run manifest, then
/// applies overrides on top of the defaults.
inline ExperimentConfig load_experiment_config(const std::optional<fs::path>& path,
                                               const std::vector<std::string>& overrides = {}) {
  nlohmann::json j = nlohmann::json::object();
  if (path) {
    j = detail::parse_json_file(*path);
    if (j.contains("manifest_version") && j.contains("config")) j = nlohmann::json(j.at("config"));
  }
  apply_overrides(j, overrides);
  ExperimentConfig c;
  try {
    from_json(j, c);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  return c;
}

// ---------------------------------------------------------------------------
// Shared data

struct ExperimentData {
  Dataset train;      // labelled pool for D0 draws; also the oracle and BLEU reference
  Dataset reservoir;  // unlabelled pool
  Dataset test;       // held-out sentences for the oracle check and the LM test pool
  EmbeddingTable table{1};
  OracleClassifier oracle;
  double oracle_test_accuracy = 0.0;
  std::string source;
};

inline EmbeddingTable prepare_embeddings(const DataSources& src, const Dataset& train, const Dataset& reservoir) {
  if (!src.embeddings.empty()) return load_word_embeddings(src.resolve(src.embeddings), src.embedding_dim).table;
  std::vector<std::vector<std::string>> sentences;
  for (const auto* d : {&train, &reservoir}) {
    for (const auto& u : d->utterances) sentences.push_back(tokenize(u.raw_text));
  }
  return train_cooccurrence_embeddings(sentences, src.embedding_dim);
}

inline ExperimentData load_experiment_data(const DataSources& src, std::ostream* log = nullptr) {
  ExperimentData d;
  if (src.uses_proxy()) {
    auto corpus = make_proxy_corpus(src.proxy);
    d.train = std::move(corpus.train);
    d.reservoir = std::move(corpus.reservoir);
    d.test = std::move(corpus.validate);
    d.source = "proxy";
  } else {
    d.train = load_dataset(src.resolve(src.train));
    d.reservoir = load_dataset(src.resolve(src.reservoir));
    d.test = load_dataset(src.resolve(src.test));
    d.source = src.resolve(src.train).string();
  }
  d.table = prepare_embeddings(src, d.train, d.reservoir);
  d.oracle = train_oracle(d.train, d.table);
  d.oracle_test_accuracy = oracle_accuracy(d.oracle, d.test, d.table);
  if (log) {
    *log << "data: " << d.source << ", " << d.train.size() << " train, " << d.reservoir.size() << " reservoir, "
         << d.test.size() << " test; oracle test accuracy " << d.oracle_test_accuracy << '\n';
  }
  return d;
}

// ---------------------------------------------------------------------------
// One seed

/// Streams derived from a run seed. Arms that share a seed share D0 and the
/// model initialization.
namespace streams {
inline constexpr std::uint64_t kD0 = 1;
inline constexpr std::uint64_t kReservoir = 2;
inline constexpr std::uint64_t kMixture = 3;
inline constexpr std::uint64_t kModel = 4;
inline constexpr std::uint64_t kRealHoldout = 5;
inline constexpr std::uint64_t kGenerationBase = 100;
}  // namespace streams

struct SeedOutcome {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  fs::path dir;
  Dataset d0;
  std::size_t selected = 0;        // reservoir sentences above beta
  std::size_t reservoir_used = 0;  // drawn into the training set
  std::size_t mixture_size = 0;
  std::map<std::string, std::vector<Pattern>> generated;
  std::optional<GenerationReport> report;
};

inline std::size_t per_intent_budget(const ExperimentConfig& c, std::size_t n_intents) {
  return std::max<std::size_t>(1, c.generation_budget / std::max<std::size_t>(1, n_intents));
}

inline nlohmann::json seed_record(const ExperimentConfig& c, std::uint64_t seed) {
  return {{"config", c}, {"seed", seed}};
}

inline void write_text(const fs::path& p, const std::string& body) {
  std::ofstream out(p);
  if (!out) throw IoError("cannot write " + p.string());
  out << body;
}

inline void write_generated_tsv(const std::map<std::string, std::vector<Pattern>>& gen, std::ostream& out) {
  out << "intent\tpattern\n";
  for (const auto& [intent, list] : gen) {
    for (const auto& p : list) out << intent << '\t' << p.joined() << '\n';
  }
}

/// The reservoir sentences a seed trains on: the beta-selected pool,
/// shuffled by the seed, truncated to reservoir_size.
inline Dataset draw_reservoir(const ExperimentConfig& c, const ExperimentData& data, const Dataset& d0,
                              std::uint64_t seed, std::size_t* selected = nullptr) {
  if (c.reservoir_size == 0) return Dataset{};
  const auto centroids = intent_centroids(d0, data.table);
  const Dataset sel = select_reservoir(data.reservoir, centroids, c.beta, data.table);
  if (selected) *selected = sel.size();
  std::vector<std::size_t> order(sel.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(Rng::derive(seed, streams::kReservoir));
  rng.shuffle(order);
  order.resize(std::min(order.size(), c.reservoir_size));
  return sel.select(order);
}

inline SeedOutcome run_seed(const ExperimentConfig& c, const ExperimentData& data, std::uint64_t seed,
                            const fs::path& dir) {
  SeedOutcome o;
  o.seed = seed;
  o.dir = dir;
  try {
    fs::create_directories(dir);
    write_text(dir / "config.json", seed_record(c, seed).dump(2) + "\n");

    o.d0 = subsample(data.train, c.d0_size, Rng::derive(seed, streams::kD0));
    const Dataset drawn = draw_reservoir(c, data, o.d0, seed, &o.selected);
    o.reservoir_used = drawn.size();
    const Vocabulary vocab = build_vocabulary(std::vector<const Dataset*>{&o.d0, &drawn});
    const int max_len = c.cvae.max_len;

    LabeledMixture mixture;
    if (c.mode == TransferMode::kQueryTransfer) {
      mixture = build_training_mixture(o.d0, drawn, drawn.size(), c.alpha, vocab,
                                       Rng::derive(seed, streams::kMixture), max_len);
    } else {
      mixture = build_pseudo_labelled_set(o.d0, drawn, intent_centroids(o.d0, data.table), c.beta, data.table,
                                          vocab, max_len);
    }
    o.mixture_size = mixture.size();
    {
      std::ofstream out(dir / "mixture.jsonl");
      dump_mixture_jsonl(mixture, out);
    }

    cvae::CvaeConfig cfg = c.cvae;
    cfg.seed = Rng::derive(seed, streams::kModel);
    auto fitted = cvae::fit<float>(cfg, mixture, vocab, &data.table);
    {
      std::ofstream out(dir / "training_log.csv");
      cvae::write_training_log_csv(fitted.log, out);
    }
    if (c.save_checkpoints) {
      cfg.vocab_size = static_cast<int>(vocab.size());
      cfg.n_classes = mixture.num_classes();
      cvae::save_checkpoint(cvae::Checkpoint<float>{cfg, vocab, mixture.class_labels, fitted.params},
                            dir / "checkpoint.json");
    }

    const std::size_t n = per_intent_budget(c, o.d0.intents.size());
    for (std::size_t k = 0; k < o.d0.intents.size(); ++k) {
      o.generated[o.d0.intents[k]] =
          cvae::generate<float>(fitted.params, vocab, static_cast<int>(k), static_cast<int>(n),
                                Rng::derive(seed, streams::kGenerationBase + k), max_len,
                                static_cast<float>(cfg.tau));
    }
    {
      std::ofstream out(dir / "generated.tsv");
      write_generated_tsv(o.generated, out);
    }

    std::unordered_set<Pattern, PatternHash> training;
    if (c.originality_reference == "d0") {
      training.insert(o.d0.patterns.begin(), o.d0.patterns.end());
    } else {
      for (const auto& ex : mixture.examples) training.insert(ex.pattern);
    }
    o.report = evaluate_generation(o.generated, data.train, training, data.oracle, data.table);
    {
      std::ofstream out(dir / "report.csv");
      write_report_csv(*o.report, out);
    }
    {
      std::ofstream out(dir / "audit.csv");
      write_audit_csv(*o.report, out);
    }
    nlohmann::ordered_json rj = report_to_json(*o.report);
    rj["seed"] = seed;
    rj["config"] = nlohmann::json(c);
    write_text(dir / "report.json", rj.dump(2) + "\n");
    o.ok = true;
  } catch (const std::exception& e) {
    o.ok = false;
    o.error = e.what();
    o.report.reset();
    std::ofstream(dir / "error.txt") << o.error << '\n';
  }
  return o;
}

// ---------------------------------------------------------------------------
// Pipeline

struct MetricSummary {
  std::string metric;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for a single value
  std::size_t n = 0;
};

/// Mean and sample standard deviation of each aggregate metric over the
/// successful seeds that define it.
inline std::vector<MetricSummary> summarize(const std::vector<SeedOutcome>& seeds) {
  std::vector<MetricSummary> out;
  for (const auto* name : GenerationReport::kMetricNames) {
    std::vector<double> v;
    for (const auto& s : seeds) {
      if (!s.ok || !s.report) continue;
      if (auto x = s.report->metric(name)) v.push_back(*x);
    }
    MetricSummary m{name, 0.0, 0.0, v.size()};
    if (!v.empty()) {
      for (double x : v) m.mean += x;
      m.mean /= static_cast<double>(v.size());
      if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - m.mean) * (x - m.mean);
        m.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
      }
    }
    out.push_back(m);
  }
  return out;
}

inline const MetricSummary& find_metric(const std::vector<MetricSummary>& s, std::string_view name) {
  for (const auto& m : s) {
    if (m.metric == name) return m;
  }
  throw ValidationError("no summary for metric '" + std::string(name) + "'");
}

struct PipelineResult {
  fs::path run_dir;
  std::vector<SeedOutcome> seeds;
  std::vector<MetricSummary> summary;

  std::size_t failures() const {
    return static_cast<std::size_t>(std::count_if(seeds.begin(), seeds.end(), [](const auto& s) { return !s.ok; }));
  }
};

inline std::string seed_dir_name(std::uint64_t seed) { return "seed_" + std::to_string(seed); }

inline void write_summary_files(const ExperimentConfig& c, const PipelineResult& r) {
  std::ostringstream csv;
  csv.precision(10);
  csv << "metric,mean,std,n\n";
  for (const auto& m : r.summary) csv << m.metric << ',' << m.mean << ',' << m.std << ',' << m.n << '\n';
  write_text(r.run_dir / "summary.csv", csv.str());

  std::ostringstream seeds;
  seeds.precision(10);
  seeds << "seed,status";
  for (const auto* name : GenerationReport::kMetricNames) seeds << ',' << name;
  seeds << '\n';
  for (const auto& s : r.seeds) {
    seeds << s.seed << ',' << (s.ok ? "ok" : "failed");
    for (const auto* name : GenerationReport::kMetricNames) {
      seeds << ',';
      if (s.report) {
        if (auto v = s.report->metric(name)) seeds << *v;
      }
    }
    seeds << '\n';
  }
  write_text(r.run_dir / "seeds.csv", seeds.str());

  nlohmann::ordered_json sj;
  sj["config"] = nlohmann::json(c);
  for (const auto& m : r.summary) sj["metrics"][m.metric] = {{"mean", m.mean}, {"std", m.std}, {"n", m.n}};
  write_text(r.run_dir / "summary.json", sj.dump(2) + "\n");

  nlohmann::ordered_json man;
  man["manifest_version"] = 1;
  man["config"] = nlohmann::json(c);
  man["runs"] = nlohmann::json::array();
  for (const auto& s : r.seeds) {
    nlohmann::ordered_json e;
    e["seed"] = s.seed;
    e["status"] = s.ok ? "ok" : "failed";
    if (!s.ok) e["error"] = s.error;
    e["dir"] = seed_dir_name(s.seed);
    e["reservoir_selected"] = s.selected;
    e["reservoir_used"] = s.reservoir_used;
    e["mixture_size"] = s.mixture_size;
    man["runs"].push_back(e);
  }
  write_text(r.run_dir / "manifest.json", man.dump(2) + "\n");
}

/// Runs every seed (in parallel when jobs > 1), writes per-seed outputs
/// under run_dir/seed_<s>, then the manifest and the seed-averaged summary.
/// A failing seed is recorded and the others proceed.
inline PipelineResult cmd_pipeline(const ExperimentConfig& c, const ExperimentData& data, const fs::path& run_dir,
                                   std::ostream* log = nullptr) {
  c.validate();
  PipelineResult r;
  r.run_dir = run_dir;
  fs::create_directories(run_dir);
  r.seeds.resize(c.seeds.size());
  std::mutex log_mutex;
  auto work = [&](std::size_t i) {
    r.seeds[i] = run_seed(c, data, c.seeds[i], run_dir / seed_dir_name(c.seeds[i]));
    if (log) {
      std::lock_guard lock(log_mutex);
      const auto& s = r.seeds[i];
      *log << run_dir.string() << " seed " << s.seed << ": ";
      if (s.ok) {
        *log << "accuracy " << s.report->aggregate.conditioning_accuracy << ", quality "
             << s.report->aggregate.bleu_quality.value_or(NAN) << ", diversity "
             << s.report->aggregate.bleu_diversity.value_or(NAN) << ", originality "
             << s.report->aggregate.originality.value_or(NAN) << '\n';
      } else {
        *log << "FAILED: " << s.error << '\n';
      }
    }
  };
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(c.jobs), c.seeds.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < c.seeds.size(); ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < workers; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < c.seeds.size(); i = next++) work(i);
      });
    }
    for (auto& th : pool) th.join();
  }
  r.summary = summarize(r.seeds);
  write_summary_files(c, r);
  return r;
}

inline PipelineResult cmd_pipeline(const ExperimentConfig& c, std::ostream* log = nullptr) {
  c.validate();
  const auto data = load_experiment_data(c.data, log);
  return cmd_pipeline(c, data, c.output_dir, log);
}

// ---------------------------------------------------------------------------
// Sweeps

enum class SweepParameter { kAlpha, kBeta, kReservoirSize };

inline SweepParameter parse_sweep_parameter(std::string_view s) {
  if (s == "alpha") return SweepParameter::kAlpha;
  if (s == "beta") return SweepParameter::kBeta;
  if (s == "reservoir_size") return SweepParameter::kReservoirSize;
  throw ValidationError("sweep parameter must be alpha, beta or reservoir_size");
}

inline const char* sweep_parameter_name(SweepParameter p) {
  switch (p) {
    case SweepParameter::kAlpha:
      return "alpha";
    case SweepParameter::kBeta:
      return "beta";
    case SweepParameter::kReservoirSize:
      return "reservoir_size";
  }
  return "";
}

inline std::string format_value(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

inline ExperimentConfig with_parameter(ExperimentConfig c, SweepParameter p, double v) {
  switch (p) {
    case SweepParameter::kAlpha:
      c.alpha = v;
      break;
    case SweepParameter::kBeta:
      c.beta = v;
      break;
    case SweepParameter::kReservoirSize:
      if (v < 0 || v != std::floor(v)) throw ValidationError("reservoir_size values must be whole numbers");
      c.reservoir_size = static_cast<std::size_t>(v);
      break;
  }
  return c;
}

struct SweepPoint {
  double value = 0.0;
  PipelineResult result;
};

/// One pipeline per value under output/<parameter>_<value>, plus
/// sweep_<parameter>.csv with (parameter, value, metric, mean, std, n) rows.
inline std::vector<SweepPoint> cmd_sweep(const ExperimentConfig& c, const ExperimentData& data, SweepParameter p,
                                         const std::vector<double>& values, const fs::path& out_dir,
                                         std::ostream* log = nullptr) {
  if (values.empty()) throw ValidationError("sweep: no values");
  std::vector<SweepPoint> points;
  for (double v : values) {
    const auto cv = with_parameter(c, p, v);
    const auto dir = out_dir / (std::string(sweep_parameter_name(p)) + "_" + format_value(v));
    points.push_back({v, cmd_pipeline(cv, data, dir, log)});
  }
  std::ostringstream csv;
  csv.precision(10);
  csv << "parameter,value,metric,mean,std,n\n";
  for (const auto& pt : points) {
    for (const auto& m : pt.result.summary) {
      csv << sweep_parameter_name(p) << ',' << format_value(pt.value) << ',' << m.metric << ',' << m.mean << ','
          << m.std << ',' << m.n << '\n';
    }
  }
  fs::create_directories(out_dir);
  write_text(out_dir / (std::string("sweep_") + sweep_parameter_name(p) + ".csv"), csv.str());
  write_text(out_dir / "config.json", nlohmann::json(c).dump(2) + "\n");
  return points;
}

// ---------------------------------------------------------------------------
// Language-model augmentation study

/// Sum of the four aggregate metrics, missing values counting as 0. Used to
/// pick the models whose generations feed the LM study.
inline double metric_sum(const GenerationReport& r) {
  double s = 0.0;
  for (const auto* name : GenerationReport::kMetricNames) s += r.metric(name).value_or(0.0);
  return s;
}

/// Up to n distinct generated patterns absent from D0, in generation order
/// (intents alphabetically, then sample order).
inline std::vector<Pattern> novel_generated(const std::map<std::string, std::vector<Pattern>>& generated,
                                            const std::vector<Pattern>& d0, std::size_t n) {
  std::set<Pattern> seen(d0.begin(), d0.end());
  std::vector<Pattern> out;
  for (const auto& [intent, list] : generated) {
    for (const auto& p : list) {
      if (out.size() == n) return out;
      if (p.tokens.empty()) continue;
      if (seen.insert(p).second) out.push_back(p);
    }
  }
  return out;
}

/// n distinct real patterns from the pool, none of which occur in D0.
inline std::vector<Pattern> real_holdout(const Dataset& pool, const std::vector<Pattern>& d0, std::size_t n,
                                         std::uint64_t seed) {
  std::vector<std::size_t> order(pool.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  std::set<Pattern> seen(d0.begin(), d0.end());
  std::vector<Pattern> out;
  for (auto i : order) {
    if (out.size() == n) break;
    if (seen.insert(pool.patterns[i]).second) out.push_back(pool.patterns[i]);
  }
  if (out.size() < n) {
    throw ValidationError("lm-eval: only " + std::to_string(out.size()) + " real sentences outside D0, " +
                          std::to_string(n) + " needed for the reference set");
  }
  return out;
}

struct LmRow {
  std::size_t d0_size = 0;
  std::uint64_t seed = 0;
  double metric_sum = 0.0;
  std::size_t added_generated = 0;
  std::size_t added_real = 0;
  lm::AugmentationResult result;
};

struct LmEvalResult {
  std::vector<LmRow> rows;                     // selected models only
  std::map<std::size_t, lm::AugmentationResult> mean_by_size;  // perplexities averaged over selected models
  std::vector<PipelineResult> runs;            // candidate runs per size
};

inline LmRow augmentation_row(const ExperimentConfig& c, const ExperimentData& data, const SeedOutcome& s) {
  const std::size_t n_new =
      static_cast<std::size_t>(std::llround(c.augmentation_ratio * static_cast<double>(s.d0.size())));
  const auto gen = novel_generated(s.generated, s.d0.patterns, n_new);
  const auto real = real_holdout(data.train, s.d0.patterns, n_new, Rng::derive(s.seed, streams::kRealHoldout));
  std::vector<Pattern> d_aug = s.d0.patterns, d_ref = s.d0.patterns;
  d_aug.insert(d_aug.end(), gen.begin(), gen.end());
  d_ref.insert(d_ref.end(), real.begin(), real.end());
  LmRow row;
  row.d0_size = s.d0.size();
  row.seed = s.seed;
  row.metric_sum = metric_sum(*s.report);
  row.added_generated = gen.size();
  row.added_real = real.size();
  row.result = lm::augmentation_report(s.d0.patterns, d_aug, d_ref, data.test.patterns, c.lm.discount, c.lm.order);
  return row;
}

/// Pattern-occurrence rows: each distinct generated pattern with its count
/// among the generations, in D0 and in the full labelled corpus.
inline void write_occurrences(const SeedOutcome& s, const Dataset& corpus, std::ostream& out) {
  std::map<Pattern, long> d0_counts, corpus_counts;
  for (const auto& p : s.d0.patterns) ++d0_counts[p];
  for (const auto& p : corpus.patterns) ++corpus_counts[p];
  for (const auto& [intent, list] : s.generated) {
    std::map<Pattern, long> gen_counts;
    for (const auto& p : list) ++gen_counts[p];
    std::vector<std::pair<Pattern, long>> rows(gen_counts.begin(), gen_counts.end());
    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    for (const auto& [p, n] : rows) {
      auto lookup = [&](const std::map<Pattern, long>& m) {
        auto it = m.find(p);
        return it == m.end() ? 0L : it->second;
      };
      out << s.d0.size() << ',' << s.seed << ',' << csv_escape(intent) << ',' << csv_escape(p.joined()) << ','
          << n << ',' << lookup(d0_counts) << ',' << lookup(corpus_counts) << '\n';
    }
  }
}

/// For each D0 size: one pipeline over the configured seeds, the
/// selected_models best runs by metric_sum (lower seed on ties), and an
/// augmentation report for each of them.
inline LmEvalResult cmd_lm_eval(const ExperimentConfig& c, const ExperimentData& data, const fs::path& out_dir,
                                std::ostream* log = nullptr) {
  LmEvalResult res;
  std::ostringstream table, occ;
  table.precision(10);
  table << "d0_size,seed,metric_sum,added_generated,added_real,aug_size,ref_size,test_size,vocabulary_size,"
           "ppl_d0,ppl_aug,ppl_ref,rel_aug_percent,rel_ref_percent\n";
  occ << "d0_size,seed,intent,pattern,generated_count,d0_count,corpus_count\n";
  auto emit = [&](const std::string& seed, double msum, std::size_t ag, std::size_t ar,
                  const lm::AugmentationResult& r, std::size_t size) {
    table << size << ',' << seed << ',' << msum << ',' << ag << ',' << ar << ',' << r.aug_size << ',' << r.ref_size
          << ',' << r.test_size << ',' << r.vocabulary_size << ',' << r.ppl_d0 << ',' << r.ppl_aug << ','
          << r.ppl_ref << ',' << r.rel_aug << ',' << r.rel_ref << '\n';
  };
  for (std::size_t size : c.lm.d0_sizes) {
    ExperimentConfig cs = c;
    cs.d0_size = size;
    auto run = cmd_pipeline(cs, data, out_dir / ("d0_" + std::to_string(size)), log);
    std::vector<const SeedOutcome*> ok;
    for (const auto& s : run.seeds) {
      if (s.ok) ok.push_back(&s);
    }
    std::stable_sort(ok.begin(), ok.end(),
                     [](const auto* a, const auto* b) { return metric_sum(*a->report) > metric_sum(*b->report); });
    if (ok.size() > c.lm.selected_models) ok.resize(c.lm.selected_models);
    if (ok.empty()) throw EstimationError("lm-eval: no successful run at |D0| = " + std::to_string(size));
    lm::AugmentationResult mean;
    std::size_t ag = 0, ar = 0;
    double msum = 0;
    for (const auto* s : ok) {
      auto row = augmentation_row(cs, data, *s);
      emit(std::to_string(row.seed), row.metric_sum, row.added_generated, row.added_real, row.result, size);
      write_occurrences(*s, data.train, occ);
      mean.d0_size += row.result.d0_size;
      mean.aug_size += row.result.aug_size;
      mean.ref_size += row.result.ref_size;
      mean.test_size = row.result.test_size;
      mean.vocabulary_size += row.result.vocabulary_size;
      mean.ppl_d0 += row.result.ppl_d0;
      mean.ppl_aug += row.result.ppl_aug;
      mean.ppl_ref += row.result.ppl_ref;
      ag += row.added_generated;
      ar += row.added_real;
      msum += row.metric_sum;
      res.rows.push_back(std::move(row));
    }
    const double k = static_cast<double>(ok.size());
    mean.d0_size = static_cast<std::size_t>(std::llround(static_cast<double>(mean.d0_size) / k));
    mean.aug_size = static_cast<std::size_t>(std::llround(static_cast<double>(mean.aug_size) / k));
    mean.ref_size = static_cast<std::size_t>(std::llround(static_cast<double>(mean.ref_size) / k));
    mean.vocabulary_size = static_cast<std::size_t>(std::llround(static_cast<double>(mean.vocabulary_size) / k));
    mean.ppl_d0 /= k;
    mean.ppl_aug /= k;
    mean.ppl_ref /= k;
    mean.rel_aug = 100.0 * (mean.ppl_aug - mean.ppl_d0) / mean.ppl_d0;
    mean.rel_ref = 100.0 * (mean.ppl_ref - mean.ppl_d0) / mean.ppl_d0;
    emit("mean", msum / k, static_cast<std::size_t>(std::llround(static_cast<double>(ag) / k)),
         static_cast<std::size_t>(std::llround(static_cast<double>(ar) / k)), mean, size);
    res.mean_by_size[size] = mean;
    res.runs.push_back(std::move(run));
  }
  fs::create_directories(out_dir);
  write_text(out_dir / "lm_table.csv", table.str());
  write_text(out_dir / "occurrences.csv", occ.str());
  write_text(out_dir / "config.json", nlohmann::json(c).dump(2) + "\n");
  return res;
}

// ---------------------------------------------------------------------------
// Beta calibration

struct CalibrationResult {
  std::vector<CalibrationRow> rows;
  std::vector<std::pair<double, double>> beta_for_keep;     // (keep fraction, beta)
  std::vector<std::pair<double, std::size_t>> kept_at_beta;  // (beta, reservoir sentences kept)
};

/// Max-cosine distribution of the reservoir against the centroids of the
/// first seed's D0, with the betas reaching the requested selectivities.
inline CalibrationResult cmd_calibrate_beta(const ExperimentConfig& c, const ExperimentData& data,
                                            const std::vector<double>& keep_fractions, const fs::path& out_dir) {
  c.validate();
  const auto d0 = subsample(data.train, c.d0_size, Rng::derive(c.seeds.front(), streams::kD0));
  CalibrationResult r;
  r.rows = calibration_report(data.reservoir, intent_centroids(d0, data.table), data.table);
  for (double f : keep_fractions) r.beta_for_keep.emplace_back(f, beta_for_selectivity(r.rows, f));
  for (double b : {0.5, 0.6, 0.7, 0.8, 0.85, 0.9, 0.95}) {
    std::size_t kept = 0;
    for (const auto& row : r.rows) kept += row.max_cosine && *row.max_cosine > b;
    r.kept_at_beta.emplace_back(b, kept);
  }
  fs::create_directories(out_dir);
  {
    std::ofstream out(out_dir / "calibration.csv");
    write_calibration_csv(r.rows, out);
  }
  std::ostringstream s;
  s.precision(10);
  s << "kind,value,result\n";
  for (const auto& [f, b] : r.beta_for_keep) s << "beta_for_keep_fraction," << f << ',' << b << '\n';
  for (const auto& [b, k] : r.kept_at_beta) s << "kept_at_beta," << b << ',' << k << '\n';
  write_text(out_dir / "calibration_summary.csv", s.str());
  write_text(out_dir / "config.json", seed_record(c, c.seeds.front()).dump(2) + "\n");
  return r;
}

}  // namespace cvaegen::pipeline
