// SPDX-License-Identifier: Apache-2.0
//
// cvaegen: batch front end for the generation experiments.
//
//   cvaegen pipeline        --config exp.json [--set key=value ...]
//   cvaegen sweep           --param alpha --values 0,0.2,1
//   cvaegen lm-eval         --config exp.json
//   cvaegen calibrate-beta  --keep 0.1,0.25
//   cvaegen make-proxy-corpus --out data/proxy
//   cvaegen train-embeddings  --out vectors.txt
//   cvaegen print-config
//
// Exit status: 0 on success, 1 on an error, 2 when some seeds failed (their
// errors are in the run manifest).

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "cvaegen/pipeline.hpp"

namespace {

using namespace cvaegen;
using namespace cvaegen::pipeline;

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out;
  std::vector<std::uint64_t> seeds;
  int jobs = 0;
  bool quiet = false;

  void attach(CLI::App* app) {
    app->add_option("-c,--config", config_path, "Experiment config (JSON) or a run manifest")->check(CLI::ExistingFile);
    app->add_option("-s,--set", overrides, "Override a config entry, e.g. --set cvae.epochs=10 (repeatable)");
    app->add_option("-o,--out", out, "Output directory");
    app->add_option("--seeds", seeds, "Seed list, e.g. --seeds 1,2,3")->delimiter(',');
    app->add_option("-j,--jobs", jobs, "Seeds trained in parallel")->check(CLI::PositiveNumber);
    app->add_flag("-q,--quiet", quiet, "No progress output");
  }

  ExperimentConfig resolve() const {
    auto c = load_experiment_config(config_path.empty() ? std::nullopt : std::optional<fs::path>(config_path),
                                    overrides);
    if (!seeds.empty()) c.seeds = seeds;
    if (jobs > 0) c.jobs = jobs;
    if (!out.empty()) c.output_dir = out;
    c.validate();
    return c;
  }

  std::ostream* log() const { return quiet ? nullptr : &std::clog; }
};

void print_summary(const std::vector<MetricSummary>& s, std::ostream& out) {
  for (const auto& m : s) {
    out << "  " << m.metric << ": " << m.mean << " +- " << m.std << " (n=" << m.n << ")\n";
  }
}

int pipeline_status(std::size_t failures) { return failures == 0 ? 0 : 2; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Intent-conditioned query generation experiments"};
  app.require_subcommand(1);

  CommonOptions pipe_opts;
  auto* pipe = app.add_subcommand("pipeline", "Train, generate and evaluate for every seed; write a summary");
  pipe_opts.attach(pipe);

  CommonOptions sweep_opts;
  std::string sweep_param;
  std::vector<double> sweep_values;
  auto* sweep = app.add_subcommand("sweep", "Run the pipeline once per value of alpha, beta or reservoir_size");
  sweep_opts.attach(sweep);
  sweep->add_option("-p,--param", sweep_param, "alpha | beta | reservoir_size")
      ->required()
      ->check(CLI::IsMember({"alpha", "beta", "reservoir_size"}));
  sweep->add_option("-v,--values", sweep_values, "Comma-separated values")->required()->delimiter(',');

  CommonOptions lm_opts;
  auto* lm_eval = app.add_subcommand("lm-eval", "Language-model augmentation study and pattern-occurrence report");
  lm_opts.attach(lm_eval);

  CommonOptions cal_opts;
  std::vector<double> keep{0.05, 0.1, 0.25, 0.5};
  auto* calibrate = app.add_subcommand("calibrate-beta", "Reservoir max-cosine distribution and beta thresholds");
  cal_opts.attach(calibrate);
  calibrate->add_option("-k,--keep", keep, "Target kept fractions")->delimiter(',')->capture_default_str();

  CommonOptions proxy_opts;
  auto* proxy = app.add_subcommand("make-proxy-corpus", "Write the built-in proxy corpus as benchmark-style JSON");
  proxy_opts.attach(proxy);

  CommonOptions emb_opts;
  auto* emb = app.add_subcommand("train-embeddings", "Write the co-occurrence word vectors in GloVe text format");
  emb_opts.attach(emb);

  CommonOptions show_opts;
  auto* show = app.add_subcommand("print-config", "Print the resolved config as JSON");
  show_opts.attach(show);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*pipe) {
      const auto c = pipe_opts.resolve();
      const auto r = cmd_pipeline(c, pipe_opts.log());
      std::cout << "run directory: " << r.run_dir.string() << '\n';
      print_summary(r.summary, std::cout);
      return pipeline_status(r.failures());
    }
    if (*sweep) {
      const auto c = sweep_opts.resolve();
      const auto data = load_experiment_data(c.data, sweep_opts.log());
      const auto pts = cmd_sweep(c, data, parse_sweep_parameter(sweep_param), sweep_values, c.output_dir,
                                 sweep_opts.log());
      std::size_t failures = 0;
      for (const auto& p : pts) {
        std::cout << sweep_param << " = " << p.value << '\n';
        print_summary(p.result.summary, std::cout);
        failures += p.result.failures();
      }
      std::cout << "curves: " << (fs::path(c.output_dir) / ("sweep_" + sweep_param + ".csv")).string() << '\n';
      return pipeline_status(failures);
    }
    if (*lm_eval) {
      const auto c = lm_opts.resolve();
      const auto data = load_experiment_data(c.data, lm_opts.log());
      const auto r = cmd_lm_eval(c, data, c.output_dir, lm_opts.log());
      for (const auto& [size, m] : r.mean_by_size) {
        std::cout << "|D0|=" << size << ": PPL D0 " << m.ppl_d0 << ", aug " << m.ppl_aug << " (" << m.rel_aug
                  << "%), ref " << m.ppl_ref << " (" << m.rel_ref << "%)\n";
      }
      return 0;
    }
    if (*calibrate) {
      const auto c = cal_opts.resolve();
      const auto data = load_experiment_data(c.data, cal_opts.log());
      const auto r = cmd_calibrate_beta(c, data, keep, c.output_dir);
      for (const auto& [f, b] : r.beta_for_keep) std::cout << "keep " << f << " -> beta " << b << '\n';
      for (const auto& [b, k] : r.kept_at_beta) {
        std::cout << "beta " << b << " keeps " << k << " of " << r.rows.size() << '\n';
      }
      return 0;
    }
    if (*proxy) {
      const auto c = proxy_opts.resolve();
      write_proxy_corpus(make_proxy_corpus(c.data.proxy), c.output_dir);
      std::cout << "wrote " << c.output_dir << "/{train,validate,reservoir}\n";
      return 0;
    }
    if (*emb) {
      const auto c = emb_opts.resolve();
      auto corpus = make_proxy_corpus(c.data.proxy);
      Dataset train = c.data.uses_proxy() ? std::move(corpus.train) : load_dataset(c.data.resolve(c.data.train));
      Dataset res = c.data.uses_proxy() ? std::move(corpus.reservoir)
                                        : load_dataset(c.data.resolve(c.data.reservoir));
      const fs::path target = emb_opts.out.empty() ? fs::path("embeddings.txt") : fs::path(emb_opts.out);
      save_word_embeddings(prepare_embeddings(c.data, train, res), target);
      std::cout << "wrote " << target.string() << '\n';
      return 0;
    }
    if (*show) {
      std::cout << nlohmann::json(show_opts.resolve()).dump(2) << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
