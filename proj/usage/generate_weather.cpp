// SPDX-License-Identifier: Apache-2.0
//
// End-to-end library walk-through: draw a small labelled set from the proxy
// corpus, pick related reservoir queries, train the conditional autoencoder
// with the extra None class, then print a few GetWeather queries with their
// placeholders filled back in.
//
//   usage_generate_weather [epochs=20] [hidden=64]

#include <cstdlib>
#include <iostream>
#include <set>

#include "cvaegen/cvae/generate.hpp"
#include "cvaegen/cvae/trainer.hpp"
#include "cvaegen/embeddings.hpp"
#include "cvaegen/proxy_corpus.hpp"
#include "cvaegen/transfer.hpp"

int main(int argc, char** argv) {
  using namespace cvaegen;
  const int epochs = argc > 1 ? std::atoi(argv[1]) : 20;
  const int hidden = argc > 2 ? std::atoi(argv[2]) : 64;

  const auto corpus = make_proxy_corpus({500, 10, 100, 2020});
  const Dataset d0 = subsample(corpus.train, 140, /*rng_seed=*/1);

  std::vector<std::vector<std::string>> sentences;
  for (const auto* d : {&corpus.train, &corpus.reservoir}) {
    for (const auto& u : d->utterances) sentences.push_back(tokenize(u.raw_text));
  }
  const EmbeddingTable table = train_cooccurrence_embeddings(sentences, 32);

  const Dataset selected = select_reservoir(corpus.reservoir, intent_centroids(d0, table), 0.85, table);
  const std::size_t n_res = std::min<std::size_t>(140, selected.size());
  const Vocabulary vocab = build_vocabulary(std::vector<const Dataset*>{&d0, &selected});
  const LabeledMixture mixture = build_training_mixture(d0, selected, n_res, /*alpha=*/0.2, vocab, /*seed=*/2);
  std::cout << "D0 " << d0.size() << " sentences, " << selected.size() << " reservoir sentences above beta, "
            << n_res << " used\n";

  cvae::CvaeConfig config;
  config.embed_dim = table.dim();
  config.hidden_dim = hidden;
  config.epochs = epochs;
  config.batch_size = 32;
  config.seed = 3;
  const auto fitted = cvae::fit<float>(config, mixture, vocab, &table);
  const auto& last = fitted.log.back().loss;
  std::cout << fitted.log.size() << " steps, final loss " << last.total << " (rec " << last.rec << ")\n";

  const int weather = static_cast<int>(d0.intent_index("GetWeather"));
  const auto patterns = cvae::generate<float>(fitted.params, vocab, weather, 200, /*seed=*/4, config.max_len);
  std::set<std::string> shown;
  const std::set<Pattern> seen(d0.patterns.begin(), d0.patterns.end());
  for (const auto& p : patterns) {
    if (!shown.insert(p.joined()).second) continue;
    std::cout << (seen.contains(p) ? "  (in D0) " : "  (new)   ") << p.joined() << "\n            -> "
              << relexicalize(p, d0.slots, shown.size()) << '\n';
    if (shown.size() == 8) break;
  }
  return 0;
}
