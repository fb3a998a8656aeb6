// SPDX-License-Identifier: Apache-2.0
//
// Training mixtures for the conditional autoencoder.
//
// Query transfer: every labelled sentence keeps its intent, every reservoir
// sentence is supervised towards an extra final "None" class whose loss
// weight is alpha (all other classes weigh 1). Pseudo-labelling instead
// assigns reservoir sentences to their closest intent centroid.

#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cvaegen/corpus.hpp"
#include "cvaegen/embeddings.hpp"
#include "cvaegen/error.hpp"
#include "cvaegen/rng.hpp"

namespace cvaegen {

inline constexpr const char* kNoneClass = "None";

enum class Origin { kLabelled, kReservoir };

inline const char* origin_name(Origin o) { return o == Origin::kLabelled ? "D0" : "Dr"; }

struct MixtureExample {
  std::vector<int> ids;
  int class_index = 0;
  Origin origin = Origin::kLabelled;
  Pattern pattern;
};

struct LabeledMixture {
  std::vector<MixtureExample> examples;
  std::vector<std::string> class_labels;
  std::vector<double> alpha;

  int num_classes() const { return static_cast<int>(class_labels.size()); }
  bool has_none_class() const { return !class_labels.empty() && class_labels.back() == kNoneClass; }
  std::size_t size() const { return examples.size(); }
};

/// D0 labelled by intent plus n_reservoir seeded draws from the selected
/// reservoir labelled None. C = |intents(D0)| + 1.
inline LabeledMixture build_training_mixture(const Dataset& d0, const Dataset& reservoir_selected,
                                             std::size_t n_reservoir, double alpha, const Vocabulary& vocab,
                                             std::uint64_t seed, int max_len = 20) {
  if (alpha < 0.0) throw ValidationError("build_training_mixture: alpha must be >= 0");
  if (n_reservoir > reservoir_selected.size()) {
    throw SizeError("build_training_mixture: n_reservoir " + std::to_string(n_reservoir) +
                    " exceeds the " + std::to_string(reservoir_selected.size()) + " selected sentences");
  }
  LabeledMixture m;
  m.class_labels = d0.intents;
  m.class_labels.emplace_back(kNoneClass);
  const int c = m.num_classes();
  m.alpha.assign(static_cast<std::size_t>(c), 1.0);
  m.alpha.back() = alpha;
  for (std::size_t i = 0; i < d0.size(); ++i) {
    m.examples.push_back({encode_pattern(d0.patterns[i], vocab, max_len),
                          static_cast<int>(d0.intent_index(d0.utterances[i].intent)), Origin::kLabelled,
                          d0.patterns[i]});
  }
  std::vector<std::size_t> order(reservoir_selected.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  for (std::size_t k = 0; k < n_reservoir; ++k) {
    const auto& p = reservoir_selected.patterns[order[k]];
    m.examples.push_back({encode_pattern(p, vocab, max_len), c - 1, Origin::kReservoir, p});
  }
  return m;
}

/// D0 plus every reservoir sentence whose best centroid cosine exceeds the
/// threshold, labelled with that centroid's intent (lowest index on ties).
/// No None class; alpha is all ones.
inline LabeledMixture build_pseudo_labelled_set(const Dataset& d0, const Dataset& reservoir,
                                                const std::vector<IntentCentroid>& centroids, double threshold,
                                                const EmbeddingTable& table, const Vocabulary& vocab,
                                                int max_len = 20) {
  if (threshold < -1.0 || threshold > 1.0) {
    throw DomainError("build_pseudo_labelled_set: threshold must lie in [-1, 1]");
  }
  LabeledMixture m;
  m.class_labels = d0.intents;
  m.alpha.assign(m.class_labels.size(), 1.0);
  for (std::size_t i = 0; i < d0.size(); ++i) {
    m.examples.push_back({encode_pattern(d0.patterns[i], vocab, max_len),
                          static_cast<int>(d0.intent_index(d0.utterances[i].intent)), Origin::kLabelled,
                          d0.patterns[i]});
  }
  for (std::size_t i = 0; i < reservoir.size(); ++i) {
    const auto emb = embed_sentence(reservoir.patterns[i], table);
    const auto best = best_centroid(emb.vector, centroids);
    if (!best.defined || !(best.cosine > threshold)) continue;
    const int cls = static_cast<int>(d0.intent_index(centroids[best.index].intent));
    m.examples.push_back({encode_pattern(reservoir.patterns[i], vocab, max_len), cls, Origin::kReservoir,
                          reservoir.patterns[i]});
  }
  return m;
}

/// One JSON object per line: {"tokens": [...], "class": ..., "label": ..., "origin": ...}.
inline void dump_mixture_jsonl(const LabeledMixture& m, std::ostream& out) {
  for (const auto& ex : m.examples) {
    nlohmann::ordered_json j;
    j["tokens"] = ex.pattern.tokens;
    j["ids"] = ex.ids;
    j["class"] = ex.class_index;
    j["label"] = m.class_labels.at(static_cast<std::size_t>(ex.class_index));
    j["origin"] = origin_name(ex.origin);
    out << j.dump() << '\n';
  }
}

}  // namespace cvaegen
