// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "cvaegen/error.hpp"

namespace cvaegen::cvae {

/// What the KL-annealing step counter counts.
enum class AnnealUnit { kBatchSteps, kEpochs };

struct CvaeConfig {
  int vocab_size = 0;  // set from the vocabulary at fit time
  int embed_dim = 100;
  int hidden_dim = 256;
  int z_dim = 8;
  int n_classes = 8;
  double tau = 1.0;  // Gumbel-softmax and output-softmax temperature
  double lr = 0.01;
  int batch_size = 128;
  int epochs = 50;
  double t_kl = 300.0;
  double r_kl = 0.01;
  AnnealUnit anneal_unit = AnnealUnit::kBatchSteps;
  int max_len = 20;
  std::uint64_t seed = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double clip_norm = 0.0;  // global gradient-norm clip; 0 disables

  void validate() const {
    if (vocab_size <= 4 || embed_dim <= 0 || hidden_dim <= 0 || z_dim <= 0 || n_classes <= 0) {
      throw ValidationError("CvaeConfig: all dimensions must be positive (vocab > 4 specials)");
    }
    if (!(tau > 0.0)) throw ValidationError("CvaeConfig: tau must be > 0");
    if (!(lr > 0.0)) throw ValidationError("CvaeConfig: lr must be > 0");
    if (batch_size <= 0 || epochs < 0) throw ValidationError("CvaeConfig: bad batch_size/epochs");
    if (max_len < 2) throw ValidationError("CvaeConfig: max_len must be >= 2");
  }
};

inline void to_json(nlohmann::json& j, const CvaeConfig& c) {
  j = nlohmann::json{{"vocab_size", c.vocab_size},
                     {"embed_dim", c.embed_dim},
                     {"hidden_dim", c.hidden_dim},
                     {"z_dim", c.z_dim},
                     {"n_classes", c.n_classes},
                     {"tau", c.tau},
                     {"lr", c.lr},
                     {"batch_size", c.batch_size},
                     {"epochs", c.epochs},
                     {"t_kl", c.t_kl},
                     {"r_kl", c.r_kl},
                     {"anneal_unit", c.anneal_unit == AnnealUnit::kBatchSteps ? "batch" : "epoch"},
                     {"max_len", c.max_len},
                     {"seed", c.seed},
                     {"adam_beta1", c.adam_beta1},
                     {"adam_beta2", c.adam_beta2},
                     {"adam_eps", c.adam_eps},
                     {"clip_norm", c.clip_norm}};
}

/// Missing keys keep their defaults, so partial override objects work.
inline void from_json(const nlohmann::json& j, CvaeConfig& c) {
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("vocab_size", c.vocab_size);
  get("embed_dim", c.embed_dim);
  get("hidden_dim", c.hidden_dim);
  get("z_dim", c.z_dim);
  get("n_classes", c.n_classes);
  get("tau", c.tau);
  get("lr", c.lr);
  get("batch_size", c.batch_size);
  get("epochs", c.epochs);
  get("t_kl", c.t_kl);
  get("r_kl", c.r_kl);
  if (j.contains("anneal_unit")) {
    const auto unit = j.at("anneal_unit").get<std::string>();
    if (unit == "batch") {
      c.anneal_unit = AnnealUnit::kBatchSteps;
    } else if (unit == "epoch") {
      c.anneal_unit = AnnealUnit::kEpochs;
    } else {
      throw ValidationError("anneal_unit must be \"batch\" or \"epoch\"");
    }
  }
  get("max_len", c.max_len);
  get("seed", c.seed);
  get("adam_beta1", c.adam_beta1);
  get("adam_beta2", c.adam_beta2);
  get("adam_eps", c.adam_eps);
  get("clip_norm", c.clip_norm);
}

}  // namespace cvaegen::cvae
