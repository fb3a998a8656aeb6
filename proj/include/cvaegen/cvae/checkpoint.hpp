// SPDX-License-Identifier: Apache-2.0
//
// JSON model container: format tag and version, the resolved config, the
// vocabulary (with its fingerprint), class labels and every tensor in
// column-major order.

#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cvaegen/corpus.hpp"
#include "cvaegen/cvae/config.hpp"
#include "cvaegen/cvae/params.hpp"
#include "cvaegen/error.hpp"

namespace cvaegen::cvae {

inline constexpr const char* kCheckpointFormat = "cvaegen-checkpoint";
inline constexpr int kCheckpointVersion = 1;

template <typename Real>
struct Checkpoint {
  CvaeConfig config;
  Vocabulary vocab;
  std::vector<std::string> class_labels;
  CvaeParams<Real> params;
};

inline std::string hex64(std::uint64_t v) {
  std::ostringstream ss;
  ss << std::hex << v;
  return ss.str();
}

template <typename Real>
nlohmann::json checkpoint_to_json(const Checkpoint<Real>& ck) {
  nlohmann::json j;
  j["format"] = kCheckpointFormat;
  j["version"] = kCheckpointVersion;
  j["config"] = ck.config;
  j["vocabulary"] = ck.vocab.tokens();
  j["vocab_fingerprint"] = hex64(ck.vocab.fingerprint());
  j["class_labels"] = ck.class_labels;
  nlohmann::json tensors = nlohmann::json::object();
  for (const auto& [name, m] : ck.params.blocks()) {
    std::vector<double> data(m->data(), m->data() + m->size());
    tensors[std::string(name)] = {{"rows", m->rows()}, {"cols", m->cols()}, {"data", std::move(data)}};
  }
  j["tensors"] = std::move(tensors);
  return j;
}

template <typename Real>
Checkpoint<Real> checkpoint_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != kCheckpointFormat) throw FormatError("not a cvaegen checkpoint");
  if (j.value("version", 0) != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(j.value("version", 0)));
  }
  Checkpoint<Real> ck;
  ck.config = j.at("config").get<CvaeConfig>();
  const auto tokens = j.at("vocabulary").get<std::vector<std::string>>();
  if (tokens.size() < Vocabulary::kNumSpecials) throw FormatError("checkpoint vocabulary lacks specials");
  for (std::size_t i = Vocabulary::kNumSpecials; i < tokens.size(); ++i) ck.vocab.add(tokens[i]);
  if (hex64(ck.vocab.fingerprint()) != j.at("vocab_fingerprint").get<std::string>()) {
    throw FormatError("checkpoint vocabulary fingerprint mismatch");
  }
  ck.class_labels = j.at("class_labels").get<std::vector<std::string>>();
  ck.params = CvaeParams<Real>::zeros(ck.config);
  const auto& tensors = j.at("tensors");
  for (auto& [name, m] : ck.params.blocks()) {
    const auto& t = tensors.at(std::string(name));
    if (t.at("rows").get<Eigen::Index>() != m->rows() || t.at("cols").get<Eigen::Index>() != m->cols()) {
      throw FormatError("tensor " + std::string(name) + " has unexpected shape");
    }
    const auto data = t.at("data").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(data.size()) != m->size()) throw FormatError("tensor " + std::string(name) + " truncated");
    for (Eigen::Index i = 0; i < m->size(); ++i) m->data()[i] = static_cast<Real>(data[static_cast<std::size_t>(i)]);
  }
  return ck;
}

template <typename Real>
void save_checkpoint(const Checkpoint<Real>& ck, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << checkpoint_to_json(ck).dump() << '\n';
}

template <typename Real>
Checkpoint<Real> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return checkpoint_from_json<Real>(j);
}

}  // namespace cvaegen::cvae
