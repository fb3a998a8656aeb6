// SPDX-License-Identifier: Apache-2.0
//
// Intent-annotated query corpora: loading, delexicalization, vocabularies
// and seeded subsampling.
//
// An utterance is stored as the ordered list of annotated chunks found in
// the benchmark files ({"text": ..., "entity": ...}). Delexicalization turns
// every entity chunk into a single placeholder token "[entity]" and records
// the surface value in a SlotDictionary; relexicalization fills placeholders
// back from that dictionary.

#pragma once

#include <algorithm>
#include <cctype>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "cvaegen/error.hpp"
#include "cvaegen/rng.hpp"

namespace cvaegen {

struct SlotChunk {
  std::string text;
  std::optional<std::string> slot_name;

  bool is_slot() const { return slot_name.has_value(); }
  bool operator==(const SlotChunk&) const = default;
};

struct Utterance {
  std::vector<SlotChunk> chunks;
  std::string intent;
  std::string raw_text;

  bool operator==(const Utterance&) const = default;
};

/// A delexicalized token sequence; slot values are "[SlotName]" tokens.
struct Pattern {
  std::vector<std::string> tokens;

  bool empty() const { return tokens.empty(); }
  std::size_t size() const { return tokens.size(); }
  std::string joined() const {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (i) out += ' ';
      out += tokens[i];
    }
    return out;
  }

  auto operator<=>(const Pattern&) const = default;
  bool operator==(const Pattern&) const = default;
};

struct PatternHash {
  std::size_t operator()(const Pattern& p) const {
    std::size_t h = 1469598103934665603ULL;
    for (const auto& t : p.tokens) {
      h ^= std::hash<std::string>{}(t) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return h;
  }
};

inline bool is_placeholder(std::string_view token) {
  return token.size() >= 3 && token.front() == '[' && token.back() == ']';
}

inline std::string placeholder_for(std::string_view slot_name) {
  return "[" + std::string(slot_name) + "]";
}

// ---------------------------------------------------------------------------
// Tokenization
// ---------------------------------------------------------------------------

namespace detail {

inline bool is_ascii_alnum(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 ||
         (static_cast<unsigned char>(c) & 0x80) != 0;
}

inline bool is_ascii_punct(char c) {
  return (static_cast<unsigned char>(c) & 0x80) == 0 &&
         std::ispunct(static_cast<unsigned char>(c)) != 0;
}

inline bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

}  // namespace detail

/// Lowercases, splits on whitespace and detaches punctuation.
///
/// Apostrophes, hyphens and underscores between two word characters stay in
/// the word ("what's", "e-mail"), as do '.', ',' and ':' between two digits
/// ("3.5", "10:30"). A bracketed run without whitespace ("[City]") is kept
/// verbatim as one placeholder token, so joined patterns re-tokenize to
/// themselves.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  };
  const std::size_t n = text.size();
  for (std::size_t i = 0; i < n; ++i) {
    const char c = text[i];
    if (detail::is_space(c)) {
      flush();
      continue;
    }
    if (c == '[' && current.empty()) {
      std::size_t j = i + 1;
      while (j < n && text[j] != ']' && !detail::is_space(text[j]) && text[j] != '[') ++j;
      if (j < n && text[j] == ']' && j > i + 1) {
        tokens.emplace_back(text.substr(i, j - i + 1));
        i = j;
        continue;
      }
    }
    if (detail::is_ascii_punct(c)) {
      const bool prev_word = i > 0 && detail::is_ascii_alnum(text[i - 1]) && !current.empty();
      const bool next_word = i + 1 < n && detail::is_ascii_alnum(text[i + 1]);
      const bool joiner = (c == '\'' || c == '-' || c == '_') && prev_word && next_word;
      const bool numeric = (c == '.' || c == ',' || c == ':') && prev_word && next_word &&
                           std::isdigit(static_cast<unsigned char>(text[i - 1])) &&
                           std::isdigit(static_cast<unsigned char>(text[i + 1]));
      if (joiner || numeric) {
        current += c;
        continue;
      }
      flush();
      tokens.emplace_back(1, c);
      continue;
    }
    current += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  flush();
  return tokens;
}

inline std::string normalize_text(std::string_view text) {
  return Pattern{tokenize(text)}.joined();
}

// ---------------------------------------------------------------------------
// Slot dictionary and delexicalization
// ---------------------------------------------------------------------------

/// slot name -> multiset of normalized surface values, in insertion order.
struct SlotDictionary {
  std::map<std::string, std::vector<std::string>> values;

  void add(const std::string& slot, std::string value) { values[slot].push_back(std::move(value)); }

  void merge(const SlotDictionary& other) {
    for (const auto& [slot, vals] : other.values) {
      auto& dst = values[slot];
      dst.insert(dst.end(), vals.begin(), vals.end());
    }
  }
};

inline Pattern delexicalize(const Utterance& utterance, SlotDictionary& slots) {
  Pattern pattern;
  for (const auto& chunk : utterance.chunks) {
    if (chunk.is_slot()) {
      pattern.tokens.push_back(placeholder_for(*chunk.slot_name));
      slots.add(*chunk.slot_name, normalize_text(chunk.text));
    } else {
      auto toks = tokenize(chunk.text);
      pattern.tokens.insert(pattern.tokens.end(), toks.begin(), toks.end());
    }
  }
  return pattern;
}

inline Pattern delexicalize(const Utterance& utterance) {
  SlotDictionary scratch;
  return delexicalize(utterance, scratch);
}

/// Fills each placeholder with a value drawn uniformly from its multiset.
/// Throws UnknownSlotError for a placeholder without stored values.
inline std::string relexicalize(const Pattern& pattern, const SlotDictionary& slots,
                                std::uint64_t rng_seed) {
  Rng rng(rng_seed);
  std::string out;
  for (const auto& token : pattern.tokens) {
    std::string piece = token;
    if (is_placeholder(token)) {
      const std::string name = token.substr(1, token.size() - 2);
      auto it = slots.values.find(name);
      if (it == slots.values.end() || it->second.empty()) {
        throw UnknownSlotError("relexicalize: no stored values for slot '" + name + "'");
      }
      piece = it->second[static_cast<std::size_t>(rng.below(it->second.size()))];
    }
    if (piece.empty()) continue;
    if (!out.empty()) out += ' ';
    out += piece;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

inline void validate_utterance(const Utterance& u) {
  if (u.intent.empty()) throw ValidationError("utterance with empty intent");
  if (u.chunks.empty()) throw ValidationError("utterance with empty chunk list (intent " + u.intent + ")");
  std::string concat;
  for (const auto& c : u.chunks) {
    if (c.text.empty()) throw ValidationError("empty chunk text (intent " + u.intent + ")");
    if (c.slot_name) {
      const auto& s = *c.slot_name;
      if (s.empty() || std::any_of(s.begin(), s.end(), detail::is_space)) {
        throw ValidationError("invalid slot name '" + s + "'");
      }
    }
    concat += c.text;
  }
  if (concat != u.raw_text) throw ValidationError("raw_text does not match chunk concatenation");
}

inline Utterance make_utterance(std::vector<SlotChunk> chunks, std::string intent) {
  Utterance u{std::move(chunks), std::move(intent), {}};
  for (const auto& c : u.chunks) u.raw_text += c.text;
  return u;
}

struct Dataset {
  std::vector<Utterance> utterances;
  std::vector<std::string> intents;  // sorted, distinct
  std::vector<Pattern> patterns;     // parallel to utterances
  SlotDictionary slots;

  std::size_t size() const { return utterances.size(); }
  bool empty() const { return utterances.empty(); }

  static Dataset from_utterances(std::vector<Utterance> utts) {
    Dataset d;
    d.utterances = std::move(utts);
    d.patterns.reserve(d.utterances.size());
    for (const auto& u : d.utterances) {
      validate_utterance(u);
      d.patterns.push_back(delexicalize(u, d.slots));
      d.intents.push_back(u.intent);
    }
    std::sort(d.intents.begin(), d.intents.end());
    d.intents.erase(std::unique(d.intents.begin(), d.intents.end()), d.intents.end());
    return d;
  }

  std::size_t intent_index(std::string_view intent) const {
    auto it = std::lower_bound(intents.begin(), intents.end(), intent);
    if (it == intents.end() || *it != intent) {
      throw ValidationError("unknown intent '" + std::string(intent) + "'");
    }
    return static_cast<std::size_t>(it - intents.begin());
  }

  /// Indices of the utterances carrying `intent`, in dataset order.
  std::vector<std::size_t> indices_of(std::string_view intent) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < utterances.size(); ++i) {
      if (utterances[i].intent == intent) out.push_back(i);
    }
    return out;
  }

  Dataset select(const std::vector<std::size_t>& indices) const {
    std::vector<Utterance> utts;
    utts.reserve(indices.size());
    for (auto i : indices) utts.push_back(utterances.at(i));
    return from_utterances(std::move(utts));
  }

  Dataset concat(const Dataset& other) const {
    auto utts = utterances;
    utts.insert(utts.end(), other.utterances.begin(), other.utterances.end());
    return from_utterances(std::move(utts));
  }
};

enum class DatasetFormat { kSnipsJson };

namespace detail {

inline std::string latin1_to_utf8(std::string_view in) {
  std::string out;
  out.reserve(in.size());
  for (unsigned char c : in) {
    if (c < 0x80) {
      out += static_cast<char>(c);
    } else {
      out += static_cast<char>(0xC0 | (c >> 6));
      out += static_cast<char>(0x80 | (c & 0x3F));
    }
  }
  return out;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::pair<std::size_t, std::size_t> line_col(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

inline nlohmann::json parse_json_file(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    // Some benchmark files are Latin-1 encoded; retry once transcoded.
    if (e.id == 101 && std::string_view(e.what()).find("UTF-8") != std::string_view::npos) {
      try {
        return nlohmann::json::parse(latin1_to_utf8(text));
      } catch (const nlohmann::json::parse_error&) {
      }
    }
    auto [line, col] = line_col(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ParseError(path.string() + ":" + std::to_string(line) + ":" + std::to_string(col) +
                     ": " + e.what());
  }
}

inline void append_snips_json(const nlohmann::json& root, const std::string& where,
                              std::vector<Utterance>& out) {
  if (!root.is_object()) throw ParseError(where + ": top level must be an object intent -> list");
  for (const auto& [intent, list] : root.items()) {
    if (!list.is_array()) throw ParseError(where + ": intent '" + intent + "' is not a list");
    for (const auto& item : list) {
      if (!item.is_object() || !item.contains("data") || !item["data"].is_array()) {
        throw ParseError(where + ": utterance without a \"data\" list (intent " + intent + ")");
      }
      std::vector<SlotChunk> chunks;
      for (const auto& chunk : item["data"]) {
        if (!chunk.is_object() || !chunk.contains("text") || !chunk["text"].is_string()) {
          throw ParseError(where + ": chunk without string \"text\" (intent " + intent + ")");
        }
        SlotChunk sc{chunk["text"].get<std::string>(), std::nullopt};
        if (chunk.contains("entity")) sc.slot_name = chunk["entity"].get<std::string>();
        if (sc.text.empty()) continue;  // benchmark files contain stray empty chunks
        chunks.push_back(std::move(sc));
      }
      if (chunks.empty()) {
        throw ValidationError(where + ": utterance with empty chunk list (intent " + intent + ")");
      }
      out.push_back(make_utterance(std::move(chunks), intent));
    }
  }
}

}  // namespace detail

/// Loads one JSON file, or every *.json file of a directory (sorted by name).
inline Dataset load_dataset(const std::filesystem::path& path,
                            DatasetFormat format = DatasetFormat::kSnipsJson) {
  (void)format;
  if (!std::filesystem::exists(path)) throw IoError("no such file or directory: " + path.string());
  std::vector<std::filesystem::path> files;
  if (std::filesystem::is_directory(path)) {
    for (const auto& entry : std::filesystem::directory_iterator(path)) {
      if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw IoError("no .json files in " + path.string());
  } else {
    files.push_back(path);
  }
  std::vector<Utterance> utts;
  for (const auto& f : files) detail::append_snips_json(detail::parse_json_file(f), f.string(), utts);
  return Dataset::from_utterances(std::move(utts));
}

/// Inverse of load_dataset for a single file.
inline void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  nlohmann::ordered_json root = nlohmann::ordered_json::object();
  for (const auto& intent : dataset.intents) root[intent] = nlohmann::ordered_json::array();
  for (const auto& u : dataset.utterances) {
    nlohmann::ordered_json data = nlohmann::ordered_json::array();
    for (const auto& c : u.chunks) {
      nlohmann::ordered_json chunk{{"text", c.text}};
      if (c.slot_name) chunk["entity"] = *c.slot_name;
      data.push_back(std::move(chunk));
    }
    root[u.intent].push_back({{"data", std::move(data)}});
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << root.dump(1) << '\n';
}

inline std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline void write_patterns_csv(const Dataset& dataset, std::ostream& out) {
  out << "index,intent,pattern,raw_text\n";
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    out << i << ',' << csv_escape(dataset.utterances[i].intent) << ','
        << csv_escape(dataset.patterns[i].joined()) << ',' << csv_escape(dataset.utterances[i].raw_text)
        << '\n';
  }
}

// ---------------------------------------------------------------------------
// Vocabulary
// ---------------------------------------------------------------------------

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kSos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;
  static constexpr int kNumSpecials = 4;

  Vocabulary() {
    for (const char* s : {"<pad>", "<sos>", "<eos>", "<unk>"}) add(s);
  }

  int add(const std::string& token) {
    auto [it, inserted] = token_to_id_.emplace(token, static_cast<int>(id_to_token_.size()));
    if (inserted) id_to_token_.push_back(token);
    return it->second;
  }

  int id(const std::string& token) const {
    auto it = token_to_id_.find(token);
    return it == token_to_id_.end() ? kUnk : it->second;
  }

  bool contains(const std::string& token) const { return token_to_id_.count(token) != 0; }

  const std::string& token(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= id_to_token_.size()) {
      throw IndexError("token id " + std::to_string(id) + " out of range");
    }
    return id_to_token_[static_cast<std::size_t>(id)];
  }

  std::size_t size() const { return id_to_token_.size(); }
  const std::vector<std::string>& tokens() const { return id_to_token_; }

  /// FNV-1a over the id-ordered token list; stored in checkpoints.
  std::uint64_t fingerprint() const {
    std::uint64_t h = 1469598103934665603ULL;
    for (const auto& t : id_to_token_) {
      for (unsigned char c : t) {
        h ^= c;
        h *= 1099511628211ULL;
      }
      h ^= 0xff;
      h *= 1099511628211ULL;
    }
    return h;
  }

 private:
  std::unordered_map<std::string, int> token_to_id_;
  std::vector<std::string> id_to_token_;
};

/// Tokens with total count >= min_count across all datasets, in lexicographic
/// order after the four specials.
inline Vocabulary build_vocabulary(const std::vector<const Dataset*>& datasets, int min_count = 1) {
  if (datasets.empty()) throw ValidationError("build_vocabulary: no datasets");
  std::map<std::string, long> counts;
  for (const auto* d : datasets) {
    for (const auto& p : d->patterns) {
      for (const auto& t : p.tokens) ++counts[t];
    }
  }
  Vocabulary vocab;
  for (const auto& [tok, n] : counts) {
    if (n >= min_count) vocab.add(tok);
  }
  return vocab;
}

inline Vocabulary build_vocabulary(const Dataset& dataset, int min_count = 1) {
  return build_vocabulary(std::vector<const Dataset*>{&dataset}, min_count);
}

/// SOS + ids + EOS, truncated to max_len (EOS kept last), PAD-filled.
inline std::vector<int> encode_pattern(const Pattern& pattern, const Vocabulary& vocab, int max_len) {
  if (max_len < 2) throw ValidationError("encode_pattern: max_len must be >= 2");
  const std::size_t room = static_cast<std::size_t>(max_len - 2);
  std::vector<int> ids;
  ids.reserve(static_cast<std::size_t>(max_len));
  ids.push_back(Vocabulary::kSos);
  for (std::size_t i = 0; i < std::min(room, pattern.tokens.size()); ++i) {
    ids.push_back(vocab.id(pattern.tokens[i]));
  }
  ids.push_back(Vocabulary::kEos);
  ids.resize(static_cast<std::size_t>(max_len), Vocabulary::kPad);
  return ids;
}

/// Inverse of encode_pattern up to UNK: tokens between SOS and the first EOS.
inline Pattern decode_ids(const std::vector<int>& ids, const Vocabulary& vocab) {
  Pattern p;
  for (int id : ids) {
    if (id == Vocabulary::kSos || id == Vocabulary::kPad) continue;
    if (id == Vocabulary::kEos) break;
    p.tokens.push_back(vocab.token(id));
  }
  return p;
}

// ---------------------------------------------------------------------------
// Subsampling
// ---------------------------------------------------------------------------

/// Draws n utterances without replacement. When balanced, per-intent counts
/// differ by at most one; the intents receiving the remainder are chosen by
/// the same seeded stream.
inline Dataset subsample(const Dataset& dataset, std::size_t n, std::uint64_t rng_seed,
                         bool balanced = true) {
  if (n > dataset.size()) {
    throw SizeError("subsample: requested " + std::to_string(n) + " of " +
                    std::to_string(dataset.size()) + " utterances");
  }
  Rng rng(rng_seed);
  std::vector<std::size_t> chosen;
  chosen.reserve(n);
  if (!balanced || dataset.intents.empty()) {
    std::vector<std::size_t> all(dataset.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    rng.shuffle(all);
    chosen.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n));
  } else {
    const std::size_t k = dataset.intents.size();
    std::vector<std::size_t> order(k);
    for (std::size_t i = 0; i < k; ++i) order[i] = i;
    rng.shuffle(order);
    std::vector<std::size_t> quota(k, n / k);
    for (std::size_t i = 0; i < n % k; ++i) ++quota[order[i]];
    for (std::size_t c = 0; c < k; ++c) {
      auto pool = dataset.indices_of(dataset.intents[c]);
      if (pool.size() < quota[c]) {
        throw SizeError("subsample: intent " + dataset.intents[c] + " has " +
                        std::to_string(pool.size()) + " utterances, balanced draw needs " +
                        std::to_string(quota[c]));
      }
      rng.shuffle(pool);
      chosen.insert(chosen.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(quota[c]));
    }
    rng.shuffle(chosen);
  }
  return dataset.select(chosen);
}

}  // namespace cvaegen
