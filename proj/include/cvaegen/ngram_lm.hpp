// SPDX-License-Identifier: Apache-2.0
//
// Interpolated Kneser-Ney n-gram language model with a single absolute
// discount, forced-vocabulary unification, perplexity and ARPA text I/O.
//
// Recursion (N = order, h' = h without its first token):
//   top order:    p(w|h) = max(c(hw) - D, 0) / c(h.) + D N1+(h.) / c(h.) * p(w|h')
//   lower orders: the same with c replaced by continuation counts
//                 N1+(.hw) = #{v : c(vhw) > 0}
//   unigrams:     p(w) = N1+(.w) / sum_v N1+(.v) over the vocabulary
// A context whose denominator is zero passes its lower-order distribution
// through unchanged. Forced vocabulary tokens enter as unigrams with count 1
// and continuation count 1.

#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cvaegen/corpus.hpp"
#include "cvaegen/error.hpp"

namespace cvaegen::lm {

using Ngram = std::vector<std::string>;

inline const std::string kBos = "<s>";
inline const std::string kEos = "</s>";
inline const std::string kUnk = "<unk>";

struct NgramCounts {
  int order = 4;
  /// counts[n-1]: raw counts of n-grams, excluding n-grams that end in <s>.
  std::vector<std::map<Ngram, long>> counts;
  /// continuation[n-1] for n < order: number of distinct left extensions.
  std::vector<std::map<Ngram, long>> continuation;
  /// Tokens injected as unigrams with count 1 (absent from the text).
  std::set<std::string> forced;
  std::size_t sentences = 0;

  bool empty() const { return sentences == 0 && forced.empty(); }

  long count(const Ngram& g) const {
    if (g.empty() || static_cast<int>(g.size()) > order) return 0;
    const auto& m = counts[g.size() - 1];
    auto it = m.find(g);
    return it == m.end() ? 0 : it->second;
  }

  /// Every predictable token: observed tokens, </s> and forced tokens.
  std::set<std::string> vocabulary() const {
    std::set<std::string> v(forced.begin(), forced.end());
    if (!counts.empty()) {
      for (const auto& [g, c] : counts[0]) v.insert(g[0]);
    }
    return v;
  }

  friend bool operator==(const NgramCounts&, const NgramCounts&) = default;
};

/// Each distinct sentence counted once, padded with order-1 <s> and one </s>.
inline NgramCounts count_ngrams(const std::vector<Pattern>& patterns, int order = 4) {
  if (order < 1) throw ValidationError("count_ngrams: order must be >= 1");
  NgramCounts nc;
  nc.order = order;
  nc.counts.resize(static_cast<std::size_t>(order));
  nc.continuation.resize(static_cast<std::size_t>(order - 1));
  std::set<Pattern> distinct(patterns.begin(), patterns.end());
  nc.sentences = distinct.size();
  for (const auto& p : distinct) {
    std::vector<std::string> padded(static_cast<std::size_t>(order - 1), kBos);
    padded.insert(padded.end(), p.tokens.begin(), p.tokens.end());
    padded.push_back(kEos);
    for (std::size_t end = 0; end < padded.size(); ++end) {
      if (padded[end] == kBos) continue;
      for (int n = 1; n <= order && static_cast<std::size_t>(n) <= end + 1; ++n) {
        Ngram g(padded.begin() + static_cast<long>(end + 1 - static_cast<std::size_t>(n)),
                padded.begin() + static_cast<long>(end + 1));
        ++nc.counts[static_cast<std::size_t>(n - 1)][g];
      }
    }
  }
  for (int n = 2; n <= order; ++n) {
    for (const auto& [g, c] : nc.counts[static_cast<std::size_t>(n - 1)]) {
      if (c > 0) ++nc.continuation[static_cast<std::size_t>(n - 2)][Ngram(g.begin() + 1, g.end())];
    }
  }
  return nc;
}

class KneserNeyLm {
 public:
  KneserNeyLm() = default;

  int order() const { return counts_.order; }
  double discount() const { return discount_; }
  const NgramCounts& counts() const { return counts_; }
  const std::set<std::string>& vocabulary() const { return vocab_; }

  /// The token that scoring substitutes for `token`.
  const std::string& map_token(const std::string& token) const {
    if (token == kBos || vocab_.contains(token)) return token;
    return kUnk;
  }

  /// p(w | context); only the last order-1 context tokens matter.
  double prob(const std::string& word, const Ngram& context) const {
    Ngram h;
    const std::size_t keep = std::min(context.size(), static_cast<std::size_t>(order() - 1));
    for (std::size_t i = context.size() - keep; i < context.size(); ++i) h.push_back(map_token(context[i]));
    return prob_mapped(map_token(word), h, static_cast<int>(h.size()) + 1);
  }

  /// Natural-log probability of the sentence including its </s>.
  double sequence_log_prob(const Pattern& pattern) const {
    Ngram h(static_cast<std::size_t>(order() - 1), kBos);
    double lp = 0.0;
    auto step = [&](const std::string& tok) {
      const std::string& w = map_token(tok);
      lp += std::log(prob_mapped(w, h, order()));
      if (!h.empty()) {
        h.erase(h.begin());
        h.push_back(w);
      }
    };
    for (const auto& t : pattern.tokens) step(t);
    step(kEos);
    return lp;
  }

  /// Back-off weight of a context at its own order: D N1+(h.) / denom(h), or 1
  /// when the context was never seen at that level.
  double interpolation_weight(const Ngram& h) const {
    const int n = static_cast<int>(h.size()) + 1;
    const auto& dm = denominators_[static_cast<std::size_t>(n - 1)];
    auto it = dm.find(h);
    if (it == dm.end() || it->second.total == 0) return 1.0;
    return discount_ * static_cast<double>(it->second.types) / static_cast<double>(it->second.total);
  }

  /// Count used at level n: raw for the top order, continuation below.
  long level_count(const Ngram& g) const {
    const int n = static_cast<int>(g.size());
    long c = 0;
    if (n == order()) {
      c = counts_.count(g);
    } else {
      const auto& m = counts_.continuation[static_cast<std::size_t>(n - 1)];
      if (auto it = m.find(g); it != m.end()) c = it->second;
    }
    if (n == 1 && c == 0 && counts_.forced.contains(g[0])) c = 1;
    return c;
  }

  friend KneserNeyLm estimate_kneser_ney(NgramCounts counts, double discount);

 private:
  struct Denominator {
    long total = 0;  // sum over w of the level count of hw
    long types = 0;  // number of w with a positive level count
  };

  double prob_mapped(const std::string& w, const Ngram& h, int n) const {
    if (n == 1) {
      Ngram g{w};
      return static_cast<double>(level_count(g)) / static_cast<double>(unigram_total_);
    }
    Ngram lower_h(h.begin() + 1, h.end());
    const double lower = prob_mapped(w, lower_h, n - 1);
    const auto& dm = denominators_[static_cast<std::size_t>(n - 1)];
    auto it = dm.find(h);
    if (it == dm.end() || it->second.total == 0) return lower;
    Ngram g = h;
    g.push_back(w);
    const double c = static_cast<double>(level_count(g));
    const double total = static_cast<double>(it->second.total);
    return std::max(c - discount_, 0.0) / total +
           discount_ * static_cast<double>(it->second.types) / total * lower;
  }

  NgramCounts counts_;
  double discount_ = 0.75;
  std::set<std::string> vocab_;
  std::vector<std::map<Ngram, Denominator>> denominators_;  // [n-1] keyed by contexts of length n-1
  long unigram_total_ = 0;
};

/// <unk> always joins the forced set so every mapped token has support.
inline KneserNeyLm estimate_kneser_ney(NgramCounts counts, double discount = 0.75) {
  if (!(discount > 0.0 && discount < 1.0)) throw DomainError("estimate_kneser_ney: discount must lie in (0, 1)");
  if (counts.sentences == 0) throw EstimationError("estimate_kneser_ney: no training sentences");
  if (counts.count({kUnk}) == 0) counts.forced.insert(kUnk);
  for (auto it = counts.forced.begin(); it != counts.forced.end();) {
    it = counts.count({*it}) > 0 ? counts.forced.erase(it) : std::next(it);
  }

  KneserNeyLm lm;
  lm.counts_ = std::move(counts);
  lm.discount_ = discount;
  lm.vocab_ = lm.counts_.vocabulary();
  const int order = lm.counts_.order;
  lm.denominators_.resize(static_cast<std::size_t>(order));
  // A unigram-only model has a single level, which uses raw counts.
  for (const auto& w : lm.vocab_) lm.unigram_total_ += lm.level_count({w});
  for (int n = 2; n <= order; ++n) {
    const auto& level = n == order ? lm.counts_.counts[static_cast<std::size_t>(n - 1)]
                                   : lm.counts_.continuation[static_cast<std::size_t>(n - 1)];
    auto& dm = lm.denominators_[static_cast<std::size_t>(n - 1)];
    for (const auto& [g, c] : level) {
      if (c <= 0) continue;
      auto& d = dm[Ngram(g.begin(), g.end() - 1)];
      d.total += c;
      ++d.types;
    }
  }
  return lm;
}

/// Model with forced unigrams added so its vocabulary covers `union_tokens`.
inline std::vector<KneserNeyLm> unify_vocabulary(const std::vector<KneserNeyLm>& lms,
                                                 const std::set<std::string>& union_tokens) {
  std::vector<KneserNeyLm> out;
  out.reserve(lms.size());
  for (const auto& lm : lms) {
    NgramCounts c = lm.counts();
    for (const auto& t : union_tokens) {
      if (t != kBos && !lm.vocabulary().contains(t)) c.forced.insert(t);
    }
    out.push_back(estimate_kneser_ney(std::move(c), lm.discount()));
  }
  return out;
}

/// exp(-sum log p / N), N counting every token plus one </s> per sentence.
inline double perplexity(const KneserNeyLm& lm, const std::vector<Pattern>& test) {
  if (test.empty()) throw ValidationError("perplexity: empty test set");
  double lp = 0.0;
  std::size_t n = 0;
  for (const auto& p : test) {
    lp += lm.sequence_log_prob(p);
    n += p.tokens.size() + 1;
  }
  return std::exp(-lp / static_cast<double>(n));
}

// ---------------------------------------------------------------------------
// Augmentation study

struct AugmentationResult {
  std::size_t d0_size = 0, aug_size = 0, ref_size = 0, test_size = 0;
  std::size_t vocabulary_size = 0;
  double ppl_d0 = 0, ppl_aug = 0, ppl_ref = 0;
  double rel_aug = 0;  // 100 (PPL_aug - PPL_D0) / PPL_D0
  double rel_ref = 0;
};

inline AugmentationResult augmentation_report(const std::vector<Pattern>& d0, const std::vector<Pattern>& d_aug,
                                              const std::vector<Pattern>& d_ref, const std::vector<Pattern>& test,
                                              double discount = 0.75, int order = 4) {
  const std::set<Pattern> aug_set(d_aug.begin(), d_aug.end()), ref_set(d_ref.begin(), d_ref.end());
  for (const auto& p : d0) {
    if (!aug_set.contains(p)) throw ValidationError("augmentation_report: D0 is not contained in D_aug");
    if (!ref_set.contains(p)) throw ValidationError("augmentation_report: D0 is not contained in D_ref");
  }
  std::vector<KneserNeyLm> lms{estimate_kneser_ney(count_ngrams(d0, order), discount),
                              estimate_kneser_ney(count_ngrams(d_aug, order), discount),
                              estimate_kneser_ney(count_ngrams(d_ref, order), discount)};
  std::set<std::string> all;
  for (const auto& lm : lms) all.insert(lm.vocabulary().begin(), lm.vocabulary().end());
  lms = unify_vocabulary(lms, all);

  AugmentationResult r;
  r.d0_size = std::set<Pattern>(d0.begin(), d0.end()).size();
  r.aug_size = aug_set.size();
  r.ref_size = ref_set.size();
  r.test_size = test.size();
  r.vocabulary_size = all.size();
  r.ppl_d0 = perplexity(lms[0], test);
  r.ppl_aug = perplexity(lms[1], test);
  r.ppl_ref = perplexity(lms[2], test);
  r.rel_aug = 100.0 * (r.ppl_aug - r.ppl_d0) / r.ppl_d0;
  r.rel_ref = 100.0 * (r.ppl_ref - r.ppl_d0) / r.ppl_d0;
  return r;
}

// ---------------------------------------------------------------------------
// ARPA text format

namespace detail {

inline std::string join_ngram(const Ngram& g) {
  std::string s;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (i) s += ' ';
    s += g[i];
  }
  return s;
}

inline constexpr double kArpaLogZero = -99.0;

}  // namespace detail

/// Writes every n-gram with a positive level count, plus the contexts that
/// carry back-off weights. Contexts ending in <s> get probability 10^-99.
inline void write_arpa(const KneserNeyLm& lm, std::ostream& out) {
  const int order = lm.order();
  std::vector<std::set<Ngram>> entries(static_cast<std::size_t>(order));
  for (const auto& w : lm.vocabulary()) entries[0].insert({w});
  entries[0].insert({kBos});
  for (int n = 2; n <= order; ++n) {
    const auto& level = n == order ? lm.counts().counts[static_cast<std::size_t>(n - 1)]
                                   : lm.counts().continuation[static_cast<std::size_t>(n - 1)];
    for (const auto& [g, c] : level) {
      if (c <= 0) continue;
      entries[static_cast<std::size_t>(n - 1)].insert(g);
      for (int k = 1; k < n; ++k) entries[static_cast<std::size_t>(k - 1)].insert(Ngram(g.begin(), g.begin() + k));
    }
  }
  out << "\n\\data\\\n";
  for (int n = 1; n <= order; ++n) out << "ngram " << n << '=' << entries[static_cast<std::size_t>(n - 1)].size() << '\n';
  out << std::setprecision(12);
  for (int n = 1; n <= order; ++n) {
    out << "\n\\" << n << "-grams:\n";
    for (const auto& g : entries[static_cast<std::size_t>(n - 1)]) {
      const Ngram h(g.begin(), g.end() - 1);
      const double lp = g.back() == kBos ? detail::kArpaLogZero : std::log10(lm.prob(g.back(), h));
      out << lp << '\t' << detail::join_ngram(g);
      if (n < order) {
        const double bow = lm.interpolation_weight(g);
        if (bow != 1.0) out << '\t' << std::log10(bow);
      }
      out << '\n';
    }
  }
  out << "\n\\end\\\n";
}

/// A back-off model read from ARPA text; scores with the usual recursion
/// p(w|h) = p*(hw) if listed, else bow(h) p(w|h').
class ArpaModel {
 public:
  int order() const { return order_; }

  double log10_prob(const std::string& word, const Ngram& context) const {
    Ngram h(context.end() - static_cast<long>(std::min(context.size(), static_cast<std::size_t>(order_ - 1))),
            context.end());
    return score(map(word), mapped(h));
  }

  double prob(const std::string& word, const Ngram& context) const {
    return std::pow(10.0, log10_prob(word, context));
  }

  double sequence_log_prob(const Pattern& pattern) const {
    Ngram h(static_cast<std::size_t>(order_ - 1), kBos);
    double lp = 0.0;
    auto step = [&](const std::string& tok) {
      const std::string w = map(tok);
      lp += score(w, h) * std::log(10.0);
      if (!h.empty()) {
        h.erase(h.begin());
        h.push_back(w);
      }
    };
    for (const auto& t : pattern.tokens) step(t);
    step(kEos);
    return lp;
  }

  friend ArpaModel read_arpa(std::istream& in);

 private:
  struct Entry {
    double log_prob = 0.0;
    double log_bow = 0.0;
  };

  std::string map(const std::string& t) const { return entries_.contains(Ngram{t}) ? t : kUnk; }
  Ngram mapped(const Ngram& h) const {
    Ngram out;
    for (const auto& t : h) out.push_back(t == kBos ? t : map(t));
    return out;
  }

  double score(const std::string& w, const Ngram& h) const {
    Ngram g = h;
    g.push_back(w);
    if (auto it = entries_.find(g); it != entries_.end()) return it->second.log_prob;
    if (h.empty()) return detail::kArpaLogZero;
    double bow = 0.0;
    if (auto it = entries_.find(h); it != entries_.end()) bow = it->second.log_bow;
    return bow + score(w, Ngram(h.begin() + 1, h.end()));
  }

  int order_ = 0;
  std::map<Ngram, Entry> entries_;
};

inline ArpaModel read_arpa(std::istream& in) {
  ArpaModel m;
  std::string line;
  int section = 0;
  std::vector<long> declared;
  std::vector<long> seen;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) {
    throw FormatError("ARPA line " + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line == "\\data\\") {
      section = -1;
      continue;
    }
    if (line == "\\end\\") break;
    if (line.front() == '\\') {
      const auto dash = line.find("-grams:");
      if (dash == std::string::npos) fail("unknown section '" + line + "'");
      section = std::stoi(line.substr(1, dash - 1));
      if (section < 1 || section > static_cast<int>(declared.size())) fail("undeclared order");
      continue;
    }
    if (section == -1) {
      if (line.rfind("ngram ", 0) != 0) fail("expected 'ngram N=count'");
      const auto eq = line.find('=');
      if (eq == std::string::npos) fail("expected 'ngram N=count'");
      const int n = std::stoi(line.substr(6, eq - 6));
      if (n != static_cast<int>(declared.size()) + 1) fail("orders must be declared in sequence");
      declared.push_back(std::stol(line.substr(eq + 1)));
      seen.push_back(0);
      continue;
    }
    if (section < 1) fail("data before the \\data\\ header");
    std::istringstream ss(line);
    ArpaModel::Entry e;
    if (!(ss >> e.log_prob)) fail("missing probability");
    Ngram g;
    for (int k = 0; k < section; ++k) {
      std::string t;
      if (!(ss >> t)) fail("n-gram shorter than its section order");
      g.push_back(t);
    }
    if (!(ss >> e.log_bow)) e.log_bow = 0.0;
    m.entries_[g] = e;
    ++seen[static_cast<std::size_t>(section - 1)];
  }
  if (declared.empty()) throw FormatError("ARPA: no \\data\\ section");
  for (std::size_t i = 0; i < declared.size(); ++i) {
    if (declared[i] != seen[i]) {
      throw FormatError("ARPA: order " + std::to_string(i + 1) + " declares " + std::to_string(declared[i]) +
                        " entries but lists " + std::to_string(seen[i]));
    }
  }
  m.order_ = static_cast<int>(declared.size());
  return m;
}

inline void save_arpa(const KneserNeyLm& lm, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_arpa(lm, out);
}

inline ArpaModel load_arpa(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_arpa(in);
}

}  // namespace cvaegen::lm
