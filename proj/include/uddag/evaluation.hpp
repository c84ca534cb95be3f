// LAS and enhanced LAS with gold tokenization (identity word alignment).
// All relation comparisons use subtype-stripped relations.

#ifndef UDDAG_EVALUATION_HPP
#define UDDAG_EVALUATION_HPP

#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "uddag/conllu.hpp"

namespace uddag {

struct EvalResult {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  std::size_t correct = 0;
  std::size_t system = 0;
  std::size_t gold = 0;
};

class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// P = correct/system, R = correct/gold. Both totals zero gives 1/1/1; a
/// zero denominator otherwise gives a zero ratio.
inline EvalResult make_result(std::size_t correct, std::size_t system, std::size_t gold) {
  EvalResult r{0, 0, 0, correct, system, gold};
  if (system == 0 && gold == 0) {
    r.precision = r.recall = r.f1 = 1.0;
    return r;
  }
  r.precision = system ? static_cast<double>(correct) / static_cast<double>(system) : 0.0;
  r.recall = gold ? static_cast<double>(correct) / static_cast<double>(gold) : 0.0;
  r.f1 = r.precision + r.recall > 0 ? 2 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  return r;
}

struct LasCounts {
  std::size_t correct = 0;
  std::size_t words = 0;
};

inline LasCounts las_counts(const Sentence& gold, const Sentence& system) {
  auto g = gold.words();
  auto s = system.words();
  if (g.size() != s.size())
    throw EvaluationError("word count mismatch: gold " + std::to_string(g.size()) + ", system " +
                          std::to_string(s.size()));
  LasCounts c{0, g.size()};
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g[i]->head == s[i]->head && strip_subtype(g[i]->deprel) == strip_subtype(s[i]->deprel)) ++c.correct;
  return c;
}

inline EvalResult las(const Sentence& gold, const Sentence& system) {
  auto c = las_counts(gold, system);
  return make_result(c.correct, c.words, c.words);
}

inline EvalResult las(const std::vector<Sentence>& gold, const std::vector<Sentence>& system) {
  if (gold.size() != system.size()) throw EvaluationError("sentence count mismatch");
  std::size_t correct = 0, words = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    auto c = las_counts(gold[i], system[i]);
    correct += c.correct;
    words += c.words;
  }
  return make_result(correct, words, words);
}

/// (dependent, head, stripped relation)
using EnhancedArc = std::tuple<int, int, std::string>;

/// Enhanced dependencies that are not null-node related and not the basic
/// dependency again after stripping.
inline std::set<EnhancedArc> enhanced_set(const Sentence& s) {
  std::set<EnhancedArc> out;
  for (const auto* w : s.words()) {
    const std::string basic = strip_subtype(w->deprel);
    for (const auto& d : w->deps) {
      if (!d.head.is_word()) continue;
      std::string rel = strip_subtype(d.relation);
      if (w->head && d.head.first == *w->head && rel == basic) continue;
      out.emplace(w->id.first, d.head.first, std::move(rel));
    }
  }
  return out;
}

inline EvalResult enhanced_las(const std::vector<Sentence>& gold, const std::vector<Sentence>& system) {
  if (gold.size() != system.size()) throw EvaluationError("sentence count mismatch");
  std::size_t correct = 0, sys = 0, gld = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i].word_count() != system[i].word_count())
      throw EvaluationError("word count mismatch in sentence " + std::to_string(i + 1));
    auto g = enhanced_set(gold[i]);
    auto s = enhanced_set(system[i]);
    gld += g.size();
    sys += s.size();
    for (const auto& arc : s) correct += g.count(arc);
  }
  return make_result(correct, sys, gld);
}

/// 100 * #enhanced / (#enhanced + #words)
inline double enhanced_percentage(const std::vector<Sentence>& corpus) {
  std::size_t enhanced = 0, words = 0;
  for (const auto& s : corpus) {
    enhanced += enhanced_set(s).size();
    words += s.word_count();
  }
  return enhanced + words == 0 ? 0.0 : 100.0 * static_cast<double>(enhanced) / static_cast<double>(enhanced + words);
}

struct EvalReport {
  EvalResult las;
  EvalResult enhanced;
  double enhanced_percentage = 0;
  std::size_t sentences = 0;
  std::size_t words = 0;
};

inline EvalReport evaluate(const std::vector<Sentence>& gold, const std::vector<Sentence>& system) {
  EvalReport r;
  r.las = las(gold, system);
  r.enhanced = enhanced_las(gold, system);
  r.enhanced_percentage = enhanced_percentage(gold);
  r.sentences = gold.size();
  r.words = r.las.gold;
  return r;
}

}  // namespace uddag

#endif  // UDDAG_EVALUATION_HPP
