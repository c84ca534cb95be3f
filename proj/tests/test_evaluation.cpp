#include <gtest/gtest.h>

#include <random>

#include "common.hpp"
#include "uddag/convert.hpp"
#include "uddag/evaluation.hpp"

using namespace uddag;

namespace {

std::string row(int id, int head, const std::string& rel, const std::string& deps = "_") {
  return std::to_string(id) + "\tw" + std::to_string(id) + "\t_\t_\t_\t_\t" + std::to_string(head) + "\t" + rel +
         "\t" + deps + "\t_\n";
}

Sentence make(std::initializer_list<std::string> rows) {
  std::string text;
  for (const auto& r : rows) text += r;
  return test::parse_one(text + "\n");
}

// Plain counting from the set definitions, without the library helpers.
struct Counts {
  std::size_t correct, system, gold;
};

void expect_prf(const EvalResult& r, const Counts& c) {
  EXPECT_EQ(r.correct, c.correct);
  EXPECT_EQ(r.system, c.system);
  EXPECT_EQ(r.gold, c.gold);
  const double p = c.system ? double(c.correct) / c.system : 0, rc = c.gold ? double(c.correct) / c.gold : 0;
  EXPECT_DOUBLE_EQ(r.precision, p);
  EXPECT_DOUBLE_EQ(r.recall, rc);
  EXPECT_DOUBLE_EQ(r.f1, p + rc > 0 ? 2 * p * rc / (p + rc) : 0);
}

}  // namespace

TEST(Las, HandCases) {
  auto gold = make({row(1, 0, "root"), row(2, 1, "obj")});
  auto half = make({row(1, 0, "root"), row(2, 1, "nsubj")});
  EXPECT_DOUBLE_EQ(las(gold, half).f1, 0.5);
  auto wrong_head = make({row(1, 2, "root"), row(2, 0, "obj")});
  EXPECT_DOUBLE_EQ(las(gold, wrong_head).f1, 0.0);
  EXPECT_DOUBLE_EQ(las(gold, gold).f1, 1.0);
  // Subtypes are ignored.
  auto g2 = make({row(1, 0, "root"), row(2, 1, "nsubj")});
  auto s2 = make({row(1, 0, "root"), row(2, 1, "nsubj:pass")});
  EXPECT_DOUBLE_EQ(las(g2, s2).f1, 1.0);
}

TEST(Las, MismatchedInputsThrow) {
  auto a = make({row(1, 0, "root")});
  auto b = make({row(1, 0, "root"), row(2, 1, "obj")});
  EXPECT_THROW(las(a, b), EvaluationError);
  EXPECT_THROW(las(std::vector<Sentence>{a}, std::vector<Sentence>{}), EvaluationError);
  EXPECT_THROW(enhanced_las({a}, {b}), EvaluationError);
}

TEST(EnhancedSet, ControlSentence) {
  auto arcs = enhanced_set(test::sentence("control"));
  std::set<EnhancedArc> we;
  for (const auto& a : arcs)
    if (std::get<0>(a) == 1) we.insert(a);
  EXPECT_EQ(we, (std::set<EnhancedArc>{{1, 5, "nsubj"}, {1, 7, "nsubj"}}));
}

TEST(EnhancedSet, ExcludesBasicAndNullNodeArcs) {
  auto s = make({row(1, 0, "root", "0:root"), row(2, 1, "obj", "1:obj:x|1:nmod")});
  EXPECT_EQ(enhanced_set(s), (std::set<EnhancedArc>{{2, 1, "nmod"}}));
  // The ellipsis sentence has deps headed by 9.1; none reach the set.
  const auto& e = test::sentence("ellipsis");
  std::size_t to_null = 0;
  for (const auto* w : e.words())
    for (const auto& d : w->deps) to_null += !d.head.is_word();
  EXPECT_GT(to_null, 0u);
  std::size_t non_basic = 0;
  for (const auto* w : e.words())
    for (const auto& d : w->deps)
      if (d.head.is_word() && !(w->head && d.head.first == *w->head && strip_subtype(d.relation) == strip_subtype(w->deprel)))
        ++non_basic;
  EXPECT_LE(enhanced_set(e).size(), non_basic);
}

TEST(EnhancedLas, PrecisionRecallF1) {
  // gold {a, b}, system {a, c}: 0.5 / 0.5 / 0.5
  auto gold = make({row(1, 0, "root", "0:root"), row(2, 1, "obj", "1:obj"), row(3, 1, "obj", "1:obj|2:nsubj"),
                    row(4, 1, "obj", "1:obj|2:acl")});
  auto sys = make({row(1, 0, "root", "0:root"), row(2, 1, "obj", "1:obj"), row(3, 1, "obj", "1:obj|2:nsubj"),
                   row(4, 1, "obj", "1:obj|3:acl")});
  auto r = enhanced_las({gold}, {sys});
  EXPECT_DOUBLE_EQ(r.precision, 0.5);
  EXPECT_DOUBLE_EQ(r.recall, 0.5);
  EXPECT_DOUBLE_EQ(r.f1, 0.5);
}

TEST(EnhancedLas, HandCases) {
  const auto base = [](const std::string& d3, const std::string& d4) {
    return make({row(1, 0, "root", "0:root"), row(2, 1, "obj", "1:obj"), row(3, 1, "obj", d3), row(4, 1, "obj", d4)});
  };
  // system has one arc, gold two, one shared
  expect_prf(enhanced_las({base("1:obj|2:x", "1:obj|2:y")}, {base("1:obj|2:x", "1:obj")}), {1, 1, 2});
  // system has extra arcs
  expect_prf(enhanced_las({base("1:obj|2:x", "1:obj")}, {base("1:obj|2:x|4:z", "1:obj|2:y")}), {1, 3, 1});
  // relation subtypes are ignored
  expect_prf(enhanced_las({base("1:obj|2:nsubj:xsubj", "1:obj")}, {base("1:obj|2:nsubj", "1:obj")}), {1, 1, 1});
  // nothing shared
  expect_prf(enhanced_las({base("1:obj|2:x", "1:obj")}, {base("1:obj|4:x", "1:obj")}), {0, 1, 1});
  // sums across sentences
  expect_prf(enhanced_las({base("1:obj|2:x", "1:obj"), base("1:obj", "1:obj|3:q")},
                          {base("1:obj|2:x", "1:obj"), base("1:obj", "1:obj")}),
             {1, 1, 2});
}

TEST(EnhancedLas, EmptySets) {
  auto plain = make({row(1, 0, "root", "0:root"), row(2, 1, "obj", "1:obj")});
  auto extra = make({row(1, 0, "root", "0:root"), row(2, 1, "obj", "1:obj|1:nsubj")});
  auto both = enhanced_las({plain}, {plain});
  EXPECT_EQ(both.f1, 1.0);
  EXPECT_EQ(both.correct + both.system + both.gold, 0u);
  EXPECT_EQ(enhanced_las({plain}, {extra}).f1, 0.0);
  EXPECT_EQ(enhanced_las({extra}, {plain}).f1, 0.0);
}

TEST(EnhancedPercentage, Cases) {
  // 5 enhanced arcs over 95 words gives 5%.
  std::vector<Sentence> corpus;
  std::vector<std::string> rows{row(1, 0, "root", "0:root")};
  for (int i = 2; i <= 95; ++i) rows.push_back(row(i, 1, "dep", i <= 6 ? "1:dep|" + std::to_string(i - 1) + ":x" : "1:dep"));
  std::string text;
  for (const auto& r : rows) text += r;
  corpus.push_back(test::parse_one(text + "\n"));
  EXPECT_EQ(enhanced_set(corpus[0]).size(), 5u);
  EXPECT_DOUBLE_EQ(enhanced_percentage(corpus), 5.0);
  EXPECT_EQ(enhanced_percentage({make({row(1, 0, "root")})}), 0.0);
  EXPECT_EQ(enhanced_percentage({}), 0.0);
}

// Random perturbations of fixture deps: scores stay in [0, 1], F1 is
// symmetric in gold and system, and precision and recall swap.
TEST(EvaluationProperty, BoundsAndSymmetry) {
  std::mt19937_64 rng(1);
  const auto& fx = test::fixtures();
  for (int trial = 0; trial < 100; ++trial) {
    const auto& c = fx[rng() % fx.size()];
    Sentence a = c.sentence, b = c.sentence;
    for (auto* s : {&a, &b})
      for (auto& t : s->tokens) {
        if (!t.id.is_word() || rng() % 3) continue;
        if (!t.deps.empty() && rng() % 2) t.deps.pop_back();
        if (rng() % 2) t.deprel = "dep";
      }
    auto ab = evaluate({a}, {b}), ba = evaluate({b}, {a});
    for (const auto& r : {ab.las, ab.enhanced}) {
      EXPECT_GE(r.f1, 0);
      EXPECT_LE(r.f1, 1);
    }
    EXPECT_DOUBLE_EQ(ab.enhanced.f1, ba.enhanced.f1);
    EXPECT_DOUBLE_EQ(ab.enhanced.precision, ba.enhanced.recall);
    EXPECT_DOUBLE_EQ(ab.las.f1, ba.las.f1);
  }
}

TEST(Evaluate, RoundTripScoresOne) {
  std::vector<Sentence> gold, sys;
  for (const auto& c : test::fixtures()) {
    gold.push_back(c.sentence);
    sys.push_back(dag_to_ud(ud_to_dag(c.sentence), c.sentence));
  }
  auto r = evaluate(gold, sys);
  EXPECT_EQ(r.las.f1, 1.0);
  EXPECT_EQ(r.enhanced.f1, 1.0);
  EXPECT_EQ(r.sentences, gold.size());
  std::size_t words = 0;
  for (const auto& s : gold) words += s.word_count();
  EXPECT_EQ(r.words, words);
  EXPECT_GT(r.enhanced_percentage, 0);
}
