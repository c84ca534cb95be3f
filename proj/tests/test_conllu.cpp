#include <gtest/gtest.h>

#include <random>

#include "common.hpp"
#include "uddag/conllu.hpp"

using namespace uddag;

namespace {

const char* kWeLine =
    "1\tWe\twe\tPRON\tPRP\tCase=Nom|Number=Plur|Person=1|PronType=Prs\t3\tnsubj:pass\t"
    "3:nsubj:pass|5:nsubj:xsubj|7:nsubj:xsubj\t_\n";

// Plain words from..to attached to word 1, so that heads up to `to` exist.
std::string filler(int from, int to) {
  std::string out;
  for (int i = from; i <= to; ++i) out += std::to_string(i) + "\tw\t_\t_\t_\t_\t1\tdep\t_\t_\n";
  return out;
}

bool has_violation(const Sentence& s, const std::string& kind) {
  for (const auto& v : validate(s))
    if (v.kind == kind) return true;
  return false;
}

}  // namespace

TEST(Conllu, ParsesEnhancedColumnSplittingAtFirstColon) {
  auto s = parse_conllu(std::string(kWeLine) + filler(2, 7) + "\n");
  ASSERT_EQ(s.size(), 1u);
  const Token& t = s[0].tokens.at(0);
  EXPECT_EQ(t.id, TokenId::word(1));
  EXPECT_EQ(t.form, "We");
  EXPECT_EQ(t.head, 3);
  EXPECT_EQ(t.deprel, "nsubj:pass");
  std::vector<EnhancedDep> want{{TokenId::word(3), "nsubj:pass"},
                                {TokenId::word(5), "nsubj:xsubj"},
                                {TokenId::word(7), "nsubj:xsubj"}};
  EXPECT_EQ(t.deps, want);
}

TEST(Conllu, EmptyInputGivesNoSentences) {
  EXPECT_TRUE(parse_conllu("").empty());
  EXPECT_TRUE(parse_conllu("\n\n").empty());
}

TEST(Conllu, UnderscoreMeansAbsent) {
  auto s = test::parse_one("1\tHi\t_\t_\t_\t_\t0\troot\t_\t_\n\n");
  const Token& t = s.tokens[0];
  EXPECT_TRUE(t.deps.empty());
  EXPECT_TRUE(t.lemma.empty());
  EXPECT_TRUE(t.misc.empty());
}

TEST(Conllu, NullAndRangeIdsRenderBack) {
  EXPECT_EQ(TokenId::null(9, 1).str(), "9.1");
  EXPECT_EQ(TokenId::range(2, 3).str(), "2-3");
  const auto& s = test::sentence("ellipsis");
  bool found = false;
  for (const auto& t : s.tokens)
    if (t.id.is_null()) {
      found = true;
      EXPECT_EQ(t.id.str(), "9.1");
      EXPECT_FALSE(t.head);
      EXPECT_TRUE(t.deprel.empty());
    }
  EXPECT_TRUE(found);
}

TEST(Conllu, MinimalSentenceIsTwoLinesPlusBlank) {
  Sentence s;
  Token t;
  t.id = TokenId::word(1);
  t.form = "Hi";
  t.head = 0;
  t.deprel = "root";
  s.tokens.push_back(t);
  EXPECT_EQ(write_conllu({s}), "1\tHi\t_\t_\t_\t_\t0\troot\t_\t_\n\n");
}

TEST(Conllu, DepsAreSortedOnOutput) {
  auto s = test::parse_one("1\tx\t_\t_\t_\t_\t0\troot\t7:nsubj:xsubj|5:nsubj:xsubj\t_\n" + filler(2, 7) + "\n");
  auto out = write_conllu({s});
  EXPECT_NE(out.find("\t5:nsubj:xsubj|7:nsubj:xsubj\t"), std::string::npos) << out;
}

TEST(Conllu, NullHeadsSortBetweenWords) {
  auto s = test::parse_one(
      "1\ta\t_\t_\t_\t_\t0\troot\t10:x|9.1:x|9:x\t_\n" + filler(2, 9) +
      "9.1\te\t_\t_\t_\t_\t_\t_\t1:dep\t_\n" + filler(10, 10) + "\n");
  auto out = write_conllu({s});
  EXPECT_NE(out.find("9:x|9.1:x|10:x"), std::string::npos) << out;
}

TEST(Conllu, FixtureFileRoundTripsAfterNormalization) {
  const auto text = read_text_file(default_data_dir() / "fixtures" / "fixtures.conllu");
  auto first = parse_conllu(text);
  auto written = write_conllu(first);
  // Fixtures are stored normalized, so the round trip is byte-exact.
  EXPECT_EQ(written, text);
  EXPECT_EQ(parse_conllu(written), first);
}

TEST(Conllu, WriteParseIsIdempotentOnShuffledDeps) {
  std::mt19937_64 rng(1);
  for (const auto& c : test::fixtures()) {
    Sentence s = c.sentence;
    for (auto& t : s.tokens) std::shuffle(t.deps.begin(), t.deps.end(), rng);
    auto once = write_conllu({s});
    auto twice = write_conllu(parse_conllu(once));
    EXPECT_EQ(once, twice) << c.name;
    EXPECT_EQ(once, write_conllu({c.sentence})) << c.name;
  }
}

TEST(Conllu, MultiwordRangesSurviveVerbatim) {
  const auto& s = test::sentence("dont-know");
  auto back = test::parse_one(write_conllu({s}));
  int ranges = 0;
  for (std::size_t i = 0; i < s.tokens.size(); ++i)
    if (s.tokens[i].id.is_range()) {
      ++ranges;
      EXPECT_EQ(s.tokens[i], back.tokens[i]);
      EXPECT_FALSE(s.tokens[i].head);
    }
  EXPECT_EQ(ranges, 1);
}

TEST(Conllu, CommentsKeptVerbatim) {
  auto s = test::parse_one("# text = a  b\n#weird\n1\ta\t_\t_\t_\t_\t0\troot\t_\t_\n\n");
  ASSERT_EQ(s.comments.size(), 2u);
  EXPECT_EQ(s.comments[0], "# text = a  b");
  EXPECT_EQ(s.comments[1], "#weird");
}

TEST(ConlluErrors, WrongColumnCountNamesLine) {
  try {
    parse_conllu("1\tHi\t_\t_\t_\t_\t0\troot\t_\t_\n2\tthere\n\n");
    FAIL();
  } catch (const ConlluError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(ConlluErrors, NonNumericHead) {
  try {
    parse_conllu("1\tHi\t_\t_\t_\t_\tx\troot\t_\t_\n\n");
    FAIL();
  } catch (const ConlluError& e) {
    EXPECT_EQ(e.line(), 1u);
    EXPECT_EQ(e.column(), 7);
  }
}

TEST(ConlluErrors, DuplicateWordIndex) {
  EXPECT_THROW(parse_conllu("1\ta\t_\t_\t_\t_\t0\troot\t_\t_\n1\tb\t_\t_\t_\t_\t1\tdep\t_\t_\n\n"), ConlluError);
}

TEST(ConlluErrors, HeadOutOfRange) {
  EXPECT_THROW(parse_conllu("1\ta\t_\t_\t_\t_\t0\troot\t_\t_\n2\tb\t_\t_\t_\t_\t5\tdep\t_\t_\n\n"), ConlluError);
}

TEST(Validate, Fig2SentenceIsClean) { EXPECT_TRUE(validate(test::sentence("control")).empty()); }

TEST(Validate, AllFixturesClean) {
  for (const auto& c : test::fixtures()) EXPECT_TRUE(validate(c.sentence).empty()) << c.name;
}

TEST(Validate, SelfHead) {
  auto s = test::parse_one("1\ta\t_\t_\t_\t_\t0\troot\t_\t_\n2\tb\t_\t_\t_\t_\t2\tdep\t_\t_\n\n");
  auto v = validate(s);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].kind, "self-head");
}

TEST(Validate, DanglingNullHead) {
  auto s = test::parse_one("1\ta\t_\t_\t_\t_\t0\troot\t0:root|9.1:nsubj\t_\n\n");
  EXPECT_TRUE(has_violation(s, "dangling enhanced head"));
  // The same reference is fine once the null node exists.
  EXPECT_TRUE(validate(test::sentence("ellipsis")).empty());
}

TEST(Validate, CycleAndMultipleRoots) {
  auto cyc = test::parse_one(
      "1\ta\t_\t_\t_\t_\t0\troot\t_\t_\n2\tb\t_\t_\t_\t_\t3\tdep\t_\t_\n3\tc\t_\t_\t_\t_\t2\tdep\t_\t_\n\n");
  EXPECT_TRUE(has_violation(cyc, "cycle"));
  auto roots = test::parse_one("1\ta\t_\t_\t_\t_\t0\troot\t_\t_\n2\tb\t_\t_\t_\t_\t0\troot\t_\t_\n\n");
  EXPECT_TRUE(has_violation(roots, "multiple roots"));
}

TEST(Conllu, StripSubtype) {
  EXPECT_EQ(strip_subtype("nsubj:pass"), "nsubj");
  EXPECT_EQ(strip_subtype("nmod:on"), "nmod");
  EXPECT_EQ(strip_subtype("obj"), "obj");
}
