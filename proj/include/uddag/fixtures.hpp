// The bundled mini-treebank and its expected outputs.
//
// Layout under the data directory:
//   fixtures/fixtures.conllu            hand-built sentences; each has
//                                       "# fixture = NAME" and "# tags = ..."
//   fixtures/golden/NAME.dag            expected ud_to_dag output
//   fixtures/golden/NAME.roundtrip.conllu
//   fixtures/memorization.conllu        50 sentences for training tests

#ifndef UDDAG_FIXTURES_HPP
#define UDDAG_FIXTURES_HPP

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "uddag/conllu.hpp"

namespace uddag {

struct FixtureCase {
  std::string name;
  std::string conllu;  // the sentence block as written
  Sentence sentence;
  std::string expected_dag;
  std::string expected_roundtrip;
  std::vector<std::string> tags;

  bool has_tag(const std::string& t) const {
    for (const auto& x : tags)
      if (x == t) return true;
    return false;
  }
};

class FixtureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// $UDDAG_DATA_DIR, else the directory compiled in as UDDAG_DEFAULT_DATA_DIR,
/// else "data".
inline std::filesystem::path default_data_dir() {
  if (const char* env = std::getenv("UDDAG_DATA_DIR"); env && *env) return env;
#ifdef UDDAG_DEFAULT_DATA_DIR
  return UDDAG_DEFAULT_DATA_DIR;
#else
  return "data";
#endif
}

inline std::string read_text_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw FixtureError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Loads and validates every fixture. Throws FixtureError when a file is
/// missing, a sentence does not parse or validate, or a name repeats.
inline std::vector<FixtureCase> load_fixtures(const std::filesystem::path& data_dir = default_data_dir()) {
  const auto dir = data_dir / "fixtures";
  const std::string text = read_text_file(dir / "fixtures.conllu");
  std::vector<Sentence> sentences;
  try {
    sentences = parse_conllu(text);
  } catch (const ConlluError& e) {
    throw FixtureError(std::string("fixtures.conllu: ") + e.what());
  }
  std::vector<FixtureCase> out;
  for (auto& s : sentences) {
    FixtureCase c;
    auto name = s.comment_value("fixture");
    if (!name || name->empty()) throw FixtureError("fixture sentence without a '# fixture' comment");
    c.name = *name;
    for (const auto& o : out)
      if (o.name == c.name) throw FixtureError("duplicate fixture name " + c.name);
    if (auto v = validate(s); !v.empty()) throw FixtureError("fixture " + c.name + " fails validation: " + v[0].kind);
    std::istringstream tags(s.comment_value("tags").value_or(""));
    for (std::string t; tags >> t;) c.tags.push_back(t);
    c.conllu = write_conllu({s});
    c.expected_dag = read_text_file(dir / "golden" / (c.name + ".dag"));
    c.expected_roundtrip = read_text_file(dir / "golden" / (c.name + ".roundtrip.conllu"));
    c.sentence = std::move(s);
    out.push_back(std::move(c));
  }
  return out;
}

inline std::vector<Sentence> load_memorization_corpus(const std::filesystem::path& data_dir = default_data_dir()) {
  return parse_conllu(read_text_file(data_dir / "fixtures" / "memorization.conllu"));
}

}  // namespace uddag

#endif  // UDDAG_FIXTURES_HPP
