// CoNLL-U reading, validation and writing, including enhanced dependencies
// (DEPS column), multi-word token ranges, null nodes and comments.

#ifndef UDDAG_CONLLU_HPP
#define UDDAG_CONLLU_HPP

#include <algorithm>
#include <charconv>
#include <compare>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace uddag {

/// Identifier in the ID column (or a head reference in HEAD/DEPS).
/// word(0) is used for the artificial root in head positions.
struct TokenId {
  enum class Kind : std::uint8_t { word, range, null };

  Kind kind = Kind::word;
  int first = 0;   // word index, range start, or null base
  int second = 0;  // range end, or null sub-index

  static TokenId word(int index) { return {Kind::word, index, 0}; }
  static TokenId range(int start, int end) { return {Kind::range, start, end}; }
  static TokenId null(int base, int sub) { return {Kind::null, base, sub}; }

  bool is_word() const { return kind == Kind::word; }
  bool is_range() const { return kind == Kind::range; }
  bool is_null() const { return kind == Kind::null; }

  // Numeric order used for DEPS heads: 9 < 9.1 < 9.2 < 10.
  std::pair<int, int> sort_key() const {
    return {first, kind == Kind::null ? second : 0};
  }

  std::string str() const {
    switch (kind) {
      case Kind::word: return std::to_string(first);
      case Kind::range: return std::to_string(first) + "-" + std::to_string(second);
      case Kind::null: return std::to_string(first) + "." + std::to_string(second);
    }
    return {};
  }

  friend bool operator==(const TokenId&, const TokenId&) = default;
};

struct EnhancedDep {
  TokenId head;
  std::string relation;

  friend bool operator==(const EnhancedDep&, const EnhancedDep&) = default;
};

inline bool deps_less(const EnhancedDep& a, const EnhancedDep& b) {
  if (a.head.sort_key() != b.head.sort_key()) return a.head.sort_key() < b.head.sort_key();
  return a.relation < b.relation;
}

/// One row. Text columns use the empty string for "absent" ("_" on disk).
struct Token {
  TokenId id;
  std::string form;
  std::string lemma;
  std::string upos;
  std::string xpos;
  std::string feats;
  std::optional<int> head;
  std::string deprel;
  std::vector<EnhancedDep> deps;
  std::string misc;

  bool is_word() const { return id.is_word(); }

  friend bool operator==(const Token&, const Token&) = default;
};

struct Sentence {
  std::vector<std::string> comments;  // verbatim, including the leading '#'
  std::vector<Token> tokens;

  std::size_t word_count() const {
    return static_cast<std::size_t>(
        std::count_if(tokens.begin(), tokens.end(), [](const Token& t) { return t.is_word(); }));
  }

  /// Word tokens in order; index i holds word i+1.
  std::vector<const Token*> words() const {
    std::vector<const Token*> out;
    for (const auto& t : tokens)
      if (t.is_word()) out.push_back(&t);
    return out;
  }

  /// Value of a "# key = value" comment.
  std::optional<std::string> comment_value(std::string_view key) const {
    for (const auto& c : comments) {
      std::string_view v(c);
      if (v.empty() || v[0] != '#') continue;
      v.remove_prefix(1);
      while (!v.empty() && v.front() == ' ') v.remove_prefix(1);
      if (v.substr(0, key.size()) != key) continue;
      v.remove_prefix(key.size());
      while (!v.empty() && v.front() == ' ') v.remove_prefix(1);
      if (v.empty() || v.front() != '=') continue;
      v.remove_prefix(1);
      while (!v.empty() && v.front() == ' ') v.remove_prefix(1);
      return std::string(v);
    }
    return std::nullopt;
  }

  friend bool operator==(const Sentence&, const Sentence&) = default;
};

class ConlluError : public std::runtime_error {
 public:
  ConlluError(std::size_t line, int column, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) +
                           (column > 0 ? ", column " + std::to_string(column) : std::string()) +
                           ": " + what),
        line_(line),
        column_(column) {}

  std::size_t line() const { return line_; }
  int column() const { return column_; }

 private:
  std::size_t line_;
  int column_;
};

namespace detail {

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::optional<int> to_int(std::string_view s) {
  if (s.empty()) return std::nullopt;
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || value < 0) return std::nullopt;
  return value;
}

inline std::optional<TokenId> parse_id(std::string_view s) {
  if (auto dash = s.find('-'); dash != std::string_view::npos) {
    auto a = to_int(s.substr(0, dash)), b = to_int(s.substr(dash + 1));
    if (!a || !b || *a < 1) return std::nullopt;
    return TokenId::range(*a, *b);
  }
  if (auto dot = s.find('.'); dot != std::string_view::npos) {
    auto a = to_int(s.substr(0, dot)), b = to_int(s.substr(dot + 1));
    if (!a || !b || *b < 1) return std::nullopt;
    return TokenId::null(*a, *b);
  }
  auto a = to_int(s);
  if (!a) return std::nullopt;
  return TokenId::word(*a);
}

inline std::string field_out(const std::string& s) { return s.empty() ? "_" : s; }

inline std::string field_in(std::string_view s) { return s == "_" ? std::string() : std::string(s); }

}  // namespace detail

/// Parses a DEPS value. The first colon splits head from relation; later
/// colons stay inside the relation ("nmod:on").
inline std::vector<EnhancedDep> parse_deps(std::string_view text) {
  std::vector<EnhancedDep> deps;
  if (text == "_") return deps;
  for (auto item : detail::split(text, '|')) {
    auto colon = item.find(':');
    if (colon == std::string_view::npos || colon + 1 >= item.size())
      throw std::invalid_argument("malformed DEPS entry '" + std::string(item) + "'");
    auto head = detail::parse_id(item.substr(0, colon));
    if (!head || head->is_range())
      throw std::invalid_argument("malformed DEPS head '" + std::string(item.substr(0, colon)) + "'");
    EnhancedDep dep{*head, std::string(item.substr(colon + 1))};
    if (std::find(deps.begin(), deps.end(), dep) != deps.end())
      throw std::invalid_argument("duplicate DEPS entry '" + std::string(item) + "'");
    deps.push_back(std::move(dep));
  }
  return deps;
}

inline std::string format_deps(std::vector<EnhancedDep> deps) {
  if (deps.empty()) return "_";
  std::sort(deps.begin(), deps.end(), deps_less);
  std::string out;
  for (const auto& d : deps) {
    if (!out.empty()) out += '|';
    out += d.head.str();
    out += ':';
    out += d.relation;
  }
  return out;
}

namespace detail {

inline constexpr const char* kColumnNames[] = {"ID",    "FORM",   "LEMMA", "UPOS", "XPOS",
                                               "FEATS", "HEAD",   "DEPREL", "DEPS", "MISC"};

inline Token parse_token_line(std::string_view line, std::size_t line_no) {
  auto cols = split(line, '\t');
  if (cols.size() != 10)
    throw ConlluError(line_no, 0,
                      "expected 10 tab-separated columns, found " + std::to_string(cols.size()));
  for (int c = 0; c < 10; ++c)
    if (cols[c].empty())
      throw ConlluError(line_no, c + 1, std::string("empty ") + kColumnNames[c] + " field");

  Token tok;
  auto id = parse_id(cols[0]);
  if (!id || (id->is_word() && id->first < 1) || (id->is_range() && id->first > id->second))
    throw ConlluError(line_no, 1, "malformed ID '" + std::string(cols[0]) + "'");
  tok.id = *id;
  tok.form = field_in(cols[1]);
  tok.lemma = field_in(cols[2]);
  tok.upos = field_in(cols[3]);
  tok.xpos = field_in(cols[4]);
  tok.feats = field_in(cols[5]);
  if (cols[6] != "_") {
    auto h = to_int(cols[6]);
    if (!h) throw ConlluError(line_no, 7, "non-numeric HEAD '" + std::string(cols[6]) + "'");
    if (!tok.id.is_word())
      throw ConlluError(line_no, 7, "HEAD must be '_' on range and null rows");
    tok.head = *h;
  }
  tok.deprel = field_in(cols[7]);
  if (!tok.id.is_word() && !tok.deprel.empty())
    throw ConlluError(line_no, 8, "DEPREL must be '_' on range and null rows");
  try {
    tok.deps = parse_deps(cols[8]);
  } catch (const std::invalid_argument& e) {
    throw ConlluError(line_no, 9, e.what());
  }
  if (tok.id.is_range() && !tok.deps.empty())
    throw ConlluError(line_no, 9, "DEPS must be '_' on range rows");
  tok.misc = field_in(cols[9]);
  return tok;
}

struct PendingSentence {
  Sentence sentence;
  std::vector<std::size_t> lines;  // source line of each token
};

inline void check_sentence(const PendingSentence& p) {
  const auto& toks = p.sentence.tokens;
  int expected = 1;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (toks[i].is_word()) {
      if (toks[i].id.first != expected)
        throw ConlluError(p.lines[i], 1,
                          toks[i].id.first < expected
                              ? "duplicate word index " + std::to_string(toks[i].id.first)
                              : "word index " + std::to_string(toks[i].id.first) +
                                    " out of sequence (expected " + std::to_string(expected) + ")");
      ++expected;
    }
  }
  const int n = expected - 1;
  std::set<std::pair<int, int>> nulls;
  for (const auto& t : toks)
    if (t.id.is_null()) nulls.insert({t.id.first, t.id.second});
  for (std::size_t i = 0; i < toks.size(); ++i) {
    const auto& t = toks[i];
    if (t.id.is_range() && (t.id.second > n))
      throw ConlluError(p.lines[i], 1, "range " + t.id.str() + " refers to missing words");
    if (t.id.is_null() && t.id.first > n)
      throw ConlluError(p.lines[i], 1, "null node " + t.id.str() + " after last word");
    if (t.head && *t.head > n)
      throw ConlluError(p.lines[i], 7, "HEAD " + std::to_string(*t.head) + " out of range");
    for (const auto& d : t.deps) {
      if (d.head.is_word() && d.head.first > n)
        throw ConlluError(p.lines[i], 9, "DEPS head " + d.head.str() + " out of range");
    }
  }
}

}  // namespace detail

/// Parses a whole CoNLL-U document. Throws ConlluError naming line and column.
inline std::vector<Sentence> parse_conllu(std::string_view text) {
  std::vector<Sentence> out;
  detail::PendingSentence cur;
  bool open = false;
  auto flush = [&] {
    if (!open) return;
    if (cur.sentence.tokens.empty())
      throw ConlluError(cur.lines.empty() ? 0 : cur.lines.back(), 0, "sentence without tokens");
    detail::check_sentence(cur);
    out.push_back(std::move(cur.sentence));
    cur = {};
    open = false;
  };

  std::size_t line_no = 0;
  std::size_t pos = 0;
  std::size_t last_comment_line = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    if (line.empty()) {
      if (open && cur.sentence.tokens.empty())
        throw ConlluError(last_comment_line, 0, "comment block without tokens");
      flush();
      continue;
    }
    open = true;
    if (line.front() == '#') {
      if (!cur.sentence.tokens.empty())
        throw ConlluError(line_no, 0, "comment line inside token block");
      cur.sentence.comments.emplace_back(line);
      last_comment_line = line_no;
      continue;
    }
    cur.sentence.tokens.push_back(detail::parse_token_line(line, line_no));
    cur.lines.push_back(line_no);
  }
  if (open && cur.sentence.tokens.empty())
    throw ConlluError(last_comment_line, 0, "comment block without tokens");
  flush();
  return out;
}

inline std::vector<Sentence> read_conllu_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_conllu(buf.str());
}

inline std::string format_token(const Token& t) {
  using detail::field_out;
  std::string line = t.id.str();
  for (const auto* f : {&t.form, &t.lemma, &t.upos, &t.xpos, &t.feats}) {
    line += '\t';
    line += field_out(*f);
  }
  line += '\t';
  line += t.head ? std::to_string(*t.head) : "_";
  line += '\t';
  line += field_out(t.deprel);
  line += '\t';
  line += format_deps(t.deps);
  line += '\t';
  line += field_out(t.misc);
  return line;
}

/// Deterministic output: DEPS sorted by (head, relation), absent fields as
/// "_", LF line endings, one blank line after every sentence.
inline std::string write_conllu(const std::vector<Sentence>& sentences) {
  std::string out;
  for (const auto& s : sentences) {
    for (const auto& c : s.comments) {
      out += c;
      out += '\n';
    }
    for (const auto& t : s.tokens) {
      out += format_token(t);
      out += '\n';
    }
    out += '\n';
  }
  return out;
}

struct Violation {
  std::string kind;  // "self-head", "cycle", "multiple roots", ...
  std::string detail;
};

/// Structural checks on a parsed sentence. Violations are data, never thrown.
inline std::vector<Violation> validate(const Sentence& s) {
  std::vector<Violation> out;
  const auto words = s.words();
  const int n = static_cast<int>(words.size());
  std::set<std::pair<int, int>> nulls;
  for (const auto& t : s.tokens)
    if (t.id.is_null()) nulls.insert({t.id.first, t.id.second});

  int roots = 0;
  bool heads_complete = true;
  for (const auto* w : words) {
    const int i = w->id.first;
    if (!w->head) {
      out.push_back({"missing head", "word " + std::to_string(i)});
      heads_complete = false;
      continue;
    }
    if (*w->head == i) out.push_back({"self-head", "word " + std::to_string(i)});
    if (*w->head < 0 || *w->head > n) {
      out.push_back({"head out of range", "word " + std::to_string(i)});
      heads_complete = false;
    }
    if (*w->head == 0) {
      ++roots;
      if (w->deprel != "root")
        out.push_back({"root relation", "word " + std::to_string(i) + " attached to 0 as '" + w->deprel + "'"});
    } else if (w->deprel == "root") {
      out.push_back({"root relation", "word " + std::to_string(i) + " labeled root below a word"});
    }
    if (w->deprel.empty()) out.push_back({"missing relation", "word " + std::to_string(i)});
  }
  if (n > 0 && roots == 0) out.push_back({"no root", ""});
  if (roots > 1) out.push_back({"multiple roots", std::to_string(roots) + " words attached to 0"});

  // Cycles longer than one (self-heads are reported above).
  if (heads_complete) {
    for (const auto* w : words) {
      int steps = 0;
      int cur = w->id.first;
      while (cur != 0 && steps <= n) {
        int next = *words[cur - 1]->head;
        if (next == cur) break;
        cur = next;
        ++steps;
      }
      if (cur != 0 && steps > n && *w->head != w->id.first) {
        out.push_back({"cycle", "word " + std::to_string(w->id.first) + " does not reach the root"});
      }
    }
  }

  for (const auto& t : s.tokens) {
    if (t.id.is_range()) continue;
    std::set<std::pair<std::pair<int, int>, std::string>> seen;
    for (const auto& d : t.deps) {
      if (!seen.insert({d.head.sort_key(), d.relation}).second)
        out.push_back({"duplicate enhanced dependency", t.id.str() + " " + d.head.str() + ":" + d.relation});
      bool ok = d.head.is_word() ? (d.head.first >= 0 && d.head.first <= n)
                                 : nulls.count({d.head.first, d.head.second}) > 0;
      if (!ok)
        out.push_back({"dangling enhanced head", t.id.str() + " -> " + d.head.str()});
    }
  }
  return out;
}

/// Universal part of a relation: everything before the first colon.
inline std::string strip_subtype(std::string_view relation) {
  auto colon = relation.find(':');
  return std::string(colon == std::string_view::npos ? relation : relation.substr(0, colon));
}

}  // namespace uddag

#endif  // UDDAG_CONLLU_HPP
