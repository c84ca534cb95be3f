// Line-oriented debug serialization of converted sentences.
//
// One block per sentence, blocks separated by a blank line:
//
//   comment<TAB># sent_id = ...                 original comment, verbatim
//   token<TAB><10 CoNLL-U columns>               word and range rows
//   node<TAB><id><TAB>root<TAB><swap>
//   node<TAB><id><TAB>terminal<TAB><swap><TAB><position>
//   node<TAB><id><TAB>nonterminal<TAB><swap>
//   edge<TAB><parent><TAB><child><TAB><label><TAB>primary|remote
//
// Node ids are dense and listed in order; swap indices are integers or
// "num/den".

#ifndef UDDAG_DAG_TEXT_HPP
#define UDDAG_DAG_TEXT_HPP

#include <string>
#include <string_view>
#include <vector>

#include "uddag/conllu.hpp"
#include "uddag/dag.hpp"

namespace uddag {

struct DagDocument {
  Sentence sentence;  // tokens and comments, without null rows
  DagGraph graph;
};

inline std::string write_dag_text(const DagGraph& g) {
  std::string out;
  for (std::uint32_t i = 0; i < g.node_count(); ++i) {
    const auto& nd = g.node({i});
    out += "node\t" + std::to_string(i) + '\t';
    switch (nd.kind) {
      case NodeKind::root: out += "root\t" + nd.swap_index.str(); break;
      case NodeKind::terminal:
        out += "terminal\t" + nd.swap_index.str() + '\t' + std::to_string(nd.terminal.position);
        break;
      case NodeKind::nonterminal: out += "nonterminal\t" + nd.swap_index.str(); break;
    }
    out += '\n';
  }
  for (const auto& e : g.edges()) {
    out += "edge\t" + std::to_string(e.parent.index) + '\t' + std::to_string(e.child.index) + '\t' +
           e.label + '\t' + (e.remote ? "remote" : "primary") + '\n';
  }
  return out;
}

inline std::string write_dag_documents(const std::vector<DagDocument>& docs) {
  std::string out;
  for (const auto& d : docs) {
    for (const auto& c : d.sentence.comments) out += "comment\t" + c + '\n';
    for (const auto& t : d.sentence.tokens)
      if (!t.id.is_null()) out += "token\t" + format_token(t) + '\n';
    out += write_dag_text(d.graph);
    out += '\n';
  }
  return out;
}

inline std::vector<DagDocument> read_dag_documents(std::string_view text) {
  std::vector<DagDocument> out;
  DagDocument cur;
  bool open = false;
  std::size_t line_no = 0, pos = 0;
  std::vector<std::size_t> token_lines;

  auto fail = [&](const std::string& msg) -> void { throw ConlluError(line_no, 0, msg); };
  auto flush = [&] {
    if (!open) return;
    for (std::uint32_t i = 0; i < cur.graph.node_count(); ++i) {
      const auto& nd = cur.graph.node({i});
      if (nd.is_terminal() && nd.terminal.position > static_cast<int>(cur.sentence.word_count()))
        fail("terminal position beyond the token rows");
    }
    out.push_back(std::move(cur));
    cur = {};
    open = false;
  };

  std::vector<const Token*> words;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) {
      flush();
      continue;
    }
    open = true;
    auto tab = line.find('\t');
    if (tab == std::string_view::npos) fail("missing record type");
    auto kind = line.substr(0, tab);
    auto rest = line.substr(tab + 1);
    if (kind == "comment") {
      cur.sentence.comments.emplace_back(rest);
    } else if (kind == "token") {
      cur.sentence.tokens.push_back(detail::parse_token_line(rest, line_no));
    } else if (kind == "node") {
      auto f = detail::split(rest, '\t');
      if (f.size() < 3) fail("malformed node record");
      auto id = detail::to_int(f[0]);
      if (!id || static_cast<std::size_t>(*id) != cur.graph.node_count()) fail("node ids must be dense and ordered");
      Rational swap;
      try {
        swap = Rational::parse(std::string(f[2]));
      } catch (const std::exception&) {
        fail("malformed swap index");
      }
      if (f[1] == "root" && f.size() == 3) {
        cur.graph.add_node(NodeKind::root, swap);
      } else if (f[1] == "nonterminal" && f.size() == 3) {
        cur.graph.add_node(NodeKind::nonterminal, swap);
      } else if (f[1] == "terminal" && f.size() == 4) {
        auto p = detail::to_int(f[3]);
        if (!p || *p < 1) fail("malformed terminal position");
        TerminalInfo info{*p, {}, {}, {}, {}};
        for (const auto& t : cur.sentence.tokens)
          if (t.is_word() && t.id.first == *p) info = {*p, t.form, t.lemma, t.upos, t.xpos};
        cur.graph.add_node(NodeKind::terminal, swap, std::move(info));
      } else {
        fail("malformed node record");
      }
    } else if (kind == "edge") {
      auto f = detail::split(rest, '\t');
      if (f.size() != 4) fail("malformed edge record");
      auto p = detail::to_int(f[0]), c = detail::to_int(f[1]);
      if (!p || !c || static_cast<std::size_t>(*p) >= cur.graph.node_count() ||
          static_cast<std::size_t>(*c) >= cur.graph.node_count())
        fail("edge refers to unknown node");
      if (f[3] != "primary" && f[3] != "remote") fail("edge type must be primary or remote");
      try {
        cur.graph.add_edge({static_cast<std::uint32_t>(*p)}, {static_cast<std::uint32_t>(*c)}, std::string(f[2]),
                           f[3] == "remote");
      } catch (const GraphError& e) {
        fail(e.what());
      }
    } else {
      fail("unknown record type '" + std::string(kind) + "'");
    }
  }
  flush();
  return out;
}

}  // namespace uddag

#endif  // UDDAG_DAG_TEXT_HPP
