// Conversion between CoNLL-U sentences and the unified DAG format.
//
// Every head token gets a non-terminal with a primary "head" edge to its
// terminal; dependents hang below that non-terminal with their (subtype
// stripped) relation. The root token's non-terminal is the graph root.
// Enhanced dependencies that differ from the basic one become remote edges.

#ifndef UDDAG_CONVERT_HPP
#define UDDAG_CONVERT_HPP

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "uddag/conllu.hpp"
#include "uddag/dag.hpp"

namespace uddag {

inline constexpr const char* kRootLabel = "root";
inline constexpr const char* kFallbackLabel = "dep";

class ConversionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Enhanced dependencies of word `dependent` that survive conversion:
/// no null heads, no self loops, not equal to the basic dependency after
/// stripping, and head 0 only with "root". Stripped, deduplicated, sorted.
inline std::vector<EnhancedDep> retained_enhanced(const Token& dependent) {
  std::vector<EnhancedDep> out;
  const std::string basic_rel = strip_subtype(dependent.deprel);
  for (const auto& d : dependent.deps) {
    if (!d.head.is_word()) continue;
    std::string rel = strip_subtype(d.relation);
    if (d.head.first == dependent.id.first) continue;
    if (dependent.head && d.head.first == *dependent.head && rel == basic_rel) continue;
    if (d.head.first == 0 && rel != kRootLabel) continue;
    EnhancedDep e{TokenId::word(d.head.first), rel};
    if (std::find(out.begin(), out.end(), e) == out.end()) out.push_back(std::move(e));
  }
  std::sort(out.begin(), out.end(), deps_less);
  return out;
}

inline DagGraph ud_to_dag(const Sentence& sentence) {
  const auto words = sentence.words();
  const int n = static_cast<int>(words.size());
  if (n == 0) throw ConversionError("sentence has no words");

  int root_token = 0;
  std::vector<std::vector<int>> dependents(n + 1);
  for (const auto* w : words) {
    if (!w->head) throw ConversionError("word " + std::to_string(w->id.first) + " has no head");
    if (*w->head == 0) {
      if (root_token != 0) throw ConversionError("multiple roots");
      root_token = w->id.first;
    } else {
      dependents[*w->head].push_back(w->id.first);
    }
  }
  if (root_token == 0) throw ConversionError("no root");

  std::vector<std::vector<EnhancedDep>> enhanced(n + 1);
  std::vector<char> needs_nt(n + 1, 0);
  needs_nt[root_token] = 1;
  for (const auto* w : words) {
    enhanced[w->id.first] = retained_enhanced(*w);
    for (const auto& e : enhanced[w->id.first])
      if (e.head.first > 0) needs_nt[e.head.first] = 1;
  }
  for (int h = 1; h <= n; ++h)
    if (!dependents[h].empty()) needs_nt[h] = 1;

  DagGraph g;
  const NodeRef root = g.add_root();
  std::vector<NodeRef> terminal(n + 1);
  for (const auto* w : words)
    terminal[w->id.first] = g.add_terminal({w->id.first, w->form, w->lemma, w->upos, w->xpos});

  // Non-terminals in breadth-first order from the root token.
  std::vector<std::optional<NodeRef>> nt(n + 1);
  nt[root_token] = root;
  std::vector<int> order;
  std::deque<int> queue{root_token};
  std::vector<char> visited(n + 1, 0);
  visited[root_token] = 1;
  while (!queue.empty()) {
    int h = queue.front();
    queue.pop_front();
    order.push_back(h);
    for (int d : dependents[h]) {
      if (visited[d]) throw ConversionError("basic tree has a cycle");
      visited[d] = 1;
      if (needs_nt[d]) nt[d] = g.add_nonterminal(Rational(d));
      queue.push_back(d);
    }
  }
  if (static_cast<int>(order.size()) != n) throw ConversionError("basic tree is not connected");

  auto unit = [&](int t) { return nt[t] ? *nt[t] : terminal[t]; };
  for (int h : order) {
    if (!nt[h]) continue;
    g.add_edge(*nt[h], terminal[h], kHeadLabel, false);
    for (int d : dependents[h]) g.add_edge(*nt[h], unit(d), strip_subtype(words[d - 1]->deprel), false);
  }

  for (int d = 1; d <= n; ++d) {
    for (const auto& e : enhanced[d]) {
      NodeRef source = e.head.first == 0 ? root : *nt[e.head.first];
      NodeRef target = unit(d);
      if (g.node(target).is_root() || g.has_path(target, source)) target = terminal[d];
      if (g.check_edge(source, target, e.relation, true)) continue;
      g.add_edge_unchecked(source, target, e.relation, true);
    }
  }
  return g;
}

namespace detail {

/// Terminal reached by following "head" edges down from `n`, or -1.
inline int head_terminal_position(const DagGraph& g, NodeRef n) {
  for (std::size_t guard = 0; guard <= g.node_count(); ++guard) {
    const auto& nd = g.node(n);
    if (nd.is_terminal()) return nd.terminal.position;
    auto e = g.head_edge(n);
    if (!e) return -1;
    n = g.edge(*e).child;
  }
  return -1;
}

/// Nearest node at or above `n` (primary edges) that has a head terminal.
inline int headed_ancestor_position(const DagGraph& g, NodeRef n) {
  for (std::size_t guard = 0; guard <= g.node_count(); ++guard) {
    int pos = head_terminal_position(g, n);
    if (pos > 0) return pos;
    auto p = g.primary_parent(n);
    if (!p) return -1;
    n = g.edge(*p).parent;
  }
  return -1;
}

}  // namespace detail

/// Collapses head edges and reads a dependency sentence off the graph.
/// Word columns, comments and multi-word ranges come from `original`; null
/// rows are dropped. Words left without a head attach to the root word as
/// "dep", so the result is always a single-rooted tree.
inline Sentence dag_to_ud(const DagGraph& g, const Sentence& original) {
  const auto terms = g.terminals();
  const int n = static_cast<int>(original.word_count());
  if (static_cast<int>(terms.size()) != n)
    throw ConversionError("graph has " + std::to_string(terms.size()) + " terminals but sentence has " +
                          std::to_string(n) + " words");
  for (int i = 0; i < n; ++i)
    if (g.node(terms[i]).terminal.position != i + 1)
      throw ConversionError("terminal positions are not 1..n");

  const NodeRef root = g.root();
  std::vector<std::optional<int>> head(n + 1);
  std::vector<std::string> rel(n + 1);

  for (int t = 1; t <= n; ++t) {
    NodeRef u = terms[t - 1];
    while (true) {
      auto p = g.primary_parent(u);
      if (!p || g.edge(*p).label != kHeadLabel) break;
      u = g.edge(*p).parent;
    }
    if (u == root) {
      head[t] = 0;
      rel[t] = kRootLabel;
      continue;
    }
    auto p = g.primary_parent(u);
    if (!p) continue;
    int h = detail::headed_ancestor_position(g, g.edge(*p).parent);
    if (h <= 0 || h == t) continue;
    head[t] = h;
    rel[t] = g.edge(*p).label;
    if (rel[t] == kRootLabel) rel[t] = kFallbackLabel;
  }

  int root_token = detail::head_terminal_position(g, root);
  if (root_token <= 0) {
    for (int t = 1; t <= n; ++t)
      if (!head[t]) {
        root_token = t;
        break;
      }
    if (root_token <= 0) root_token = 1;
  }
  for (int t = 1; t <= n; ++t) {
    if (t == root_token) {
      head[t] = 0;
      rel[t] = kRootLabel;
    } else if (!head[t] || *head[t] == 0) {
      head[t] = root_token;
      rel[t] = kFallbackLabel;
    }
  }

  std::vector<std::vector<EnhancedDep>> deps(n + 1);
  for (int t = 1; t <= n; ++t) deps[t].push_back({TokenId::word(*head[t]), rel[t]});
  for (const auto& e : g.edges()) {
    if (!e.remote) continue;
    int d = detail::head_terminal_position(g, e.child);
    if (d <= 0) continue;
    int h;
    std::string label = e.label;
    if (e.parent == root && label == kRootLabel) {
      h = 0;
    } else {
      h = detail::headed_ancestor_position(g, e.parent);
      if (h <= 0) continue;
      if (label == kRootLabel) label = kFallbackLabel;
    }
    if (h == d) continue;
    EnhancedDep dep{TokenId::word(h), label};
    if (std::find(deps[d].begin(), deps[d].end(), dep) == deps[d].end()) deps[d].push_back(std::move(dep));
  }

  Sentence out;
  out.comments = original.comments;
  for (const auto& tok : original.tokens) {
    if (tok.id.is_null()) continue;
    Token copy = tok;
    if (tok.is_word()) {
      int t = tok.id.first;
      copy.head = head[t];
      copy.deprel = rel[t];
      copy.deps = deps[t];
      std::sort(copy.deps.begin(), copy.deps.end(), deps_less);
    }
    out.tokens.push_back(std::move(copy));
  }
  return out;
}

}  // namespace uddag

#endif  // UDDAG_CONVERT_HPP
