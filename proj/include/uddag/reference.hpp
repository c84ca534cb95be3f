// Slow, obviously-correct reference implementations used as test oracles.
// Nothing here is used by the parser itself.

#ifndef UDDAG_REFERENCE_HPP
#define UDDAG_REFERENCE_HPP

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "uddag/conllu.hpp"
#include "uddag/dag.hpp"
#include "uddag/oracle.hpp"
#include "uddag/transition.hpp"

namespace uddag::reference {

/// reach[u][v] over all edges, reflexive, by repeated relaxation.
inline std::vector<std::vector<char>> transitive_closure(const DagGraph& g) {
  const std::size_t n = g.node_count();
  std::vector<std::vector<char>> r(n, std::vector<char>(n, 0));
  for (std::size_t i = 0; i < n; ++i) r[i][i] = 1;
  for (const auto& e : g.edges()) r[e.parent.index][e.child.index] = 1;
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (r[i][k] && r[k][j]) r[i][j] = 1;
  return r;
}

/// Gap count and missing-position count, by walking the span one position
/// at a time.
inline std::pair<int, int> count_gaps(const std::set<int>& yield) {
  if (yield.empty()) return {0, 0};
  int gaps = 0, missing = 0;
  bool in_gap = false;
  for (int p = *yield.begin(); p <= *yield.rbegin(); ++p) {
    if (yield.count(p)) {
      in_gap = false;
    } else {
      ++missing;
      if (!in_gap) ++gaps;
      in_gap = true;
    }
  }
  return {gaps, missing};
}

/// Character classes X/x/d, everything else verbatim, runs of one class
/// longer than four cut to four. ASCII only.
inline std::string shape(std::string_view s) {
  std::string mapped;
  for (char c : s) {
    if (c >= 'A' && c <= 'Z') mapped += 'X';
    else if (c >= 'a' && c <= 'z') mapped += 'x';
    else if (c >= '0' && c <= '9') mapped += 'd';
    else mapped += c;
  }
  std::string out;
  for (std::size_t i = 0; i < mapped.size(); ++i) {
    std::size_t run = 0;
    while (run < out.size() && out[out.size() - 1 - run] == mapped[i]) ++run;
    bool cls = mapped[i] == 'X' || mapped[i] == 'x' || mapped[i] == 'd';
    if (cls && run >= 4) continue;
    out += mapped[i];
  }
  return out;
}

/// The sentence a conversion round trip should give back: relations cut at
/// the first colon, null rows and null-node dependencies gone, DEPS holding
/// the basic dependency plus every other distinct (head, relation) pair
/// except (0, non-root) and self loops.
inline Sentence strip_and_drop(const Sentence& s) {
  auto cut = [](const std::string& r) { return r.substr(0, r.find(':')); };
  Sentence out;
  out.comments = s.comments;
  for (const auto& t : s.tokens) {
    if (t.id.kind == TokenId::Kind::null) continue;
    Token c = t;
    if (t.id.kind == TokenId::Kind::word) {
      c.deprel = cut(t.deprel);
      std::set<std::pair<int, std::string>> pairs{{*t.head, c.deprel}};
      for (const auto& d : t.deps) {
        if (d.head.kind != TokenId::Kind::word) continue;
        int h = d.head.first;
        std::string r = cut(d.relation);
        if (h == t.id.first || (h == 0 && r != "root")) continue;
        pairs.insert({h, r});
      }
      c.deps.clear();
      for (const auto& [h, r] : pairs) c.deps.push_back({TokenId::word(h), r});
    }
    out.tokens.push_back(std::move(c));
  }
  return out;
}

/// Central difference of f at x.
inline double finite_difference(const std::function<double(double)>& f, double x, double h = 1e-5) {
  return (f(x + h) - f(x - h)) / (2 * h);
}

/// Injective map from the nodes of `part` into `whole` (root to root,
/// terminals by position) under which every edge of `part` is an edge of
/// `whole` with the same label and kind. Nodes flagged in `closed` must
/// also keep their exact in- and out-degree. Plain backtracking.
inline bool embeds(const DagGraph& part, const DagGraph& whole, const std::vector<char>& closed = {}) {
  const std::size_t n = part.node_count(), m = whole.node_count();
  if (n > m || part.edges().size() > whole.edges().size()) return false;
  std::vector<int> map(n, -1);
  std::vector<char> used(m, 0);
  std::vector<std::uint32_t> free_nodes;
  for (std::uint32_t i = 0; i < n; ++i) {
    const auto& nd = part.node({i});
    int target = -1;
    if (nd.is_root()) {
      target = static_cast<int>(whole.root().index);
    } else if (nd.is_terminal()) {
      for (std::uint32_t j = 0; j < m; ++j)
        if (whole.node({j}).is_terminal() && whole.node({j}).terminal.position == nd.terminal.position)
          target = static_cast<int>(j);
      if (target < 0) return false;
    } else {
      free_nodes.push_back(i);
      continue;
    }
    if (used[target]) return false;
    map[i] = target;
    used[target] = 1;
  }
  auto has = [&](int p, int c, const DagEdge& e) {
    for (auto id : whole.out_edges({static_cast<std::uint32_t>(p)})) {
      const auto& w = whole.edge(id);
      if (static_cast<int>(w.child.index) == c && w.label == e.label && w.remote == e.remote) return true;
    }
    return false;
  };
  auto degrees_ok = [&](std::uint32_t i) {
    if (i >= closed.size() || !closed[i] || map[i] < 0) return true;
    NodeRef a{i}, b{static_cast<std::uint32_t>(map[i])};
    return part.in_edges(a).size() == whole.in_edges(b).size() &&
           part.out_edges(a).size() == whole.out_edges(b).size();
  };
  auto consistent = [&] {
    for (std::uint32_t i = 0; i < n; ++i)
      if (!degrees_ok(i)) return false;
    for (const auto& e : part.edges()) {
      int p = map[e.parent.index], c = map[e.child.index];
      if (p < 0 || c < 0) continue;
      if (!has(p, c, e)) return false;
    }
    return true;
  };
  if (!consistent()) return false;
  std::function<bool(std::size_t)> assign = [&](std::size_t k) {
    if (k == free_nodes.size()) return true;
    const auto i = free_nodes[k];
    for (std::uint32_t j = 0; j < m; ++j) {
      if (used[j] || whole.node({j}).kind != NodeKind::nonterminal) continue;
      map[i] = static_cast<int>(j);
      used[j] = 1;
      if (consistent() && assign(k + 1)) return true;
      used[j] = 0;
      map[i] = -1;
    }
    return false;
  };
  return assign(0);
}

/// Equal up to node identity.
inline bool same_graph(const DagGraph& a, const DagGraph& b) {
  return a.node_count() == b.node_count() && a.edges().size() == b.edges().size() && embeds(a, b);
}

/// Every transition over the labels of `gold` plus "head".
inline std::vector<Transition> all_transitions(const DagGraph& gold) {
  std::set<std::string> labels{kHeadLabel};
  for (const auto& e : gold.edges()) labels.insert(e.label);
  std::vector<Transition> out{Transition::shift(), Transition::reduce(), Transition::swap(), Transition::finish()};
  for (const auto& l : labels)
    for (auto t : {TransitionType::node, TransitionType::left_edge, TransitionType::right_edge,
                   TransitionType::left_remote, TransitionType::right_remote})
      out.push_back(Transition{t, l});
  return out;
}

/// Exhaustive reachability: does some sequence of valid transitions from a
/// state finish with exactly the gold graph? Memoized on the full state;
/// a state whose graph does not embed into gold is dead because nodes and
/// edges are never removed.
class BruteForce {
 public:
  explicit BruteForce(const DagGraph& gold, std::size_t budget = 5'000'000)
      : gold_(gold), actions_(all_transitions(gold)), budget_(budget) {}

  bool reachable(const ParserState& st) {
    if (!embeds(st.graph, gold_, closed(st))) return false;
    if (st.finished) return same_graph(st.graph, gold_);
    auto k = key(st);
    if (auto it = memo_.find(k); it != memo_.end()) return it->second;
    if (++expanded_ > budget_) throw SearchBudgetExceeded();
    ParserState base = st;
    base.history.clear();  // not part of the state's identity; saves copying
    bool ok = false;
    for (const auto& t : actions_) {
      if (!is_valid(st, t)) continue;
      if (reachable(apply(base, t))) {
        ok = true;
        break;
      }
    }
    memo_.emplace(std::move(k), ok);
    return ok;
  }

  /// Valid transitions after which gold stays reachable, sorted.
  std::vector<Transition> preserving(const ParserState& st) {
    std::vector<Transition> out;
    for (const auto& t : actions_)
      if (is_valid(st, t) && reachable(apply(st, t))) out.push_back(t);
    std::sort(out.begin(), out.end());
    return out;
  }

  const std::vector<Transition>& actions() const { return actions_; }
  std::size_t expanded() const { return expanded_; }

 private:
  // Nodes on neither stack nor buffer never gain edges again.
  static std::vector<char> closed(const ParserState& st) {
    std::vector<char> c(st.graph.node_count(), 1);
    for (auto r : st.stack) c[r.index] = 0;
    for (auto r : st.buffer) c[r.index] = 0;
    return c;
  }

  // Non-terminals renamed by (swap index, creation order) and edges sorted,
  // so paths that build the same structure in another order meet.
  static std::string key(const ParserState& st) {
    const auto& g = st.graph;
    std::vector<std::uint32_t> order(g.node_count());
    for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
      const auto &x = g.node({a}), &y = g.node({b});
      if (x.kind != y.kind) return x.kind < y.kind;
      return x.swap_index < y.swap_index;
    });
    std::vector<std::uint32_t> name(order.size());
    for (std::uint32_t i = 0; i < order.size(); ++i) name[order[i]] = i;
    std::string k;
    for (auto r : st.stack) k += std::to_string(name[r.index]) + ',';
    k += '|';
    for (auto r : st.buffer) k += std::to_string(name[r.index]) + ',';
    k += '|';
    for (auto i : order) k += g.node({i}).swap_index.str() + ',';
    k += '|';
    std::vector<std::string> edges;
    for (const auto& e : g.edges())
      edges.push_back(std::to_string(name[e.parent.index]) + '>' + std::to_string(name[e.child.index]) + ':' +
                      e.label + (e.remote ? "*" : ""));
    std::sort(edges.begin(), edges.end());
    for (const auto& e : edges) k += e + ',';
    return k;
  }

  const DagGraph& gold_;
  std::vector<Transition> actions_;
  std::size_t budget_;
  std::size_t expanded_ = 0;
  std::unordered_map<std::string, bool> memo_;
};

}  // namespace uddag::reference

#endif  // UDDAG_REFERENCE_HPP
