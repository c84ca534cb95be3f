// Training oracle: the set of transitions from which the gold graph is still
// reachable.
//
// A state is aligned to the gold graph by identity on the root and terminals;
// a non-terminal is identified with the gold primary parent of the child it
// was created from (its first outgoing edge). A state is gold-consistent when
// that alignment is injective and every built edge exists in gold. Only
// consistent transitions are candidates; each candidate is kept iff a
// depth-first search from the successor state reaches gold. The search tries
// a rule-based policy first, so reachable successors resolve along a single
// path, and memoizes results by a structural state key.

#ifndef UDDAG_ORACLE_HPP
#define UDDAG_ORACLE_HPP

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "uddag/dag.hpp"
#include "uddag/transition.hpp"

namespace uddag {

class GoldUnreachable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SearchBudgetExceeded : public std::runtime_error {
 public:
  SearchBudgetExceeded() : std::runtime_error("search budget exceeded") {}
};

inline std::vector<TerminalInfo> terminal_infos(const DagGraph& g) {
  std::vector<TerminalInfo> out;
  for (auto t : g.terminals()) out.push_back(g.node(t).terminal);
  return out;
}

/// Alignment of a parser state's graph to the gold graph.
struct Alignment {
  bool consistent = false;
  std::vector<int> to_gold;       // per state node
  std::vector<int> to_state;      // per gold node, -1 if not created
  std::vector<char> realized;     // per gold edge
  std::vector<int> pending;       // per gold node: incident gold edges not built
};

class GoldGraph {
 public:
  explicit GoldGraph(const DagGraph& g) : g_(g) {
    for (std::uint32_t i = 0; i < g.node_count(); ++i) {
      const auto& nd = g.node({i});
      if (nd.is_terminal()) by_position_[nd.terminal.position] = static_cast<int>(i);
      if (nd.kind == NodeKind::nonterminal && g.out_edges({i}).empty())
        throw std::invalid_argument("gold non-terminal without children cannot be built");
    }
  }

  const DagGraph& graph() const { return g_; }

  int terminal(int position) const {
    auto it = by_position_.find(position);
    return it == by_position_.end() ? -1 : it->second;
  }

  /// Gold edge id with the given endpoints, label and kind, or -1.
  int find_edge(int parent, int child, const std::string& label, bool remote) const {
    for (auto e : g_.out_edges({static_cast<std::uint32_t>(parent)})) {
      const auto& ed = g_.edge(e);
      if (static_cast<int>(ed.child.index) == child && ed.remote == remote && ed.label == label)
        return static_cast<int>(e);
    }
    return -1;
  }

  Alignment align(const DagGraph& s) const {
    Alignment a;
    a.to_gold.assign(s.node_count(), -1);
    a.to_state.assign(g_.node_count(), -1);
    a.realized.assign(g_.edges().size(), 0);
    auto bind = [&](std::uint32_t state, int gold) {
      if (gold < 0 || a.to_state[gold] >= 0) return false;
      a.to_gold[state] = gold;
      a.to_state[gold] = static_cast<int>(state);
      return true;
    };
    for (std::uint32_t i = 0; i < s.node_count(); ++i) {
      const auto& nd = s.node({i});
      bool ok = false;
      if (nd.is_root()) {
        ok = bind(i, static_cast<int>(g_.root().index));
      } else if (nd.is_terminal()) {
        ok = bind(i, terminal(nd.terminal.position));
      } else {
        auto outs = s.out_edges({i});
        if (!outs.empty()) {
          const auto& first = s.edge(outs[0]);
          int child = a.to_gold[first.child.index];
          if (child >= 0 && !first.remote) {
            auto pe = g_.primary_parent({static_cast<std::uint32_t>(child)});
            if (pe) {
              const auto& ge = g_.edge(*pe);
              if (ge.label == first.label && g_.node(ge.parent).kind == NodeKind::nonterminal)
                ok = bind(i, static_cast<int>(ge.parent.index));
            }
          }
        }
      }
      if (!ok) return a;
    }
    for (const auto& e : s.edges()) {
      int ge = find_edge(a.to_gold[e.parent.index], a.to_gold[e.child.index], e.label, e.remote);
      if (ge < 0) return a;
      a.realized[ge] = 1;
    }
    a.pending.assign(g_.node_count(), 0);
    for (std::size_t e = 0; e < a.realized.size(); ++e) {
      if (a.realized[e]) continue;
      ++a.pending[g_.edge(static_cast<std::uint32_t>(e)).parent.index];
      ++a.pending[g_.edge(static_cast<std::uint32_t>(e)).child.index];
    }
    a.consistent = true;
    return a;
  }

  /// Gold edges between two created state nodes not yet built, as the
  /// transitions building them (s1 = second from top, s0 = top).
  std::vector<Transition> pending_edges(const Alignment& a, NodeRef s1, NodeRef s0) const {
    std::vector<Transition> out;
    int g1 = a.to_gold[s1.index], g0 = a.to_gold[s0.index];
    for (auto e : g_.out_edges({static_cast<std::uint32_t>(g0)})) {
      const auto& ed = g_.edge(e);
      if (!a.realized[e] && static_cast<int>(ed.child.index) == g1)
        out.push_back(ed.remote ? Transition::left_remote(ed.label) : Transition::left_edge(ed.label));
    }
    for (auto e : g_.out_edges({static_cast<std::uint32_t>(g1)})) {
      const auto& ed = g_.edge(e);
      if (!a.realized[e] && static_cast<int>(ed.child.index) == g0)
        out.push_back(ed.remote ? Transition::right_remote(ed.label) : Transition::right_edge(ed.label));
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const Transition& x, const Transition& y) { return !x.is_remote() && y.is_remote(); });
    return out;
  }

  /// Label of the gold primary edge into the node's uncreated parent.
  std::optional<std::string> node_label(const Alignment& a, NodeRef x) const {
    int gx = a.to_gold[x.index];
    auto pe = g_.primary_parent({static_cast<std::uint32_t>(gx)});
    if (!pe) return std::nullopt;
    const auto& ed = g_.edge(*pe);
    if (a.to_state[ed.parent.index] >= 0) return std::nullopt;
    return ed.label;
  }

  /// True when the aligned state can no longer reach gold by a cheap test:
  /// a node that left the stack and buffer with unbuilt edges, or a
  /// non-terminal none of whose children can still create it.
  bool obviously_dead(const ParserState& st, const Alignment& a) const {
    if (!a.consistent) return true;
    std::vector<char> alive(st.graph.node_count(), 0);
    for (auto r : st.stack) alive[r.index] = 1;
    for (auto r : st.buffer) alive[r.index] = 1;
    for (std::uint32_t i = 0; i < st.graph.node_count(); ++i)
      if (!alive[i] && a.pending[a.to_gold[i]] > 0) return true;
    for (std::uint32_t p = 0; p < g_.node_count(); ++p) {
      if (a.to_state[p] >= 0 || g_.node({p}).kind != NodeKind::nonterminal) continue;
      bool creatable = false;
      for (auto e : g_.out_edges({p})) {
        const auto& ed = g_.edge(e);
        if (ed.remote) continue;
        int c = a.to_state[ed.child.index];
        if (c < 0 || alive[c]) creatable = true;
      }
      if (!creatable) return true;
    }
    return frozen_cycle(st, a);
  }

  bool complete(const Alignment& a) const {
    return std::all_of(a.realized.begin(), a.realized.end(), [](char c) { return c != 0; }) &&
           std::all_of(a.to_state.begin(), a.to_state.end(), [](int s) { return s >= 0; });
  }

  /// Structural key: equal keys have identical futures.
  std::string key(const ParserState& st, const Alignment& a) const {
    std::string k;
    k.reserve(64 + a.realized.size());
    k += st.finished ? 'F' : 'P';
    for (auto r : st.stack) k += std::to_string(a.to_gold[r.index]) + ',';
    k += '|';
    for (auto r : st.buffer) k += std::to_string(a.to_gold[r.index]) + ',';
    k += '|';
    for (char c : a.realized) k += c ? '1' : '0';
    k += '|';
    for (std::size_t gnode = 0; gnode < a.to_state.size(); ++gnode) {
      int s = a.to_state[gnode];
      if (s >= 0 && st.graph.node({static_cast<std::uint32_t>(s)}).kind == NodeKind::nonterminal)
        k += std::to_string(gnode) + '@' + st.graph.node({static_cast<std::uint32_t>(s)}).swap_index.str() + ',';
    }
    return k;
  }

  /// Fixed-rule transitions: Finish when possible; Reduce alone once the
  /// stack top has all its gold edges; otherwise unbuilt gold edges between
  /// s0 and s1, Node for s0's uncreated gold parent, and Swap when s0 has an
  /// unbuilt gold edge to a node below s1; Shift only when none of these
  /// exists. Not filtered by validity or reachability.
  std::vector<Transition> rule_transitions(const ParserState& st, const Alignment& a) const {
    if (st.finished) return {};
    if (is_valid(st, Transition::finish())) return {Transition::finish()};
    const auto s0 = st.s(0), s1 = st.s(1);
    std::vector<Transition> out;
    if (s0 && !st.graph.node(*s0).is_root()) {
      if (a.pending[a.to_gold[s0->index]] == 0) return {Transition::reduce()};
      if (s1)
        for (auto& t : pending_edges(a, *s1, *s0)) out.push_back(t);
      if (!st.graph.primary_parent(*s0))
        if (auto x = node_label(a, *s0)) out.push_back(Transition::node(*x));
      if (s1 && deep_partner(st, a)) out.push_back(Transition::swap());
    }
    if (out.empty() && !st.buffer.empty()) out.push_back(Transition::shift());
    return out;
  }

  /// Gold-consistent valid transitions, in the order the policy prefers them.
  std::vector<Transition> candidates(const ParserState& st, const Alignment& a) const {
    std::vector<Transition> out;
    if (st.finished) return out;
    auto push = [&](Transition t) {
      if (std::find(out.begin(), out.end(), t) == out.end() && is_valid(st, t)) out.push_back(std::move(t));
    };
    if (is_valid(st, Transition::finish())) {
      push(Transition::finish());
      return out;
    }
    const auto s0 = st.s(0), s1 = st.s(1);
    if (s0 && s1)
      for (auto& t : pending_edges(a, *s1, *s0)) push(t);
    if (s0 && !st.graph.node(*s0).is_root() && !st.graph.primary_parent(*s0))
      if (auto x = node_label(a, *s0)) push(Transition::node(*x));
    const bool s0_done = s0 && a.pending[a.to_gold[s0->index]] == 0;
    if (s0_done) push(Transition::reduce());
    if (s0 && s1 && deep_partner(st, a)) push(Transition::swap());
    push(Transition::shift());
    push(Transition::swap());
    push(Transition::reduce());
    return out;
  }

 private:
  /// Swap only exchanges adjacent stack+buffer neighbours x, y (x first)
  /// with idx(x) < idx(y), so a pair with idx(x) >= idx(y) keeps its order
  /// while both live; the root never moves. An unbuilt edge u-v therefore
  /// waits for every live node frozen between u and v to be reduced, hence
  /// for all of that node's unbuilt edges. A cycle in this wait-for relation
  /// over gold edges means gold is unreachable.
  bool frozen_cycle(const ParserState& st, const Alignment& a) const {
    const auto& sg = st.graph;
    std::vector<NodeRef> seq(st.stack.begin(), st.stack.end());
    seq.insert(seq.end(), st.buffer.begin(), st.buffer.end());
    std::vector<int> pos(sg.node_count(), -1);
    for (std::size_t i = 0; i < seq.size(); ++i) pos[seq[i].index] = static_cast<int>(i);
    auto ordered = [&](NodeRef x, NodeRef y) {  // x may still pass y
      return !sg.node(x).is_root() && sg.node(x).swap_index < sg.node(y).swap_index;
    };
    const std::size_t m = a.realized.size();
    std::vector<std::vector<std::uint32_t>> waits(m);
    bool any = false;
    for (std::uint32_t e = 0; e < m; ++e) {
      if (a.realized[e]) continue;
      const auto& ge = g_.edge(e);
      int su = a.to_state[ge.parent.index], sv = a.to_state[ge.child.index];
      if (su < 0 || sv < 0 || pos[su] < 0 || pos[sv] < 0) continue;
      int lo = std::min(pos[su], pos[sv]), hi = std::max(pos[su], pos[sv]);
      for (int i = lo + 1; i < hi; ++i) {
        NodeRef w = seq[i];
        if (ordered(seq[lo], w) || ordered(w, seq[hi])) continue;
        const NodeRef gw{static_cast<std::uint32_t>(a.to_gold[w.index])};
        for (auto f : g_.out_edges(gw))
          if (!a.realized[f]) waits[e].push_back(f), any = true;
        for (auto f : g_.in_edges(gw))
          if (!a.realized[f]) waits[e].push_back(f), any = true;
      }
    }
    if (!any) return false;
    std::vector<char> color(m, 0);
    std::vector<std::pair<std::uint32_t, std::size_t>> stack;
    for (std::uint32_t start = 0; start < m; ++start) {
      if (color[start] || waits[start].empty()) continue;
      stack.assign(1, {start, 0});
      color[start] = 1;
      while (!stack.empty()) {
        auto& [e, next] = stack.back();
        if (next == waits[e].size()) {
          color[e] = 2;
          stack.pop_back();
          continue;
        }
        std::uint32_t f = waits[e][next++];
        if (color[f] == 1) return true;
        if (color[f] == 0) {
          color[f] = 1;
          stack.emplace_back(f, 0);
        }
      }
    }
    return false;
  }

  /// Whether the stack top has an unbuilt gold edge to a stack node below s1.
  bool deep_partner(const ParserState& st, const Alignment& a) const {
    const int g0 = a.to_gold[st.stack.back().index];
    std::vector<char> deep(g_.node_count(), 0);
    for (std::size_t i = 0; i + 2 < st.stack.size(); ++i) deep[a.to_gold[st.stack[i].index]] = 1;
    const NodeRef gn{static_cast<std::uint32_t>(g0)};
    for (auto e : g_.out_edges(gn))
      if (!a.realized[e] && deep[g_.edge(e).child.index]) return true;
    for (auto e : g_.in_edges(gn))
      if (!a.realized[e] && deep[g_.edge(e).parent.index]) return true;
    return false;
  }

  const DagGraph& g_;
  std::unordered_map<int, int> by_position_;
};

/// Memoized reachability search against one gold graph.
class Oracle {
 public:
  /// `budget` bounds the states expanded by one reachability query; 0 means
  /// unbounded.
  explicit Oracle(const DagGraph& gold, std::size_t budget = 200000) : gold_(gold), budget_(budget) {}

  const GoldGraph& gold() const { return gold_; }

  /// True iff some valid transition sequence from `st` builds exactly the
  /// gold graph and finishes. Throws SearchBudgetExceeded.
  bool reachable(const ParserState& st) {
    expanded_ = 0;
    return search(st);
  }

  /// All valid transitions after which gold stays reachable. With a budget,
  /// a candidate whose check runs out of it is left out; if that leaves
  /// nothing, the undecided candidates are retried with ten times the
  /// budget, up to an unbounded search.
  std::vector<Transition> optimal(const ParserState& st) {
    Alignment a = gold_.align(st.graph);
    if (gold_.obviously_dead(st, a)) throw GoldUnreachable("state is not gold-consistent");
    auto out = keep_reachable(st, gold_.candidates(st, a));
    if (out.empty()) throw GoldUnreachable("no transition preserves gold reachability");
    return out;
  }

  /// The reachability-preserving members of the rule-based transitions
  /// (GoldGraph::rule_transitions), or all of optimal() when none is.
  std::vector<Transition> preferred(const ParserState& st) {
    Alignment a = gold_.align(st.graph);
    if (gold_.obviously_dead(st, a)) throw GoldUnreachable("state is not gold-consistent");
    auto out = keep_reachable(st, gold_.rule_transitions(st, a));
    if (!out.empty()) return out;
    return optimal(st);
  }

  std::size_t memo_size() const { return memo_.size(); }

 private:
  std::vector<Transition> keep_reachable(const ParserState& st, std::vector<Transition> undecided) {
    std::vector<Transition> out;
    const std::size_t base = budget_;
    while (out.empty() && !undecided.empty()) {
      std::vector<Transition> next;
      for (const auto& t : undecided) {
        if (!is_valid(st, t)) continue;
        try {
          if (reachable(apply(st, t))) out.push_back(t);
        } catch (const SearchBudgetExceeded&) {
          next.push_back(t);
        }
      }
      undecided = std::move(next);
      budget_ = budget_ > std::numeric_limits<std::size_t>::max() / 100 ? 0 : budget_ * 10;
    }
    budget_ = base;
    return out;
  }

  bool search(const ParserState& st) {
    Alignment a = gold_.align(st.graph);
    if (gold_.obviously_dead(st, a)) return false;
    if (st.finished) return gold_.complete(a);
    std::string k = gold_.key(st, a);
    if (auto it = memo_.find(k); it != memo_.end()) return it->second;
    if (budget_ && ++expanded_ > budget_) throw SearchBudgetExceeded();
    bool ok = false;
    for (const auto& t : gold_.candidates(st, a)) {
      if (search(apply(st, t))) {
        ok = true;
        break;
      }
    }
    memo_.emplace(std::move(k), ok);
    return ok;
  }

  GoldGraph gold_;
  std::size_t budget_;
  std::size_t expanded_ = 0;
  std::unordered_map<std::string, bool> memo_;
};

inline std::vector<Transition> optimal_transitions(const ParserState& st, const DagGraph& gold) {
  Oracle o(gold, 0);
  return o.optimal(st);
}

/// Fixed priority used to pick one optimal transition deterministically:
/// edges, Node, Swap, Reduce, Shift, Finish.
inline int oracle_priority(const Transition& t) {
  switch (t.type) {
    case TransitionType::left_edge:
    case TransitionType::right_edge: return 0;
    case TransitionType::left_remote:
    case TransitionType::right_remote: return 1;
    case TransitionType::node: return 2;
    case TransitionType::swap: return 3;
    case TransitionType::reduce: return 4;
    case TransitionType::shift: return 5;
    case TransitionType::finish: return 6;
  }
  return 7;
}

inline Transition pick_by_priority(const std::vector<Transition>& options) {
  return *std::min_element(options.begin(), options.end(), [](const Transition& a, const Transition& b) {
    int pa = oracle_priority(a), pb = oracle_priority(b);
    return pa != pb ? pa < pb : a < b;
  });
}

/// Transition sequence rebuilding `gold` from the initial state.
inline std::vector<Transition> oracle_parse(const DagGraph& gold, Oracle& oracle) {
  ParserState st = initial_state(terminal_infos(gold));
  const std::size_t guard = 100 * (gold.node_count() + gold.edges().size() + 1);
  while (!st.finished) {
    if (st.steps > guard) throw GoldUnreachable("oracle parse does not terminate");
    apply_in_place(st, pick_by_priority(oracle.optimal(st)));
  }
  return st.history;
}

inline std::vector<Transition> oracle_parse(const DagGraph& gold) {
  Oracle oracle(gold);
  return oracle_parse(gold, oracle);
}

/// Replays `transitions` from the initial state over `terminals`.
inline ParserState replay(const std::vector<TerminalInfo>& terminals, const std::vector<Transition>& transitions) {
  ParserState st = initial_state(terminals);
  for (const auto& t : transitions) apply_in_place(st, t);
  return st;
}

/// True when `g` is `gold` up to the numbering of non-terminals.
inline bool matches_gold(const DagGraph& g, const DagGraph& gold) {
  if (g.node_count() != gold.node_count() || g.edges().size() != gold.edges().size()) return false;
  GoldGraph gg(gold);
  Alignment a = gg.align(g);
  return a.consistent && gg.complete(a);
}

}  // namespace uddag

#endif  // UDDAG_ORACLE_HPP
