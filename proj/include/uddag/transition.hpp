// Parser state and transitions: Shift, Reduce, Node(X), Left/Right-Edge(X),
// Left/Right-Remote(X), Swap, Finish, with the single-head constraints for
// dependency graphs.

#ifndef UDDAG_TRANSITION_HPP
#define UDDAG_TRANSITION_HPP

#include <algorithm>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "uddag/conllu.hpp"
#include "uddag/dag.hpp"

namespace uddag {

enum class TransitionType : std::uint8_t {
  shift,
  reduce,
  node,
  left_edge,
  right_edge,
  left_remote,
  right_remote,
  swap,
  finish,
};

inline constexpr int kTransitionTypeCount = 9;

inline const char* type_name(TransitionType t) {
  switch (t) {
    case TransitionType::shift: return "SHIFT";
    case TransitionType::reduce: return "REDUCE";
    case TransitionType::node: return "NODE";
    case TransitionType::left_edge: return "LEFT-EDGE";
    case TransitionType::right_edge: return "RIGHT-EDGE";
    case TransitionType::left_remote: return "LEFT-REMOTE";
    case TransitionType::right_remote: return "RIGHT-REMOTE";
    case TransitionType::swap: return "SWAP";
    case TransitionType::finish: return "FINISH";
  }
  return "?";
}

inline bool has_label(TransitionType t) {
  return t == TransitionType::node || t == TransitionType::left_edge || t == TransitionType::right_edge ||
         t == TransitionType::left_remote || t == TransitionType::right_remote;
}

struct Transition {
  TransitionType type = TransitionType::shift;
  std::string label;

  static Transition shift() { return {TransitionType::shift, {}}; }
  static Transition reduce() { return {TransitionType::reduce, {}}; }
  static Transition swap() { return {TransitionType::swap, {}}; }
  static Transition finish() { return {TransitionType::finish, {}}; }
  static Transition node(std::string x) { return {TransitionType::node, std::move(x)}; }
  static Transition left_edge(std::string x) { return {TransitionType::left_edge, std::move(x)}; }
  static Transition right_edge(std::string x) { return {TransitionType::right_edge, std::move(x)}; }
  static Transition left_remote(std::string x) { return {TransitionType::left_remote, std::move(x)}; }
  static Transition right_remote(std::string x) { return {TransitionType::right_remote, std::move(x)}; }

  bool is_edge() const {
    return type == TransitionType::left_edge || type == TransitionType::right_edge ||
           type == TransitionType::left_remote || type == TransitionType::right_remote;
  }
  bool is_remote() const { return type == TransitionType::left_remote || type == TransitionType::right_remote; }
  bool is_left() const { return type == TransitionType::left_edge || type == TransitionType::left_remote; }

  std::string str() const {
    std::string s = type_name(type);
    if (has_label(type)) s += "(" + label + ")";
    return s;
  }

  friend bool operator==(const Transition&, const Transition&) = default;
  friend auto operator<=>(const Transition& a, const Transition& b) {
    if (auto c = a.type <=> b.type; c != 0) return c;
    return a.label.compare(b.label) <=> 0;
  }
};

inline std::ostream& operator<<(std::ostream& os, const Transition& t) { return os << t.str(); }

/// Inverse of Transition::str().
inline std::optional<Transition> parse_transition(const std::string& s) {
  auto open = s.find('(');
  std::string name = s.substr(0, open);
  std::string label;
  if (open != std::string::npos) {
    if (s.back() != ')') return std::nullopt;
    label = s.substr(open + 1, s.size() - open - 2);
  }
  for (int i = 0; i < kTransitionTypeCount; ++i) {
    auto t = static_cast<TransitionType>(i);
    if (name == type_name(t) && has_label(t) == (open != std::string::npos)) return Transition{t, label};
  }
  return std::nullopt;
}

/// Dense indexing of the transitions over a label set, for classifiers.
/// Layout: SHIFT, REDUCE, SWAP, FINISH, then five labeled types per label.
class ActionSet {
 public:
  ActionSet() = default;
  explicit ActionSet(std::set<std::string> labels) {
    labels.insert(kHeadLabel);
    labels_.assign(labels.begin(), labels.end());
    for (std::size_t i = 0; i < labels_.size(); ++i) label_index_[labels_[i]] = static_cast<int>(i);
  }

  const std::vector<std::string>& labels() const { return labels_; }
  std::size_t size() const { return 4 + 5 * labels_.size(); }

  Transition at(std::size_t i) const {
    static constexpr TransitionType fixed[] = {TransitionType::shift, TransitionType::reduce, TransitionType::swap,
                                               TransitionType::finish};
    static constexpr TransitionType labeled[] = {TransitionType::node, TransitionType::left_edge,
                                                 TransitionType::right_edge, TransitionType::left_remote,
                                                 TransitionType::right_remote};
    if (i < 4) return {fixed[i], {}};
    i -= 4;
    return {labeled[i % 5], labels_.at(i / 5)};
  }

  std::optional<std::size_t> index(const Transition& t) const {
    switch (t.type) {
      case TransitionType::shift: return 0;
      case TransitionType::reduce: return 1;
      case TransitionType::swap: return 2;
      case TransitionType::finish: return 3;
      default: break;
    }
    auto it = label_index_.find(t.label);
    if (it == label_index_.end()) return std::nullopt;
    std::size_t k = 0;
    switch (t.type) {
      case TransitionType::node: k = 0; break;
      case TransitionType::left_edge: k = 1; break;
      case TransitionType::right_edge: k = 2; break;
      case TransitionType::left_remote: k = 3; break;
      default: k = 4; break;
    }
    return 4 + 5 * static_cast<std::size_t>(it->second) + k;
  }

 private:
  std::vector<std::string> labels_;
  std::map<std::string, int> label_index_;
};

class InvalidTransition : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct ParserState {
  DagGraph graph;
  std::vector<NodeRef> stack;   // top at back
  std::deque<NodeRef> buffer;   // head at front
  bool finished = false;
  std::size_t steps = 0;
  std::vector<Transition> history;
  int n = 0;  // number of terminals

  std::optional<NodeRef> s(std::size_t i) const {
    if (i >= stack.size()) return std::nullopt;
    return stack[stack.size() - 1 - i];
  }
  std::optional<NodeRef> b(std::size_t i) const {
    if (i >= buffer.size()) return std::nullopt;
    return buffer[i];
  }
};

inline ParserState initial_state(const std::vector<TerminalInfo>& terminals) {
  if (terminals.empty()) throw std::invalid_argument("cannot parse an empty sentence");
  ParserState st;
  st.n = static_cast<int>(terminals.size());
  st.stack.push_back(st.graph.add_root());
  for (const auto& t : terminals) st.buffer.push_back(st.graph.add_terminal(t));
  return st;
}

inline std::vector<TerminalInfo> terminal_infos(const Sentence& s) {
  std::vector<TerminalInfo> out;
  for (const auto* w : s.words()) out.push_back({w->id.first, w->form, w->lemma, w->upos, w->xpos});
  return out;
}

inline ParserState initial_state(const Sentence& s) { return initial_state(terminal_infos(s)); }

namespace detail {

inline bool edge_valid(const ParserState& st, NodeRef parent, NodeRef child, const std::string& label, bool remote) {
  const auto& g = st.graph;
  if (g.node(parent).is_terminal()) return false;
  if (label.empty()) return false;
  if (label == kHeadLabel && (remote || g.head_edge(parent))) return false;
  return !g.check_edge(parent, child, label, remote);
}

}  // namespace detail

inline bool is_valid(const ParserState& st, const Transition& t) {
  if (st.finished) return false;
  const auto& g = st.graph;
  const std::size_t depth = st.stack.size();
  switch (t.type) {
    case TransitionType::shift: return !st.buffer.empty();
    case TransitionType::reduce: {
      if (depth == 0) return false;
      const auto& top = g.node(st.stack.back());
      if (top.is_root()) return false;
      if (top.kind == NodeKind::nonterminal && !g.head_edge(st.stack.back())) return false;
      return true;
    }
    case TransitionType::node: {
      if (depth == 0 || t.label.empty()) return false;
      NodeRef x = st.stack.back();
      if (g.node(x).is_root() || g.primary_parent(x)) return false;
      const Rational right = st.buffer.empty() ? Rational(st.n + 1) : g.node(st.buffer.front()).swap_index;
      return Rational::checked_mean(g.node(x).swap_index, right).has_value();
    }
    case TransitionType::left_edge:
    case TransitionType::left_remote:
      if (depth < 2) return false;
      return detail::edge_valid(st, st.stack[depth - 1], st.stack[depth - 2], t.label, t.is_remote());
    case TransitionType::right_edge:
    case TransitionType::right_remote:
      if (depth < 2) return false;
      return detail::edge_valid(st, st.stack[depth - 2], st.stack[depth - 1], t.label, t.is_remote());
    case TransitionType::swap: {
      if (depth < 2) return false;
      const auto& x = g.node(st.stack[depth - 2]);
      const auto& y = g.node(st.stack[depth - 1]);
      return !x.is_root() && x.swap_index < y.swap_index;
    }
    case TransitionType::finish:
      return depth == 1 && g.node(st.stack.back()).is_root() && st.buffer.empty();
  }
  return false;
}

/// Applies `t` in place. Throws InvalidTransition if `t` is not valid.
inline void apply_in_place(ParserState& st, const Transition& t) {
  if (!is_valid(st, t)) throw InvalidTransition("invalid transition " + t.str());
  auto& g = st.graph;
  const std::size_t depth = st.stack.size();
  switch (t.type) {
    case TransitionType::shift:
      st.stack.push_back(st.buffer.front());
      st.buffer.pop_front();
      break;
    case TransitionType::reduce: st.stack.pop_back(); break;
    case TransitionType::node: {
      NodeRef x = st.stack.back();
      const Rational right = st.buffer.empty() ? Rational(st.n + 1) : g.node(st.buffer.front()).swap_index;
      NodeRef y = g.add_nonterminal(Rational::mean(g.node(x).swap_index, right));
      g.add_edge_unchecked(y, x, t.label, false);
      st.buffer.push_front(y);
      break;
    }
    case TransitionType::left_edge:
    case TransitionType::left_remote:
      g.add_edge_unchecked(st.stack[depth - 1], st.stack[depth - 2], t.label, t.is_remote());
      break;
    case TransitionType::right_edge:
    case TransitionType::right_remote:
      g.add_edge_unchecked(st.stack[depth - 2], st.stack[depth - 1], t.label, t.is_remote());
      break;
    case TransitionType::swap: {
      NodeRef x = st.stack[depth - 2];
      st.stack.erase(st.stack.end() - 2);
      st.buffer.push_front(x);
      break;
    }
    case TransitionType::finish:
      st.finished = true;
      st.stack.clear();
      st.buffer.clear();
      break;
  }
  ++st.steps;
  st.history.push_back(t);
}

inline ParserState apply(ParserState st, const Transition& t) {
  apply_in_place(st, t);
  return st;
}

inline std::size_t default_step_limit(int n) { return 10 * (2 * static_cast<std::size_t>(n) + 1); }

/// Gives every parentless non-root node a primary "dep" edge from the root,
/// so that the primary edges form a single tree. Never creates a cycle: the
/// root has no incoming edges.
inline void attach_loose_ends(DagGraph& g) {
  const NodeRef root = g.root();
  for (std::uint32_t i = 0; i < g.node_count(); ++i) {
    NodeRef u{i};
    if (u == root || g.primary_parent(u)) continue;
    g.add_edge_unchecked(root, u, "dep", false);
  }
}

/// "step | stack | buffer-head | chosen transition | #valid"
inline std::string trace_line(const ParserState& st, const Transition& chosen, std::size_t valid_count) {
  auto name = [&](NodeRef r) {
    const auto& nd = st.graph.node(r);
    if (nd.is_root()) return std::string("ROOT");
    if (nd.is_terminal()) return nd.terminal.text + "/" + std::to_string(nd.terminal.position);
    return "N" + std::to_string(r.index) + "@" + nd.swap_index.str();
  };
  std::string out = std::to_string(st.steps) + " | ";
  for (std::size_t i = 0; i < st.stack.size(); ++i) out += (i ? " " : "") + name(st.stack[i]);
  out += " | " + (st.buffer.empty() ? std::string("-") : name(st.buffer.front()));
  out += " | " + chosen.str() + " | " + std::to_string(valid_count);
  return out;
}

struct GreedyResult {
  DagGraph graph;
  std::vector<Transition> transitions;
  bool finished = false;  // false when the step limit or a dead end forced repair
};

/// Runs the parser from `st`, applying at each step the highest-scoring valid
/// transition of `actions` (ties go to the lower action index). `score`
/// returns one score per action index. Stops on Finish or after `step_limit`
/// steps; an unfinished graph is repaired with attach_loose_ends.
template <class Scorer>
GreedyResult run_greedy(ParserState st, const ActionSet& actions, Scorer&& score, std::size_t step_limit,
                        std::ostream* trace = nullptr) {
  while (!st.finished && st.steps < step_limit) {
    std::vector<double> scores = score(static_cast<const ParserState&>(st));
    std::optional<std::size_t> best;
    std::size_t valid = 0;
    for (std::size_t i = 0; i < actions.size(); ++i) {
      if (!is_valid(st, actions.at(i))) continue;
      ++valid;
      if (!best || scores[i] > scores[*best]) best = i;
    }
    if (!best) break;
    Transition t = actions.at(*best);
    if (trace) *trace << trace_line(st, t, valid) << '\n';
    apply_in_place(st, t);
  }
  GreedyResult r{std::move(st.graph), std::move(st.history), st.finished};
  if (!r.finished) attach_loose_ends(r.graph);
  return r;
}

}  // namespace uddag

#endif  // UDDAG_TRANSITION_HPP
