// Rooted labeled DAG over terminal tokens with primary and remote edges.

#ifndef UDDAG_DAG_HPP
#define UDDAG_DAG_HPP

#include <algorithm>
#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "uddag/rational.hpp"

namespace uddag {

inline constexpr const char* kHeadLabel = "head";

struct NodeRef {
  std::uint32_t index = 0;

  friend auto operator<=>(const NodeRef&, const NodeRef&) = default;
};

enum class NodeKind : std::uint8_t { root, terminal, nonterminal };

struct TerminalInfo {
  int position = 0;  // 1-based word index
  std::string text;
  std::string lemma;
  std::string upos;
  std::string xpos;
};

struct DagNode {
  NodeKind kind = NodeKind::nonterminal;
  Rational swap_index;
  TerminalInfo terminal;  // meaningful only for terminals

  bool is_terminal() const { return kind == NodeKind::terminal; }
  bool is_root() const { return kind == NodeKind::root; }
};

struct DagEdge {
  NodeRef parent;
  NodeRef child;
  std::string label;
  bool remote = false;

  friend bool operator==(const DagEdge&, const DagEdge&) = default;
};

enum class EdgeError : std::uint8_t {
  cycle_would_form,
  duplicate_primary_parent,
  edge_to_root,
  duplicate_edge,
};

inline const char* to_string(EdgeError e) {
  switch (e) {
    case EdgeError::cycle_would_form: return "cycle-would-form";
    case EdgeError::duplicate_primary_parent: return "duplicate-primary-parent";
    case EdgeError::edge_to_root: return "edge-to-root";
    case EdgeError::duplicate_edge: return "duplicate-edge";
  }
  return "?";
}

class GraphError : public std::runtime_error {
 public:
  explicit GraphError(EdgeError code)
      : std::runtime_error(std::string("cannot add edge: ") + to_string(code)), code_(code) {}
  EdgeError code() const { return code_; }

 private:
  EdgeError code_;
};

struct GapProfile {
  int gap_type = 0;  // 0 contiguous, 1 one gap, 2 several gaps
  int gap_length_sum = 0;

  friend bool operator==(const GapProfile&, const GapProfile&) = default;
};

/// Gap type and total gap length of a set of terminal positions.
inline GapProfile gap_profile_of(std::vector<int> positions) {
  std::sort(positions.begin(), positions.end());
  positions.erase(std::unique(positions.begin(), positions.end()), positions.end());
  GapProfile g;
  if (positions.size() < 2) return g;
  int gaps = 0;
  for (std::size_t i = 1; i < positions.size(); ++i)
    if (positions[i] - positions[i - 1] > 1) ++gaps;
  g.gap_type = std::min(gaps, 2);
  g.gap_length_sum = positions.back() - positions.front() + 1 - static_cast<int>(positions.size());
  return g;
}

class DagGraph {
 public:
  NodeRef add_node(NodeKind kind, Rational swap_index, TerminalInfo terminal = {}) {
    if (kind == NodeKind::root && root_) throw std::logic_error("graph already has a root");
    NodeRef ref{static_cast<std::uint32_t>(nodes_.size())};
    nodes_.push_back({kind, swap_index, std::move(terminal)});
    out_.emplace_back();
    in_.emplace_back();
    if (kind == NodeKind::root) root_ = ref;
    if (kind == NodeKind::terminal) ++terminal_count_;
    return ref;
  }

  NodeRef add_root() { return add_node(NodeKind::root, Rational(0)); }

  NodeRef add_terminal(TerminalInfo info) {
    Rational idx(info.position);
    return add_node(NodeKind::terminal, idx, std::move(info));
  }

  NodeRef add_nonterminal(Rational swap_index) { return add_node(NodeKind::nonterminal, swap_index); }

  /// Reason the edge cannot be added, if any.
  std::optional<EdgeError> check_edge(NodeRef parent, NodeRef child, const std::string& label,
                                      bool remote) const {
    if (node(child).is_root()) return EdgeError::edge_to_root;
    if (!remote && primary_parent(child)) return EdgeError::duplicate_primary_parent;
    for (auto e : in_[child.index]) {
      const auto& edge = edges_[e];
      if (edge.parent == parent && edge.remote == remote && edge.label == label)
        return EdgeError::duplicate_edge;
    }
    if (has_path(child, parent)) return EdgeError::cycle_would_form;
    return std::nullopt;
  }

  void add_edge(NodeRef parent, NodeRef child, std::string label, bool remote) {
    if (auto err = check_edge(parent, child, label, remote)) throw GraphError(*err);
    add_edge_unchecked(parent, child, std::move(label), remote);
  }

  /// For callers that already validated the edge.
  void add_edge_unchecked(NodeRef parent, NodeRef child, std::string label, bool remote) {
    auto id = static_cast<std::uint32_t>(edges_.size());
    edges_.push_back({parent, child, std::move(label), remote});
    out_[parent.index].push_back(id);
    in_[child.index].push_back(id);
  }

  /// Directed path over all edges; reflexive (has_path(x, x) is true).
  bool has_path(NodeRef from, NodeRef to) const {
    if (from == to) return true;
    std::vector<char> seen(nodes_.size(), 0);
    std::vector<std::uint32_t> stack{from.index};
    seen[from.index] = 1;
    while (!stack.empty()) {
      auto u = stack.back();
      stack.pop_back();
      for (auto e : out_[u]) {
        auto v = edges_[e].child.index;
        if (v == to.index) return true;
        if (!seen[v]) {
          seen[v] = 1;
          stack.push_back(v);
        }
      }
    }
    return false;
  }

  /// Longest chain of primary edges below the node.
  int height(NodeRef n) const {
    int best = 0;
    for (auto e : out_[n.index])
      if (!edges_[e].remote) best = std::max(best, 1 + height(edges_[e].child));
    return best;
  }

  /// Sorted positions of terminals reachable through primary edges.
  std::vector<int> terminal_yield(NodeRef n) const {
    std::vector<int> out;
    std::function<void(NodeRef)> walk = [&](NodeRef u) {
      const auto& nd = node(u);
      if (nd.is_terminal()) out.push_back(nd.terminal.position);
      for (auto e : out_[u.index])
        if (!edges_[e].remote) walk(edges_[e].child);
    };
    walk(n);
    std::sort(out.begin(), out.end());
    return out;
  }

  GapProfile gap_profile(NodeRef n) const { return gap_profile_of(terminal_yield(n)); }

  const DagNode& node(NodeRef r) const { return nodes_.at(r.index); }
  const DagEdge& edge(std::uint32_t id) const { return edges_[id]; }
  std::span<const DagNode> nodes() const { return nodes_; }
  std::span<const DagEdge> edges() const { return edges_; }
  std::span<const std::uint32_t> out_edges(NodeRef n) const { return out_[n.index]; }
  std::span<const std::uint32_t> in_edges(NodeRef n) const { return in_[n.index]; }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t terminal_count() const { return terminal_count_; }
  std::size_t nonterminal_count() const { return nodes_.size() - terminal_count_; }

  bool has_root() const { return root_.has_value(); }
  NodeRef root() const {
    if (!root_) throw std::logic_error("graph has no root");
    return *root_;
  }

  std::optional<std::uint32_t> primary_parent(NodeRef n) const {
    for (auto e : in_[n.index])
      if (!edges_[e].remote) return e;
    return std::nullopt;
  }

  /// The outgoing primary "head" edge, if present.
  std::optional<std::uint32_t> head_edge(NodeRef n) const {
    for (auto e : out_[n.index])
      if (!edges_[e].remote && edges_[e].label == kHeadLabel) return e;
    return std::nullopt;
  }

  /// Terminal refs ordered by position.
  std::vector<NodeRef> terminals() const {
    std::vector<NodeRef> out;
    for (std::uint32_t i = 0; i < nodes_.size(); ++i)
      if (nodes_[i].is_terminal()) out.push_back({i});
    std::sort(out.begin(), out.end(), [&](NodeRef a, NodeRef b) {
      return node(a).terminal.position < node(b).terminal.position;
    });
    return out;
  }

 private:
  std::vector<DagNode> nodes_;
  std::vector<DagEdge> edges_;
  std::vector<std::vector<std::uint32_t>> out_;
  std::vector<std::vector<std::uint32_t>> in_;
  std::optional<NodeRef> root_;
  std::size_t terminal_count_ = 0;
};

}  // namespace uddag

#endif  // UDDAG_DAG_HPP
