#ifndef UDDAG_TESTS_COMMON_HPP
#define UDDAG_TESTS_COMMON_HPP

#include <stdexcept>
#include <string>
#include <vector>

#include "uddag/fixtures.hpp"
#include "uddag/reference.hpp"
#include "uddag/transition.hpp"

namespace uddag::test {

inline const std::vector<FixtureCase>& fixtures() {
  static const std::vector<FixtureCase> all = load_fixtures();
  return all;
}

inline const FixtureCase& fixture(const std::string& name) {
  for (const auto& c : fixtures())
    if (c.name == name) return c;
  throw std::out_of_range("no fixture " + name);
}

inline const Sentence& sentence(const std::string& name) { return fixture(name).sentence; }

inline Sentence parse_one(const std::string& text) {
  auto v = parse_conllu(text);
  if (v.size() != 1) throw std::runtime_error("expected one sentence");
  return v[0];
}

/// First violated state or graph invariant, empty when all hold: no cycle
/// over all edges, at most one primary parent, none into the root, at most
/// one outgoing head edge, stack and buffer disjoint and inside the graph.
inline std::string invariant_violation(const ParserState& st) {
  const auto& g = st.graph;
  const auto n = g.node_count();
  auto reach = reference::transitive_closure(g);
  for (std::uint32_t u = 0; u < n; ++u) {
    for (std::uint32_t v = 0; v < n; ++v)
      if (u != v && reach[u][v] && reach[v][u]) return "cycle through node " + std::to_string(u);
    int primary = 0, heads = 0;
    for (auto id : g.in_edges({u})) primary += !g.edge(id).remote;
    for (auto id : g.out_edges({u})) heads += g.edge(id).label == kHeadLabel && !g.edge(id).remote;
    if (primary > 1) return "node " + std::to_string(u) + " has two primary parents";
    if (g.node({u}).is_root() && !g.in_edges({u}).empty()) return "edge into the root";
    if (heads > 1) return "node " + std::to_string(u) + " has two head edges";
  }
  std::vector<int> seen(n, 0);
  for (auto r : st.stack) {
    if (r.index >= n) return "stack entry outside the graph";
    ++seen[r.index];
  }
  for (auto r : st.buffer) {
    if (r.index >= n) return "buffer entry outside the graph";
    ++seen[r.index];
  }
  for (auto c : seen)
    if (c > 1) return "node on stack and buffer at once";
  return {};
}

}  // namespace uddag::test

#endif
