// Classifier features of a parser state.
//
// Node sources: stack s0..s3, buffer b0..b3, leftmost/rightmost children of
// s0 and s1 (and of those children), leftmost/rightmost parents of s0, s1
// and b0. Non-terminals are represented by a head terminal for the
// token-level channels.

#ifndef UDDAG_FEATURES_HPP
#define UDDAG_FEATURES_HPP

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "uddag/dag.hpp"
#include "uddag/transition.hpp"

namespace uddag {

enum class Source : std::uint8_t {
  s0, s1, s2, s3, b0, b1, b2, b3,
  s0l, s0r, s1l, s1r,
  s0ll, s0lr, s0rl, s0rr, s1ll, s1lr, s1rl, s1rr,
  s0L, s0R, s1L, s1R, b0L, b0R,
  s0_s1, s0_b0, s1_s0, b0_s0,  // edges x -> y
  a0, a1,
  global,
};

inline constexpr int kNodeSlots = 26;  // s0 .. b0R

inline const char* source_name(Source s) {
  static constexpr const char* names[] = {
      "s0",   "s1",   "s2",   "s3",   "b0",   "b1",   "b2",   "b3",   "s0l",  "s0r",  "s1l",
      "s1r",  "s0ll", "s0lr", "s0rl", "s0rr", "s1ll", "s1lr", "s1rl", "s1rr", "s0L",  "s0R",
      "s1L",  "s1R",  "b0L",  "b0R",  "s0->s1", "s0->b0", "s1->s0", "b0->s0", "a0", "a1", "global"};
  return names[static_cast<int>(s)];
}

/// Channel letters; "exists" is the edge indicator and "node_ratio" the
/// global ratio of non-terminals to terminals.
inline bool is_numeric_channel(std::string_view c) {
  static const std::set<std::string_view> numeric = {"h", "q", "x", "y", "P", "C", "I", "E", "M", "exists",
                                                     "node_ratio"};
  return numeric.count(c) > 0;
}

/// Channels read off the head terminal's token.
inline bool is_token_channel(std::string_view c) {
  return c == "w" || c == "m" || c == "t" || c == "u" || c == "#" || c == "^" || c == "$";
}

inline bool is_lexical_channel(std::string_view c) {
  return c == "w" || c == "m" || c == "t" || c == "^" || c == "$";
}

struct FeatureTemplate {
  Source source;
  std::string channel;

  std::string name() const { return std::string(source_name(source)) + "." + channel; }
  friend bool operator==(const FeatureTemplate&, const FeatureTemplate&) = default;
};

/// All legal (source, channel) pairs, in a fixed order.
inline const std::vector<FeatureTemplate>& all_templates() {
  static const std::vector<FeatureTemplate> table = [] {
    std::vector<FeatureTemplate> t;
    auto add = [&](std::initializer_list<Source> sources, std::initializer_list<const char*> channels) {
      for (auto s : sources)
        for (auto c : channels) t.push_back({s, c});
    };
    using S = Source;
    add({S::s0}, {"w", "m", "t", "u", "e", "p", "T", "#", "^", "$", "x", "h", "q", "y", "P", "C", "I", "E", "M",
                  "N"});
    add({S::s1}, {"w", "m", "t", "u", "e", "T", "#", "^", "$", "x", "h", "y", "N"});
    add({S::s2}, {"w", "m", "t", "u", "e", "T", "#", "^", "$", "x", "h", "y"});
    add({S::s3}, {"w", "m", "t", "u", "e", "T", "#", "^", "$", "x", "h", "y", "N"});
    add({S::b0}, {"w", "m", "t", "u", "T", "#", "^", "$", "h", "P", "C", "I", "E", "M", "N"});
    add({S::b1, S::b2, S::b3}, {"w", "m", "t", "u", "T", "#", "^", "$"});
    add({S::s0l, S::s0r, S::s1l, S::s1r, S::s0ll, S::s0lr, S::s0rl, S::s0rr, S::s1ll, S::s1lr, S::s1rl, S::s1rr},
        {"w", "m", "e", "#", "^", "$"});
    add({S::s0L, S::s0R, S::s1L, S::s1R, S::b0L, S::b0R}, {"w", "m", "e", "#", "^", "$"});
    add({S::s0_s1, S::s0_b0, S::s1_s0, S::b0_s0}, {"exists"});
    add({S::s0_b0, S::b0_s0}, {"e"});
    add({S::a0, S::a1}, {"e", "A"});
    add({S::global}, {"node_ratio"});
    return t;
  }();
  return table;
}

/// Separator punctuation counted by channels p and q.
inline bool is_separator(std::string_view form) {
  static const std::set<std::string_view> seps = {",", ";", ":", "\xE2\x80\x94", "\xE2\x80\x93", "-",
                                                  "(", ")", "\"", "'"};
  return seps.count(form) > 0;
}

namespace detail {

/// UTF-8 code point boundaries of `s`.
inline std::vector<std::size_t> codepoint_starts(std::string_view s) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < s.size(); ++i)
    if ((static_cast<unsigned char>(s[i]) & 0xC0) != 0x80) out.push_back(i);
  return out;
}

}  // namespace detail

inline std::string prefix_chars(std::string_view s, std::size_t k) {
  auto starts = detail::codepoint_starts(s);
  if (starts.size() <= k) return std::string(s);
  return std::string(s.substr(0, starts[k]));
}

inline std::string suffix_chars(std::string_view s, std::size_t k) {
  auto starts = detail::codepoint_starts(s);
  if (starts.size() <= k) return std::string(s);
  return std::string(s.substr(starts[starts.size() - k]));
}

/// Uppercase -> X, lowercase -> x, digit -> d, anything else kept; runs of
/// one symbol longer than 4 are cut to 4. Non-ASCII code points are kept.
inline std::string word_shape(std::string_view text) {
  std::string out;
  std::string prev;
  int run = 0;
  auto starts = detail::codepoint_starts(text);
  for (std::size_t i = 0; i < starts.size(); ++i) {
    std::size_t end = i + 1 < starts.size() ? starts[i + 1] : text.size();
    std::string_view cp = text.substr(starts[i], end - starts[i]);
    std::string sym;
    if (cp.size() == 1) {
      unsigned char c = static_cast<unsigned char>(cp[0]);
      if (c >= 'A' && c <= 'Z') sym = "X";
      else if (c >= 'a' && c <= 'z') sym = "x";
      else if (c >= '0' && c <= '9') sym = "d";
      else sym = std::string(cp);
    } else {
      sym = std::string(cp);
    }
    run = sym == prev ? run + 1 : 1;
    prev = sym;
    if (run <= 4) out += sym;
  }
  return out;
}

inline constexpr std::array<const char*, 4> kHeadPriority = {"parataxis", "conj", "advcl", "xcomp"};

/// Terminal chosen to represent `n`: follow a "head" child, else the child
/// whose label comes first in kHeadPriority, else the leftmost child by swap
/// index. Primary children are preferred over remote ones.
inline std::optional<NodeRef> head_terminal(const DagGraph& g, NodeRef n) {
  for (std::size_t guard = 0; guard <= g.node_count(); ++guard) {
    if (g.node(n).is_terminal()) return n;
    auto outs = g.out_edges(n);
    if (outs.empty()) return std::nullopt;
    bool any_primary = std::any_of(outs.begin(), outs.end(), [&](auto e) { return !g.edge(e).remote; });
    std::optional<std::uint32_t> pick;
    int best_rank = 1000;
    for (auto e : outs) {
      const auto& ed = g.edge(e);
      if (ed.remote && any_primary) continue;
      int rank = 100;
      if (ed.label == kHeadLabel) {
        rank = -1;
      } else {
        for (std::size_t k = 0; k < kHeadPriority.size(); ++k)
          if (ed.label == kHeadPriority[k]) rank = static_cast<int>(k);
      }
      bool better = !pick || rank < best_rank ||
                    (rank == best_rank && g.node(ed.child).swap_index < g.node(g.edge(*pick).child).swap_index);
      if (better) {
        pick = e;
        best_rank = rank;
      }
    }
    n = g.edge(*pick).child;
  }
  return std::nullopt;
}

struct FeatureVector {
  std::vector<std::string> categorical;  // per categorical template; "" = absent
  std::vector<double> numeric;           // per numeric template
  std::array<int, kNodeSlots> anchors{};  // head terminal position per node slot, 0 = none
};

class FeatureExtractor {
 public:
  explicit FeatureExtractor(bool delexicalized = false) : delexicalized_(delexicalized) {
    for (const auto& t : all_templates()) {
      if (delexicalized_ && is_lexical_channel(t.channel)) continue;
      (is_numeric_channel(t.channel) ? numeric_ : categorical_).push_back(t);
    }
  }

  bool delexicalized() const { return delexicalized_; }
  const std::vector<FeatureTemplate>& categorical_templates() const { return categorical_; }
  const std::vector<FeatureTemplate>& numeric_templates() const { return numeric_; }

  FeatureVector extract(const ParserState& st) const {
    const auto& g = st.graph;
    std::array<std::optional<NodeRef>, kNodeSlots> slot{};
    for (int i = 0; i < 4; ++i) {
      slot[i] = st.s(i);
      slot[4 + i] = st.b(i);
    }
    auto child = [&](std::optional<NodeRef> n, bool right) -> std::optional<NodeRef> {
      if (!n) return std::nullopt;
      return extreme(g, g.out_edges(*n), right, true);
    };
    auto parent = [&](std::optional<NodeRef> n, bool right) -> std::optional<NodeRef> {
      if (!n) return std::nullopt;
      return extreme(g, g.in_edges(*n), right, false);
    };
    using S = Source;
    auto at = [](S s) { return static_cast<int>(s); };
    slot[at(S::s0l)] = child(slot[0], false);
    slot[at(S::s0r)] = child(slot[0], true);
    slot[at(S::s1l)] = child(slot[1], false);
    slot[at(S::s1r)] = child(slot[1], true);
    slot[at(S::s0ll)] = child(slot[at(S::s0l)], false);
    slot[at(S::s0lr)] = child(slot[at(S::s0l)], true);
    slot[at(S::s0rl)] = child(slot[at(S::s0r)], false);
    slot[at(S::s0rr)] = child(slot[at(S::s0r)], true);
    slot[at(S::s1ll)] = child(slot[at(S::s1l)], false);
    slot[at(S::s1lr)] = child(slot[at(S::s1l)], true);
    slot[at(S::s1rl)] = child(slot[at(S::s1r)], false);
    slot[at(S::s1rr)] = child(slot[at(S::s1r)], true);
    slot[at(S::s0L)] = parent(slot[0], false);
    slot[at(S::s0R)] = parent(slot[0], true);
    slot[at(S::s1L)] = parent(slot[1], false);
    slot[at(S::s1R)] = parent(slot[1], true);
    slot[at(S::b0L)] = parent(slot[4], false);
    slot[at(S::b0R)] = parent(slot[4], true);

    FeatureVector fv;
    std::array<std::optional<NodeRef>, kNodeSlots> heads{};
    for (int i = 0; i < kNodeSlots; ++i) {
      if (slot[i]) heads[i] = head_terminal(g, *slot[i]);
      fv.anchors[i] = heads[i] ? g.node(*heads[i]).terminal.position : 0;
    }

    // Separator punctuation strictly between the head terminals of s0 and s1.
    int seps = 0;
    if (heads[0] && heads[1]) {
      int a = g.node(*heads[0]).terminal.position, b = g.node(*heads[1]).terminal.position;
      if (a > b) std::swap(a, b);
      for (auto t : g.terminals()) {
        int p = g.node(t).terminal.position;
        if (p > a && p < b && is_separator(g.node(t).terminal.text)) ++seps;
      }
    }

    fv.categorical.reserve(categorical_.size());
    for (const auto& t : categorical_) fv.categorical.push_back(categorical_value(st, t, slot, heads, seps));
    fv.numeric.reserve(numeric_.size());
    for (const auto& t : numeric_) fv.numeric.push_back(numeric_value(st, t, slot, seps));
    return fv;
  }

  /// "template=value" lines; absent categorical values print as "_".
  std::string dump(const FeatureVector& fv) const {
    std::string out;
    for (std::size_t i = 0; i < categorical_.size(); ++i)
      out += categorical_[i].name() + "=" + (fv.categorical[i].empty() ? "_" : fv.categorical[i]) + "\n";
    for (std::size_t i = 0; i < numeric_.size(); ++i) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%g", fv.numeric[i]);
      out += numeric_[i].name() + "=" + buf + "\n";
    }
    return out;
  }

 private:
  using Slots = std::array<std::optional<NodeRef>, kNodeSlots>;

  static std::optional<NodeRef> extreme(const DagGraph& g, std::span<const std::uint32_t> edges, bool right,
                                        bool children) {
    std::optional<NodeRef> best;
    for (auto e : edges) {
      NodeRef r = children ? g.edge(e).child : g.edge(e).parent;
      if (!best) {
        best = r;
        continue;
      }
      const auto& a = g.node(r).swap_index;
      const auto& b = g.node(*best).swap_index;
      if (right ? b < a : a < b) best = r;
    }
    return best;
  }

  static std::string first_incoming_label(const DagGraph& g, NodeRef n) {
    for (auto e : g.in_edges(n))
      if (!g.edge(e).remote) return g.edge(e).label;
    auto ins = g.in_edges(n);
    return ins.empty() ? std::string() : g.edge(ins[0]).label;
  }

  static std::optional<std::uint32_t> edge_between(const DagGraph& g, std::optional<NodeRef> from,
                                                   std::optional<NodeRef> to) {
    if (!from || !to) return std::nullopt;
    for (auto e : g.out_edges(*from))
      if (g.edge(e).child == *to) return e;
    return std::nullopt;
  }

  static std::pair<std::optional<NodeRef>, std::optional<NodeRef>> edge_ends(const ParserState& st, Source s) {
    switch (s) {
      case Source::s0_s1: return {st.s(0), st.s(1)};
      case Source::s0_b0: return {st.s(0), st.b(0)};
      case Source::s1_s0: return {st.s(1), st.s(0)};
      default: return {st.b(0), st.s(0)};
    }
  }

  std::string categorical_value(const ParserState& st, const FeatureTemplate& t, const Slots& slot,
                                const Slots& heads, int seps) const {
    const auto& g = st.graph;
    const auto& c = t.channel;
    if (t.source == Source::a0 || t.source == Source::a1) {
      std::size_t back = t.source == Source::a0 ? 1 : 2;
      if (st.history.size() < back) return {};
      const auto& tr = st.history[st.history.size() - back];
      return c == "A" ? std::string(type_name(tr.type)) : tr.label;
    }
    if (t.source == Source::s0_b0 || t.source == Source::b0_s0) {
      auto [from, to] = edge_ends(st, t.source);
      auto e = edge_between(g, from, to);
      return e ? g.edge(*e).label : std::string();
    }
    const int i = static_cast<int>(t.source);
    if (!slot[i]) return {};
    if (c == "e") return first_incoming_label(g, *slot[i]);
    if (c == "p") return seps > 0 ? "+" : std::string();
    if (c == "T" || c == "N") return {};
    if (!heads[i]) return {};
    const auto& term = g.node(*heads[i]).terminal;
    if (c == "w") return term.text;
    if (c == "m") return term.lemma;
    if (c == "t") return term.xpos;
    if (c == "u") return term.upos;
    if (c == "#") return word_shape(term.text);
    if (c == "^") return prefix_chars(term.text, 1);
    if (c == "$") return suffix_chars(term.text, 3);
    return {};
  }

  double numeric_value(const ParserState& st, const FeatureTemplate& t, const Slots& slot, int seps) const {
    const auto& g = st.graph;
    const auto& c = t.channel;
    if (t.source == Source::global)
      return st.n ? static_cast<double>(g.node_count() - g.terminal_count()) / static_cast<double>(st.n) : 0.0;
    if (c == "exists") {
      auto [from, to] = edge_ends(st, t.source);
      return edge_between(g, from, to) ? 1.0 : 0.0;
    }
    const int i = static_cast<int>(t.source);
    if (!slot[i]) return 0.0;
    NodeRef n = *slot[i];
    if (c == "h") return g.height(n);
    if (c == "q") return seps;
    if (c == "x") return g.gap_profile(n).gap_type;
    if (c == "y") return g.gap_profile(n).gap_length_sum;
    if (c == "I") return 0.0;
    auto count = [&](std::span<const std::uint32_t> edges, int remote) {
      int k = 0;
      for (auto e : edges)
        if (remote < 0 || g.edge(e).remote == (remote == 1)) ++k;
      return static_cast<double>(k);
    };
    if (c == "P") return count(g.in_edges(n), -1);
    if (c == "C") return count(g.out_edges(n), -1);
    if (c == "E") return count(g.out_edges(n), 1);
    if (c == "M") return count(g.in_edges(n), 1);
    return 0.0;
  }

  bool delexicalized_;
  std::vector<FeatureTemplate> categorical_;
  std::vector<FeatureTemplate> numeric_;
};

}  // namespace uddag

#endif  // UDDAG_FEATURES_HPP
