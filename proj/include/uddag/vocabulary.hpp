// Per-channel symbol tables with occurrence counts.

#ifndef UDDAG_VOCABULARY_HPP
#define UDDAG_VOCABULARY_HPP

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace uddag {

/// Id 0 is "absent" (empty value), id 1 is "unknown" (not seen in training).
class SymbolTable {
 public:
  static constexpr int kAbsent = 0;
  static constexpr int kUnknown = 1;

  SymbolTable() : symbols_{"<absent>", "<unknown>"}, counts_{0, 0} {}

  /// Counts one occurrence; returns the id. Ignored once frozen.
  int add(const std::string& s, std::uint64_t count = 1) {
    if (s.empty()) return kAbsent;
    auto it = index_.find(s);
    if (it != index_.end()) {
      if (!frozen_) counts_[it->second] += count;
      return it->second;
    }
    if (frozen_) return kUnknown;
    int id = static_cast<int>(symbols_.size());
    index_.emplace(s, id);
    symbols_.push_back(s);
    counts_.push_back(count);
    return id;
  }

  int lookup(const std::string& s) const {
    if (s.empty()) return kAbsent;
    auto it = index_.find(s);
    return it == index_.end() ? kUnknown : it->second;
  }

  std::size_t size() const { return symbols_.size(); }
  const std::string& symbol(int id) const { return symbols_.at(id); }
  std::uint64_t count(int id) const { return counts_.at(id); }
  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }

  friend bool operator==(const SymbolTable& a, const SymbolTable& b) {
    return a.symbols_ == b.symbols_ && a.counts_ == b.counts_;
  }

 private:
  std::map<std::string, int> index_;
  std::vector<std::string> symbols_;
  std::vector<std::uint64_t> counts_;
  bool frozen_ = false;
};

struct Vocabulary {
  std::map<std::string, SymbolTable> channels;  // keyed by channel letter

  SymbolTable& operator[](const std::string& c) { return channels[c]; }
  const SymbolTable& at(const std::string& c) const {
    auto it = channels.find(c);
    if (it == channels.end()) throw std::out_of_range("no vocabulary for channel " + c);
    return it->second;
  }
  bool has(const std::string& c) const { return channels.count(c) > 0; }
  void freeze() {
    for (auto& [c, t] : channels) t.freeze();
  }

  friend bool operator==(const Vocabulary&, const Vocabulary&) = default;
};

}  // namespace uddag

#endif  // UDDAG_VOCABULARY_HPP
