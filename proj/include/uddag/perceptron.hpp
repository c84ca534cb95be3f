// Multiclass averaged perceptron over hashed (template, value) features.
// Every feature owns one weight per action, so a feature is the
// conjunction of a template value with the transition.

#ifndef UDDAG_PERCEPTRON_HPP
#define UDDAG_PERCEPTRON_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "uddag/features.hpp"

namespace uddag {

inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 1469598103934665603ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

/// Numeric features become categorical buckets: counts are clipped at 20,
/// the node ratio is cut into tenths.
inline std::string numeric_bucket(const FeatureTemplate& t, double v) {
  if (t.channel == "node_ratio") return std::to_string(static_cast<int>(std::floor(std::min(v, 5.0) * 10)));
  return std::to_string(static_cast<int>(std::floor(std::min(v, 20.0))));
}

/// Hashed feature ids of one state; absent categorical values and zero
/// numeric values are omitted. A bias feature is always present.
inline std::vector<std::uint64_t> perceptron_features(const FeatureExtractor& fx, const FeatureVector& fv) {
  std::vector<std::uint64_t> out;
  out.reserve(fv.categorical.size() + fv.numeric.size() + 1);
  out.push_back(fnv1a("<bias>"));
  const auto& cats = fx.categorical_templates();
  for (std::size_t i = 0; i < cats.size(); ++i) {
    if (fv.categorical[i].empty()) continue;
    out.push_back(fnv1a(fv.categorical[i], fnv1a(cats[i].name() + "=")));
  }
  const auto& nums = fx.numeric_templates();
  for (std::size_t i = 0; i < nums.size(); ++i) {
    if (fv.numeric[i] == 0.0) continue;
    out.push_back(fnv1a(numeric_bucket(nums[i], fv.numeric[i]), fnv1a(nums[i].name() + "=")));
  }
  return out;
}

class Perceptron {
 public:
  struct Entry {
    std::vector<double> w;      // current weights
    std::vector<double> total;  // sum of weight snapshots up to `stamp`
    std::vector<std::uint64_t> stamp;
  };

  Perceptron() = default;
  explicit Perceptron(std::size_t actions) : actions_(actions) {}

  std::size_t actions() const { return actions_; }
  std::uint64_t instances() const { return t_; }
  const std::unordered_map<std::uint64_t, Entry>& table() const { return table_; }

  std::vector<double> score(const std::vector<std::uint64_t>& features) const {
    std::vector<double> s(actions_, 0.0);
    for (auto f : features) {
      auto it = table_.find(f);
      if (it == table_.end()) continue;
      for (std::size_t a = 0; a < actions_; ++a) s[a] += it->second.w[a];
    }
    return s;
  }

  /// One training instance: counts a weight snapshot, and when `predicted`
  /// differs from `gold` moves weights toward gold.
  void update(const std::vector<std::uint64_t>& features, std::size_t gold, std::size_t predicted) {
    ++t_;
    if (gold == predicted) return;
    for (auto f : features) {
      auto& e = entry(f);
      bump(e, gold, 1.0);
      bump(e, predicted, -1.0);
    }
  }

  /// Replaces weights by the mean of the snapshots taken after every
  /// instance so far.
  void average() {
    if (t_ == 0) return;
    for (auto& [f, e] : table_)
      for (std::size_t a = 0; a < actions_; ++a) {
        e.total[a] += e.w[a] * static_cast<double>(t_ - e.stamp[a]);
        e.stamp[a] = t_;
        e.w[a] = e.total[a] / static_cast<double>(t_);
      }
    averaged_ = true;
  }

  bool averaged() const { return averaged_; }

  /// Weights only; used by model loading.
  void set_weights(std::uint64_t feature, std::vector<double> w) {
    Entry e;
    e.total.assign(actions_, 0.0);
    e.stamp.assign(actions_, 0);
    e.w = std::move(w);
    table_[feature] = std::move(e);
  }
  void mark_averaged(std::uint64_t instances) {
    averaged_ = true;
    t_ = instances;
  }

 private:
  Entry& entry(std::uint64_t f) {
    auto [it, fresh] = table_.try_emplace(f);
    if (fresh) {
      it->second.w.assign(actions_, 0.0);
      it->second.total.assign(actions_, 0.0);
      it->second.stamp.assign(actions_, 0);
    }
    return it->second;
  }

  // Snapshots stamp+1 .. t-1 all saw the old weight; snapshot t sees the new one.
  void bump(Entry& e, std::size_t a, double delta) {
    e.total[a] += e.w[a] * static_cast<double>(t_ - 1 - e.stamp[a]);
    e.stamp[a] = t_ - 1;
    e.w[a] += delta;
  }

  std::size_t actions_ = 0;
  std::uint64_t t_ = 0;
  bool averaged_ = false;
  std::unordered_map<std::uint64_t, Entry> table_;
};

}  // namespace uddag

#endif  // UDDAG_PERCEPTRON_HPP
