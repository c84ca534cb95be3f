// Treebank manifest: which model to use for a (language, treebank) pair.
//
// One entry per line, whitespace separated:
//   language  treebank  training-sentences  model-path
// '#' starts a comment. The language "*" marks the delexicalized
// multilingual model used for languages without training data.

#ifndef UDDAG_MANIFEST_HPP
#define UDDAG_MANIFEST_HPP

#include <cstddef>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace uddag {

struct ManifestEntry {
  std::string language;
  std::string treebank;
  std::size_t size = 0;
  std::string model;
};

class ManifestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::vector<ManifestEntry> parse_manifest(std::istream& in) {
  std::vector<ManifestEntry> out;
  std::string line;
  for (std::size_t no = 1; std::getline(in, line); ++no) {
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    std::istringstream ls(line);
    ManifestEntry e;
    std::string size;
    if (!(ls >> e.language)) continue;
    std::string extra;
    if (!(ls >> e.treebank >> size >> e.model) || (ls >> extra))
      throw ManifestError("manifest line " + std::to_string(no) + ": expected 4 fields");
    try {
      std::size_t used = 0;
      e.size = std::stoull(size, &used);
      if (used != size.size()) throw std::invalid_argument(size);
    } catch (const std::exception&) {
      throw ManifestError("manifest line " + std::to_string(no) + ": bad size '" + size + "'");
    }
    out.push_back(std::move(e));
  }
  return out;
}

inline std::vector<ManifestEntry> read_manifest_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ManifestError("cannot read manifest " + path);
  return parse_manifest(in);
}

/// Exact treebank match, else the largest treebank of the language (first
/// listed wins a tie), else the multilingual model.
inline std::string resolve_model(const std::vector<ManifestEntry>& manifest, const std::string& language,
                                 const std::string& treebank) {
  if (manifest.empty()) throw ManifestError("empty manifest");
  const ManifestEntry* largest = nullptr;
  const ManifestEntry* multi = nullptr;
  for (const auto& e : manifest) {
    if (e.language == "*") {
      if (!multi) multi = &e;
      continue;
    }
    if (e.language != language) continue;
    if (e.treebank == treebank) return e.model;
    if (!largest || e.size > largest->size) largest = &e;
  }
  if (largest) return largest->model;
  if (multi) return multi->model;
  throw ManifestError("no model for language '" + language + "' and no multilingual entry");
}

}  // namespace uddag

#endif  // UDDAG_MANIFEST_HPP
