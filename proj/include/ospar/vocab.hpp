#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ospar {

// Reserved symbols shared by every module.
inline constexpr std::string_view kDummyLabel = "\xE2\x88\x85";  // "∅"
inline constexpr char kUnarySeparator = '|';
inline constexpr std::string_view kUnknownToken = "<UNK>";
inline constexpr std::string_view kStartToken = "<START>";
inline constexpr std::string_view kStopToken = "<STOP>";

/// Bidirectional symbol <-> id map. Ids follow the lexicographic order of the
/// symbols, so iterating ids in increasing order is iterating symbols
/// lexicographically; decoder tie-breaking relies on this.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> symbols);

  int id(std::string_view symbol) const;  // -1 when absent
  int id_or(std::string_view symbol, int fallback) const;
  bool contains(std::string_view symbol) const { return id(symbol) >= 0; }

  const std::string& symbol(int id) const { return symbols_.at(static_cast<std::size_t>(id)); }
  const std::vector<std::string>& symbols() const { return symbols_; }
  int size() const { return static_cast<int>(symbols_.size()); }
  bool empty() const { return symbols_.empty(); }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.symbols_ == b.symbols_; }

 private:
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace ospar
