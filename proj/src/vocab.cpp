#include "ospar/vocab.hpp"

#include <algorithm>

namespace ospar {

Vocabulary::Vocabulary(std::vector<std::string> symbols) : symbols_(std::move(symbols)) {
  std::sort(symbols_.begin(), symbols_.end());
  symbols_.erase(std::unique(symbols_.begin(), symbols_.end()), symbols_.end());
  index_.reserve(symbols_.size());
  for (std::size_t i = 0; i < symbols_.size(); ++i) index_.emplace(symbols_[i], static_cast<int>(i));
}

int Vocabulary::id(std::string_view symbol) const {
  auto it = index_.find(std::string(symbol));
  return it == index_.end() ? -1 : it->second;
}

int Vocabulary::id_or(std::string_view symbol, int fallback) const {
  const int i = id(symbol);
  return i < 0 ? fallback : i;
}

}  // namespace ospar
