#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "ospar/grammar.hpp"

namespace ospar {

/// Dense s(i,j,l,o) for one sentence, 0 <= i < j <= n. Storage is
/// [width][i][label][order] so all cells of one width are contiguous.
class SpanScoreChart {
 public:
  SpanScoreChart() = default;
  SpanScoreChart(int n, int num_labels);

  int length() const { return n_; }
  int num_labels() const { return labels_; }
  std::size_t num_spans() const { return static_cast<std::size_t>(n_) * (n_ + 1) / 2; }

  /// Position of span (i,j) in width-major order.
  std::size_t cell(int i, int j) const { return offsets_[static_cast<std::size_t>(j - i)] + static_cast<std::size_t>(i); }
  std::size_t index(int i, int j, int l, Order o) const {
    return (cell(i, j) * static_cast<std::size_t>(labels_) + static_cast<std::size_t>(l)) * kNumOrders +
           static_cast<std::size_t>(order_index(o));
  }

  double operator()(int i, int j, int l, Order o) const { return values_[index(i, j, l, o)]; }
  double& operator()(int i, int j, int l, Order o) { return values_[index(i, j, l, o)]; }

  /// Bounds-checked access.
  double at(int i, int j, int l, Order o) const;

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  friend bool operator==(const SpanScoreChart& a, const SpanScoreChart& b) {
    return a.n_ == b.n_ && a.labels_ == b.labels_ && a.values_ == b.values_;
  }

 private:
  int n_ = 0;
  int labels_ = 0;
  std::vector<std::size_t> offsets_;  // first cell of each width, index 0 unused
  std::vector<double> values_;
};

}  // namespace ospar
