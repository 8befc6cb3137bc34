#include "ospar/span_chart.hpp"

#include <string>

namespace ospar {

SpanScoreChart::SpanScoreChart(int n, int num_labels) : n_(n), labels_(num_labels) {
  if (n < 0 || num_labels < 0) throw std::invalid_argument("negative chart dimension");
  offsets_.assign(static_cast<std::size_t>(n) + 1, 0);
  std::size_t acc = 0;
  for (int w = 1; w <= n; ++w) {
    offsets_[static_cast<std::size_t>(w)] = acc;
    acc += static_cast<std::size_t>(n - w + 1);
  }
  values_.assign(acc * static_cast<std::size_t>(num_labels) * kNumOrders, 0.0);
}

double SpanScoreChart::at(int i, int j, int l, Order o) const {
  if (i < 0 || j > n_ || i >= j || l < 0 || l >= labels_)
    throw std::out_of_range("span (" + std::to_string(i) + "," + std::to_string(j) + ") label " + std::to_string(l) +
                            " outside chart of length " + std::to_string(n_));
  return (*this)(i, j, l, o);
}

}  // namespace ospar
