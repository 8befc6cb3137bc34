#include "ospar/decoder.hpp"

#include <cmath>
#include <limits>

#include "ospar/parallel.hpp"
#include "ospar/scorer.hpp"

namespace ospar {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct Backpointer {
  int split = -1;  // -1 marks a leaf or an underivable entry
  int left = -1;
  int right = -1;
};

// t(i,j,l,o) with backpointers, same layout as the span chart.
struct OrderedTable {
  SpanScoreChart t;
  std::vector<Backpointer> bp;

  OrderedTable(int n, int labels) : t(n, labels), bp(t.values().size()) {}
};

// One cell of the order-sensitive recursion. Shared by the sequential and the
// batched decoder so both produce bit-identical tables.
void fill_ordered_cell(const SpanScoreChart& s, OrderedTable& tab, const Grammar& grammar, const RuleScoreChart& rules,
                       int i, int j) {
  const int L = s.num_labels();
  if (j - i == 1) {
    for (int l = 0; l < L; ++l)
      for (Order o : {Order::Left, Order::Right}) tab.t(i, j, l, o) = s(i, j, l, o);
    return;
  }
  for (int l = 0; l < L; ++l) {
    double best[kNumOrders] = {kNegInf, kNegInf};
    Backpointer arg[kNumOrders];
    const auto expansions = grammar.expansions(l);
    for (int k = i + 1; k < j; ++k)
      for (const auto& e : expansions) {
        const double base = tab.t(i, k, e.left, Order::Left) + tab.t(k, j, e.right, Order::Right);
        for (Order o : {Order::Left, Order::Right}) {
          const double v = base + rules.score(e.rule, o);
          if (v > best[order_index(o)]) {
            best[order_index(o)] = v;
            arg[order_index(o)] = {k, e.left, e.right};
          }
        }
      }
    for (Order o : {Order::Left, Order::Right}) {
      const std::size_t idx = s.index(i, j, l, o);
      if (best[order_index(o)] == kNegInf) {
        tab.t.values()[idx] = kNegInf;
        tab.bp[idx] = {};
      } else {
        tab.t.values()[idx] = s.values()[idx] + best[order_index(o)];
        tab.bp[idx] = arg[order_index(o)];
      }
    }
  }
}

void backtrace_ordered(const OrderedTable& tab, int i, int j, int l, Order o, IdTree& out) {
  const int idx = static_cast<int>(out.nodes.size());
  out.nodes.push_back({l, i, j, -1, -1});
  if (j - i == 1) return;
  const auto& bp = tab.bp[tab.t.index(i, j, l, o)];
  out.nodes[static_cast<std::size_t>(idx)].left = static_cast<int>(out.nodes.size());
  backtrace_ordered(tab, i, bp.split, bp.left, Order::Left, out);
  out.nodes[static_cast<std::size_t>(idx)].right = static_cast<int>(out.nodes.size());
  backtrace_ordered(tab, bp.split, j, bp.right, Order::Right, out);
}

DecodeResult finish_ordered(const OrderedTable& tab) {
  const int n = tab.t.length(), L = tab.t.num_labels();
  double best = kNegInf;
  int best_label = -1;
  for (int l = 0; l < L; ++l) {
    const double v = tab.t(0, n, l, Order::Left);
    if (v > best) {
      best = v;
      best_label = l;
    }
  }
  if (best_label < 0) throw NoDerivation(n);
  DecodeResult r;
  r.score = best;
  backtrace_ordered(tab, 0, n, best_label, Order::Left, r.tree);
  return r;
}

void check_chart(const SpanScoreChart& chart) {
  if (chart.length() < 1) throw std::invalid_argument("cannot decode an empty sentence");
  if (chart.num_labels() < 1) throw std::invalid_argument("cannot decode without labels");
}

struct SplitChoice {
  double score = kNegInf;
  int split = -1;
};

// Shared skeleton of the baseline and ablation decoders: per (cell, order) a
// best label chosen independently of the children, plus the best split.
class IndependentLabelTable {
 public:
  IndependentLabelTable(const SpanScoreChart& s, bool ordered) : s_(s), ordered_(ordered) {
    const std::size_t cells = s.num_spans() * kNumOrders;
    value_.assign(cells, kNegInf);
    label_.assign(cells, -1);
    split_.assign(s.num_spans(), -1);
  }

  void run() {
    const int n = s_.length();
    for (int w = 1; w <= n; ++w)
      for (int i = 0; i + w <= n; ++i) fill(i, i + w);
  }

  DecodeResult result() const {
    DecodeResult r;
    r.score = value(0, s_.length(), Order::Left);
    trace(0, s_.length(), Order::Left, r.tree);
    return r;
  }

 private:
  Order slice(Order o) const { return ordered_ ? o : Order::Left; }
  std::size_t slot(int i, int j, Order o) const { return s_.cell(i, j) * kNumOrders + order_index(o); }
  double value(int i, int j, Order o) const { return value_[slot(i, j, o)]; }

  void fill(int i, int j) {
    SplitChoice children;
    if (j - i == 1) {
      children.score = 0.0;
    } else {
      for (int k = i + 1; k < j; ++k) {
        const double v = value(i, k, Order::Left) + value(k, j, ordered_ ? Order::Right : Order::Left);
        if (v > children.score) children = {v, k};
      }
    }
    split_[s_.cell(i, j)] = children.split;
    for (Order o : {Order::Left, Order::Right}) {
      if (!ordered_ && o == Order::Right) {
        value_[slot(i, j, o)] = value_[slot(i, j, Order::Left)];
        label_[slot(i, j, o)] = label_[slot(i, j, Order::Left)];
        continue;
      }
      double best = kNegInf;
      int arg = -1;
      for (int l = 0; l < s_.num_labels(); ++l) {
        const double v = s_(i, j, l, slice(o));
        if (v > best) {
          best = v;
          arg = l;
        }
      }
      value_[slot(i, j, o)] = best + children.score;
      label_[slot(i, j, o)] = arg;
    }
  }

  void trace(int i, int j, Order o, IdTree& out) const {
    const int idx = static_cast<int>(out.nodes.size());
    out.nodes.push_back({label_[slot(i, j, o)], i, j, -1, -1});
    if (j - i == 1) return;
    const int k = split_[s_.cell(i, j)];
    out.nodes[static_cast<std::size_t>(idx)].left = static_cast<int>(out.nodes.size());
    trace(i, k, Order::Left, out);
    out.nodes[static_cast<std::size_t>(idx)].right = static_cast<int>(out.nodes.size());
    trace(k, j, Order::Right, out);
  }

  const SpanScoreChart& s_;
  bool ordered_;
  std::vector<double> value_;
  std::vector<int> label_;
  std::vector<int> split_;
};

}  // namespace

const char* objective_name(Objective objective) {
  switch (objective) {
    case Objective::Ordered: return "ordered";
    case Objective::Baseline: return "baseline";
    case Objective::Ablation: return "ablation";
  }
  return "?";
}

Objective parse_objective(const std::string& name) {
  if (name == "ordered") return Objective::Ordered;
  if (name == "baseline") return Objective::Baseline;
  if (name == "ablation") return Objective::Ablation;
  throw std::invalid_argument("unknown decoding mode: " + name);
}

NoDerivation::NoDerivation(int n)
    : std::runtime_error("no in-grammar derivation covers the sentence of length " + std::to_string(n)) {}

InstanceTooLarge::InstanceTooLarge(int n, int labels)
    : std::runtime_error("brute force limited to n <= " + std::to_string(kOracleMaxLength) + " and labels <= " +
                         std::to_string(kOracleMaxLabels) + ", got n = " + std::to_string(n) +
                         ", labels = " + std::to_string(labels)) {}

DecodeResult decode_ordered(const SpanScoreChart& chart, const Grammar& grammar, const RuleScoreChart& rules) {
  check_chart(chart);
  if (grammar.num_labels() != chart.num_labels()) throw std::invalid_argument("grammar and chart label sets differ");
  OrderedTable tab(chart.length(), chart.num_labels());
  const int n = chart.length();
  for (int w = 1; w <= n; ++w)
    for (int i = 0; i + w <= n; ++i) fill_ordered_cell(chart, tab, grammar, rules, i, i + w);
  return finish_ordered(tab);
}

DecodeResult decode_baseline(const SpanScoreChart& chart) {
  check_chart(chart);
  IndependentLabelTable tab(chart, false);
  tab.run();
  return tab.result();
}

DecodeResult decode_ablation(const SpanScoreChart& chart) {
  check_chart(chart);
  IndependentLabelTable tab(chart, true);
  tab.run();
  return tab.result();
}

SpanScoreChart augment_with_hamming(const SpanScoreChart& chart, const GoldSpans& gold) {
  SpanScoreChart out = chart;
  const int n = chart.length();
  for (int w = 1; w <= n; ++w)
    for (int i = 0; i + w <= n; ++i)
      for (int l = 0; l < chart.num_labels(); ++l) {
        if (gold.contains({i, i + w, l})) continue;
        out(i, i + w, l, Order::Left) += 1.0;
        out(i, i + w, l, Order::Right) += 1.0;
      }
  return out;
}

DecodeResult decode_loss_augmented(const SpanScoreChart& chart, const Grammar& grammar, const RuleScoreChart& rules,
                                   const IdTree& gold) {
  if (gold.length() != chart.length()) throw LengthMismatch(chart.length(), gold.length());
  return decode_ordered(augment_with_hamming(chart, node_spans(gold)), grammar, rules);
}

DecodeResult decode(Objective objective, const SpanScoreChart& chart, const Grammar* grammar,
                    const RuleScoreChart* rules) {
  switch (objective) {
    case Objective::Ordered:
      if (!grammar || !rules) throw std::invalid_argument("ordered decoding needs a grammar and rule scores");
      return decode_ordered(chart, *grammar, *rules);
    case Objective::Baseline: return decode_baseline(chart);
    case Objective::Ablation: return decode_ablation(chart);
  }
  throw std::invalid_argument("unknown objective");
}

std::vector<Order> node_orders(const IdTree& tree) {
  std::vector<Order> orders(tree.nodes.size(), Order::Left);
  for (const auto& n : tree.nodes)
    if (!n.is_leaf()) orders[static_cast<std::size_t>(n.right)] = Order::Right;
  return orders;
}

double tree_objective(const IdTree& tree, const SpanScoreChart& chart, Objective objective, const Grammar* grammar,
                      const RuleScoreChart* rules, const GoldSpans* gold) {
  if (tree.length() != chart.length()) throw LengthMismatch(tree.length(), chart.length());
  if (objective == Objective::Ordered && (!grammar || !rules))
    throw std::invalid_argument("ordered objective needs a grammar and rule scores");
  const auto orders = node_orders(tree);
  double total = 0.0;
  for (std::size_t m = 0; m < tree.nodes.size(); ++m) {
    const auto& n = tree.nodes[m];
    const Order o = objective == Objective::Baseline ? Order::Left : orders[m];
    total += chart.at(n.begin, n.end, n.label, o);
    if (gold && !gold->contains({n.begin, n.end, n.label})) total += 1.0;
    if (objective == Objective::Ordered && !n.is_leaf()) {
      const Rule rule{n.label, tree.nodes[static_cast<std::size_t>(n.left)].label,
                      tree.nodes[static_cast<std::size_t>(n.right)].label};
      total += rule_score(*rules, *grammar, rule, orders[m]);
    }
  }
  return total;
}

std::vector<BatchOutcome> decode_ordered_batched(std::span<const SpanScoreChart> charts, const Grammar& grammar,
                                                 const RuleScoreChart& rules, int threads, BatchStats* stats) {
  std::vector<BatchOutcome> out(charts.size());
  std::vector<std::optional<OrderedTable>> tables(charts.size());
  int max_n = 0;
  for (std::size_t s = 0; s < charts.size(); ++s) {
    const auto& c = charts[s];
    if (c.length() < 1 || c.num_labels() < 1) {
      out[s].error = "cannot decode an empty sentence";
      continue;
    }
    if (c.num_labels() != grammar.num_labels()) {
      out[s].error = "grammar and chart label sets differ";
      continue;
    }
    tables[s].emplace(c.length(), c.num_labels());
    max_n = std::max(max_n, c.length());
  }

  struct Work {
    std::size_t sentence;
    int begin;
  };
  std::vector<Work> work;
  int steps = 0;
  for (int w = 1; w <= max_n; ++w) {
    work.clear();
    for (std::size_t s = 0; s < charts.size(); ++s)
      if (tables[s] && charts[s].length() >= w)
        for (int i = 0; i + w <= charts[s].length(); ++i) work.push_back({s, i});
    parallel_for(threads, work.size(), [&](std::size_t k) {
      const auto& item = work[k];
      fill_ordered_cell(charts[item.sentence], *tables[item.sentence], grammar, rules, item.begin, item.begin + w);
    });
    ++steps;
  }
  if (stats) stats->width_steps = steps;

  parallel_for(threads, charts.size(), [&](std::size_t s) {
    if (!tables[s]) return;
    try {
      out[s].result = finish_ordered(*tables[s]);
    } catch (const std::exception& e) {
      out[s].error = e.what();
    }
  });
  return out;
}

std::vector<BatchOutcome> decode_batched(std::span<const std::vector<int>> sentences, const ScorerModel& model,
                                         const Grammar& grammar, const RuleScoreChart& rules, int threads,
                                         BatchStats* stats) {
  std::vector<SpanScoreChart> charts(sentences.size());
  std::vector<std::string> errors(sentences.size());
  parallel_for(threads, sentences.size(), [&](std::size_t s) {
    try {
      charts[s] = score_spans(model, sentences[s]);
    } catch (const std::exception& e) {
      errors[s] = e.what();
    }
  });
  auto out = decode_ordered_batched(charts, grammar, rules, threads, stats);
  for (std::size_t s = 0; s < out.size(); ++s)
    if (!errors[s].empty()) {
      out[s].result.reset();
      out[s].error = errors[s];
    }
  return out;
}

}  // namespace ospar
