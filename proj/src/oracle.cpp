// Exhaustive reference decoder. Deliberately shares no code with the chart
// decoders: it walks every bracketing and every labeling and sums scores
// node by node.

#include <limits>

#include "ospar/decoder.hpp"

namespace ospar {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct ShapeNode {
  int begin, end, left, right;
};
using Shape = std::vector<ShapeNode>;

std::vector<Shape> shapes_of(int i, int j) {
  if (j - i == 1) return {Shape{{i, j, -1, -1}}};
  std::vector<Shape> out;
  for (int k = i + 1; k < j; ++k) {
    const auto lefts = shapes_of(i, k);
    const auto rights = shapes_of(k, j);
    for (const auto& ls : lefts)
      for (const auto& rs : rights) {
        Shape s;
        s.reserve(1 + ls.size() + rs.size());
        const int lofs = 1, rofs = 1 + static_cast<int>(ls.size());
        s.push_back({i, j, lofs, rofs});
        for (auto n : ls) {
          if (n.left >= 0) n.left += lofs, n.right += lofs;
          s.push_back(n);
        }
        for (auto n : rs) {
          if (n.left >= 0) n.left += rofs, n.right += rofs;
          s.push_back(n);
        }
        out.push_back(std::move(s));
      }
  }
  return out;
}

class Search {
 public:
  Search(const SpanScoreChart& chart, OracleMode mode, const Grammar* grammar, const RuleScoreChart* rules,
         const IdTree* gold)
      : chart_(chart), mode_(mode), L_(chart.num_labels()) {
    if (gold) gold_ = node_spans(*gold);
    if (uses_rules()) {
      rule_.assign(static_cast<std::size_t>(L_ * L_ * L_ * kNumOrders), kNegInf);
      prefix_.assign(static_cast<std::size_t>(L_ * L_), false);
      for (std::size_t r = 0; r < grammar->rules().size(); ++r) {
        const auto& g = grammar->rules()[r];
        for (Order o : {Order::Left, Order::Right})
          rule_[rule_index(g.parent, g.left, g.right, o)] = rules->score(static_cast<int>(r), o);
        prefix_[static_cast<std::size_t>(g.parent * L_ + g.left)] = true;
      }
    }
  }

  void run_shape(const Shape& shape) {
    shape_ = &shape;
    const std::size_t m = shape.size();
    order_.assign(m, Order::Left);
    parent_.assign(m, -1);
    for (std::size_t k = 0; k < m; ++k)
      if (shape[k].left >= 0) {
        parent_[static_cast<std::size_t>(shape[k].left)] = static_cast<int>(k);
        parent_[static_cast<std::size_t>(shape[k].right)] = static_cast<int>(k);
        order_[static_cast<std::size_t>(shape[k].right)] = Order::Right;
      }
    // per-node, per-label contribution excluding rule terms
    node_score_.assign(m * static_cast<std::size_t>(L_), 0.0);
    for (std::size_t k = 0; k < m; ++k)
      for (int l = 0; l < L_; ++l) {
        const auto& n = shape[k];
        const Order o = mode_ == OracleMode::Baseline ? Order::Left : order_[k];
        double v = chart_(n.begin, n.end, l, o);
        if (mode_ == OracleMode::LossAugmented && !gold_.contains({n.begin, n.end, l})) v += 1.0;
        node_score_[k * static_cast<std::size_t>(L_) + static_cast<std::size_t>(l)] = v;
      }
    labels_.assign(m, -1);
    assign(0, 0.0);
  }

  bool found() const { return !best_labels_.empty(); }

  DecodeResult result() const {
    DecodeResult r;
    r.score = best_;
    for (std::size_t k = 0; k < best_shape_.size(); ++k) {
      const auto& n = best_shape_[k];
      r.tree.nodes.push_back({best_labels_[k], n.begin, n.end, n.left, n.right});
    }
    return r;
  }

 private:
  bool uses_rules() const { return mode_ == OracleMode::Ordered || mode_ == OracleMode::LossAugmented; }

  std::size_t rule_index(int p, int l, int r, Order o) const {
    return ((static_cast<std::size_t>(p) * L_ + static_cast<std::size_t>(l)) * L_ + static_cast<std::size_t>(r)) *
               kNumOrders +
           static_cast<std::size_t>(order_index(o));
  }

  void assign(std::size_t m, double partial) {
    const auto& shape = *shape_;
    if (m == shape.size()) {
      if (partial > best_) {
        best_ = partial;
        best_labels_ = labels_;
        best_shape_ = shape;
      }
      return;
    }
    const int parent = parent_[m];
    const bool right_child = parent >= 0 && order_[m] == Order::Right;
    const bool left_child = parent >= 0 && !right_child;
    for (int l = 0; l < L_; ++l) {
      double v = partial + node_score_[m * static_cast<std::size_t>(L_) + static_cast<std::size_t>(l)];
      if (uses_rules()) {
        const int pl = parent >= 0 ? labels_[static_cast<std::size_t>(parent)] : -1;
        if (left_child && !prefix_[static_cast<std::size_t>(pl * L_ + l)]) continue;
        if (right_child) {
          const int sibling = shape[static_cast<std::size_t>(parent)].left;
          const double g = rule_[rule_index(pl, labels_[static_cast<std::size_t>(sibling)], l,
                                            order_[static_cast<std::size_t>(parent)])];
          if (g == kNegInf) continue;
          v += g;
        }
      }
      labels_[m] = l;
      assign(m + 1, v);
    }
  }

  const SpanScoreChart& chart_;
  OracleMode mode_;
  int L_;
  GoldSpans gold_;
  std::vector<double> rule_;
  std::vector<bool> prefix_;

  const Shape* shape_ = nullptr;
  std::vector<Order> order_;
  std::vector<int> parent_;
  std::vector<double> node_score_;
  std::vector<int> labels_;

  double best_ = kNegInf;
  std::vector<int> best_labels_;
  Shape best_shape_;
};

}  // namespace

const char* oracle_mode_name(OracleMode mode) {
  switch (mode) {
    case OracleMode::Ordered: return "ordered";
    case OracleMode::Baseline: return "baseline";
    case OracleMode::Ablation: return "ablation";
    case OracleMode::LossAugmented: return "loss-augmented";
  }
  return "?";
}

DecodeResult brute_force_best(const SpanScoreChart& chart, OracleMode mode, const Grammar* grammar,
                              const RuleScoreChart* rules, const IdTree* gold) {
  const int n = chart.length(), L = chart.num_labels();
  if (n > kOracleMaxLength || L > kOracleMaxLabels) throw InstanceTooLarge(n, L);
  if (n < 1 || L < 1) throw std::invalid_argument("brute force needs a non-empty chart");
  if ((mode == OracleMode::Ordered || mode == OracleMode::LossAugmented) && (!grammar || !rules))
    throw std::invalid_argument("brute force ordered modes need a grammar and rule scores");
  if (mode == OracleMode::LossAugmented && !gold) throw std::invalid_argument("loss-augmented brute force needs gold");
  Search search(chart, mode, grammar, rules, gold);
  for (const auto& shape : shapes_of(0, n)) search.run_shape(shape);
  if (!search.found()) throw NoDerivation(n);
  return search.result();
}

}  // namespace ospar
