#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ospar/rng.hpp"
#include "ospar/treebank.hpp"
#include "ospar/vocab.hpp"

namespace ospar {

/// Order of a span as a child in a binarized tree. The root is read at Left.
enum class Order : int { Left = 0, Right = 1 };
inline constexpr int kNumOrders = 2;
inline constexpr int order_index(Order o) { return static_cast<int>(o); }

/// Binary composition parent -> left right, over label ids.
struct Rule {
  int parent = 0;
  int left = 0;
  int right = 0;

  friend auto operator<=>(const Rule&, const Rule&) = default;
};

/// The set of observed binary compositions with lookup indices. Rules are kept
/// sorted by (parent, left, right); label ids are lexicographic, so this is
/// lexicographic order on the label strings.
class Grammar {
 public:
  struct Expansion {
    int left;
    int right;
    int rule;  // index into rules()
  };

  Grammar() = default;
  Grammar(Vocabulary labels, std::vector<Rule> rules);

  const Vocabulary& labels() const { return labels_; }
  int num_labels() const { return labels_.size(); }
  const std::vector<Rule>& rules() const { return rules_; }
  std::size_t size() const { return rules_.size(); }
  bool empty() const { return rules_.empty(); }

  /// Index of `rule` in rules(), or -1.
  int find(const Rule& rule) const;
  bool contains(const Rule& rule) const { return find(rule) >= 0; }

  /// Expansions of `parent`, sorted by (left, right).
  std::span<const Expansion> expansions(int parent) const;
  /// Parents that compose (left, right), ascending.
  std::span<const int> parents(int left, int right) const;

  friend bool operator==(const Grammar& a, const Grammar& b) {
    return a.labels_ == b.labels_ && a.rules_ == b.rules_;
  }

 private:
  Vocabulary labels_;
  std::vector<Rule> rules_;
  std::vector<std::vector<Expansion>> by_parent_;
  std::map<std::pair<int, int>, std::vector<int>> by_children_;
};

/// Learnable g(G,o): two scores per rule, plus a constant floor returned for
/// rules outside the grammar. The floor is not a parameter.
class RuleScoreChart {
 public:
  static constexpr double kDefaultFloor = -1e6;

  RuleScoreChart() = default;
  explicit RuleScoreChart(std::size_t num_rules, double floor = kDefaultFloor);

  /// Uniform init in [-0.01, 0.01].
  static RuleScoreChart random(std::size_t num_rules, Rng& rng, double floor = kDefaultFloor);

  double score(int rule, Order o) const {
    return rule < 0 ? floor_ : values_[static_cast<std::size_t>(rule) * kNumOrders + order_index(o)];
  }
  double& at(int rule, Order o) { return values_.at(static_cast<std::size_t>(rule) * kNumOrders + order_index(o)); }

  std::size_t num_rules() const { return values_.size() / kNumOrders; }
  double floor() const { return floor_; }
  void set_floor(double floor) { floor_ = floor; }

  /// Row-major [rule][order].
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  friend bool operator==(const RuleScoreChart&, const RuleScoreChart&) = default;

 private:
  std::vector<double> values_;
  double floor_ = kDefaultFloor;
};

/// g(G,o) lookup by rule value: stored score, or the floor when unseen.
double rule_score(const RuleScoreChart& chart, const Grammar& grammar, const Rule& rule, Order o);

struct OrderCount {
  long left = 0;
  long right = 0;
  long total() const { return left + right; }
  friend bool operator==(const OrderCount&, const OrderCount&) = default;
};

/// How often each label occurs as a left and as a right child of a binary
/// composition.
struct OrderStats {
  std::map<std::string, OrderCount> counts;

  long compositions = 0;
  /// Rows sorted by total count descending, then label.
  std::vector<std::pair<std::string, OrderCount>> sorted() const;
  OrderCount at(const std::string& label) const;
};

Grammar extract_grammar(std::span<const BinaryTree> trees, const Vocabulary& labels);
Grammar extract_grammar(const Treebank& treebank);

OrderStats order_statistics(std::span<const BinaryTree> trees);

void write_grammar_tsv(std::ostream& out, const Grammar& grammar);
void write_stats_tsv(std::ostream& out, const OrderStats& stats);

}  // namespace ospar
