#include "ospar/grammar.hpp"

#include <algorithm>
#include <ostream>

namespace ospar {

namespace {
const std::vector<int> kNoParents;
}

Grammar::Grammar(Vocabulary labels, std::vector<Rule> rules) : labels_(std::move(labels)), rules_(std::move(rules)) {
  std::sort(rules_.begin(), rules_.end());
  rules_.erase(std::unique(rules_.begin(), rules_.end()), rules_.end());
  by_parent_.resize(static_cast<std::size_t>(labels_.size()));
  for (std::size_t r = 0; r < rules_.size(); ++r) {
    const auto& rule = rules_[r];
    if (rule.parent < 0 || rule.parent >= labels_.size() || rule.left < 0 || rule.left >= labels_.size() ||
        rule.right < 0 || rule.right >= labels_.size())
      throw std::out_of_range("rule label outside the label vocabulary");
    by_parent_[static_cast<std::size_t>(rule.parent)].push_back({rule.left, rule.right, static_cast<int>(r)});
    by_children_[{rule.left, rule.right}].push_back(rule.parent);
  }
}

int Grammar::find(const Rule& rule) const {
  auto it = std::lower_bound(rules_.begin(), rules_.end(), rule);
  return it != rules_.end() && *it == rule ? static_cast<int>(it - rules_.begin()) : -1;
}

std::span<const Grammar::Expansion> Grammar::expansions(int parent) const {
  if (parent < 0 || static_cast<std::size_t>(parent) >= by_parent_.size()) return {};
  return by_parent_[static_cast<std::size_t>(parent)];
}

std::span<const int> Grammar::parents(int left, int right) const {
  auto it = by_children_.find({left, right});
  return it == by_children_.end() ? std::span<const int>(kNoParents) : std::span<const int>(it->second);
}

RuleScoreChart::RuleScoreChart(std::size_t num_rules, double floor)
    : values_(num_rules * kNumOrders, 0.0), floor_(floor) {}

RuleScoreChart RuleScoreChart::random(std::size_t num_rules, Rng& rng, double floor) {
  RuleScoreChart chart(num_rules, floor);
  std::uniform_real_distribution<double> dist(-0.01, 0.01);
  for (auto& v : chart.values_) v = dist(rng);
  return chart;
}

double rule_score(const RuleScoreChart& chart, const Grammar& grammar, const Rule& rule, Order o) {
  return chart.score(grammar.find(rule), o);
}

std::vector<std::pair<std::string, OrderCount>> OrderStats::sorted() const {
  std::vector<std::pair<std::string, OrderCount>> rows(counts.begin(), counts.end());
  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return a.second.total() > b.second.total(); });
  return rows;
}

OrderCount OrderStats::at(const std::string& label) const {
  auto it = counts.find(label);
  return it == counts.end() ? OrderCount{} : it->second;
}

Grammar extract_grammar(std::span<const BinaryTree> trees, const Vocabulary& labels) {
  std::vector<Rule> rules;
  auto id = [&](const std::string& s) {
    const int i = labels.id(s);
    if (i < 0) throw TreebankError("label not in vocabulary: " + s);
    return i;
  };
  for (const auto& t : trees)
    for (const auto& n : t.nodes) {
      if (n.is_leaf()) continue;
      rules.push_back({id(n.label), id(t.nodes[static_cast<std::size_t>(n.left)].label),
                       id(t.nodes[static_cast<std::size_t>(n.right)].label)});
    }
  return Grammar(labels, std::move(rules));
}

Grammar extract_grammar(const Treebank& treebank) { return extract_grammar(treebank.binarized, treebank.labels); }

OrderStats order_statistics(std::span<const BinaryTree> trees) {
  OrderStats stats;
  for (const auto& t : trees)
    for (const auto& n : t.nodes) {
      if (n.is_leaf()) continue;
      ++stats.counts[t.nodes[static_cast<std::size_t>(n.left)].label].left;
      ++stats.counts[t.nodes[static_cast<std::size_t>(n.right)].label].right;
      ++stats.compositions;
    }
  return stats;
}

void write_grammar_tsv(std::ostream& out, const Grammar& grammar) {
  const auto& labels = grammar.labels();
  out << "parent\tleft\tright\n";
  for (const auto& r : grammar.rules())
    out << labels.symbol(r.parent) << '\t' << labels.symbol(r.left) << '\t' << labels.symbol(r.right) << '\n';
}

void write_stats_tsv(std::ostream& out, const OrderStats& stats) {
  out << "label\tL\tR\n";
  for (const auto& [label, c] : stats.sorted()) out << label << '\t' << c.left << '\t' << c.right << '\n';
}

}  // namespace ospar
