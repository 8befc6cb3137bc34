#include "ospar/oracle_check.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>

#include <json.hpp>

namespace ospar {

namespace {

using nlohmann::json;

constexpr OracleMode kModes[] = {OracleMode::Ordered, OracleMode::Baseline, OracleMode::Ablation,
                                 OracleMode::LossAugmented};

void random_tree(Rng& rng, int i, int j, int num_labels, IdTree& out) {
  std::uniform_int_distribution<int> label(0, num_labels - 1);
  const int idx = static_cast<int>(out.nodes.size());
  out.nodes.push_back({label(rng), i, j, -1, -1});
  if (j - i == 1) return;
  const int k = std::uniform_int_distribution<int>(i + 1, j - 1)(rng);
  out.nodes[static_cast<std::size_t>(idx)].left = static_cast<int>(out.nodes.size());
  random_tree(rng, i, k, num_labels, out);
  out.nodes[static_cast<std::size_t>(idx)].right = static_cast<int>(out.nodes.size());
  random_tree(rng, k, j, num_labels, out);
}

std::vector<std::string> label_names(int n) {
  std::vector<std::string> names;
  for (int l = 0; l < n; ++l) names.push_back("L" + std::to_string(l));
  return names;
}

}  // namespace

OracleInstance random_instance(Rng& rng, int n, int num_labels) {
  OracleInstance inst;
  std::normal_distribution<double> normal(0.0, 1.0);
  inst.chart = SpanScoreChart(n, num_labels);
  for (auto& v : inst.chart.values()) v = normal(rng);

  // Half the instances use the full grammar, the rest a random subset.
  std::bernoulli_distribution full(0.5), keep(0.6);
  const bool dense = full(rng);
  std::vector<Rule> rules;
  for (int p = 0; p < num_labels; ++p)
    for (int l = 0; l < num_labels; ++l)
      for (int r = 0; r < num_labels; ++r)
        if (dense || keep(rng)) rules.push_back({p, l, r});
  random_tree(rng, 0, n, num_labels, inst.gold);
  // the gold tree must be derivable, as it is for grammars read off a treebank
  for (const auto& node : inst.gold.nodes)
    if (!node.is_leaf())
      rules.push_back({node.label, inst.gold.nodes[static_cast<std::size_t>(node.left)].label,
                       inst.gold.nodes[static_cast<std::size_t>(node.right)].label});
  inst.grammar = Grammar(Vocabulary(label_names(num_labels)), std::move(rules));
  inst.rules = RuleScoreChart(inst.grammar.size());
  for (auto& v : inst.rules.values()) v = normal(rng);
  return inst;
}

void write_instance(std::ostream& out, const OracleInstance& inst, OracleMode mode, int trial) {
  json rules = json::array();
  for (std::size_t r = 0; r < inst.grammar.rules().size(); ++r) {
    const auto& g = inst.grammar.rules()[r];
    rules.push_back({g.parent, g.left, g.right, inst.rules.score(static_cast<int>(r), Order::Left),
                     inst.rules.score(static_cast<int>(r), Order::Right)});
  }
  json gold = json::array();
  for (const auto& n : inst.gold.nodes) gold.push_back({n.label, n.begin, n.end, n.left, n.right});
  const json j{{"trial", trial},
               {"mode", oracle_mode_name(mode)},
               {"n", inst.chart.length()},
               {"labels", inst.chart.num_labels()},
               {"chart", std::vector<double>(inst.chart.values().begin(), inst.chart.values().end())},
               {"rules", rules},
               {"rule_floor", inst.rules.floor()},
               {"gold", gold}};
  out << j.dump(1) << '\n';
}

OracleInstance read_instance(std::istream& in, OracleMode* mode) {
  json j;
  in >> j;
  OracleInstance inst;
  const int n = j.at("n").get<int>(), L = j.at("labels").get<int>();
  inst.chart = SpanScoreChart(n, L);
  const auto values = j.at("chart").get<std::vector<double>>();
  if (values.size() != inst.chart.values().size()) throw std::runtime_error("replay chart has the wrong size");
  std::copy(values.begin(), values.end(), inst.chart.values().begin());
  std::vector<Rule> rules;
  std::vector<std::array<double, 2>> scores;
  for (const auto& r : j.at("rules")) {
    rules.push_back({r.at(0).get<int>(), r.at(1).get<int>(), r.at(2).get<int>()});
    scores.push_back({r.at(3).get<double>(), r.at(4).get<double>()});
  }
  inst.grammar = Grammar(Vocabulary(label_names(L)), rules);
  inst.rules = RuleScoreChart(inst.grammar.size(), j.value("rule_floor", RuleScoreChart::kDefaultFloor));
  for (std::size_t k = 0; k < rules.size(); ++k) {
    const int idx = inst.grammar.find(rules[k]);
    inst.rules.at(idx, Order::Left) = scores[k][0];
    inst.rules.at(idx, Order::Right) = scores[k][1];
  }
  for (const auto& g : j.at("gold"))
    inst.gold.nodes.push_back({g.at(0).get<int>(), g.at(1).get<int>(), g.at(2).get<int>(), g.at(3).get<int>(),
                               g.at(4).get<int>()});
  if (mode) {
    const auto name = j.at("mode").get<std::string>();
    bool found = false;
    for (OracleMode m : kModes)
      if (name == oracle_mode_name(m)) *mode = m, found = true;
    if (!found) throw std::runtime_error("unknown oracle mode in replay: " + name);
  }
  return inst;
}

OracleDecoders OracleDecoders::standard() {
  OracleDecoders d;
  d.ordered = [](const SpanScoreChart& c, const Grammar& g, const RuleScoreChart& r) { return decode_ordered(c, g, r); };
  d.baseline = [](const SpanScoreChart& c) { return decode_baseline(c); };
  d.ablation = [](const SpanScoreChart& c) { return decode_ablation(c); };
  d.loss_augmented = [](const SpanScoreChart& c, const Grammar& g, const RuleScoreChart& r, const IdTree& gold) {
    return decode_loss_augmented(c, g, r, gold);
  };
  return d;
}

double compare_with_oracle(const OracleInstance& inst, OracleMode mode, const OracleDecoders& decoders) {
  std::optional<double> fast, slow;
  try {
    switch (mode) {
      case OracleMode::Ordered: fast = decoders.ordered(inst.chart, inst.grammar, inst.rules).score; break;
      case OracleMode::Baseline: fast = decoders.baseline(inst.chart).score; break;
      case OracleMode::Ablation: fast = decoders.ablation(inst.chart).score; break;
      case OracleMode::LossAugmented:
        fast = decoders.loss_augmented(inst.chart, inst.grammar, inst.rules, inst.gold).score;
        break;
    }
  } catch (const NoDerivation&) {
  }
  try {
    slow = brute_force_best(inst.chart, mode, &inst.grammar, &inst.rules, &inst.gold).score;
  } catch (const NoDerivation&) {
  }
  if (!fast && !slow) return 0.0;
  if (!fast || !slow) return std::numeric_limits<double>::infinity();
  return std::abs(*fast - *slow);
}

OracleCheckReport run_oracle_check(const OracleCheckConfig& config, const OracleDecoders& decoders) {
  if (config.max_n > kOracleMaxLength || config.max_labels > kOracleMaxLabels)
    throw InstanceTooLarge(config.max_n, config.max_labels);
  if (config.min_n < 1 || config.min_n > config.max_n || config.max_labels < 1)
    throw std::invalid_argument("oracle check needs 1 <= min-n <= max-n and at least one label");
  OracleCheckReport report;
  Rng rng = make_rng(config.seed, "oracle");
  std::uniform_int_distribution<int> length(config.min_n, config.max_n), labels(1, config.max_labels);
  for (int trial = 0; trial < config.trials; ++trial) {
    const int n = length(rng), L = labels(rng);
    const auto inst = random_instance(rng, n, L);
    ++report.trials;
    for (OracleMode mode : kModes) {
      const double gap = compare_with_oracle(inst, mode, decoders);
      ++report.comparisons;
      report.max_gap = std::max(report.max_gap, gap);
      if (gap <= config.tolerance) continue;
      report.passed = false;
      report.failure = "trial " + std::to_string(trial) + " mode " + oracle_mode_name(mode) + " n=" +
                       std::to_string(n) + " labels=" + std::to_string(L) + ": score gap " + std::to_string(gap);
      if (!config.replay_path.empty()) {
        std::ofstream out(config.replay_path);
        write_instance(out, inst, mode, trial);
        report.failure += " (replay written to " + config.replay_path + ")";
      }
      return report;
    }
  }
  return report;
}

}  // namespace ospar
