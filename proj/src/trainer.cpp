#include "ospar/trainer.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "ospar/parallel.hpp"

namespace ospar {

void TrainConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
  };
  require(batch_size > 0, "batch size must be positive");
  require(learning_rate > 0.0, "learning rate must be positive");
  require(decay_factor > 0.0 && decay_factor < 1.0, "decay factor must lie in (0,1)");
  require(max_decay >= 0, "max decay must be non-negative");
  require(decay_patience > 0, "decay patience must be positive");
  require(epochs >= 0, "epochs must be non-negative");
  require(threads > 0, "threads must be positive");
  require(scorer.embed_dim > 0 && scorer.embed_dim % 2 == 0, "embedding dimension must be positive and even");
  require(scorer.hidden_dim > 0, "hidden dimension must be positive");
}

GoldRuleMissing::GoldRuleMissing(const std::string& rule)
    : std::runtime_error("gold tree uses a rule outside the grammar: " + rule) {}

Example make_example(const Parser& parser, const Tree& tree) {
  Example ex;
  ex.sentence = sentence_of(tree);
  ex.word_ids = parser.model.token_ids(ex.sentence.words);
  ex.gold = to_ids(binarize(tree), parser.labels());
  return ex;
}

std::vector<Example> make_examples(const Parser& parser, std::span<const Tree> trees) {
  std::vector<Example> out;
  out.reserve(trees.size());
  for (const auto& t : trees) out.push_back(make_example(parser, t));
  return out;
}

namespace {

void check_gold_rules(const Parser& parser, const IdTree& gold) {
  for (const auto& n : gold.nodes) {
    if (n.is_leaf()) continue;
    const Rule r{n.label, gold.nodes[static_cast<std::size_t>(n.left)].label,
                 gold.nodes[static_cast<std::size_t>(n.right)].label};
    if (!parser.grammar.contains(r)) {
      const auto& v = parser.labels();
      throw GoldRuleMissing(v.symbol(r.parent) + " -> " + v.symbol(r.left) + " " + v.symbol(r.right));
    }
  }
}

HingeResult hinge_on_chart(const Parser& parser, const Example& example, Objective objective,
                           const SpanScoreChart& chart) {
  if (objective == Objective::Ordered) check_gold_rules(parser, example.gold);
  HingeResult h;
  const auto gold = node_spans(example.gold);
  h.augmented = decode(objective, augment_with_hamming(chart, gold), &parser.grammar, &parser.rules);
  h.gold_score = tree_objective(example.gold, chart, objective, &parser.grammar, &parser.rules);
  // Identical trees have identical objectives; the two sums may still differ
  // in the last bit because they are accumulated in different orders.
  h.loss = node_spans(h.augmented.tree) == gold ? 0.0 : std::max(h.augmented.score - h.gold_score, 0.0);
  return h;
}

void add_tree(const IdTree& tree, Objective objective, double sign, SpanScoreChart& chart_grad,
              std::vector<double>& rule_grad, const Grammar& grammar) {
  const auto orders = node_orders(tree);
  for (std::size_t m = 0; m < tree.nodes.size(); ++m) {
    const auto& n = tree.nodes[m];
    const Order o = objective == Objective::Baseline ? Order::Left : orders[m];
    chart_grad(n.begin, n.end, n.label, o) += sign;
    if (objective != Objective::Ordered || n.is_leaf()) continue;
    const int r = grammar.find({n.label, tree.nodes[static_cast<std::size_t>(n.left)].label,
                                tree.nodes[static_cast<std::size_t>(n.right)].label});
    if (r >= 0) rule_grad[static_cast<std::size_t>(r) * kNumOrders + order_index(orders[m])] += sign;
  }
}

}  // namespace

HingeResult hinge_loss(const Parser& parser, const Example& example, Objective objective) {
  const auto chart = score_spans(parser.model, example.word_ids, nullptr, heads_for(objective));
  return hinge_on_chart(parser, example, objective, chart);
}

Gradients Gradients::zeros_for(const Parser& parser) {
  Gradients g;
  g.scorer = parser.model.parameters().zeros_like();
  g.rules.assign(parser.rules.values().size(), 0.0);
  return g;
}

void Gradients::set_zero() {
  scorer.set_zero();
  std::fill(rules.begin(), rules.end(), 0.0);
}

void Gradients::add_scaled(const Gradients& other, double scale) {
  scorer.add_scaled(other.scorer, scale);
  for (std::size_t k = 0; k < rules.size(); ++k) rules[k] += scale * other.rules[k];
}

double accumulate_gradient(const Parser& parser, const Example& example, Objective objective, Gradients& grads) {
  ForwardCache cache;
  const auto chart = score_spans(parser.model, example.word_ids, &cache, heads_for(objective));
  const auto h = hinge_on_chart(parser, example, objective, chart);
  if (h.loss <= 0.0) return 0.0;
  SpanScoreChart chart_grad(chart.length(), chart.num_labels());
  add_tree(h.augmented.tree, objective, +1.0, chart_grad, grads.rules, parser.grammar);
  add_tree(example.gold, objective, -1.0, chart_grad, grads.rules, parser.grammar);
  backward(parser.model, cache, chart_grad, grads.scorer);
  return h.loss;
}

StepResult step(std::span<const Example* const> batch, TrainState& state, const TrainConfig& config) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  const Parser& parser = state.parser;
  std::vector<Gradients> per(batch.size());
  std::vector<double> losses(batch.size(), 0.0);
  std::vector<std::string> errors(batch.size());
  parallel_for(config.threads, batch.size(), [&](std::size_t s) {
    per[s] = Gradients::zeros_for(parser);
    try {
      losses[s] = accumulate_gradient(parser, *batch[s], config.objective, per[s]);
    } catch (const std::exception& e) {
      errors[s] = e.what();
    }
  });

  StepResult result;
  Gradients total = Gradients::zeros_for(parser);
  double loss_sum = 0.0;
  bool any_loss = false;
  for (std::size_t s = 0; s < batch.size(); ++s) {
    if (!errors[s].empty()) {
      state.skipped.push_back(errors[s]);
      continue;
    }
    ++result.used;
    loss_sum += losses[s];
    if (losses[s] > 0.0) {
      any_loss = true;
      total.add_scaled(per[s], 1.0);
    }
  }
  if (result.used == 0) return result;
  result.mean_loss = loss_sum / result.used;
  if (!any_loss) return result;

  const double scale = -state.learning_rate / result.used;
  state.parser.model.parameters().add_scaled(total.scorer, scale);
  auto rv = state.parser.rules.values();
  for (std::size_t k = 0; k < rv.size(); ++k) rv[k] += scale * total.rules[k];
  return result;
}

EvalReport evaluate(const Parser& parser, std::span<const Tree> gold, Objective objective, int threads,
                    std::vector<Tree>* predictions) {
  std::vector<Tree> pred(gold.size());
  parallel_for(threads, gold.size(), [&](std::size_t s) {
    pred[s] = parser.parse(sentence_of(gold[s]), objective, true);
  });
  const auto report = score_trees(pred, gold);
  if (predictions) *predictions = std::move(pred);
  return report;
}

Parser init_parser(const Treebank& train, const TrainConfig& config) {
  Rng rng = make_rng(config.seed, "init");
  Parser p;
  p.objective = config.objective;
  p.model = ScorerModel::random(config.scorer, train.tokens, train.labels, rng);
  p.grammar = extract_grammar(train);
  p.rules = RuleScoreChart::random(p.grammar.size(), rng, config.rule_floor);
  return p;
}

TrainState fit(const Treebank& train, const Treebank& dev, const TrainConfig& config, const FitHooks& hooks) {
  config.validate();
  if (train.size() == 0) throw std::invalid_argument("training treebank is empty");
  TrainState state;
  state.parser = init_parser(train, config);
  state.learning_rate = config.learning_rate;

  const auto examples = make_examples(state.parser, train.trees);
  const EvalReport initial = evaluate(state.parser, dev.trees, config.objective, config.threads);
  state.best = state.parser;
  state.best_f1 = initial.f1();

  Rng shuffle = make_rng(config.seed, "shuffle");
  std::vector<const Example*> order(examples.size());
  for (std::size_t k = 0; k < examples.size(); ++k) order[k] = &examples[k];

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle);
    double loss_sum = 0.0;
    int used = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      const auto r = step(std::span<const Example* const>(order.data() + start, end - start), state, config);
      loss_sum += r.mean_loss * r.used;
      used += r.used;
    }
    state.epoch = epoch;
    EpochLog log;
    log.epoch = epoch;
    log.mean_loss = used ? loss_sum / used : 0.0;
    log.learning_rate = state.learning_rate;
    log.dev = evaluate(state.parser, dev.trees, config.objective, config.threads);
    state.history.push_back(log);
    if (hooks.on_epoch) hooks.on_epoch(log);

    const double f1 = log.dev.f1();
    if (f1 > state.best_f1) {
      state.best_f1 = f1;
      state.best = state.parser;
      state.epochs_without_improvement = 0;
      if (hooks.on_improvement) hooks.on_improvement(state);
    } else if (f1 >= 100.0) {
      state.epochs_without_improvement = 0;  // already maximal
    } else if (++state.epochs_without_improvement >= config.decay_patience) {
      if (state.decays_used >= config.max_decay) break;
      state.learning_rate *= config.decay_factor;
      ++state.decays_used;
      state.epochs_without_improvement = 0;
    }
    if (config.stop_at_zero_loss && used > 0 && loss_sum == 0.0) break;
  }
  return state;
}

void write_epoch_tsv(std::ostream& out, const EpochLog& log) {
  char buf[192];
  std::snprintf(buf, sizeof buf, "%d\t%.6f\t%.2f\t%.2f\t%.2f\t%.6g", log.epoch, log.mean_loss, log.dev.precision(),
                log.dev.recall(), log.dev.f1(), log.learning_rate);
  out << buf << '\n';
}

}  // namespace ospar
