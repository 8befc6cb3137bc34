#include "support.hpp"

#include <algorithm>
#include <cmath>

namespace ospar::testing {

std::string fixture(const std::string& name) { return std::string(OSPAR_SOURCE_DIR) + "/tests/fixtures/" + name; }
std::string data_file(const std::string& name) { return std::string(OSPAR_SOURCE_DIR) + "/data/" + name; }

double relative_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

namespace {

const char* kToyTrees[] = {
    "(S (NP (D the) (N dog)) (VP (V saw) (NP (D a) (N cat))))",
    "(S (NP (N dogs)) (VP (V ran)))",
    "(S (NP (D a) (N cat)) (VP (V saw) (NP (N dogs))))",
    "(S (NP (D the) (N cat)) (VP (V ran) (ADVP (R fast))))",
    "(S (NP (NP (D the) (N dog)) (PP (P near) (NP (D a) (N cat)))) (VP (V ran)))",
    "(S (NP (N dogs)) (VP (V saw) (NP (D the) (N cat)) (PP (P with) (NP (N dogs)))))",
    "(S (NP (D a) (N dog)) (VP (VP (V ran)) (ADVP (R fast))))",
};

}  // namespace

ScorerModel tiny_model(std::uint64_t seed, int embed_dim, int hidden_dim) {
  Rng rng = make_rng(seed, "init");
  ScorerConfig cfg;
  cfg.embed_dim = embed_dim;
  cfg.hidden_dim = hidden_dim;
  cfg.max_len = 8;
  const Vocabulary tokens(std::vector<std::string>{"a", "cat", "dog", "saw", "the", std::string(kUnknownToken), std::string(kStartToken), std::string(kStopToken)});
  const Vocabulary labels(std::vector<std::string>{"NP", "S", "VP", std::string(kDummyLabel)});
  ScorerModel m = ScorerModel::random(cfg, tokens, labels, rng);
  // non-trivial biases and gains so their gradients are exercised away from init values
  std::normal_distribution<double> small(0.0, 0.3);
  for (Order o : {Order::Left, Order::Right})
    for (auto s : {ScorerModel::kB1, ScorerModel::kLnGain, ScorerModel::kLnBias, ScorerModel::kB2})
      for (auto& x : m.tensor(ScorerModel::head_slot(o, s)).data) x += small(rng);
  for (auto& x : m.tensor(ScorerModel::kMixBias).data) x += small(rng);
  return m;
}

GradCheck scorer_gradient_check(std::uint64_t seed, double step) {
  ScorerModel model = tiny_model(seed);
  Rng rng = make_rng(seed, "gradcheck");
  const std::vector<int> words = model.token_ids(std::vector<std::string>{"the", "dog", "saw", "a", "cat"});
  ForwardCache cache;
  const SpanScoreChart chart = score_spans(model, words, &cache);
  const SpanScoreChart g = random_chart(rng, chart.length(), chart.num_labels());

  ParameterSet grads = model.parameters().zeros_like();
  backward(model, cache, g, grads);

  auto objective = [&](const ScorerModel& m) {
    const SpanScoreChart c = score_spans(m, words);
    double sum = 0.0;
    for (std::size_t k = 0; k < c.values().size(); ++k) sum += g.values()[k] * c.values()[k];
    return sum;
  };

  GradCheck out;
  ParameterSet& params = model.parameters();
  for (std::size_t k = 0; k < params.num_values(); ++k) {
    const double orig = params.value(k);
    params.value(k) = orig + step;
    const double up = objective(model);
    params.value(k) = orig - step;
    const double down = objective(model);
    params.value(k) = orig;
    const double numeric = (up - down) / (2 * step);
    out.max_rel_error = std::max(out.max_rel_error, relative_error(grads.value(k), numeric));
    ++out.checked;
  }
  return out;
}

ToyProblem toy_problem(std::uint64_t seed, Objective objective, int embed_dim, int hidden_dim) {
  std::vector<Tree> trees;
  for (const char* t : kToyTrees) trees.push_back(parse_bracketed(t));
  ToyProblem p;
  p.treebank = Treebank::from_trees(trees);
  TrainConfig cfg;
  cfg.seed = seed;
  cfg.objective = objective;
  cfg.scorer.embed_dim = embed_dim;
  cfg.scorer.hidden_dim = hidden_dim;
  cfg.scorer.max_len = 16;
  p.parser = init_parser(p.treebank, cfg);
  // rule scores on the scale of span scores, so they matter to the argmax
  Rng rng = make_rng(seed, "rules");
  std::normal_distribution<double> normal(0.0, 0.5);
  for (auto& x : p.parser.rules.values()) x = normal(rng);
  return p;
}

GradCheck hinge_gradient_check(std::uint64_t seed, Objective objective, double step) {
  ToyProblem toy = toy_problem(seed, objective);
  Parser& parser = toy.parser;
  const Example ex = make_example(parser, toy.treebank.trees[0]);

  Gradients grads = Gradients::zeros_for(parser);
  const HingeResult base = hinge_loss(parser, ex, objective);
  accumulate_gradient(parser, ex, objective, grads);

  GradCheck out;
  if (base.loss <= 0.0) return out;  // the loss is flat here; nothing to compare

  auto probe = [&](double& x, double analytic) {
    const double orig = x;
    x = orig + step;
    const HingeResult up = hinge_loss(parser, ex, objective);
    x = orig - step;
    const HingeResult down = hinge_loss(parser, ex, objective);
    x = orig;
    if (!(up.augmented.tree == base.augmented.tree) || !(down.augmented.tree == base.augmented.tree) ||
        up.loss <= 0.0 || down.loss <= 0.0) {
      ++out.skipped;
      return;
    }
    const double numeric = (up.loss - down.loss) / (2 * step);
    out.max_rel_error = std::max(out.max_rel_error, relative_error(analytic, numeric));
    ++out.checked;
  };

  ParameterSet& params = parser.model.parameters();
  for (std::size_t k = 0; k < params.num_values(); ++k) probe(params.value(k), grads.scorer.value(k));
  auto rules = parser.rules.values();
  for (std::size_t k = 0; k < rules.size(); ++k) probe(rules[k], grads.rules[k]);
  return out;
}

SpanScoreChart random_chart(Rng& rng, int n, int num_labels) {
  std::normal_distribution<double> normal(0.0, 1.0);
  SpanScoreChart c(n, num_labels);
  for (auto& v : c.values()) v = normal(rng);
  return c;
}

Grammar full_grammar(int num_labels) {
  std::vector<std::string> names;
  for (int l = 0; l < num_labels; ++l) names.push_back("L" + std::to_string(l));
  std::vector<Rule> rules;
  for (int p = 0; p < num_labels; ++p)
    for (int l = 0; l < num_labels; ++l)
      for (int r = 0; r < num_labels; ++r) rules.push_back({p, l, r});
  return Grammar(Vocabulary(names), rules);
}

RuleScoreChart random_rules(Rng& rng, const Grammar& grammar) {
  std::normal_distribution<double> normal(0.0, 1.0);
  RuleScoreChart r(grammar.size());
  for (auto& v : r.values()) v = normal(rng);
  return r;
}

}  // namespace ospar::testing
