#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ospar/evaluator.hpp"
#include "ospar/parser.hpp"

namespace ospar {

struct TrainConfig {
  int batch_size = 32;
  double learning_rate = 1e-2;
  double decay_factor = 0.5;
  int max_decay = 3;
  int decay_patience = 5;
  int epochs = 200;
  std::uint64_t seed = 0;
  int threads = 1;
  Objective objective = Objective::Ordered;
  ScorerConfig scorer;
  double rule_floor = RuleScoreChart::kDefaultFloor;
  /// Stop once an epoch sees zero loss on every sentence: no parameter moved,
  /// so further epochs would repeat it exactly.
  bool stop_at_zero_loss = true;

  void validate() const;  // throws std::invalid_argument
};

class GoldRuleMissing : public std::runtime_error {
 public:
  explicit GoldRuleMissing(const std::string& rule);
};

/// A training sentence resolved against the parser's vocabularies.
struct Example {
  Sentence sentence;
  std::vector<int> word_ids;
  IdTree gold;
};

Example make_example(const Parser& parser, const Tree& tree);
std::vector<Example> make_examples(const Parser& parser, std::span<const Tree> trees);

struct HingeResult {
  double loss = 0.0;        // max(augmented - gold_score, 0)
  DecodeResult augmented;   // argmax of t(T) + Delta(T, gold)
  double gold_score = 0.0;  // t(gold)
};

/// Throws GoldRuleMissing when an Ordered gold tree uses a rule outside the grammar.
HingeResult hinge_loss(const Parser& parser, const Example& example, Objective objective);

struct Gradients {
  ParameterSet scorer;
  std::vector<double> rules;  // same layout as RuleScoreChart::values()

  static Gradients zeros_for(const Parser& parser);
  void set_zero();
  void add_scaled(const Gradients& other, double scale);
};

/// Adds the hinge-loss subgradient of one sentence into `grads` and returns
/// its loss: +1 on the augmented tree's chart entries and rule scores, -1 on
/// the gold tree's, nothing when the loss is zero.
double accumulate_gradient(const Parser& parser, const Example& example, Objective objective, Gradients& grads);

struct EpochLog {
  int epoch = 0;
  double mean_loss = 0.0;
  EvalReport dev;
  double learning_rate = 0.0;
};

struct TrainState {
  Parser parser;
  Parser best;
  int epoch = 0;
  double best_f1 = 0.0;
  int decays_used = 0;
  int epochs_without_improvement = 0;
  double learning_rate = 0.0;
  std::vector<EpochLog> history;
  std::vector<std::string> skipped;  // sentences whose loss could not be computed
};

struct StepResult {
  double mean_loss = 0.0;
  int used = 0;  // sentences that contributed
};

/// One descent step on the mean hinge loss of `batch`. Per-sentence gradients
/// are computed in parallel and reduced in batch order.
StepResult step(std::span<const Example* const> batch, TrainState& state, const TrainConfig& config);

/// Dev-set evaluation: decode with `objective`, fall back to a right-branching
/// tree on NoDerivation, de-binarize and score against `gold`.
EvalReport evaluate(const Parser& parser, std::span<const Tree> gold, Objective objective, int threads = 1,
                    std::vector<Tree>* predictions = nullptr);

/// Initial model: vocabularies and grammar from `train`, parameters from the
/// "init" generator of config.seed.
Parser init_parser(const Treebank& train, const TrainConfig& config);

struct FitHooks {
  std::function<void(const EpochLog&)> on_epoch;
  std::function<void(const TrainState&)> on_improvement;
};

TrainState fit(const Treebank& train, const Treebank& dev, const TrainConfig& config, const FitHooks& hooks = {});

void write_epoch_tsv(std::ostream& out, const EpochLog& log);

}  // namespace ospar
