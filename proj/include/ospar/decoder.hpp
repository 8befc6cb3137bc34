#pragma once

#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ospar/grammar.hpp"
#include "ospar/span_chart.hpp"
#include "ospar/treebank.hpp"

namespace ospar {

class ScorerModel;

/// Which tree objective a decoder maximizes.
///   Ordered  - s(i,j,l,o) per node at its own order plus g(G,o) per composition
///   Baseline - s(i,j,l) per node, read from the Left slice of the chart
///   Ablation - s(i,j,l,o) per node, no rule term
enum class Objective { Ordered, Baseline, Ablation };

const char* objective_name(Objective objective);
Objective parse_objective(const std::string& name);  // "ordered" | "baseline" | "ablation"

struct DecodeResult {
  IdTree tree;
  double score = 0.0;
};

class NoDerivation : public std::runtime_error {
 public:
  explicit NoDerivation(int n);
};

class InstanceTooLarge : public std::runtime_error {
 public:
  InstanceTooLarge(int n, int labels);
};

using GoldSpans = std::set<BasicLabeledSpan<int>>;

/// Order-sensitive CKY: t(i,j,l,o) = s(i,j,l,o) + max over k and rules
/// l -> l1 l2 of t(i,k,l1,L) + t(k,j,l2,R) + g(G,o); the root is read at L.
/// Out-of-grammar compositions are skipped. Ties go to the smallest split, then
/// the lexicographically smallest (l, l1, l2).
DecodeResult decode_ordered(const SpanScoreChart& chart, const Grammar& grammar, const RuleScoreChart& rules);

/// Span-based CKY on the Left slice: t(i,j) = max_l s(i,j,l) + max_k [t(i,k) + t(k,j)].
DecodeResult decode_baseline(const SpanScoreChart& chart);

/// Ordered span scores without the rule term:
/// t(i,j,o) = max_l s(i,j,l,o) + max_k [t(i,k,L) + t(k,j,R)].
DecodeResult decode_ablation(const SpanScoreChart& chart);

/// s'(i,j,l,o) = s(i,j,l,o) + [(i,j,l) not a gold node], both orders.
SpanScoreChart augment_with_hamming(const SpanScoreChart& chart, const GoldSpans& gold);

/// decode_ordered on the Hamming-augmented chart: max_T t(T) + Delta(T, gold).
DecodeResult decode_loss_augmented(const SpanScoreChart& chart, const Grammar& grammar, const RuleScoreChart& rules,
                                   const IdTree& gold);

/// Dispatch on objective; `grammar`/`rules` are required for Ordered.
DecodeResult decode(Objective objective, const SpanScoreChart& chart, const Grammar* grammar = nullptr,
                    const RuleScoreChart* rules = nullptr);

/// Direct bottom-up re-summation of a tree's objective. Out-of-grammar
/// compositions contribute the rule-chart floor. With `gold`, adds one per node
/// absent from gold.
double tree_objective(const IdTree& tree, const SpanScoreChart& chart, Objective objective,
                      const Grammar* grammar = nullptr, const RuleScoreChart* rules = nullptr,
                      const GoldSpans* gold = nullptr);

/// Order each node occupies: root and left children Left, right children Right.
std::vector<Order> node_orders(const IdTree& tree);

// --- brute force ----------------------------------------------------------

enum class OracleMode { Ordered, Baseline, Ablation, LossAugmented };
const char* oracle_mode_name(OracleMode mode);

inline constexpr int kOracleMaxLength = 8;
inline constexpr int kOracleMaxLabels = 6;

/// Exhaustive search over every binary bracketing and every labeling, scoring
/// each tree by direct summation. Reference for the chart decoders.
DecodeResult brute_force_best(const SpanScoreChart& chart, OracleMode mode, const Grammar* grammar = nullptr,
                              const RuleScoreChart* rules = nullptr, const IdTree* gold = nullptr);

// --- batched decoding -----------------------------------------------------

struct BatchStats {
  int width_steps = 0;  // outer-loop iterations; equals the longest sentence
};

struct BatchOutcome {
  std::optional<DecodeResult> result;
  std::string error;
  bool ok() const { return result.has_value(); }
};

/// decode_ordered over many charts, filling every cell of one width across all
/// sentences in a single parallel step. Results are bit-identical to
/// sequential decode_ordered for any thread count; per-sentence failures are
/// reported without aborting the batch.
std::vector<BatchOutcome> decode_ordered_batched(std::span<const SpanScoreChart> charts, const Grammar& grammar,
                                                 const RuleScoreChart& rules, int threads = 1,
                                                 BatchStats* stats = nullptr);

/// Scores each sentence with the model (in parallel) and decodes the batch.
std::vector<BatchOutcome> decode_batched(std::span<const std::vector<int>> sentences, const ScorerModel& model,
                                         const Grammar& grammar, const RuleScoreChart& rules, int threads = 1,
                                         BatchStats* stats = nullptr);

}  // namespace ospar
