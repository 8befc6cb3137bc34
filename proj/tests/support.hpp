#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ospar/decoder.hpp"
#include "ospar/parser.hpp"
#include "ospar/trainer.hpp"

namespace ospar::testing {

/// Path of a file under tests/fixtures or data/.
std::string fixture(const std::string& name);
std::string data_file(const std::string& name);

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;  // coordinates where the decoded tree changed under perturbation
};

/// |a - b| / max(|a|, |b|, floor); the floor keeps near-zero gradients from
/// turning rounding noise into large ratios.
double relative_error(double analytic, double numeric, double floor = 1e-6);

/// Tiny model for gradient checks: d = h = 8, five words, four labels.
ScorerModel tiny_model(std::uint64_t seed, int embed_dim = 8, int hidden_dim = 8);

/// Central differences of sum(G * score_spans) over every scorer parameter,
/// G a random output gradient, against backward().
GradCheck scorer_gradient_check(std::uint64_t seed, double step = 1e-4);

/// Central differences of the hinge loss of one sentence over every scorer
/// and rule parameter, against accumulate_gradient(). Coordinates whose
/// perturbation changes the augmented tree are skipped.
GradCheck hinge_gradient_check(std::uint64_t seed, Objective objective, double step = 1e-5);

/// A small parser and treebank for trainer tests.
struct ToyProblem {
  Treebank treebank;
  Parser parser;
};
ToyProblem toy_problem(std::uint64_t seed, Objective objective = Objective::Ordered, int embed_dim = 8,
                       int hidden_dim = 8);

/// Random chart with N(0,1) entries.
SpanScoreChart random_chart(Rng& rng, int n, int num_labels);

/// Grammar with every rule over `num_labels` labels, scores N(0,1).
Grammar full_grammar(int num_labels);
RuleScoreChart random_rules(Rng& rng, const Grammar& grammar);

}  // namespace ospar::testing
