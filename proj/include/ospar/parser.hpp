#pragma once

#include <iosfwd>
#include <string>

#include "ospar/decoder.hpp"
#include "ospar/grammar.hpp"
#include "ospar/scorer.hpp"
#include "ospar/treebank.hpp"

namespace ospar {

/// Everything needed to parse: the span scorer, the extracted grammar and its
/// rule scores, and the decoding objective the model was trained for.
struct Parser {
  ScorerModel model;
  Grammar grammar;
  RuleScoreChart rules;
  Objective objective = Objective::Ordered;

  const Vocabulary& labels() const { return model.labels(); }

  SpanScoreChart score(const Sentence& sentence) const;

  /// Decodes with `objective`; throws NoDerivation unless `fallback` is set,
  /// in which case a right-branching dummy tree is returned.
  DecodeResult decode(const Sentence& sentence, Objective objective, bool fallback = false) const;

  /// Decoded and de-binarized tree; an unlabeled root stands in for a dummy root.
  Tree parse(const Sentence& sentence, Objective objective, bool fallback = false, double* score = nullptr) const;
  Tree parse(const Sentence& sentence) const { return parse(sentence, objective); }

  friend bool operator==(const Parser&, const Parser&) = default;
};

/// ScoreHeads needed by an objective: the baseline reads only the Left head.
ScoreHeads heads_for(Objective objective);

/// Versioned JSON container: hyperparameters, vocabularies, grammar, and a list
/// of {name, shape, data} tensors stored row-major as doubles.
void save_parser(std::ostream& out, const Parser& parser);
void save_parser(const std::string& path, const Parser& parser);
Parser load_parser(std::istream& in);
Parser load_parser(const std::string& path);

inline constexpr const char* kCheckpointFormat = "ospar-parser";
inline constexpr int kCheckpointVersion = 1;

}  // namespace ospar
