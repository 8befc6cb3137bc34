#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>

#include "ospar/decoder.hpp"

namespace ospar {

/// One random decoding problem: a chart, a grammar with rule scores and a gold
/// tree for the loss-augmented mode.
struct OracleInstance {
  SpanScoreChart chart;
  Grammar grammar;
  RuleScoreChart rules;
  IdTree gold;
};

OracleInstance random_instance(Rng& rng, int n, int num_labels);

void write_instance(std::ostream& out, const OracleInstance& instance, OracleMode mode, int trial);
OracleInstance read_instance(std::istream& in, OracleMode* mode = nullptr);

/// The decoders under test; replaceable so a corrupted decoder can be injected.
struct OracleDecoders {
  std::function<DecodeResult(const SpanScoreChart&, const Grammar&, const RuleScoreChart&)> ordered;
  std::function<DecodeResult(const SpanScoreChart&)> baseline;
  std::function<DecodeResult(const SpanScoreChart&)> ablation;
  std::function<DecodeResult(const SpanScoreChart&, const Grammar&, const RuleScoreChart&, const IdTree&)>
      loss_augmented;

  static OracleDecoders standard();
};

struct OracleCheckConfig {
  std::uint64_t seed = 0;
  int trials = 200;
  int min_n = 2;
  int max_n = 6;
  int max_labels = 4;
  double tolerance = 1e-9;
  std::string replay_path;  // where the first failing instance is written
};

struct OracleCheckReport {
  int trials = 0;
  int comparisons = 0;
  double max_gap = 0.0;
  bool passed = true;
  std::string failure;  // description of the first failure
};

/// Compares one mode of the decoders against brute force on an instance.
/// Returns the absolute score gap; both sides failing with NoDerivation counts
/// as agreement (gap 0), exactly one failing as an infinite gap.
double compare_with_oracle(const OracleInstance& instance, OracleMode mode, const OracleDecoders& decoders);

OracleCheckReport run_oracle_check(const OracleCheckConfig& config,
                                   const OracleDecoders& decoders = OracleDecoders::standard());

}  // namespace ospar
