#pragma once

#include <iosfwd>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ospar/treebank.hpp"

namespace ospar {

/// Bracket filtering rules, mirroring EVALB's default parameter file.
struct EvalParams {
  /// Brackets with these labels are not counted. The empty label covers
  /// unlabeled roots.
  std::set<std::string> deleted_labels{"", "TOP", "ROOT", "-NONE-"};
  /// Words with these tags are removed before spans are computed.
  std::set<std::string> deleted_tags{"-NONE-", ",", ":", "``", "''", "."};
  /// Labels compared as equal.
  std::vector<std::pair<std::string, std::string>> equivalent_labels{{"ADVP", "PRT"}};

  static EvalParams evalb_default() { return {}; }
  /// Plain labeled-span comparison: nothing deleted, no equivalences.
  static EvalParams plain() { return EvalParams{{""}, {}, {}}; }
};

struct EvalReport {
  long matched = 0;
  long predicted = 0;
  long gold = 0;

  double precision() const;  // percent
  double recall() const;
  double f1() const;
  std::string summary() const;  // "P=xx.xx R=xx.xx F1=xx.xx matched=.. pred=.. gold=.."

  EvalReport& operator+=(const EvalReport& other);
  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

class EvalMismatch : public std::runtime_error {
 public:
  EvalMismatch(long index, const std::string& detail);
  long index() const { return index_; }  // -1 when the corpus sizes differ

 private:
  long index_;
};

struct Bracket {
  int begin;
  int end;
  std::string label;
  friend auto operator<=>(const Bracket&, const Bracket&) = default;
};

/// Evaluation brackets of one tree after deletion and label equivalence.
std::multiset<Bracket> evalb_brackets(const Tree& tree, const EvalParams& params);

/// Brackets of one sentence pair, matched as multisets.
EvalReport score_pair(const Tree& pred, const Tree& gold, const EvalParams& params = {});

/// Micro-averaged corpus scores. `per_sentence`, when given, receives one
/// report per pair.
EvalReport score_trees(std::span<const Tree> pred, std::span<const Tree> gold, const EvalParams& params = {},
                       std::vector<EvalReport>* per_sentence = nullptr);

void write_per_sentence_tsv(std::ostream& out, std::span<const EvalReport> reports);

}  // namespace ospar
