#include "ospar/evaluator.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>

namespace ospar {

namespace {

double percent(long num, long den) { return den == 0 ? 0.0 : 100.0 * static_cast<double>(num) / static_cast<double>(den); }

std::string canonical(const std::string& label, const EvalParams& params) {
  for (const auto& [a, b] : params.equivalent_labels)
    if (label == b) return a;
  return label;
}

// `cursor` counts kept words; brackets covering no kept word are dropped.
void collect(const Tree& t, const EvalParams& params, int& cursor, std::multiset<Bracket>& out) {
  if (t.is_preterminal()) {
    if (!params.deleted_tags.contains(t.label)) ++cursor;
    return;
  }
  const int begin = cursor;
  for (const auto& c : t.children) collect(c, params, cursor, out);
  if (cursor > begin && !params.deleted_labels.contains(t.label))
    out.insert({begin, cursor, canonical(t.label, params)});
}

}  // namespace

double EvalReport::precision() const { return percent(matched, predicted); }
double EvalReport::recall() const { return percent(matched, gold); }

double EvalReport::f1() const {
  const double p = precision(), r = recall();
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

std::string EvalReport::summary() const {
  char buf[160];
  std::snprintf(buf, sizeof buf, "P=%.2f R=%.2f F1=%.2f matched=%ld pred=%ld gold=%ld", precision(), recall(), f1(),
                matched, predicted, gold);
  return buf;
}

EvalReport& EvalReport::operator+=(const EvalReport& other) {
  matched += other.matched;
  predicted += other.predicted;
  gold += other.gold;
  return *this;
}

EvalMismatch::EvalMismatch(long index, const std::string& detail)
    : std::runtime_error(index < 0 ? detail : "sentence " + std::to_string(index) + ": " + detail), index_(index) {}

std::multiset<Bracket> evalb_brackets(const Tree& tree, const EvalParams& params) {
  std::multiset<Bracket> out;
  int cursor = 0;
  collect(tree, params, cursor, out);
  return out;
}

EvalReport score_pair(const Tree& pred, const Tree& gold, const EvalParams& params) {
  const auto p = evalb_brackets(pred, params);
  const auto g = evalb_brackets(gold, params);
  std::vector<Bracket> common;
  std::set_intersection(p.begin(), p.end(), g.begin(), g.end(), std::back_inserter(common));
  return EvalReport{static_cast<long>(common.size()), static_cast<long>(p.size()), static_cast<long>(g.size())};
}

EvalReport score_trees(std::span<const Tree> pred, std::span<const Tree> gold, const EvalParams& params,
                       std::vector<EvalReport>* per_sentence) {
  if (pred.size() != gold.size())
    throw EvalMismatch(-1, "corpus sizes differ: " + std::to_string(pred.size()) + " predicted vs " +
                               std::to_string(gold.size()) + " gold trees");
  EvalReport total;
  if (per_sentence) per_sentence->clear();
  for (std::size_t s = 0; s < pred.size(); ++s) {
    const int np = length_of(pred[s]), ng = length_of(gold[s]);
    if (np != ng)
      throw EvalMismatch(static_cast<long>(s),
                         "length mismatch: " + std::to_string(np) + " predicted vs " + std::to_string(ng) + " gold words");
    const EvalReport r = score_pair(pred[s], gold[s], params);
    total += r;
    if (per_sentence) per_sentence->push_back(r);
  }
  return total;
}

void write_per_sentence_tsv(std::ostream& out, std::span<const EvalReport> reports) {
  out << "sentence\tmatched\tpred\tgold\tP\tR\tF1\n";
  char buf[64];
  for (std::size_t s = 0; s < reports.size(); ++s) {
    const auto& r = reports[s];
    std::snprintf(buf, sizeof buf, "%.2f\t%.2f\t%.2f", r.precision(), r.recall(), r.f1());
    out << s << '\t' << r.matched << '\t' << r.predicted << '\t' << r.gold << '\t' << buf << '\n';
  }
}

}  // namespace ospar
