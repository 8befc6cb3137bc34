#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "ospar/decoder.hpp"
#include "ospar/oracle_check.hpp"
#include "ospar/scorer.hpp"
#include "support.hpp"

using namespace ospar;
using ospar::testing::full_grammar;
using ospar::testing::random_chart;
using ospar::testing::random_rules;

namespace {

constexpr double kTol = 1e-9;

// Brute-force optima of the seeded instances below, frozen from brute_force_best.
constexpr double ORDERED_SEED42 = 9.4383976063986488;
constexpr double BASELINE_SEED7 = 9.596644409870116;
constexpr double ABLATION_SEED3 = 7.3539364359242345;
constexpr double AUGMENTED_SEED9 = 18.465977073872008;

const BinaryNode<int>& child(const IdTree& t, int idx) { return t.nodes[static_cast<std::size_t>(idx)]; }

SpanScoreChart collapse(const SpanScoreChart& c) {
  SpanScoreChart out = c;
  for (int i = 0; i < c.length(); ++i)
    for (int j = i + 1; j <= c.length(); ++j)
      for (int l = 0; l < c.num_labels(); ++l) out(i, j, l, Order::Right) = c(i, j, l, Order::Left);
  return out;
}

GoldSpans every_span(int n, int labels) {
  GoldSpans g;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j <= n; ++j)
      for (int l = 0; l < labels; ++l) g.insert({i, j, l});
  return g;
}

}  // namespace

TEST_CASE("decode_ordered: single token") {
  const Grammar g(Vocabulary({"A"}), {});
  SpanScoreChart c(1, 1);
  c(0, 1, 0, Order::Left) = 2.0;
  const auto r = decode_ordered(c, g, RuleScoreChart(0));
  REQUIRE(r.tree.nodes.size() == 1);
  CHECK(r.tree.root().label == 0);
  CHECK(r.score == 2.0);
}

TEST_CASE("decode_ordered: single derivation sums every term") {
  const Vocabulary v({"A", "B"});
  const Grammar g(v, {{0, 1, 1}});
  RuleScoreChart rules(g.size());
  rules.at(0, Order::Left) = 0.5;
  SpanScoreChart c(2, 2);
  c(0, 2, 0, Order::Left) = 1.0;
  c(0, 1, 1, Order::Left) = 2.0;
  c(1, 2, 1, Order::Right) = 3.0;
  const auto r = decode_ordered(c, g, rules);
  REQUIRE(r.tree.nodes.size() == 3);
  CHECK(r.tree.root().label == 0);
  CHECK(child(r.tree, r.tree.root().left).label == 1);
  CHECK(child(r.tree, r.tree.root().right).label == 1);
  CHECK(r.score == 6.5);
}

TEST_CASE("decode_ordered: no derivation") {
  const Grammar g(Vocabulary({"A", "B"}), {{0, 1, 1}});
  Rng rng = make_rng(1, "test");
  CHECK_THROWS_AS(decode_ordered(random_chart(rng, 3, 2), g, RuleScoreChart(g.size())), NoDerivation);
  CHECK_THROWS(decode_ordered(SpanScoreChart(0, 2), g, RuleScoreChart(g.size())));
}

TEST_CASE("decode_baseline small cases") {
  SpanScoreChart c(1, 3);
  c(0, 1, 0, Order::Left) = -1.0;
  c(0, 1, 1, Order::Left) = 4.0;
  c(0, 1, 2, Order::Left) = 3.0;
  c(0, 1, 2, Order::Right) = 100.0;  // ignored: the baseline reads one score per span
  const auto one = decode_baseline(c);
  CHECK(one.tree.root().label == 1);
  CHECK(one.score == 4.0);

  Rng rng = make_rng(2, "test");
  const SpanScoreChart c2 = random_chart(rng, 2, 3);
  auto best = [&](int i, int j) {
    double m = -std::numeric_limits<double>::infinity();
    for (int l = 0; l < 3; ++l) m = std::max(m, c2(i, j, l, Order::Left));
    return m;
  };
  CHECK(decode_baseline(c2).score == doctest::Approx(best(0, 2) + best(0, 1) + best(1, 2)).epsilon(1e-12));
}

TEST_CASE("decode_ablation small cases") {
  Rng rng = make_rng(3, "test");
  const SpanScoreChart c = random_chart(rng, 2, 3);
  auto best = [&](int i, int j, Order o) {
    double m = -std::numeric_limits<double>::infinity();
    for (int l = 0; l < 3; ++l) m = std::max(m, c(i, j, l, o));
    return m;
  };
  CHECK(decode_ablation(c).score ==
        doctest::Approx(best(0, 2, Order::Left) + best(0, 1, Order::Left) + best(1, 2, Order::Right)).epsilon(1e-12));

  // identical orders make the ablation and the baseline coincide
  for (int n : {1, 3, 6}) {
    const SpanScoreChart sym = collapse(random_chart(rng, n, 4));
    const auto a = decode_ablation(sym), b = decode_baseline(sym);
    CHECK(a.tree == b.tree);
    CHECK(a.score == b.score);
  }
}

TEST_CASE("seeded instances agree with brute force") {
  SUBCASE("ordered, n=4, 3 labels, seed 42") {
    Rng rng = make_rng(42, "test");
    const SpanScoreChart c = random_chart(rng, 4, 3);
    const Grammar g = full_grammar(3);
    const RuleScoreChart r = random_rules(rng, g);
    const auto fast = decode_ordered(c, g, r);
    const auto slow = brute_force_best(c, OracleMode::Ordered, &g, &r);
    CHECK(fast.tree == slow.tree);
    CHECK(std::abs(fast.score - slow.score) <= kTol);
    CHECK(fast.score == doctest::Approx(ORDERED_SEED42).epsilon(1e-12));
  }
  SUBCASE("baseline, n=5, seed 7") {
    Rng rng = make_rng(7, "test");
    const SpanScoreChart c = random_chart(rng, 5, 3);
    const auto fast = decode_baseline(c);
    const auto slow = brute_force_best(c, OracleMode::Baseline);
    CHECK(fast.tree == slow.tree);
    CHECK(std::abs(fast.score - slow.score) <= kTol);
    CHECK(fast.score == doctest::Approx(BASELINE_SEED7).epsilon(1e-12));
  }
  SUBCASE("ablation, n=4, seed 3") {
    Rng rng = make_rng(3, "test");
    const SpanScoreChart c = random_chart(rng, 4, 3);
    const auto fast = decode_ablation(c);
    const auto slow = brute_force_best(c, OracleMode::Ablation);
    CHECK(fast.tree == slow.tree);
    CHECK(std::abs(fast.score - slow.score) <= kTol);
    CHECK(fast.score == doctest::Approx(ABLATION_SEED3).epsilon(1e-12));
  }
  SUBCASE("loss augmented, n=4, seed 9") {
    Rng rng = make_rng(9, "test");
    const SpanScoreChart c = random_chart(rng, 4, 3);
    const Grammar g = full_grammar(3);
    const RuleScoreChart r = random_rules(rng, g);
    const IdTree gold = right_branching(4, 1);
    const auto fast = decode_loss_augmented(c, g, r, gold);
    const auto slow = brute_force_best(c, OracleMode::LossAugmented, &g, &r, &gold);
    CHECK(fast.tree == slow.tree);
    CHECK(std::abs(fast.score - slow.score) <= kTol);
    CHECK(fast.score == doctest::Approx(AUGMENTED_SEED9).epsilon(1e-12));
  }
}

TEST_CASE("brute force small cases") {
  SpanScoreChart c(1, 2);
  c(0, 1, 0, Order::Left) = 1.5;
  c(0, 1, 1, Order::Left) = 0.5;
  CHECK(brute_force_best(c, OracleMode::Baseline).score == 1.5);
  const Grammar none(Vocabulary({"A", "B"}), {});
  const RuleScoreChart nr(0);
  CHECK(brute_force_best(c, OracleMode::Ordered, &none, &nr).score == 1.5);

  const Grammar one(Vocabulary({"A", "B"}), {{0, 1, 1}});
  RuleScoreChart r1(one.size());
  r1.at(0, Order::Left) = 0.25;
  Rng rng = make_rng(4, "test");
  const SpanScoreChart c2 = random_chart(rng, 2, 2);
  const auto unique = brute_force_best(c2, OracleMode::Ordered, &one, &r1);
  CHECK(unique.tree.root().label == 0);
  CHECK(unique.score ==
        doctest::Approx(c2(0, 2, 0, Order::Left) + c2(0, 1, 1, Order::Left) + c2(1, 2, 1, Order::Right) + 0.25)
            .epsilon(1e-12));

  // n=3, 2 labels, full grammar: two bracketings with 2^5 labelings each
  const SpanScoreChart c3 = random_chart(rng, 3, 2);
  const Grammar g2 = full_grammar(2);
  const RuleScoreChart r2 = random_rules(rng, g2);
  double best = -std::numeric_limits<double>::infinity();
  auto s = [&](int i, int j, int l, Order o) { return c3(i, j, l, o); };
  auto g = [&](int p, int l, int r, Order o) { return r2.score(g2.find({p, l, r}), o); };
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y)
          for (int z = 0; z < 2; ++z) {
            // ((x y) z): root a over (0,3), b over (0,2) at L
            const double left = s(0, 3, a, Order::Left) + s(0, 2, b, Order::Left) + s(0, 1, x, Order::Left) +
                                s(1, 2, y, Order::Right) + s(2, 3, z, Order::Right) + g(a, b, z, Order::Left) +
                                g(b, x, y, Order::Left);
            // (x (y z)): b over (1,3) at R
            const double right = s(0, 3, a, Order::Left) + s(1, 3, b, Order::Right) + s(0, 1, x, Order::Left) +
                                 s(1, 2, y, Order::Left) + s(2, 3, z, Order::Right) + g(a, x, b, Order::Left) +
                                 g(b, y, z, Order::Right);
            best = std::max({best, left, right});
          }
  CHECK(brute_force_best(c3, OracleMode::Ordered, &g2, &r2).score == doctest::Approx(best).epsilon(1e-12));
  CHECK(decode_ordered(c3, g2, r2).score == doctest::Approx(best).epsilon(1e-12));

  CHECK_THROWS_AS(brute_force_best(SpanScoreChart(9, 2), OracleMode::Baseline), InstanceTooLarge);
}

TEST_CASE("loss-augmented decoding") {
  Rng rng = make_rng(5, "test");
  const Grammar g = full_grammar(3);
  const RuleScoreChart r = random_rules(rng, g);
  const SpanScoreChart c = random_chart(rng, 5, 3);

  // a gold set holding every span adds nothing
  CHECK(augment_with_hamming(c, every_span(5, 3)) == c);

  // gold equal to the plain argmax, with margins far above any Hamming count
  SpanScoreChart wide = c;
  for (auto& v : wide.values()) v *= 100.0;
  const auto plain = decode_ordered(wide, g, r);
  const auto aug = decode_loss_augmented(wide, g, r, plain.tree);
  CHECK(aug.tree == plain.tree);
  CHECK(aug.score == plain.score);

  // all-zero chart, n=2: the gold tree scores 0, any other labeling its Hamming count
  const Vocabulary v({"A", "B"});
  const Grammar g2(v, {{0, 1, 1}, {1, 1, 1}});
  const RuleScoreChart zero(g2.size(), RuleScoreChart::kDefaultFloor);
  IdTree gold;
  gold.nodes = {{0, 0, 2, 1, 2}, {1, 0, 1}, {1, 1, 2}};
  const auto z = decode_loss_augmented(SpanScoreChart(2, 2), g2, zero, gold);
  CHECK(z.score == 1.0);  // B over (0,2) is the one non-gold node any derivation can add
  const GoldSpans gs = node_spans(gold);
  CHECK(tree_objective(gold, SpanScoreChart(2, 2), Objective::Ordered, &g2, &zero, &gs) == 0.0);

  // dominance over the gold tree's plain score
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + trial % 5;
    const SpanScoreChart ct = random_chart(rng, n, 3);
    const IdTree gt = right_branching(n, trial % 3);
    const auto best = decode_loss_augmented(ct, g, r, gt);
    CHECK(best.score >= tree_objective(gt, ct, Objective::Ordered, &g, &r) - kTol);
  }
}

TEST_CASE("decoded scores equal direct re-summation") {
  Rng rng = make_rng(6, "test");
  const Grammar g = full_grammar(4);
  const RuleScoreChart r = random_rules(rng, g);
  for (int n = 1; n <= 12; ++n) {
    const SpanScoreChart c = random_chart(rng, n, 4);
    const auto o = decode_ordered(c, g, r);
    check_partition(o.tree);
    CHECK(std::abs(o.score - tree_objective(o.tree, c, Objective::Ordered, &g, &r)) <= kTol);
    const auto b = decode_baseline(c);
    CHECK(std::abs(b.score - tree_objective(b.tree, c, Objective::Baseline)) <= kTol);
    const auto a = decode_ablation(c);
    CHECK(std::abs(a.score - tree_objective(a.tree, c, Objective::Ablation)) <= kTol);
  }
}

TEST_CASE("monotonicity in the root cell") {
  Rng rng = make_rng(7, "test");
  const Grammar g = full_grammar(3);
  const RuleScoreChart r = random_rules(rng, g);
  for (int n : {1, 3, 6, 9}) {
    const SpanScoreChart c = random_chart(rng, n, 3);
    const auto before = decode_ordered(c, g, r);
    SpanScoreChart shifted = c;
    for (int l = 0; l < 3; ++l) shifted(0, n, l, Order::Left) += 2.5;
    const auto after = decode_ordered(shifted, g, r);
    CHECK(after.tree == before.tree);
    CHECK(after.score == doctest::Approx(before.score + 2.5).epsilon(1e-12));
  }
}

TEST_CASE("baseline argmax is invariant to uniform shifts") {
  Rng rng = make_rng(8, "test");
  for (int trial = 0; trial < 10; ++trial) {
    const SpanScoreChart c = random_chart(rng, 6, 4);
    const auto base = decode_baseline(c).tree;

    // the same constant on both orders of every label of every span
    SpanScoreChart shifted = c;
    for (auto& v : shifted.values()) v += 1.75;
    CHECK(decode_baseline(shifted).tree == base);

    // the Right slice is never read
    SpanScoreChart right = c;
    for (int i = 0; i < 6; ++i)
      for (int j = i + 1; j <= 6; ++j) right(i, j, trial % 4, Order::Right) += 10.0;
    CHECK(decode_baseline(right).tree == base);
  }
}

TEST_CASE("tie-breaking prefers the smallest split and smallest labels") {
  const Grammar g = full_grammar(2);
  const RuleScoreChart r(g.size());  // all rule scores zero
  const auto o = decode_ordered(SpanScoreChart(4, 2), g, r);
  const auto b = decode_baseline(SpanScoreChart(4, 2));
  const auto a = decode_ablation(SpanScoreChart(4, 2));
  for (const auto* t : {&o.tree, &b.tree, &a.tree}) {
    // every split at the smallest k, so the tree branches to the right
    CHECK(child(*t, t->root().left).end == 1);
    for (const auto& n : t->nodes) CHECK(n.label == 0);
  }
}

TEST_CASE("batched decoding is bit-identical to sequential decoding") {
  Rng rng = make_rng(10, "test");
  const Grammar g = full_grammar(3);
  const RuleScoreChart r = random_rules(rng, g);
  std::vector<SpanScoreChart> charts;
  for (int k = 0; k < 16; ++k) charts.push_back(random_chart(rng, 2 + k % 9, 3));

  for (int threads : {1, 8}) {
    BatchStats stats;
    const auto batched = decode_ordered_batched(charts, g, r, threads, &stats);
    CHECK(stats.width_steps == 10);
    REQUIRE(batched.size() == charts.size());
    for (std::size_t k = 0; k < charts.size(); ++k) {
      const auto seq = decode_ordered(charts[k], g, r);
      REQUIRE(batched[k].ok());
      CHECK(batched[k].result->tree == seq.tree);
      CHECK(batched[k].result->score == seq.score);
    }
  }
  const auto single = decode_ordered_batched(std::span(charts.data(), 1), g, r);
  CHECK(single[0].result->score == decode_ordered(charts[0], g, r).score);

  // a failing sentence does not disturb the others
  const Grammar sparse(Vocabulary({"A", "B"}), {{0, 1, 1}});
  std::vector<SpanScoreChart> mixed{random_chart(rng, 2, 2), random_chart(rng, 3, 2)};
  const auto out = decode_ordered_batched(mixed, sparse, RuleScoreChart(sparse.size()));
  CHECK(out[0].ok());
  CHECK_FALSE(out[1].ok());
}

TEST_CASE("decode_batched scores with the model") {
  const auto toy = ospar::testing::toy_problem(3);
  const Parser& p = toy.parser;
  std::vector<std::vector<int>> sentences;
  for (const auto& t : toy.treebank.trees) sentences.push_back(p.model.token_ids(sentence_of(t).words));
  const auto out1 = decode_batched(sentences, p.model, p.grammar, p.rules, 1);
  const auto out8 = decode_batched(sentences, p.model, p.grammar, p.rules, 8);
  for (std::size_t k = 0; k < sentences.size(); ++k) {
    const auto seq = decode_ordered(score_spans(p.model, sentences[k]), p.grammar, p.rules);
    REQUIRE(out1[k].ok());
    CHECK(out1[k].result->tree == seq.tree);
    CHECK(out1[k].result->score == seq.score);
    CHECK(out8[k].result->score == seq.score);
  }
}

TEST_CASE("oracle check harness") {
  OracleCheckConfig cfg;
  cfg.trials = 25;
  const auto ok = run_oracle_check(cfg);
  CHECK(ok.passed);
  CHECK(ok.comparisons == 100);

  cfg.trials = 0;
  CHECK(run_oracle_check(cfg).passed);

  // a decoder that is off by a little is caught and its instance saved
  auto broken = OracleDecoders::standard();
  broken.ablation = [](const SpanScoreChart& c) {
    auto r = decode_ablation(c);
    r.score += 1e-6;
    return r;
  };
  cfg.trials = 5;
  cfg.replay_path = (std::filesystem::temp_directory_path() / "oracle_replay_test.json").string();
  const auto bad = run_oracle_check(cfg, broken);
  CHECK_FALSE(bad.passed);
  std::ifstream replay(cfg.replay_path);
  REQUIRE(replay.good());
  OracleMode mode{};
  const auto inst = read_instance(replay, &mode);
  CHECK(mode == OracleMode::Ablation);
  CHECK(compare_with_oracle(inst, mode, OracleDecoders::standard()) <= kTol);
  CHECK(compare_with_oracle(inst, mode, broken) > kTol);
}
