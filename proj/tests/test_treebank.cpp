#include <doctest.h>

#include <sstream>

#include "ospar/treebank.hpp"

using namespace ospar;

namespace {

Tree parse(const char* s) { return parse_bracketed(s); }

std::multiset<LabeledSpan> spans(std::initializer_list<LabeledSpan> xs) { return {xs}; }

const char* kCorpus[] = {
    "(S (NP (DT the) (NN cat)) (VP (VBD sat)))",
    "(S (NP (DT a) (JJ big) (JJ red) (NN dog)) (VP (VBD saw) (NP (PRP it))) (. .))",
    "(S (S (NP (PRP I)) (VP (VBP run))) (CC and) (S (NP (PRP you)) (VP (VBP walk))))",
    "(X (A a))",
    "(S (NP (NP (DT the) (NN man)) (PP (IN in) (NP (DT the) (NN park)))) (VP (VBD left)))",
    "(FRAG (INTJ (UH oh)) (ADVP (RB well)) (. !))",
    "(S (SBAR (WHADVP (WRB when)) (S (VP (VBD done)))) (NP (PRP we)) (VP (VBD ate)))",
};

}  // namespace

TEST_CASE("parse_bracketed reads structure") {
  const Tree t = parse("(S (NP (DT the) (NN cat)) (VP (VBD sat)))");
  CHECK(t.label == "S");
  CHECK(t.children.size() == 2);
  CHECK(length_of(t) == 3);
  CHECK(sentence_of(t).words == std::vector<std::string>{"the", "cat", "sat"});
  CHECK(sentence_of(t).tags == std::vector<std::string>{"DT", "NN", "VBD"});

  const Tree x = parse("(X (A a))");
  CHECK(x.label == "X");
  REQUIRE(x.children.size() == 1);
  CHECK(x.children[0].is_preterminal());
  CHECK(x.children[0].word == "a");
}

TEST_CASE("parse_bracketed rejects malformed input") {
  try {
    parse("(S (NP (DT the)");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.kind() == ParseError::Kind::UnbalancedBrackets);
  }
  CHECK_THROWS_AS(parse("(S (NP the) x) extra"), ParseError);
  CHECK_THROWS_AS(parse("(S )"), ParseError);
  CHECK_THROWS_AS(parse(""), ParseError);
}

TEST_CASE("read_trees handles one-per-line and multi-line layouts") {
  std::istringstream in("(TOP (S (NP (DT the) (NN cat))\n   (VP (VBD sat))))\n\n( (S (NP-SBJ (PRP I)) (VP (VBP run))))\n");
  const auto trees = read_trees(in);
  REQUIRE(trees.size() == 2);
  CHECK(trees[0].label == "S");
  CHECK(trees[1].children[0].label == "NP");  // functional tag stripped, empty root unwrapped

  std::istringstream bad("(S (NP (DT the) (NN cat)))\n(S (NP x\n");
  try {
    read_trees(bad);
    FAIL("expected an error");
  } catch (const TreebankError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("functional tags are stripped") {
  CHECK(strip_functional_tags("NP-SBJ-1") == "NP");
  CHECK(strip_functional_tags("PP=2") == "PP");
  CHECK(strip_functional_tags("-NONE-") == "-NONE-");
  CHECK(strip_functional_tags("-LRB-") == "-LRB-");
}

TEST_CASE("bracketed output escapes brackets") {
  const Tree t = Tree::node("S", {Tree::preterminal("-LRB-", "("), Tree::preterminal("NN", "x")});
  CHECK(to_bracketed(t) == "(S (-LRB- -LRB-) (NN x))");
  CHECK(parse_bracketed(to_bracketed(t)).children[1] == t.children[1]);
}

TEST_CASE("binarize: left-branching with dummy labels") {
  const BinaryTree b = binarize(parse("(S (A a) (B b) (C c))"));
  REQUIRE(b.nodes.size() == 5);
  CHECK(b.root().label == "S");
  const auto& left = b.nodes[static_cast<std::size_t>(b.root().left)];
  CHECK(left.label == kDummyLabel);
  CHECK(left.begin == 0);
  CHECK(left.end == 2);
  CHECK(b.nodes[static_cast<std::size_t>(b.root().right)].begin == 2);
  check_partition(b);
}

TEST_CASE("binarize: unary chains collapse") {
  const BinaryTree b = binarize(parse("(S (NP (DT the)))"));
  REQUIRE(b.nodes.size() == 1);
  CHECK(b.root().label == "S|NP");
  CHECK(b.root().begin == 0);
  CHECK(b.root().end == 1);
  CHECK(split_unary_chain("S|NP") == std::vector<std::string>{"S", "NP"});
  CHECK(join_unary_chain({"S", "VP"}) == "S|VP");
}

TEST_CASE("binarize: already binary") {
  const BinaryTree b = binarize(parse("(S (NP (A x) (B y)) (VP (C z)))"));
  const auto& l = b.nodes[static_cast<std::size_t>(b.root().left)];
  const auto& r = b.nodes[static_cast<std::size_t>(b.root().right)];
  CHECK(l.label == "NP");
  CHECK((l.begin == 0 && l.end == 2));
  CHECK(r.label == "VP");
  CHECK((r.begin == 2 && r.end == 3));
}

TEST_CASE("debinarize inverts binarize") {
  const Tree t = parse("(S (A a) (B b) (C c))");
  CHECK(debinarize(binarize(t), sentence_of(t)) == t);
  const Tree u = parse("(S (NP (DT the)))");
  CHECK(debinarize(binarize(u), sentence_of(u)) == u);

  BinaryTree dummy_root = binarize(t);
  dummy_root.nodes[0].label = kDummyLabel;
  CHECK_THROWS_AS(debinarize(dummy_root, sentence_of(t)), UnknownDummyPlacement);
}

TEST_CASE("round trip and partition over a corpus") {
  for (const char* s : kCorpus) {
    CAPTURE(s);
    const Tree t = parse(s);
    const BinaryTree b = binarize(t);
    check_partition(b);
    CHECK(debinarize(b, sentence_of(t)) == t);
    CHECK(binarize(debinarize(b, sentence_of(t))) == b);
  }
}

TEST_CASE("spans of a binarized tree match the original after expanding chains") {
  for (const char* s : kCorpus) {
    CAPTURE(s);
    const Tree t = parse(s);
    std::multiset<LabeledSpan> expanded;
    for (const auto& sp : spans_of(binarize(t)))
      for (const auto& l : split_unary_chain(sp.label)) expanded.insert({sp.begin, sp.end, l});
    CHECK(expanded == spans_of(t));
  }
}

TEST_CASE("spans_of") {
  CHECK(spans_of(parse("(S (NP (A x) (B y)) (VP (C z)))")) ==
        spans({{0, 3, "S"}, {0, 2, "NP"}, {2, 3, "VP"}}));
  CHECK(spans_of(Tree::preterminal("DT", "the")).empty());  // POS tags are not spans
  CHECK(spans_of(binarize(parse("(S (A a) (B b) (C c))"))) == spans({{0, 3, "S"}}));
}

TEST_CASE("hamming") {
  const BinaryTree gold = binarize(parse("(S (NP (A w) (B x)) (VP (C y) (D z)))"));
  CHECK(hamming(gold, gold) == 0);

  BinaryTree relabeled = gold;
  relabeled.nodes[1].label = "PP";
  CHECK(hamming(relabeled, gold) == 1);

  const BinaryTree pred = binarize(parse("(S (NP (A w)) (VP (X (B x) (C y)) (D z)))"));
  const BinaryTree g2 = binarize(parse("(S (NP (A w)) (VP (B x) (Z (C y) (D z))))"));
  // pred nodes: S(0,4) NP(0,1) VP(1,4) X(1,3) and leaves (1,2) (2,3) (3,4);
  // gold has all of them except X(1,3)
  CHECK(hamming(pred, g2) == 1);
  CHECK(hamming(pred, g2) <= static_cast<int>(pred.nodes.size()));

  CHECK_THROWS_AS(hamming(pred, binarize(parse("(S (A a) (B b))"))), LengthMismatch);
}

TEST_CASE("hamming on hand-counted span sets") {
  // pred (0,3,S) -> (0,2,X)[(0,1,a) (1,2,b)] (2,3,c): five spans.
  // gold (0,3,S) -> (0,1,a) (1,3,Y)[(1,2,b) (2,3,d)] shares S, a and b.
  IdTree pred, gold;
  pred.nodes = {{0, 0, 3, 1, 4}, {1, 0, 2, 2, 3}, {2, 0, 1}, {3, 1, 2}, {4, 2, 3}};
  gold.nodes = {{0, 0, 3, 1, 2}, {2, 0, 1}, {5, 1, 3, 3, 4}, {3, 1, 2}, {6, 2, 3}};
  CHECK(hamming(pred, gold) == 2);
  CHECK(hamming(gold, pred) == 2);

  // 4 tokens: pred S(0,4) -> A(0,2)[a b] B(2,4)[c d]; gold S(0,4) -> C(0,3)[A(0,2)[a b] e(2,3)] d(3,4)
  IdTree p4, g4;
  p4.nodes = {{0, 0, 4, 1, 4}, {1, 0, 2, 2, 3}, {3, 0, 1}, {3, 1, 2}, {2, 2, 4, 5, 6}, {3, 2, 3}, {3, 3, 4}};
  g4.nodes = {{0, 0, 4, 1, 6}, {4, 0, 3, 2, 5}, {1, 0, 2, 3, 4}, {3, 0, 1}, {3, 1, 2}, {5, 2, 3}, {3, 3, 4}};
  check_partition(p4);
  check_partition(g4);
  CHECK(hamming(p4, g4) == 2);  // B(2,4) and (2,3) with label 3
}

TEST_CASE("to_ids and right_branching") {
  const Treebank tb = Treebank::from_trees({parse("(S (NP (A x) (B y)) (VP (C z)))")});
  CHECK(tb.labels.contains(kDummyLabel));
  CHECK(tb.tokens.contains(kUnknownToken));
  const IdTree ids = to_ids(tb.binarized[0], tb.labels);
  CHECK(to_symbols(ids, tb.labels) == tb.binarized[0]);
  CHECK_THROWS(to_ids(binarize(parse("(Q (A x))")), tb.labels));

  const IdTree rb = right_branching(4, 0);
  CHECK(rb.nodes.size() == 7);
  check_partition(rb);
  CHECK(rb.nodes[static_cast<std::size_t>(rb.root().right)].begin == 1);
}
