#pragma once

#include <cstddef>
#include <iosfwd>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "ospar/vocab.hpp"

namespace ospar {

/// N-ary constituency tree. A pre-terminal has no children; its label is the
/// POS tag and `word` holds the token. Internal nodes have at least one child.
struct Tree {
  std::string label;
  std::string word;
  std::vector<Tree> children;

  bool is_preterminal() const { return children.empty(); }

  static Tree preterminal(std::string tag, std::string word) { return Tree{std::move(tag), std::move(word), {}}; }
  static Tree node(std::string label, std::vector<Tree> children) {
    return Tree{std::move(label), {}, std::move(children)};
  }

  friend bool operator==(const Tree&, const Tree&) = default;
};

struct Sentence {
  std::vector<std::string> words;
  std::vector<std::string> tags;

  std::size_t size() const { return words.size(); }
};

template <typename Label>
struct BasicLabeledSpan {
  int begin = 0;  // inclusive
  int end = 0;    // exclusive
  Label label{};

  friend auto operator<=>(const BasicLabeledSpan&, const BasicLabeledSpan&) = default;
};

template <typename Label>
struct BinaryNode {
  Label label{};
  int begin = 0;
  int end = 0;
  int left = -1;  // node index, -1 for leaves
  int right = -1;

  bool is_leaf() const { return left < 0; }
  friend bool operator==(const BinaryNode&, const BinaryNode&) = default;
};

/// Binary tree stored as a flat node array in pre-order; the root is node 0.
/// Leaves span exactly one token; internal nodes have two children whose spans
/// are (begin,k) and (k,end).
template <typename Label>
struct BasicBinaryTree {
  std::vector<BinaryNode<Label>> nodes;

  const BinaryNode<Label>& root() const { return nodes.front(); }
  int length() const { return nodes.empty() ? 0 : nodes.front().end; }
  bool empty() const { return nodes.empty(); }

  friend bool operator==(const BasicBinaryTree&, const BasicBinaryTree&) = default;
};

using LabeledSpan = BasicLabeledSpan<std::string>;
using BinaryTree = BasicBinaryTree<std::string>;
using IdTree = BasicBinaryTree<int>;  // labels are ids into a label Vocabulary

// --- errors ---------------------------------------------------------------

class TreebankError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public TreebankError {
 public:
  enum class Kind { UnbalancedBrackets, EmptyConstituent, TrailingInput, UnexpectedToken };

  ParseError(Kind kind, std::size_t offset, const std::string& detail);

  Kind kind() const { return kind_; }
  std::size_t offset() const { return offset_; }

 private:
  Kind kind_;
  std::size_t offset_;
};

class UnknownDummyPlacement : public TreebankError {
 public:
  UnknownDummyPlacement() : TreebankError("dummy label at the root of a binary tree") {}
};

class LengthMismatch : public TreebankError {
 public:
  LengthMismatch(int pred, int gold);
};

// --- reading and writing --------------------------------------------------

/// Parses one bracketed tree. Whitespace-insensitive; the label of a node may be
/// empty, as in the PTB outer wrapper "( (S ...))".
Tree parse_bracketed(std::string_view text);

/// Strips functional tags and indices ("NP-SBJ-1" -> "NP", "NP=2" -> "NP").
/// Labels that start with '-' (-NONE-, -LRB-) are left untouched.
std::string strip_functional_tags(std::string_view label);

/// Load-time normalization: removes an empty/TOP/ROOT single-child wrapper and
/// strips functional tags from every label.
Tree normalize_tree(Tree tree);

/// Reads every tree from a stream. Both one-tree-per-line files and multi-line
/// s-expressions separated by blank lines are accepted; trees are delimited by
/// bracket balance. Errors carry the 1-based line of the offending tree.
std::vector<Tree> read_trees(std::istream& in, bool normalize = true);
std::vector<Tree> read_tree_file(const std::string& path, bool normalize = true);

/// EVALB-compatible single-line bracketed form.
std::string to_bracketed(const Tree& tree);
std::string escape_token(std::string_view token);

Sentence sentence_of(const Tree& tree);
int length_of(const Tree& tree);

// --- binarization ---------------------------------------------------------

std::string join_unary_chain(const std::vector<std::string>& chain);
std::vector<std::string> split_unary_chain(std::string_view label);

/// Left-branching binarization with unary collapse. Pre-terminals become
/// width-1 leaves labeled with the collapsed phrasal chain above them, or the
/// dummy label when no phrase sits directly over the word.
BinaryTree binarize(const Tree& tree);

/// Inverse of binarize. Dummy nodes are spliced out and collapsed labels
/// re-expanded. A dummy label on an internal root throws UnknownDummyPlacement
/// unless `lenient`, in which case the root becomes an unlabeled bracket.
Tree debinarize(const BinaryTree& tree, const Sentence& sentence, bool lenient = false);

/// Throws TreebankError unless every internal node's children partition its span.
template <typename Label>
void check_partition(const BasicBinaryTree<Label>& tree);

// --- spans ----------------------------------------------------------------

/// Labeled spans of every internal node with a non-empty label. Pre-terminals
/// are not spans.
std::multiset<LabeledSpan> spans_of(const Tree& tree);

/// One span per non-dummy node, collapsed labels reported as-is.
std::multiset<LabeledSpan> spans_of(const BinaryTree& tree);

/// Every node of the tree, dummy nodes included.
template <typename Label>
std::set<BasicLabeledSpan<Label>> node_spans(const BasicBinaryTree<Label>& tree) {
  std::set<BasicLabeledSpan<Label>> out;
  for (const auto& n : tree.nodes) out.insert({n.begin, n.end, n.label});
  return out;
}

/// Number of nodes of `pred` (dummy nodes included) whose labeled span is not a
/// node of `gold`.
template <typename Label>
int hamming(const BasicBinaryTree<Label>& pred, const BasicBinaryTree<Label>& gold) {
  if (pred.length() != gold.length()) throw LengthMismatch(pred.length(), gold.length());
  const auto gold_spans = node_spans(gold);
  int count = 0;
  for (const auto& n : pred.nodes)
    if (!gold_spans.contains({n.begin, n.end, n.label})) ++count;
  return count;
}

IdTree to_ids(const BinaryTree& tree, const Vocabulary& labels);  // throws on unknown labels
BinaryTree to_symbols(const IdTree& tree, const Vocabulary& labels);

/// Right-branching tree of dummy nodes over `n` tokens.
IdTree right_branching(int n, int dummy_label);

// --- treebank -------------------------------------------------------------

struct Treebank {
  std::vector<Tree> trees;
  std::vector<BinaryTree> binarized;
  Vocabulary labels;  // binarized labels plus the dummy symbol
  Vocabulary tokens;  // observed words plus <UNK>, <START>, <STOP>

  static Treebank from_trees(std::vector<Tree> trees);
  std::size_t size() const { return trees.size(); }
};

}  // namespace ospar
