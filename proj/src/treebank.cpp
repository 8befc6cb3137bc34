#include "ospar/treebank.hpp"

#include <cctype>
#include <fstream>
#include <functional>
#include <sstream>

namespace ospar {

namespace {

const char* kind_name(ParseError::Kind kind) {
  switch (kind) {
    case ParseError::Kind::UnbalancedBrackets: return "unbalanced brackets";
    case ParseError::Kind::EmptyConstituent: return "empty constituent";
    case ParseError::Kind::TrailingInput: return "trailing input";
    case ParseError::Kind::UnexpectedToken: return "unexpected token";
  }
  return "parse error";
}

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

class BracketReader {
 public:
  explicit BracketReader(std::string_view text) : text_(text) {}

  Tree read_root() {
    skip_space();
    if (at_end()) fail(ParseError::Kind::UnexpectedToken, "empty input");
    if (peek() != '(') fail(ParseError::Kind::UnexpectedToken, "expected '('");
    Tree tree = read_node();
    skip_space();
    if (!at_end()) fail(ParseError::Kind::TrailingInput, "input continues after the tree");
    return tree;
  }

 private:
  Tree read_node() {
    const std::size_t open = pos_;
    ++pos_;  // '('
    skip_space();
    std::string label;
    if (!at_end() && peek() != '(' && peek() != ')') label = read_atom();
    skip_space();
    if (at_end()) fail(ParseError::Kind::UnbalancedBrackets, "missing ')'");
    if (peek() == ')') {
      pos_ = open;
      fail(ParseError::Kind::EmptyConstituent, "constituent has no children");
    }
    if (peek() != '(') {
      std::string word = read_atom();
      skip_space();
      if (at_end()) fail(ParseError::Kind::UnbalancedBrackets, "missing ')'");
      if (peek() != ')') fail(ParseError::Kind::UnexpectedToken, "pre-terminal holds more than one token");
      ++pos_;
      if (label.empty()) {
        pos_ = open;
        fail(ParseError::Kind::EmptyConstituent, "pre-terminal without a tag");
      }
      return Tree::preterminal(std::move(label), std::move(word));
    }
    std::vector<Tree> children;
    while (true) {
      skip_space();
      if (at_end()) fail(ParseError::Kind::UnbalancedBrackets, "missing ')'");
      if (peek() == ')') break;
      if (peek() != '(') fail(ParseError::Kind::UnexpectedToken, "bare token among constituents");
      children.push_back(read_node());
    }
    ++pos_;
    return Tree::node(std::move(label), std::move(children));
  }

  std::string read_atom() {
    const std::size_t start = pos_;
    while (!at_end() && !is_space(peek()) && peek() != '(' && peek() != ')') ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  void skip_space() {
    while (!at_end() && is_space(peek())) ++pos_;
  }

  [[noreturn]] void fail(ParseError::Kind kind, const char* detail) const {
    throw ParseError(kind, pos_, detail);
  }

  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }

  std::string_view text_;
  std::size_t pos_ = 0;
};

void append_bracketed(const Tree& t, std::string& out) {
  out += '(';
  out += t.label;
  if (t.is_preterminal()) {
    out += ' ';
    out += escape_token(t.word);
  } else {
    for (const auto& c : t.children) {
      out += ' ';
      append_bracketed(c, out);
    }
  }
  out += ')';
}

void collect_leaves(const Tree& t, Sentence& s) {
  if (t.is_preterminal()) {
    s.words.push_back(t.word);
    s.tags.push_back(t.label);
    return;
  }
  for (const auto& c : t.children) collect_leaves(c, s);
}

void strip_labels(Tree& t) {
  t.label = strip_functional_tags(t.label);
  for (auto& c : t.children) strip_labels(c);
}

// Emits nodes for a constituent in pre-order; returns nothing, appends to `out`.
class Binarizer {
 public:
  explicit Binarizer(BinaryTree& out) : out_(out) {}

  void emit(const Tree& t) {
    std::vector<std::string> chain;
    const Tree* node = &t;
    while (!node->is_preterminal() && node->children.size() == 1) {
      chain.push_back(node->label);
      node = &node->children.front();
    }
    if (node->is_preterminal()) {
      const int idx = push(chain.empty() ? std::string(kDummyLabel) : join_unary_chain(chain));
      out_.nodes[idx].end = cursor_ + 1;
      ++cursor_;
      return;
    }
    chain.push_back(node->label);
    emit_group(node->children, node->children.size(), join_unary_chain(chain));
  }

 private:
  // Left-branching: the first `count` children under `label`, the leftmost pair
  // combined first.
  void emit_group(const std::vector<Tree>& children, std::size_t count, std::string label) {
    if (count == 1) {
      emit(children.front());
      return;
    }
    const int idx = push(std::move(label));
    out_.nodes[idx].left = static_cast<int>(out_.nodes.size());
    emit_group(children, count - 1, std::string(kDummyLabel));
    out_.nodes[idx].right = static_cast<int>(out_.nodes.size());
    emit(children[count - 1]);
    out_.nodes[idx].end = cursor_;
  }

  int push(std::string label) {
    out_.nodes.push_back({std::move(label), cursor_, cursor_, -1, -1});
    return static_cast<int>(out_.nodes.size()) - 1;
  }

  BinaryTree& out_;
  int cursor_ = 0;
};

Tree wrap_chain(const std::vector<std::string>& chain, std::vector<Tree> children) {
  Tree t = Tree::node(chain.back(), std::move(children));
  for (auto it = chain.rbegin() + 1; it != chain.rend(); ++it) t = Tree::node(*it, {std::move(t)});
  return t;
}

void debinarize_into(const BinaryTree& bt, int idx, const Sentence& s, std::vector<Tree>& out) {
  const auto& n = bt.nodes[static_cast<std::size_t>(idx)];
  const bool dummy = n.label == kDummyLabel;
  std::vector<Tree> kids;
  if (n.is_leaf()) {
    if (n.end - n.begin != 1) throw TreebankError("binary tree leaf spans more than one token");
    if (n.begin < 0 || static_cast<std::size_t>(n.begin) >= s.size())
      throw TreebankError("binary tree leaf outside the sentence");
    kids.push_back(Tree::preterminal(s.tags[static_cast<std::size_t>(n.begin)],
                                     s.words[static_cast<std::size_t>(n.begin)]));
  } else {
    debinarize_into(bt, n.left, s, kids);
    debinarize_into(bt, n.right, s, kids);
  }
  if (dummy) {
    for (auto& k : kids) out.push_back(std::move(k));
    return;
  }
  out.push_back(wrap_chain(split_unary_chain(n.label), std::move(kids)));
}

void tree_spans(const Tree& t, int& cursor, std::multiset<LabeledSpan>& out) {
  if (t.is_preterminal()) {
    ++cursor;
    return;
  }
  const int begin = cursor;
  for (const auto& c : t.children) tree_spans(c, cursor, out);
  if (!t.label.empty()) out.insert({begin, cursor, t.label});
}

}  // namespace

ParseError::ParseError(Kind kind, std::size_t offset, const std::string& detail)
    : TreebankError(std::string(kind_name(kind)) + " at byte " + std::to_string(offset) + ": " + detail),
      kind_(kind),
      offset_(offset) {}

LengthMismatch::LengthMismatch(int pred, int gold)
    : TreebankError("sentence length mismatch: " + std::to_string(pred) + " vs " + std::to_string(gold)) {}

Tree parse_bracketed(std::string_view text) { return BracketReader(text).read_root(); }

std::string strip_functional_tags(std::string_view label) {
  if (label.empty() || label.front() == '-') return std::string(label);
  const auto cut = label.find_first_of("-=");
  return std::string(label.substr(0, cut));
}

Tree normalize_tree(Tree tree) {
  while (!tree.is_preterminal() && tree.children.size() == 1 &&
         (tree.label.empty() || tree.label == "TOP" || tree.label == "ROOT")) {
    Tree inner = std::move(tree.children.front());
    tree = std::move(inner);
  }
  strip_labels(tree);
  return tree;
}

std::vector<Tree> read_trees(std::istream& in, bool normalize) {
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<Tree> trees;
  std::size_t pos = 0;
  int line = 1;
  auto advance_to = [&](std::size_t target) {
    for (; pos < target; ++pos)
      if (text[pos] == '\n') ++line;
  };
  while (true) {
    std::size_t start = pos;
    while (start < text.size() && is_space(text[start])) ++start;
    advance_to(start);
    if (start >= text.size()) break;
    const int tree_line = line;
    if (text[start] != '(')
      throw TreebankError("line " + std::to_string(tree_line) + ": expected '(' to start a tree");
    int depth = 0;
    std::size_t end = start;
    for (; end < text.size(); ++end) {
      if (text[end] == '(') ++depth;
      else if (text[end] == ')' && --depth == 0) break;
    }
    if (end >= text.size())
      throw TreebankError("line " + std::to_string(tree_line) + ": unbalanced brackets at end of input");
    try {
      Tree t = parse_bracketed(std::string_view(text).substr(start, end + 1 - start));
      trees.push_back(normalize ? normalize_tree(std::move(t)) : std::move(t));
    } catch (const ParseError& e) {
      throw TreebankError("line " + std::to_string(tree_line) + ": " + e.what());
    }
    advance_to(end + 1);
  }
  return trees;
}

std::vector<Tree> read_tree_file(const std::string& path, bool normalize) {
  std::ifstream in(path);
  if (!in) throw TreebankError("cannot open " + path);
  try {
    return read_trees(in, normalize);
  } catch (const TreebankError& e) {
    throw TreebankError(path + ": " + e.what());
  }
}

std::string escape_token(std::string_view token) {
  if (token == "(") return "-LRB-";
  if (token == ")") return "-RRB-";
  std::string out;
  for (char c : token) {
    if (c == '(') out += "-LRB-";
    else if (c == ')') out += "-RRB-";
    else out += c;
  }
  return out;
}

std::string to_bracketed(const Tree& tree) {
  std::string out;
  append_bracketed(tree, out);
  return out;
}

Sentence sentence_of(const Tree& tree) {
  Sentence s;
  collect_leaves(tree, s);
  return s;
}

int length_of(const Tree& tree) {
  if (tree.is_preterminal()) return 1;
  int n = 0;
  for (const auto& c : tree.children) n += length_of(c);
  return n;
}

std::string join_unary_chain(const std::vector<std::string>& chain) {
  std::string out;
  for (std::size_t i = 0; i < chain.size(); ++i) {
    if (i) out += kUnarySeparator;
    out += chain[i];
  }
  return out;
}

std::vector<std::string> split_unary_chain(std::string_view label) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto bar = label.find(kUnarySeparator, start);
    parts.emplace_back(label.substr(start, bar - start));
    if (bar == std::string_view::npos) break;
    start = bar + 1;
  }
  return parts;
}

BinaryTree binarize(const Tree& tree) {
  BinaryTree out;
  Binarizer(out).emit(tree);
  return out;
}

Tree debinarize(const BinaryTree& tree, const Sentence& sentence, bool lenient) {
  if (tree.empty()) throw TreebankError("empty binary tree");
  if (static_cast<std::size_t>(tree.length()) != sentence.size())
    throw LengthMismatch(tree.length(), static_cast<int>(sentence.size()));
  const auto& root = tree.root();
  if (root.label == kDummyLabel && !root.is_leaf()) {
    if (!lenient) throw UnknownDummyPlacement();
    std::vector<Tree> kids;
    debinarize_into(tree, root.left, sentence, kids);
    debinarize_into(tree, root.right, sentence, kids);
    return Tree::node("", std::move(kids));
  }
  std::vector<Tree> out;
  debinarize_into(tree, 0, sentence, out);
  return std::move(out.front());
}

template <typename Label>
void check_partition(const BasicBinaryTree<Label>& tree) {
  std::function<void(int)> visit = [&](int idx) {
    const auto& n = tree.nodes.at(static_cast<std::size_t>(idx));
    if (n.begin >= n.end) throw TreebankError("binary node with empty span");
    if (n.is_leaf()) {
      if (n.right >= 0 || n.end - n.begin != 1) throw TreebankError("binary leaf must span one token");
      return;
    }
    const auto& l = tree.nodes.at(static_cast<std::size_t>(n.left));
    const auto& r = tree.nodes.at(static_cast<std::size_t>(n.right));
    if (l.begin != n.begin || l.end != r.begin || r.end != n.end || !(n.begin < l.end && l.end < n.end))
      throw TreebankError("children do not partition the parent span");
    visit(n.left);
    visit(n.right);
  };
  if (tree.empty()) throw TreebankError("empty binary tree");
  if (tree.root().begin != 0) throw TreebankError("root must start at token 0");
  visit(0);
}

template void check_partition(const BasicBinaryTree<std::string>&);
template void check_partition(const BasicBinaryTree<int>&);

std::multiset<LabeledSpan> spans_of(const Tree& tree) {
  std::multiset<LabeledSpan> out;
  int cursor = 0;
  tree_spans(tree, cursor, out);
  return out;
}

std::multiset<LabeledSpan> spans_of(const BinaryTree& tree) {
  std::multiset<LabeledSpan> out;
  for (const auto& n : tree.nodes)
    if (n.label != kDummyLabel) out.insert({n.begin, n.end, n.label});
  return out;
}

IdTree to_ids(const BinaryTree& tree, const Vocabulary& labels) {
  IdTree out;
  out.nodes.reserve(tree.nodes.size());
  for (const auto& n : tree.nodes) {
    const int id = labels.id(n.label);
    if (id < 0) throw TreebankError("label not in vocabulary: " + n.label);
    out.nodes.push_back({id, n.begin, n.end, n.left, n.right});
  }
  return out;
}

BinaryTree to_symbols(const IdTree& tree, const Vocabulary& labels) {
  BinaryTree out;
  out.nodes.reserve(tree.nodes.size());
  for (const auto& n : tree.nodes) out.nodes.push_back({labels.symbol(n.label), n.begin, n.end, n.left, n.right});
  return out;
}

IdTree right_branching(int n, int dummy_label) {
  IdTree out;
  for (int i = 0; i < n; ++i) {
    const bool leaf = i == n - 1;
    const int idx = static_cast<int>(out.nodes.size());
    out.nodes.push_back({dummy_label, i, leaf ? i + 1 : n, -1, -1});
    if (!leaf) {
      out.nodes.push_back({dummy_label, i, i + 1, -1, -1});
      out.nodes[static_cast<std::size_t>(idx)].left = idx + 1;
      out.nodes[static_cast<std::size_t>(idx)].right = idx + 2;
    }
  }
  return out;
}

Treebank Treebank::from_trees(std::vector<Tree> trees) {
  Treebank tb;
  std::vector<std::string> labels{std::string(kDummyLabel)};
  std::vector<std::string> tokens{std::string(kUnknownToken), std::string(kStartToken), std::string(kStopToken)};
  tb.binarized.reserve(trees.size());
  for (const auto& t : trees) {
    tb.binarized.push_back(binarize(t));
    for (const auto& n : tb.binarized.back().nodes) labels.push_back(n.label);
    for (auto& w : sentence_of(t).words) tokens.push_back(std::move(w));
  }
  tb.trees = std::move(trees);
  tb.labels = Vocabulary(std::move(labels));
  tb.tokens = Vocabulary(std::move(tokens));
  return tb;
}

}  // namespace ospar
