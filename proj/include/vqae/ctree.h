// Constituency trees in bracketed (Penn-style) notation.
//
// A tree is an immutable value. Leaves are preterminals: a POS label plus a
// token, written "(NN man)". Internal nodes carry a non-terminal label and at
// least one child. Every node knows the half-open token interval it covers;
// spans are assigned when a ConstTree is constructed and recomputed by every
// operation that produces a new tree.

#ifndef VQAE_CTREE_H_
#define VQAE_CTREE_H_

#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace vqae {

struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool operator==(const Span&) const = default;
};

class TreeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TreeParseError : public TreeError {
 public:
  TreeParseError(const std::string& what, std::size_t offset);
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class Node {
 public:
  static Node Leaf(std::string label, std::string token);
  static Node Internal(std::string label, std::vector<Node> children);

  const std::string& label() const { return label_; }
  // Empty for internal nodes.
  const std::string& token() const { return token_; }
  const std::vector<Node>& children() const { return children_; }
  bool is_leaf() const { return children_.empty(); }
  Span span() const { return span_; }

  std::size_t leaf_count() const;

  // Structural equality: labels, tokens and child order. Spans are derived
  // from structure, so they are not compared.
  bool operator==(const Node& other) const;

 private:
  friend class ConstTree;
  Node() = default;

  std::string label_;
  std::string token_;
  std::vector<Node> children_;
  Span span_;
};

class ConstTree {
 public:
  // Validates the node invariants and assigns spans. Throws TreeError.
  explicit ConstTree(Node root);

  const Node& root() const { return root_; }
  std::size_t size() const { return root_.span().size(); }

  bool operator==(const ConstTree& other) const { return root_ == other.root_; }

 private:
  Node root_;
};

// Child-index path from the root; the empty path addresses the root.
using NodePath = std::vector<std::size_t>;

ConstTree parse_bracketed(std::string_view text);

std::string print_bracketed(const ConstTree& tree);
std::string print_bracketed(const Node& node);

// Leaf tokens under `node`, left to right, ASCII-lowercased.
std::vector<std::string> yield_of(const Node& node);

// Leaf tokens with original casing.
std::vector<std::string> leaves_of(const Node& node);

const Node& node_at(const ConstTree& tree, const NodePath& path);

// Pre-order traversal; children visited left to right.
void visit_preorder(
    const ConstTree& tree,
    const std::function<void(const Node&, const NodePath&)>& visit);

std::vector<NodePath> paths_with_span(const ConstTree& tree, Span span);

ConstTree replace_at(const ConstTree& tree, const NodePath& path,
                     const Node& replacement);

enum class SpanMatch {
  kUnique,     // exactly one node may carry the span
  kOutermost,  // unary chains share spans; take the node nearest the root
};

// Replaces the node covering `target` by `replacement`. With kUnique, zero or
// several candidate nodes is an error; with kOutermost only zero is.
ConstTree replace_child(const ConstTree& tree, Span target,
                        const Node& replacement,
                        SpanMatch match = SpanMatch::kUnique);

// (S (X tok) (X tok) ...) for inputs that arrive without a parse.
ConstTree flat_tree(const std::vector<std::string>& tokens,
                    const std::string& root_label = "S",
                    const std::string& leaf_label = "X");

}  // namespace vqae

#endif  // VQAE_CTREE_H_
