#include "vqae/ctree.h"

#include <cctype>
#include <utility>

#include "vqae/embed.h"

namespace vqae {
namespace {

bool IsDelimiter(char c) {
  return c == '(' || c == ')' || std::isspace(static_cast<unsigned char>(c));
}

bool IsAtom(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (IsDelimiter(c)) return false;
  }
  return true;
}

void Validate(const Node& node) {
  if (!IsAtom(node.label())) {
    throw TreeError("invalid node label '" + node.label() + "'");
  }
  if (node.is_leaf()) {
    if (!IsAtom(node.token())) {
      throw TreeError("leaf '" + node.label() + "' has invalid token '" +
                      node.token() + "'");
    }
    return;
  }
  if (!node.token().empty()) {
    throw TreeError("internal node '" + node.label() + "' carries a token");
  }
  for (const Node& child : node.children()) Validate(child);
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Node ParseTree() {
    SkipSpace();
    if (AtEnd()) throw TreeParseError("empty tree", pos_);
    Node root = ParseNode();
    SkipSpace();
    if (!AtEnd()) throw TreeParseError("trailing input after tree", pos_);
    return root;
  }

 private:
  bool AtEnd() const { return pos_ >= text_.size(); }

  void SkipSpace() {
    while (!AtEnd() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
  }

  void Expect(char c) {
    if (AtEnd()) {
      throw TreeParseError(std::string("unexpected end of input, expected '") +
                               c + "'",
                           pos_);
    }
    if (text_[pos_] != c) {
      throw TreeParseError(std::string("expected '") + c + "'", pos_);
    }
    ++pos_;
  }

  std::string ReadAtom() {
    std::size_t start = pos_;
    while (!AtEnd() && !IsDelimiter(text_[pos_])) ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  Node ParseNode() {
    Expect('(');
    SkipSpace();
    std::size_t label_at = pos_;
    std::string label = ReadAtom();
    if (label.empty()) {
      if (AtEnd()) throw TreeParseError("unexpected end of input", pos_);
      throw TreeParseError("empty label", label_at);
    }
    SkipSpace();
    if (AtEnd()) throw TreeParseError("unexpected end of input", pos_);

    if (text_[pos_] != '(') {
      if (text_[pos_] == ')') {
        throw TreeParseError("node '" + label + "' has no children", pos_);
      }
      std::string token = ReadAtom();
      SkipSpace();
      if (!AtEnd() && text_[pos_] == '(') {
        throw TreeParseError("token mixed with subtrees under '" + label + "'",
                             pos_);
      }
      Expect(')');
      return Node::Leaf(std::move(label), std::move(token));
    }

    std::vector<Node> children;
    while (true) {
      SkipSpace();
      if (AtEnd()) throw TreeParseError("unexpected end of input", pos_);
      if (text_[pos_] == ')') break;
      if (text_[pos_] != '(') {
        throw TreeParseError("bare token among subtrees of '" + label + "'",
                             pos_);
      }
      children.push_back(ParseNode());
    }
    Expect(')');
    return Node::Internal(std::move(label), std::move(children));
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

void Print(const Node& node, std::string& out) {
  out += '(';
  out += node.label();
  if (node.is_leaf()) {
    out += ' ';
    out += node.token();
  } else {
    for (const Node& child : node.children()) {
      out += ' ';
      Print(child, out);
    }
  }
  out += ')';
}

void CollectLeaves(const Node& node, bool lower, std::vector<std::string>& out) {
  if (node.is_leaf()) {
    out.push_back(lower ? ascii_lower(node.token()) : node.token());
    return;
  }
  for (const Node& child : node.children()) CollectLeaves(child, lower, out);
}

void Visit(const Node& node, NodePath& path,
           const std::function<void(const Node&, const NodePath&)>& visit) {
  visit(node, path);
  for (std::size_t i = 0; i < node.children().size(); ++i) {
    path.push_back(i);
    Visit(node.children()[i], path, visit);
    path.pop_back();
  }
}

Node ReplaceAt(const Node& node, const NodePath& path, std::size_t depth,
               const Node& replacement) {
  if (depth == path.size()) return replacement;
  std::vector<Node> children = node.children();
  if (path[depth] >= children.size()) {
    throw TreeError("node path out of range");
  }
  children[path[depth]] =
      ReplaceAt(children[path[depth]], path, depth + 1, replacement);
  return Node::Internal(node.label(), std::move(children));
}

}  // namespace

TreeParseError::TreeParseError(const std::string& what, std::size_t offset)
    : TreeError(what + " at offset " + std::to_string(offset)),
      offset_(offset) {}

Node Node::Leaf(std::string label, std::string token) {
  Node node;
  node.label_ = std::move(label);
  node.token_ = std::move(token);
  return node;
}

Node Node::Internal(std::string label, std::vector<Node> children) {
  if (children.empty()) {
    throw TreeError("internal node '" + label + "' needs at least one child");
  }
  Node node;
  node.label_ = std::move(label);
  node.children_ = std::move(children);
  return node;
}

std::size_t Node::leaf_count() const {
  if (is_leaf()) return 1;
  std::size_t n = 0;
  for (const Node& child : children_) n += child.leaf_count();
  return n;
}

bool Node::operator==(const Node& other) const {
  return label_ == other.label_ && token_ == other.token_ &&
         children_ == other.children_;
}

ConstTree::ConstTree(Node root) : root_(std::move(root)) {
  Validate(root_);
  // Assign spans bottom-up in a single left-to-right walk.
  std::size_t next = 0;
  std::function<void(Node&)> assign = [&](Node& node) {
    std::size_t begin = next;
    if (node.is_leaf()) {
      ++next;
    } else {
      for (Node& child : node.children_) assign(child);
    }
    node.span_ = Span{begin, next};
  };
  assign(root_);
}

ConstTree parse_bracketed(std::string_view text) {
  return ConstTree(Parser(text).ParseTree());
}

std::string print_bracketed(const Node& node) {
  std::string out;
  Print(node, out);
  return out;
}

std::string print_bracketed(const ConstTree& tree) {
  return print_bracketed(tree.root());
}

std::vector<std::string> yield_of(const Node& node) {
  std::vector<std::string> out;
  CollectLeaves(node, /*lower=*/true, out);
  return out;
}

std::vector<std::string> leaves_of(const Node& node) {
  std::vector<std::string> out;
  CollectLeaves(node, /*lower=*/false, out);
  return out;
}

const Node& node_at(const ConstTree& tree, const NodePath& path) {
  const Node* node = &tree.root();
  for (std::size_t index : path) {
    if (index >= node->children().size()) {
      throw TreeError("node path out of range");
    }
    node = &node->children()[index];
  }
  return *node;
}

void visit_preorder(
    const ConstTree& tree,
    const std::function<void(const Node&, const NodePath&)>& visit) {
  NodePath path;
  Visit(tree.root(), path, visit);
}

std::vector<NodePath> paths_with_span(const ConstTree& tree, Span span) {
  std::vector<NodePath> out;
  visit_preorder(tree, [&](const Node& node, const NodePath& path) {
    if (node.span() == span) out.push_back(path);
  });
  return out;
}

ConstTree replace_at(const ConstTree& tree, const NodePath& path,
                     const Node& replacement) {
  return ConstTree(ReplaceAt(tree.root(), path, 0, replacement));
}

ConstTree replace_child(const ConstTree& tree, Span target,
                        const Node& replacement, SpanMatch match) {
  std::vector<NodePath> found = paths_with_span(tree, target);
  if (found.empty()) {
    throw TreeError("no node with span [" + std::to_string(target.begin) +
                    "," + std::to_string(target.end) + ")");
  }
  if (found.size() > 1 && match == SpanMatch::kUnique) {
    throw TreeError(std::to_string(found.size()) + " nodes share span [" +
                    std::to_string(target.begin) + "," +
                    std::to_string(target.end) + ")");
  }
  // Pre-order lists ancestors before descendants.
  return replace_at(tree, found.front(), replacement);
}

ConstTree flat_tree(const std::vector<std::string>& tokens,
                    const std::string& root_label,
                    const std::string& leaf_label) {
  if (tokens.empty()) throw TreeError("flat tree needs at least one token");
  std::vector<Node> leaves;
  leaves.reserve(tokens.size());
  for (const std::string& token : tokens) {
    leaves.push_back(Node::Leaf(leaf_label, token));
  }
  return ConstTree(Node::Internal(root_label, std::move(leaves)));
}

}  // namespace vqae
