// Helpers shared by the unit tests and the acceptance runner.

#ifndef VQAE_TESTS_SUPPORT_H_
#define VQAE_TESTS_SUPPORT_H_

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "vqae/ctree.h"
#include "vqae/embed.h"

namespace vqae::testing {

inline std::filesystem::path data_dir() { return VQAE_TEST_DATA_DIR; }
inline std::filesystem::path cli_path() { return VQAE_CLI_PATH; }

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("vqae-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ignored;
    std::filesystem::remove_all(path_, ignored);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const {
    return path_ / name;
  }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& path,
                       const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

// Random tree with labels from a small tag set and tokens that exercise
// punctuation, digits and mixed case.
class TreeGen {
 public:
  explicit TreeGen(std::uint64_t seed) : rng_(seed) {}

  Node node(int depth) {
    static const char* kLabels[] = {"S", "NP", "VP", "PP", "DT", "NN",
                                    "VBZ", "ADJP", "-NONE-", "PRP$"};
    static const char* kTokens[] = {"the", "Man", "is", "a", "dog", "'s",
                                    ",", ".", "42", "x-ray", "can't", "Tennis"};
    std::string label = kLabels[pick(std::size(kLabels))];
    if (depth <= 0 || pick(4) == 0) {
      return Node::Leaf(label, kTokens[pick(std::size(kTokens))]);
    }
    std::vector<Node> children;
    const std::size_t n = 1 + pick(4);
    for (std::size_t i = 0; i < n; ++i) children.push_back(node(depth - 1));
    return Node::Internal(label, std::move(children));
  }

  ConstTree tree(int max_depth = 5) { return ConstTree(node(max_depth)); }

  std::size_t pick(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_);
  }

 private:
  std::mt19937_64 rng_;
};

// Recomputes every span from scratch by counting leaves left to right and
// compares with the spans stored on the nodes.
inline bool spans_consistent(const Node& node, std::size_t& next_leaf) {
  const std::size_t begin = next_leaf;
  if (node.is_leaf()) {
    ++next_leaf;
  } else {
    for (const Node& child : node.children()) {
      if (!spans_consistent(child, next_leaf)) return false;
    }
  }
  return node.span().begin == begin && node.span().end == next_leaf;
}

inline bool spans_consistent(const ConstTree& tree) {
  std::size_t next = 0;
  return spans_consistent(tree.root(), next) && next == tree.size();
}

// Every (path, node) pair, collected without visit_preorder.
inline void collect_nodes(const Node& node, NodePath& path,
                          std::vector<std::pair<NodePath, const Node*>>& out) {
  out.emplace_back(path, &node);
  for (std::size_t i = 0; i < node.children().size(); ++i) {
    path.push_back(i);
    collect_nodes(node.children()[i], path, out);
    path.pop_back();
  }
}

// Reference word similarity in long double, written from the definition.
inline double reference_word_sim(std::span<const float> u,
                                 std::span<const float> v) {
  long double dot = 0, nu = 0, nv = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += static_cast<long double>(u[i]) * v[i];
    nu += static_cast<long double>(u[i]) * u[i];
    nv += static_cast<long double>(v[i]) * v[i];
  }
  long double cos = dot / (std::sqrt(nu) * std::sqrt(nv));
  if (cos > 1) cos = 1;
  if (cos < -1) cos = -1;
  return static_cast<double>((1 + cos) / 2);
}

// Brute-force mean-max over in-vocabulary tokens.
inline double reference_seq_sim(const std::vector<std::string>& a,
                                const std::vector<std::string>& b,
                                const EmbeddingTable& table) {
  double sum = 0;
  std::size_t counted = 0;
  for (const std::string& x : a) {
    auto ex = table.find(x);
    if (!ex || ex->norm == 0) continue;
    double best = -1;
    for (const std::string& y : b) {
      auto ey = table.find(y);
      if (!ey || ey->norm == 0) continue;
      best = std::max(best, reference_word_sim(ex->values, ey->values));
    }
    if (best < 0) return 0.0;  // b has no usable tokens
    sum += best;
    ++counted;
  }
  return counted ? sum / static_cast<double>(counted) : 0.0;
}

}  // namespace vqae::testing

#endif  // VQAE_TESTS_SUPPORT_H_
