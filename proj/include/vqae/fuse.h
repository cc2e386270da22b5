// Fusing a QA statement into its most relevant caption.
//
// The statement tree and the caption tree are aligned on a pair of nodes with
// identical yields. The statement constituent that carries new content
// around the aligned node is then grafted into the caption in place of the
// aligned caption constituent, and the result is post-edited and re-scored.

#ifndef VQAE_FUSE_H_
#define VQAE_FUSE_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "vqae/corpus.h"
#include "vqae/ctree.h"
#include "vqae/embed.h"
#include "vqae/qadecl.h"
#include "vqae/simscore.h"

namespace vqae {

inline constexpr double kDefaultThreshold = 0.6;

// Function-word stoplist. A content word is any token of two or more
// characters that is not on the list.
class FunctionWords {
 public:
  explicit FunctionWords(std::vector<std::string> words);
  static FunctionWords load(const std::filesystem::path& path);

  bool is_content(std::string_view token) const;
  std::size_t size() const { return words_.size(); }

 private:
  std::set<std::string, std::less<>> words_;
};

struct Alignment {
  Span statement_node_span;
  Span caption_node_span;
  NodePath statement_path;
  NodePath caption_path;
  std::vector<std::string> matched_yield;
};

// Among node pairs with equal lowercased yields containing at least one
// content word: longest yield, then leftmost caption span, then leftmost
// statement span, then the outermost node of a unary chain.
std::optional<Alignment> align(const ConstTree& statement,
                               const ConstTree& caption,
                               const FunctionWords& words);

struct MergeResult {
  ConstTree tree;
  bool fused = false;  // false: caption returned unchanged
};

// Picks the lowest proper ancestor of the aligned statement node whose yield
// adds a content word the caption lacks, and substitutes it for the aligned
// caption constituent, widened upward while the wider caption node adds no
// content word missing from the graft.
MergeResult merge(const ConstTree& statement, const ConstTree& caption,
                  const Alignment& alignment, const FunctionWords& words);

// Collapse repeated tokens, fix a/an, capitalize, one terminal period,
// single spaces.
std::string postedit(std::string_view text);

// The token-level edits of postedit (repeats, a/an) applied to the leaves.
ConstTree postedit_tree(const ConstTree& tree);

enum class Provenance { kFused, kCaptionOnly, kNone };
std::string_view to_string(Provenance p);
Provenance provenance_from_string(std::string_view s);

struct ExplanationRecord {
  std::int64_t question_id = 0;
  std::int64_t caption_id = 0;
  std::string explanation_text;
  std::optional<ConstTree> explanation_tree;  // absent with kNone
  SimilarityScore similarity;
  bool retained = false;
  Provenance provenance = Provenance::kNone;
  std::string rule_id;    // empty with kNone
  std::string statement;  // empty with kNone
};

// Retention rule: a converted QA pair whose explanation scores at least
// `threshold`.
bool retain(const ExplanationRecord& record, double threshold);

nlohmann::ordered_json to_json(const ExplanationRecord& record);
ExplanationRecord explanation_from_json(const nlohmann::json& doc);

// External text filter applied after the built-in post-editor.
using PostEditor = std::function<std::string(const std::string&)>;

struct SynthesisContext {
  const EmbeddingTable* table = nullptr;
  const RuleTable* rules = nullptr;
  const FunctionWords* words = nullptr;
  double threshold = kDefaultThreshold;
  PostEditor external_postedit;  // optional
};

// Throws std::invalid_argument for a threshold outside [0, 1].
void validate_threshold(double threshold);

ExplanationRecord synthesize(const QARecord& record,
                             const SynthesisContext& context);

// Caption tree used for fusion: the ingested parse or a flat fallback.
ConstTree caption_tree(const Caption& caption);

}  // namespace vqae

#endif  // VQAE_FUSE_H_
