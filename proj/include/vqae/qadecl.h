// Question-type classification and rule-based conversion of a
// question/answer pair into a declarative statement.
//
// A rewrite rule pairs a question pattern with an output template:
//
//   question_pattern  "what is $np doing"
//   answer_type       "phrase"
//   template          "$np is $ans"
//   template_tree     "(S (NP $np) (VP (VBZ is) (VP $ans)))"
//
// Pattern slots ($name) bind one or more question tokens. Slots whose name
// starts with "np" only bind spans that look like a noun phrase (see
// plausible_noun_phrase). $ans is always bound to the answer tokens. In the
// template tree a slot appears as the token of a preterminal; conversion
// expands "(NP $np)" into "(NP (DT the) (X man))", tagging slot tokens from a
// small closed-class lexicon and "X" otherwise.

#ifndef VQAE_QADECL_H_
#define VQAE_QADECL_H_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "vqae/corpus.h"
#include "vqae/ctree.h"

namespace vqae {

struct QuestionType {
  std::string prefix;  // "other" when nothing matches
  std::size_t rank = 0;  // prefix length in tokens
};

inline constexpr const char* kOtherType = "other";

class TypeInventory {
 public:
  explicit TypeInventory(std::vector<std::string> prefixes);

  // One prefix per line; blank lines and '#' comments ignored.
  static TypeInventory load(const std::filesystem::path& path);

  // Longest token-prefix match over the inventory.
  QuestionType classify(std::string_view question) const;

  const std::vector<std::string>& prefixes() const { return prefixes_; }

 private:
  std::vector<std::string> prefixes_;
  std::vector<std::vector<std::string>> tokenized_;
};

enum class AnswerType { kYes, kNo, kNumber, kPhrase };

AnswerType answer_type_of(std::string_view answer);
std::string_view to_string(AnswerType type);

struct PatternToken {
  std::string text;  // literal token, or slot name without '$'
  bool is_slot = false;
};

struct RewriteRule {
  std::string rule_id;
  std::vector<PatternToken> question_pattern;
  AnswerType answer_type = AnswerType::kPhrase;
  std::vector<PatternToken> template_tokens;
  ConstTree template_tree;
};

class RuleTableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Ordered rule list; the first applicable rule wins, so tables list the most
// specific rules first. Immutable after loading.
class RuleTable {
 public:
  // Accepts a bare JSON array of rules or {"version": ..., "rules": [...]}.
  // Every rule is validated here; a malformed rule throws RuleTableError.
  static RuleTable from_json(const nlohmann::json& doc,
                             const std::string& fallback_version);
  static RuleTable load(const std::filesystem::path& path);

  const std::vector<RewriteRule>& rules() const { return rules_; }
  const std::string& version() const { return version_; }
  const RewriteRule* find(std::string_view rule_id) const;

 private:
  std::vector<RewriteRule> rules_;
  std::string version_;
};

struct Statement {
  std::string text;
  ConstTree tree;
  std::string rule_id;
};

// Heuristic noun-phrase test for "$np" slots: no auxiliaries, does not start
// with a preposition or conjunction, and does not end in a determiner,
// possessive, preposition, conjunction or common modifier ("the red").
bool plausible_noun_phrase(const std::vector<std::string>& tokens);

// POS-like tag for a token spliced into a statement tree.
std::string lexicon_tag(std::string_view token);

std::optional<Statement> to_statement(const Question& question,
                                      std::string_view answer,
                                      const RuleTable& rules);

}  // namespace vqae

#endif  // VQAE_QADECL_H_
