// Ingestion of questions, annotations and captions, joined per question.

#ifndef VQAE_CORPUS_H_
#define VQAE_CORPUS_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vqae/ctree.h"

namespace vqae {

inline constexpr std::size_t kAnswersPerQuestion = 10;

struct Question {
  std::int64_t question_id = 0;
  std::int64_t image_id = 0;
  std::string text;
};

struct AnswerSet {
  std::int64_t question_id = 0;
  std::vector<std::string> answers;  // exactly kAnswersPerQuestion
  std::string majority_answer;
};

struct Caption {
  std::int64_t caption_id = 0;
  std::int64_t image_id = 0;
  std::string text;
  std::optional<ConstTree> tree;
};

struct QARecord {
  Question question;
  AnswerSet answer_set;
  std::vector<Caption> captions;  // caption_id order
};

// Schema violation in one of the input files.
class CorpusError : public std::runtime_error {
 public:
  CorpusError(const std::string& file, std::size_t index,
              const std::string& field, const std::string& problem);

  const std::string& file() const { return file_; }
  std::size_t index() const { return index_; }
  const std::string& field() const { return field_; }

 private:
  std::string file_;
  std::size_t index_;
  std::string field_;
};

struct LoadWarnings {
  std::size_t questions_without_captions = 0;
  // Caption parses whose leaves do not spell the caption text; the tree is
  // dropped and the flat fallback is used downstream.
  std::size_t parse_mismatches = 0;
};

struct CorpusLoad {
  std::vector<QARecord> records;  // ascending question_id
  LoadWarnings warnings;
};

// Lowercased, surrounding whitespace removed.
std::string normalize_answer(std::string_view answer);

// Most frequent answer; ties go to the earliest first occurrence.
std::string majority_of(const std::vector<std::string>& answers);

AnswerSet make_answer_set(std::int64_t question_id,
                          std::vector<std::string> answers);

CorpusLoad load_corpus(const std::filesystem::path& questions_path,
                       const std::filesystem::path& annotations_path,
                       const std::filesystem::path& captions_path);

// Lowercase plus single-space whitespace normalization; the identity used
// for the "unique" counts.
std::string normalize_text(std::string_view text);

// One row of the dataset statistics table.
struct StatsRow {
  std::size_t images = 0;
  std::size_t qa = 0;
  std::size_t explanations = 0;
  std::size_t unique_questions = 0;
  std::size_t unique_answers = 0;
  std::size_t unique_explanations = 0;

  bool operator==(const StatsRow&) const = default;
};

struct TypeCount {
  std::size_t qa = 0;
  std::size_t explained = 0;
};

// A retained explanation as seen by the statistics: which QA it explains
// and its text.
struct ExplainedQA {
  std::int64_t question_id = 0;
  std::string text;
};

struct SplitStats {
  std::string split;
  StatsRow source;     // every QA pair; explanation columns are zero
  StatsRow explained;  // only QA pairs with a retained explanation
  std::map<std::string, TypeCount> by_type;
};

struct StatsReport {
  std::vector<SplitStats> splits;
  std::optional<SplitStats> total;  // present with two or more splits
};

class TypeInventory;

// Explanations whose question_id is not among `records` are ignored.
SplitStats split_stats(const std::string& split,
                       const std::vector<QARecord>& records,
                       const std::vector<ExplainedQA>& explanations,
                       const TypeInventory* types = nullptr);

struct SplitInput {
  std::string split;
  const std::vector<QARecord>* records = nullptr;
  const std::vector<ExplainedQA>* explanations = nullptr;
};

StatsReport stats_report(const std::vector<SplitInput>& splits,
                         const TypeInventory* types = nullptr);

}  // namespace vqae

#endif  // VQAE_CORPUS_H_
