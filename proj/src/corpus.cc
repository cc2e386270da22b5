#include "vqae/corpus.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"
#include <spdlog/spdlog.h>

#include "vqae/embed.h"
#include "vqae/qadecl.h"

namespace vqae {
namespace {

using nlohmann::json;

json ReadArray(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CorpusError(path.string(), 0, "", "cannot open file");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw CorpusError(path.string(), 0, "", std::string("invalid JSON: ") +
                                                e.what());
  }
  if (!doc.is_array()) {
    throw CorpusError(path.string(), 0, "", "top level must be an array");
  }
  return doc;
}

class RecordReader {
 public:
  RecordReader(const std::filesystem::path& path, std::size_t index,
               const json& record)
      : file_(path.string()), index_(index), record_(record) {
    if (!record_.is_object()) throw Error("", "record must be an object");
  }

  CorpusError Error(const std::string& field, const std::string& why) const {
    return CorpusError(file_, index_, field, why);
  }

  std::int64_t Int(const char* field) const {
    auto it = record_.find(field);
    if (it == record_.end()) throw Error(field, "missing");
    if (!it->is_number_integer()) throw Error(field, "must be an integer");
    return it->get<std::int64_t>();
  }

  std::string String(const char* field) const {
    auto it = record_.find(field);
    if (it == record_.end()) throw Error(field, "missing");
    if (!it->is_string()) throw Error(field, "must be a string");
    return it->get<std::string>();
  }

  std::optional<std::string> OptionalString(const char* field) const {
    auto it = record_.find(field);
    if (it == record_.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) throw Error(field, "must be a string");
    return it->get<std::string>();
  }

  const json& Array(const char* field) const {
    auto it = record_.find(field);
    if (it == record_.end()) throw Error(field, "missing");
    if (!it->is_array()) throw Error(field, "must be an array");
    return *it;
  }

 private:
  std::string file_;
  std::size_t index_;
  const json& record_;
};

bool Blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isspace(c);
  });
}

// Letters and digits only, lowercased, with the Penn bracket escapes undone.
// Used to check that a parse spells its caption.
std::string Skeleton(std::string s) {
  static const std::pair<const char*, const char*> kEscapes[] = {
      {"-LRB-", "("}, {"-RRB-", ")"}, {"-LSB-", "["}, {"-RSB-", "]"},
      {"-LCB-", "{"}, {"-RCB-", "}"}};
  for (const auto& [from, to] : kEscapes) {
    for (std::size_t at = s.find(from); at != std::string::npos;
         at = s.find(from, at)) {
      s.replace(at, std::string(from).size(), to);
    }
  }
  std::string out;
  for (unsigned char c : s) {
    if (c >= 0x80 || std::isalnum(c)) out += static_cast<char>(std::tolower(c));
  }
  return out;
}

}  // namespace

CorpusError::CorpusError(const std::string& file, std::size_t index,
                         const std::string& field, const std::string& problem)
    : std::runtime_error(file + ": record " + std::to_string(index) +
                         (field.empty() ? "" : ": field '" + field + "'") +
                         ": " + problem),
      file_(file),
      index_(index),
      field_(field) {}

std::string normalize_answer(std::string_view answer) {
  std::size_t b = 0;
  std::size_t e = answer.size();
  while (b < e && std::isspace(static_cast<unsigned char>(answer[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(answer[e - 1]))) --e;
  return ascii_lower(answer.substr(b, e - b));
}

std::string majority_of(const std::vector<std::string>& answers) {
  std::string best;
  std::size_t best_count = 0;
  for (std::size_t i = 0; i < answers.size(); ++i) {
    // Only the first occurrence of each string competes.
    if (std::find(answers.begin(), answers.begin() + i, answers[i]) !=
        answers.begin() + i) {
      continue;
    }
    std::size_t count = static_cast<std::size_t>(
        std::count(answers.begin(), answers.end(), answers[i]));
    if (count > best_count) {
      best = answers[i];
      best_count = count;
    }
  }
  return best;
}

AnswerSet make_answer_set(std::int64_t question_id,
                          std::vector<std::string> answers) {
  if (answers.size() != kAnswersPerQuestion) {
    throw std::invalid_argument("answer set needs exactly " +
                                std::to_string(kAnswersPerQuestion) +
                                " answers, got " +
                                std::to_string(answers.size()));
  }
  for (std::string& a : answers) a = normalize_answer(a);
  AnswerSet set;
  set.question_id = question_id;
  set.majority_answer = majority_of(answers);
  set.answers = std::move(answers);
  return set;
}

CorpusLoad load_corpus(const std::filesystem::path& questions_path,
                       const std::filesystem::path& annotations_path,
                       const std::filesystem::path& captions_path) {
  CorpusLoad load;

  std::vector<std::pair<Question, std::size_t>> questions;
  {
    json doc = ReadArray(questions_path);
    std::unordered_set<std::int64_t> seen;
    for (std::size_t i = 0; i < doc.size(); ++i) {
      RecordReader r(questions_path, i, doc[i]);
      Question q{r.Int("question_id"), r.Int("image_id"), r.String("question")};
      if (Blank(q.text)) throw r.Error("question", "must be non-empty");
      if (!seen.insert(q.question_id).second) {
        throw r.Error("question_id", "duplicate id " +
                                         std::to_string(q.question_id));
      }
      questions.emplace_back(std::move(q), i);
    }
  }

  std::unordered_map<std::int64_t, AnswerSet> answer_sets;
  {
    json doc = ReadArray(annotations_path);
    for (std::size_t i = 0; i < doc.size(); ++i) {
      RecordReader r(annotations_path, i, doc[i]);
      std::int64_t qid = r.Int("question_id");
      const json& raw = r.Array("answers");
      if (raw.size() != kAnswersPerQuestion) {
        throw r.Error("answers", "expected " +
                                     std::to_string(kAnswersPerQuestion) +
                                     " answers, got " +
                                     std::to_string(raw.size()));
      }
      std::vector<std::string> answers;
      for (const json& a : raw) {
        // Plain strings, or VQA-style {"answer": ...} objects.
        if (a.is_string()) {
          answers.push_back(a.get<std::string>());
        } else if (a.is_object() && a.contains("answer") &&
                   a["answer"].is_string()) {
          answers.push_back(a["answer"].get<std::string>());
        } else {
          throw r.Error("answers", "entries must be strings");
        }
      }
      r.String("multiple_choice_answer");
      if (!answer_sets.emplace(qid, make_answer_set(qid, std::move(answers)))
               .second) {
        throw r.Error("question_id",
                      "duplicate annotation for question " +
                          std::to_string(qid));
      }
    }
  }

  std::unordered_map<std::int64_t, std::vector<Caption>> by_image;
  {
    json doc = ReadArray(captions_path);
    std::unordered_set<std::int64_t> seen;
    for (std::size_t i = 0; i < doc.size(); ++i) {
      RecordReader r(captions_path, i, doc[i]);
      Caption c;
      c.caption_id = r.Int("caption_id");
      c.image_id = r.Int("image_id");
      c.text = r.String("caption");
      if (Blank(c.text)) throw r.Error("caption", "must be non-empty");
      if (!seen.insert(c.caption_id).second) {
        throw r.Error("caption_id", "duplicate id " +
                                        std::to_string(c.caption_id));
      }
      if (auto parse = r.OptionalString("parse")) {
        try {
          ConstTree tree = parse_bracketed(*parse);
          if (Skeleton(join_tokens(leaves_of(tree.root()))) ==
              Skeleton(c.text)) {
            c.tree = std::move(tree);
          } else {
            ++load.warnings.parse_mismatches;
          }
        } catch (const TreeError& e) {
          throw r.Error("parse", e.what());
        }
      }
      by_image[c.image_id].push_back(std::move(c));
    }
  }
  for (auto& [image, captions] : by_image) {
    std::sort(captions.begin(), captions.end(),
              [](const Caption& a, const Caption& b) {
                return a.caption_id < b.caption_id;
              });
  }

  std::sort(questions.begin(), questions.end(),
            [](const auto& a, const auto& b) {
              return a.first.question_id < b.first.question_id;
            });
  for (auto& [q, index] : questions) {
    auto answers = answer_sets.find(q.question_id);
    if (answers == answer_sets.end()) {
      throw CorpusError(questions_path.string(), index, "question_id",
                        "no annotation for question " +
                            std::to_string(q.question_id));
    }
    auto captions = by_image.find(q.image_id);
    if (captions == by_image.end()) {
      ++load.warnings.questions_without_captions;
      continue;
    }
    load.records.push_back(
        QARecord{std::move(q), answers->second, captions->second});
  }

  if (load.warnings.questions_without_captions > 0) {
    spdlog::warn("{} questions skipped: no captions for their image",
                 load.warnings.questions_without_captions);
  }
  if (load.warnings.parse_mismatches > 0) {
    spdlog::warn("{} caption parses do not match their text; using flat trees",
                 load.warnings.parse_mismatches);
  }
  return load;
}

std::string normalize_text(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += c;
  }
  return ascii_lower(out);
}

SplitStats split_stats(const std::string& split,
                       const std::vector<QARecord>& records,
                       const std::vector<ExplainedQA>& explanations,
                       const TypeInventory* types) {
  SplitStats stats;
  stats.split = split;

  std::unordered_map<std::int64_t, const QARecord*> by_question;
  for (const QARecord& r : records) by_question[r.question.question_id] = &r;

  std::set<std::int64_t> images;
  std::set<std::string> questions, answers;
  for (const QARecord& r : records) {
    images.insert(r.question.image_id);
    questions.insert(normalize_text(r.question.text));
    answers.insert(normalize_text(r.answer_set.majority_answer));
  }
  stats.source = StatsRow{images.size(), records.size(), 0,
                          questions.size(), answers.size(), 0};

  std::set<std::int64_t> e_images, e_qids;
  std::set<std::string> e_questions, e_answers, e_texts;
  std::size_t e_count = 0;
  for (const ExplainedQA& e : explanations) {
    auto it = by_question.find(e.question_id);
    if (it == by_question.end()) continue;
    const QARecord& r = *it->second;
    ++e_count;
    e_qids.insert(e.question_id);
    e_images.insert(r.question.image_id);
    e_questions.insert(normalize_text(r.question.text));
    e_answers.insert(normalize_text(r.answer_set.majority_answer));
    e_texts.insert(normalize_text(e.text));
  }
  stats.explained = StatsRow{e_images.size(), e_qids.size(),   e_count,
                             e_questions.size(), e_answers.size(),
                             e_texts.size()};

  if (types != nullptr) {
    for (const QARecord& r : records) {
      TypeCount& count = stats.by_type[types->classify(r.question.text).prefix];
      ++count.qa;
      if (e_qids.count(r.question.question_id)) ++count.explained;
    }
  }
  return stats;
}

StatsReport stats_report(const std::vector<SplitInput>& splits,
                         const TypeInventory* types) {
  StatsReport report;
  std::vector<QARecord> all_records;
  std::vector<ExplainedQA> all_explanations;
  for (const SplitInput& in : splits) {
    static const std::vector<ExplainedQA> kNone;
    const auto& explanations = in.explanations ? *in.explanations : kNone;
    report.splits.push_back(
        split_stats(in.split, *in.records, explanations, types));
    if (splits.size() > 1) {
      all_records.insert(all_records.end(), in.records->begin(),
                         in.records->end());
      all_explanations.insert(all_explanations.end(), explanations.begin(),
                              explanations.end());
    }
  }
  if (splits.size() > 1) {
    report.total = split_stats("total", all_records, all_explanations, types);
  }
  return report;
}

}  // namespace vqae
