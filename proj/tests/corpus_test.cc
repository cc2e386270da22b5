#include "vqae/corpus.h"

#include <algorithm>
#include <random>

#include "doctest.h"
#include "json.hpp"
#include "support.h"

using namespace vqae;
using nlohmann::json;
using vqae::testing::TempDir;
using vqae::testing::write_text;

namespace {

json TenAnswers(const std::string& a) {
  return json(std::vector<std::string>(kAnswersPerQuestion, a));
}

struct Files {
  TempDir dir{"corpus"};
  std::filesystem::path q = dir / "q.json";
  std::filesystem::path a = dir / "a.json";
  std::filesystem::path c = dir / "c.json";

  void write(const json& questions, const json& annotations,
             const json& captions) {
    write_text(q, questions.dump());
    write_text(a, annotations.dump());
    write_text(c, captions.dump());
  }
  CorpusLoad load() const { return load_corpus(q, a, c); }
};

json FiveCaptions(std::int64_t image, std::int64_t first_id) {
  json out = json::array();
  for (int i = 4; i >= 0; --i) {
    out.push_back({{"caption_id", first_id + i},
                   {"image_id", image},
                   {"caption", "caption " + std::to_string(i)}});
  }
  return out;
}

QARecord Record(std::int64_t qid, std::int64_t image, const std::string& q,
                const std::string& a) {
  QARecord r;
  r.question = Question{qid, image, q};
  r.answer_set = make_answer_set(
      qid, std::vector<std::string>(kAnswersPerQuestion, a));
  return r;
}

}  // namespace

TEST_CASE("majority answer breaks ties by first occurrence") {
  CHECK(majority_of({"a", "b", "b", "a"}) == "a");
  CHECK(majority_of({"c", "b", "b", "a"}) == "b");
  AnswerSet s = make_answer_set(
      1, {" Yes", "no", "no", "yes", "YES", "no", "maybe", "no", "yes", "x"});
  CHECK(s.answers[0] == "yes");
  CHECK(s.majority_answer == "yes");
  CHECK_THROWS_AS(make_answer_set(1, {"a"}), std::invalid_argument);
}

TEST_CASE("empty questions file gives no records") {
  Files f;
  f.write(json::array(), json::array(), json::array());
  CorpusLoad load = f.load();
  CHECK(load.records.empty());
  CHECK(load.warnings.questions_without_captions == 0);
}

TEST_CASE("join: 3 questions over 2 images with 5 captions each") {
  Files f;
  json captions = FiveCaptions(10, 100);
  for (auto& c : FiveCaptions(20, 200)) captions.push_back(c);
  f.write(json::array({{{"question_id", 3}, {"image_id", 20}, {"question", "q3"}},
                       {{"question_id", 1}, {"image_id", 10}, {"question", "q1"}},
                       {{"question_id", 2}, {"image_id", 10}, {"question", "q2"}}}),
          json::array({{{"question_id", 1}, {"answers", TenAnswers("a")},
                        {"multiple_choice_answer", "a"}},
                       {{"question_id", 2}, {"answers", TenAnswers("b")},
                        {"multiple_choice_answer", "b"}},
                       {{"question_id", 3}, {"answers", TenAnswers("c")},
                        {"multiple_choice_answer", "c"}}}),
          captions);
  CorpusLoad load = f.load();
  REQUIRE(load.records.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    const QARecord& r = load.records[i];
    CHECK(r.question.question_id == static_cast<std::int64_t>(i + 1));
    REQUIRE(r.captions.size() == 5);
    CHECK(std::is_sorted(r.captions.begin(), r.captions.end(),
                         [](const Caption& x, const Caption& y) {
                           return x.caption_id < y.caption_id;
                         }));
    for (const Caption& c : r.captions) CHECK(c.image_id == r.question.image_id);
  }
}

TEST_CASE("a question without captions is skipped with a warning") {
  Files f;
  f.write(json::array({{{"question_id", 1}, {"image_id", 10}, {"question", "q1"}},
                       {{"question_id", 2}, {"image_id", 10}, {"question", "q2"}},
                       {{"question_id", 3}, {"image_id", 99}, {"question", "q3"}}}),
          json::array({{{"question_id", 1}, {"answers", TenAnswers("a")},
                        {"multiple_choice_answer", "a"}},
                       {{"question_id", 2}, {"answers", TenAnswers("b")},
                        {"multiple_choice_answer", "b"}},
                       {{"question_id", 3}, {"answers", TenAnswers("c")},
                        {"multiple_choice_answer", "c"}}}),
          FiveCaptions(10, 100));
  CorpusLoad load = f.load();
  CHECK(load.records.size() == 2);
  CHECK(load.warnings.questions_without_captions == 1);
}

TEST_CASE("schema violations name file, index and field") {
  Files f;
  f.write(json::array({{{"question_id", 1}, {"image_id", 10}, {"question", "q1"}}}),
          json::array({{{"question_id", 1}, {"answers", json::array({"a", "b"})},
                        {"multiple_choice_answer", "a"}}}),
          FiveCaptions(10, 100));
  try {
    f.load();
    FAIL("expected a schema error");
  } catch (const CorpusError& e) {
    CHECK(e.file() == f.a.string());
    CHECK(e.index() == 0);
    CHECK(e.field() == "answers");
  }

  f.write(json::array({{{"question_id", 1}, {"image_id", 10}, {"question", "q1"}},
                       {{"question_id", 2}, {"image_id", "ten"}, {"question", "q2"}}}),
          json::array(), FiveCaptions(10, 100));
  try {
    f.load();
    FAIL("expected a schema error");
  } catch (const CorpusError& e) {
    CHECK(e.index() == 1);
    CHECK(e.field() == "image_id");
  }

  f.write(json::array({{{"question_id", 1}, {"image_id", 10}, {"question", ""}}}),
          json::array(), FiveCaptions(10, 100));
  CHECK_THROWS_AS(f.load(), CorpusError);
}

TEST_CASE("caption parses are kept when they spell the caption") {
  Files f;
  f.write(json::array({{{"question_id", 1}, {"image_id", 10}, {"question", "q1"}}}),
          json::array({{{"question_id", 1}, {"answers", TenAnswers("a")},
                        {"multiple_choice_answer", "a"}}}),
          json::array({{{"caption_id", 1}, {"image_id", 10},
                        {"caption", "A man rides."},
                        {"parse", "(S (NP (DT A) (NN man)) (VP (VBZ rides)) (. .))"}},
                       {{"caption_id", 2}, {"image_id", 10},
                        {"caption", "A dog sleeps."},
                        {"parse", "(S (NP (DT A) (NN cat)) (VP (VBZ sleeps)))"}}}));
  CorpusLoad load = f.load();
  REQUIRE(load.records.size() == 1);
  CHECK(load.records[0].captions[0].tree.has_value());
  CHECK_FALSE(load.records[0].captions[1].tree.has_value());
  CHECK(load.warnings.parse_mismatches == 1);
}

TEST_CASE("stats: zero records") {
  SplitStats s = split_stats("train", {}, {});
  CHECK(s.source == StatsRow{});
  CHECK(s.explained == StatsRow{});
}

TEST_CASE("stats: 10 QA over 4 images, 7 explanations, one duplicate text") {
  std::vector<QARecord> records = {
      Record(1, 1, "What is the man doing?", "surfing"),
      Record(2, 1, "Is it sunny?", "yes"),
      Record(3, 1, "what is the man doing", "surfing"),
      Record(4, 2, "What color is the bus?", "red"),
      Record(5, 2, "How many buses are there?", "2"),
      Record(6, 3, "Is it sunny?", "no"),
      Record(7, 3, "What animal is this?", "dog"),
      Record(8, 3, "Where is the dog?", "on the couch"),
      Record(9, 4, "What room is this?", "kitchen"),
      Record(10, 4, "Is the light on?", "yes"),
  };
  std::vector<ExplainedQA> explanations = {
      {1, "A man is surfing on a wave."},
      {3, "A man  is surfing on a wave."},  // same after normalization
      {4, "The bus is red."},
      {5, "There are 2 buses on the street."},
      {7, "A dog lies on the couch."},
      {8, "The dog is on the couch."},
      {9, "The kitchen has a stove."},
  };
  SplitStats s = split_stats("train", records, explanations);
  CHECK(s.source.images == 4);
  CHECK(s.source.qa == 10);
  CHECK(s.source.unique_questions == 9);
  CHECK(s.source.unique_answers == 8);
  CHECK(s.explained.explanations == 7);
  CHECK(s.explained.unique_explanations == 6);
  CHECK(s.explained.qa == 7);
  CHECK(s.explained.images == 4);

  SUBCASE("counts are permutation-invariant") {
    std::mt19937 rng(5);
    for (int i = 0; i < 10; ++i) {
      std::shuffle(records.begin(), records.end(), rng);
      std::shuffle(explanations.begin(), explanations.end(), rng);
      SplitStats p = split_stats("train", records, explanations);
      CHECK(p.source == s.source);
      CHECK(p.explained == s.explained);
    }
  }

  SUBCASE("two splits add a total row") {
    StatsReport r = stats_report({SplitInput{"train", &records, &explanations},
                                  SplitInput{"val", &records, nullptr}});
    REQUIRE(r.total);
    CHECK(r.splits.size() == 2);
    CHECK(r.splits[1].explained.explanations == 0);
  }
}

TEST_CASE("normalize_text") {
  CHECK(normalize_text("  A  Man\tis HERE ") == "a man is here");
}
