#include "vqae/fuse.h"

#include <algorithm>
#include <map>
#include <sstream>

#include "doctest.h"
#include "support.h"
#include "vqae/pipeline.h"

using namespace vqae;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const FunctionWords& Words() {
  static const FunctionWords words =
      FunctionWords::load(default_config_path("function_words.txt"));
  return words;
}

ConstTree T(const char* s) { return parse_bracketed(s); }

std::string Yield(const ConstTree& t) { return join_tokens(yield_of(t.root())); }

struct Fixture {
  fs::path dir = vqae::testing::data_dir() / "fusion";
  EmbeddingLoad embeddings = load_embeddings(dir / "embeddings.txt");
  RuleTable rules = RuleTable::load(default_config_path("rules.json"));
  CorpusLoad corpus = load_corpus(dir / "questions.json",
                                  dir / "annotations.json",
                                  dir / "captions.json");

  SynthesisContext context(double threshold = kDefaultThreshold) const {
    SynthesisContext ctx;
    ctx.table = &embeddings.table;
    ctx.rules = &rules;
    ctx.words = &Words();
    ctx.threshold = threshold;
    return ctx;
  }
};

const Fixture& GetFixture() {
  static const Fixture f;
  return f;
}

std::multiset<std::string> ContentWords(const std::vector<std::string>& ys) {
  std::multiset<std::string> out;
  for (const std::string& y : ys) {
    if (Words().is_content(y)) out.insert(y);
  }
  return out;
}

}  // namespace

TEST_CASE("stoplist has fifty entries") {
  CHECK(Words().size() == 50);
  CHECK(Words().is_content("tennis"));
  CHECK_FALSE(Words().is_content("the"));
  CHECK_FALSE(Words().is_content("x"));
  CHECK_FALSE(Words().is_content("The"));
}

TEST_CASE("align picks the shared noun") {
  ConstTree s = T("(S (NP (DT the) (NN man)) (VP (VBZ is) (VP (VBG playing) (NP (NN tennis)))))");
  ConstTree c = T("(S (NP (DT a) (NN man)) (VP (VBG riding) (NP (DT a) (NN horse))))");
  auto a = align(s, c, Words());
  REQUIRE(a);
  CHECK(a->matched_yield == std::vector<std::string>{"man"});
  CHECK(a->statement_node_span == Span{1, 2});
  CHECK(a->caption_node_span == Span{1, 2});
  CHECK(node_at(s, a->statement_path).label() == "NN");
  CHECK(node_at(c, a->caption_path).label() == "NN");
}

TEST_CASE("align without shared yields") {
  CHECK_FALSE(align(T("(S (NN cat) (VBZ sleeps))"), T("(S (NN dog) (VBZ runs))"),
                    Words()));
  // Function words alone never anchor an alignment.
  CHECK_FALSE(align(T("(S (DT the) (NN cat))"), T("(S (DT the) (NN dog))"), Words()));
}

TEST_CASE("identical trees align at the roots") {
  ConstTree t = T("(S (NP (DT a) (NN man)) (VP (VBZ runs)))");
  auto a = align(t, t, Words());
  REQUIRE(a);
  CHECK(a->statement_path.empty());
  CHECK(a->caption_path.empty());
}

TEST_CASE("align breaks ties by leftmost caption, then statement span") {
  ConstTree s = T("(S (NN dog) (NN cat) (NN dog))");
  ConstTree c = T("(S (NN cat) (NN dog))");
  auto a = align(s, c, Words());
  REQUIRE(a);
  CHECK(a->caption_node_span == Span{0, 1});  // "cat" is leftmost in the caption
  CHECK(a->statement_node_span == Span{1, 2});
  a = align(T("(S (NN dog) (NN cat) (NN dog))"), T("(S (NN dog))"), Words());
  REQUIRE(a);
  CHECK(a->statement_node_span == Span{0, 1});
}

TEST_CASE("merge grafts the statement in place of the caption subject") {
  ConstTree s = T("(S (NP (DT the) (NN man)) (VP (VBZ is) (VP (VBG playing) (NP (NN tennis)))))");
  ConstTree c = T("(S (NP (DT a) (NN man)) (VP (VBD sat) (PP (IN on) (NP (DT a) (NN bench)))))");
  auto a = align(s, c, Words());
  REQUIRE(a);
  MergeResult m = merge(s, c, *a, Words());
  CHECK(m.fused);
  CHECK(Yield(m.tree) == "the man is playing tennis sat on a bench");
}

TEST_CASE("merge leaves the caption alone when nothing is new") {
  ConstTree s = T("(S (NP (DT the) (NN man)) (VP (VBZ is) (VP (VBG riding))))");
  ConstTree c = T("(S (NP (DT a) (NN man)) (VP (VBG riding) (NP (DT a) (NN horse))))");
  auto a = align(s, c, Words());
  REQUIRE(a);
  MergeResult m = merge(s, c, *a, Words());
  CHECK_FALSE(m.fused);
  CHECK(m.tree == c);
}

TEST_CASE("merge at the caption root returns the graft itself") {
  ConstTree s = T("(S (NP (DT a) (NN dog)) (VP (VBZ is) (ADJP (JJ brown))))");
  ConstTree c = T("(NP (DT a) (NN dog))");
  auto a = align(s, c, Words());
  REQUIRE(a);
  CHECK(a->caption_path.empty());
  MergeResult m = merge(s, c, *a, Words());
  CHECK(m.fused);
  CHECK(m.tree == s);
}

TEST_CASE("postedit rules") {
  CHECK(postedit("the the man is playing tennis") == "The man is playing tennis.");
  CHECK(postedit("a elephant stands in water") == "An elephant stands in water.");
  CHECK(postedit("A man rides a horse") == "A man rides a horse.");
  CHECK(postedit("A man rides a horse.") == "A man rides a horse.");
  CHECK(postedit("an dog  barks ...") == "A dog barks.");
  CHECK(postedit("A apple") == "An apple.");
  CHECK(postedit("") == "");
  CHECK(postedit(postedit("the the cat")) == postedit("the the cat"));
}

TEST_CASE("postedit_tree applies the same token edits") {
  ConstTree t = T("(S (NP (DT a) (NN elephant)) (VP (VBZ is) (VBZ is) (ADJP (JJ big))))");
  ConstTree e = postedit_tree(t);
  CHECK(print_bracketed(e) == "(S (NP (DT an) (NN elephant)) (VP (VBZ is) (ADJP (JJ big))))");
}

TEST_CASE("provenance names round-trip") {
  for (Provenance p : {Provenance::kFused, Provenance::kCaptionOnly, Provenance::kNone}) {
    CHECK(provenance_from_string(to_string(p)) == p);
  }
  CHECK_THROWS(provenance_from_string("merged"));
}

TEST_CASE("threshold validation") {
  CHECK_NOTHROW(validate_threshold(0.0));
  CHECK_NOTHROW(validate_threshold(1.0));
  CHECK_THROWS_AS(validate_threshold(1.01), std::invalid_argument);
  CHECK_THROWS_AS(validate_threshold(-0.1), std::invalid_argument);
}

TEST_CASE("record JSON round-trip") {
  const Fixture& f = GetFixture();
  for (const QARecord& r : f.corpus.records) {
    ExplanationRecord e = synthesize(r, f.context());
    ExplanationRecord back = explanation_from_json(json::parse(to_json(e).dump()));
    CHECK(to_json(back).dump() == to_json(e).dump());
  }
}

TEST_CASE("fixture: records match the golden file byte for byte") {
  const Fixture& f = GetFixture();
  REQUIRE(f.corpus.records.size() == 20);
  CHECK(f.corpus.warnings.parse_mismatches == 1);
  std::ostringstream out;
  for (const QARecord& r : f.corpus.records) {
    out << to_json(synthesize(r, f.context())).dump() << '\n';
  }
  CHECK(out.str() == vqae::testing::read_text(f.dir / "golden.jsonl"));
}

TEST_CASE("fixture: hand labels, with similarity from the reference scorer") {
  const Fixture& f = GetFixture();
  json labels = json::parse(vqae::testing::read_text(f.dir / "labels.json"));
  REQUIRE(labels.size() == f.corpus.records.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const json& l = labels[i];
    const QARecord& r = f.corpus.records[i];
    ExplanationRecord e = synthesize(r, f.context());
    INFO("question " << e.question_id);
    CHECK(e.question_id == l["question_id"].get<std::int64_t>());
    CHECK(e.caption_id == l["caption_id"].get<std::int64_t>());
    CHECK(to_string(e.provenance) == l["provenance"].get<std::string>());
    CHECK(e.explanation_text == l["explanation_text"].get<std::string>());
    CHECK(e.retained == l["retained"].get<bool>());
    const double expected = l["similarity"][0].get<double>() / l["similarity"][1].get<double>();
    CHECK(std::abs(e.similarity.value - expected) <= 1e-9);
    if (e.provenance != Provenance::kNone) {
      std::vector<std::string> expl = tokenize(e.explanation_text).tokens;
      const double q = vqae::testing::reference_seq_sim(
          tokenize(r.question.text).tokens, expl, f.embeddings.table);
      const double a = vqae::testing::reference_seq_sim(
          tokenize(r.answer_set.majority_answer).tokens, expl, f.embeddings.table);
      CHECK(std::abs(e.similarity.value - 0.5 * (q + a)) <= 1e-9);
    }
  }
}

TEST_CASE("fixture: record invariants") {
  const Fixture& f = GetFixture();
  std::size_t typed = 0, converted = 0;
  const TypeInventory types =
      TypeInventory::load(default_config_path("question_types.txt"));
  for (const QARecord& r : f.corpus.records) {
    ExplanationRecord e = synthesize(r, f.context());
    INFO("question " << e.question_id);
    if (types.classify(r.question.text).prefix != kOtherType) {
      ++typed;
      if (e.provenance != Provenance::kNone) ++converted;
    }
    if (e.provenance == Provenance::kNone) {
      CHECK_FALSE(e.retained);
      CHECK_FALSE(e.explanation_tree);
      continue;
    }
    REQUIRE(e.explanation_tree);
    CHECK(yield_of(e.explanation_tree->root()) == tokenize(e.explanation_text).tokens);
    CHECK(e.retained == (e.similarity.value >= kDefaultThreshold));

    // Caption content outside the replaced constituent survives the merge.
    const Caption* caption = nullptr;
    for (const Caption& c : r.captions) {
      if (c.caption_id == e.caption_id) caption = &c;
    }
    REQUIRE(caption);
    ConstTree base = caption_tree(*caption);
    auto statement = to_statement(r.question, r.answer_set.majority_answer, f.rules);
    REQUIRE(statement);
    if (auto al = align(statement->tree, base, Words())) {
      std::multiset<std::string> rest = ContentWords(yield_of(base.root()));
      for (const std::string& y : ContentWords(al->matched_yield)) {
        rest.erase(rest.find(y));
      }
      std::multiset<std::string> got = ContentWords(yield_of(e.explanation_tree->root()));
      CHECK(std::includes(got.begin(), got.end(), rest.begin(), rest.end()));
    }

    // Sanity floor: never below the score against the statement content
    // words that made it into the explanation.
    if (e.provenance == Provenance::kFused) {
      std::vector<std::string> kept;
      std::multiset<std::string> expl = ContentWords(tokenize(e.explanation_text).tokens);
      for (const std::string& w : ContentWords(yield_of(statement->tree.root()))) {
        if (expl.count(w)) kept.push_back(w);
      }
      const double q = vqae::testing::reference_seq_sim(
          tokenize(r.question.text).tokens, kept, f.embeddings.table);
      const double a = vqae::testing::reference_seq_sim(
          tokenize(r.answer_set.majority_answer).tokens, kept, f.embeddings.table);
      CHECK(e.similarity.value + 1e-12 >= 0.5 * (q + a));
    }
  }
  CHECK(converted * 10 >= typed * 9);
}

TEST_CASE("fixture: retention is monotone in the threshold") {
  const Fixture& f = GetFixture();
  std::size_t previous = f.corpus.records.size() + 1;
  for (int step = 0; step <= 20; ++step) {
    const double t = step * 0.05;
    std::size_t kept = 0;
    for (const QARecord& r : f.corpus.records) {
      if (synthesize(r, f.context(std::min(t, 1.0))).retained) ++kept;
    }
    CHECK(kept <= previous);
    previous = kept;
  }
}

TEST_CASE("degradation: no rule and all-OOV answers") {
  const Fixture& f = GetFixture();
  QARecord r = f.corpus.records.front();
  r.question.text = "Why is the man happy?";
  ExplanationRecord none = synthesize(r, f.context());
  CHECK(none.provenance == Provenance::kNone);
  CHECK_FALSE(none.retained);
  CHECK(none.explanation_text.empty());

  r = f.corpus.records.front();
  r.question.text = "What is the man doing?";
  r.answer_set = make_answer_set(
      r.question.question_id, std::vector<std::string>(kAnswersPerQuestion, "xyzzy plugh"));
  ExplanationRecord oov = synthesize(r, f.context());
  CHECK(oov.similarity.a_term == 0.0);
  CHECK(oov.similarity.value <= 0.5);
  CHECK_FALSE(oov.retained);
}

TEST_CASE("external post-editor replaces the text") {
  const Fixture& f = GetFixture();
  SynthesisContext ctx = f.context();
  ctx.external_postedit = [](const std::string& text) { return text + " Indeed."; };
  ExplanationRecord e = synthesize(f.corpus.records.front(), ctx);
  CHECK(e.explanation_text == "The man is playing tennis holding a tennis racket. Indeed.");
  REQUIRE(e.explanation_tree);
  CHECK(yield_of(e.explanation_tree->root()) == tokenize(e.explanation_text).tokens);
}
