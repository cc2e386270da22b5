#include "vqae/simscore.h"

#include <cmath>
#include <random>

#include "doctest.h"
#include "support.h"

using namespace vqae;
using vqae::testing::reference_seq_sim;

namespace {

EmbeddingTable OneHot(const std::vector<std::string>& words) {
  EmbeddingTable table(words.size());
  for (std::size_t i = 0; i < words.size(); ++i) {
    std::vector<float> v(words.size(), 0.0f);
    v[i] = 1.0f;
    table.insert(words[i], v);
  }
  return table;
}

TokenSeq Seq(std::vector<std::string> tokens) { return TokenSeq{std::move(tokens)}; }

}  // namespace

TEST_CASE("word_sim is the rescaled cosine") {
  const float u[] = {1, 0}, v[] = {0, 1}, w[] = {-2, 0}, x[] = {5, 0};
  CHECK(word_sim(u, v) == doctest::Approx(0.5));
  CHECK(word_sim(u, w) == doctest::Approx(0.0));
  CHECK(word_sim(u, x) == doctest::Approx(1.0));
  const float zero[] = {0, 0}, three[] = {1, 2, 3};
  CHECK_THROWS_AS(word_sim(u, zero), SimilarityError);
  CHECK_THROWS_AS(word_sim(u, three), SimilarityError);
}

TEST_CASE("seq_sim is the mean of best matches") {
  EmbeddingTable t = OneHot({"man", "dog", "tennis"});
  // man -> 1, tennis -> 0.5 (orthogonal to everything in b).
  CHECK(seq_sim(Seq({"man", "tennis"}), Seq({"man", "dog"}), t) ==
        doctest::Approx(0.75));
  // OOV tokens are skipped on both sides.
  CHECK(seq_sim(Seq({"man", "zebra"}), Seq({"zebra", "man"}), t) == 1.0);
  CHECK(seq_sim(Seq({"zebra"}), Seq({"man"}), t) == 0.0);
  CHECK(seq_sim(Seq({}), Seq({"man"}), t) == 0.0);
  CHECK(seq_sim(Seq({"man"}), Seq({}), t) == 0.0);
}

TEST_CASE("qa_caption_sim averages the two directions") {
  EmbeddingTable t = OneHot({"what", "is", "man", "doing", "surfing", "a", "wave"});
  SimilarityScore s = qa_caption_sim(Seq({"what", "is", "man", "doing"}),
                                     Seq({"surfing"}),
                                     Seq({"a", "man", "surfing", "wave"}), t);
  CHECK(s.q_term == doctest::Approx((0.5 + 0.5 + 1.0 + 0.5) / 4));
  CHECK(s.a_term == doctest::Approx(1.0));
  CHECK(s.value == doctest::Approx(0.5 * (s.q_term + s.a_term)));
}

TEST_CASE("all-OOV answer caps the score at one half") {
  EmbeddingTable t = OneHot({"man", "dog"});
  SimilarityScore s =
      qa_caption_sim(Seq({"man"}), Seq({"xyzzy"}), Seq({"man"}), t);
  CHECK(s.a_term == 0.0);
  CHECK(s.value <= 0.5);
}

TEST_CASE("best_caption prefers the lowest id on ties") {
  EmbeddingTable t = OneHot({"man", "dog"});
  std::vector<Caption> caps = {{7, 1, "a dog", {}}, {3, 1, "the dog", {}},
                               {5, 1, "a man", {}}};
  CaptionMatch m = best_caption(Seq({"dog"}), Seq({"dog"}), caps, t);
  CHECK(m.caption_id == 3);
  CHECK(m.index == 1);
  CHECK_THROWS(best_caption(Seq({"dog"}), Seq({"dog"}), {}, t));
}

TEST_CASE("property: seq_sim agrees with a brute-force oracle") {
  std::mt19937_64 rng(3);
  std::normal_distribution<float> normal;
  for (int round = 0; round < 50; ++round) {
    const std::size_t dim = 2 + round % 7;
    EmbeddingTable table(dim);
    std::vector<std::string> vocab;
    for (int w = 0; w < 12; ++w) {
      std::vector<float> v(dim);
      for (float& x : v) x = normal(rng);
      vocab.push_back("w" + std::to_string(w));
      table.insert(vocab.back(), v);
    }
    vocab.push_back("oov");
    for (int c = 0; c < 20; ++c) {
      std::vector<std::string> a, b;
      for (std::size_t i = 0, n = rng() % 6; i < n; ++i) a.push_back(vocab[rng() % vocab.size()]);
      for (std::size_t i = 0, n = rng() % 6; i < n; ++i) b.push_back(vocab[rng() % vocab.size()]);
      double got = seq_sim(Seq(a), Seq(b), table);
      REQUIRE(std::abs(got - reference_seq_sim(a, b, table)) <= 1e-9);
      REQUIRE(got >= 0.0);
      REQUIRE(got <= 1.0);
    }
  }
}
