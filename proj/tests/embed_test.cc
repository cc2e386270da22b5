#include "vqae/embed.h"

#include "doctest.h"
#include "support.h"

using namespace vqae;
using vqae::testing::TempDir;
using vqae::testing::write_text;

TEST_CASE("tokenize lowercases and strips edge punctuation") {
  TokenSeq t = tokenize("What is the man doing?", TokenSource::kQuestion);
  CHECK(t.tokens ==
        std::vector<std::string>{"what", "is", "the", "man", "doing"});
  CHECK(t.source == TokenSource::kQuestion);
  CHECK(tokenize("  \"Hello,\"  world... ").tokens ==
        std::vector<std::string>{"hello", "world"});
  CHECK(tokenize("man's can't x-ray").tokens ==
        std::vector<std::string>{"man's", "can't", "x-ray"});
  CHECK(tokenize("?? !! ,").empty());
  CHECK(tokenize("").empty());
}

TEST_CASE("table insert, replace and lookup") {
  EmbeddingTable table(2);
  const float a[] = {3.0f, 4.0f};
  const float b[] = {1.0f, 0.0f};
  CHECK_FALSE(table.insert("cat", a));
  auto e = table.find("cat");
  REQUIRE(e);
  CHECK(e->norm == doctest::Approx(5.0));
  CHECK(table.insert("cat", b));
  CHECK(table.size() == 1);
  CHECK(lookup(table, "cat")->front() == 1.0f);
  CHECK_FALSE(lookup(table, "dog"));
  const float wrong[] = {1.0f};
  CHECK_THROWS_AS(table.insert("x", wrong), EmbeddingError);
}

TEST_CASE("load_embeddings reads the whitespace format") {
  TempDir dir("embed");
  write_text(dir / "e.txt", "cat 0.1 0.2 0.3\ndog -1 0 1e-2\n\n");
  EmbeddingLoad load = load_embeddings(dir / "e.txt");
  CHECK(load.table.dim() == 3);
  CHECK(load.table.size() == 2);
  CHECK(load.duplicate_tokens == 0);
  auto dog = lookup(load.table, "dog");
  REQUIRE(dog);
  CHECK((*dog)[2] == doctest::Approx(0.01f));
}

TEST_CASE("duplicate tokens keep the last row") {
  TempDir dir("embed");
  write_text(dir / "e.txt", "cat 1 0\ncat 0 1\n");
  EmbeddingLoad load = load_embeddings(dir / "e.txt");
  CHECK(load.duplicate_tokens == 1);
  CHECK((*lookup(load.table, "cat"))[1] == 1.0f);
}

TEST_CASE("dimension mismatch names the line") {
  TempDir dir("embed");
  write_text(dir / "e.txt", "cat 1 0 0\ndog 1 0\n");
  try {
    load_embeddings(dir / "e.txt");
    FAIL("expected an error");
  } catch (const EmbeddingError& e) {
    CHECK(std::string(e.what()).find("e.txt:2:") != std::string::npos);
  }
}

TEST_CASE("bad embedding files") {
  TempDir dir("embed");
  write_text(dir / "empty.txt", "");
  CHECK_THROWS_AS(load_embeddings(dir / "empty.txt"), EmbeddingError);
  write_text(dir / "nan.txt", "cat 1 x\n");
  CHECK_THROWS_AS(load_embeddings(dir / "nan.txt"), EmbeddingError);
  CHECK_THROWS(load_embeddings(dir / "missing.txt"));
}
