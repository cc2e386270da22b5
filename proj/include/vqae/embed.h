// Tokenization and word-embedding lookup.

#ifndef VQAE_EMBED_H_
#define VQAE_EMBED_H_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace vqae {

enum class TokenSource { kQuestion, kAnswer, kCaption, kExplanation };

struct TokenSeq {
  std::vector<std::string> tokens;
  TokenSource source = TokenSource::kCaption;

  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }
};

std::string ascii_lower(std::string_view text);

// Whitespace split, ASCII-lowercased, leading/trailing ASCII punctuation
// stripped from each token; tokens left empty are dropped.
TokenSeq tokenize(std::string_view text,
                  TokenSource source = TokenSource::kCaption);

// Space-joined tokens.
std::string join_tokens(const std::vector<std::string>& tokens);

class EmbeddingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Token -> dense float vector. Immutable once loaded; lookups are safe from
// any number of threads.
class EmbeddingTable {
 public:
  struct Entry {
    std::span<const float> values;
    double norm = 0.0;  // Euclidean norm accumulated in double
  };

  explicit EmbeddingTable(std::size_t dim);

  // Returns true when an existing token was overwritten.
  bool insert(const std::string& token, std::span<const float> values);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return index_.size(); }

  std::optional<Entry> find(const std::string& token) const;

 private:
  std::size_t dim_;
  std::vector<float> storage_;
  std::vector<double> norms_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct EmbeddingLoad {
  EmbeddingTable table;
  std::size_t duplicate_tokens = 0;
};

// GloVe text format: "token v1 v2 ... vd" per line. The dimension comes from
// the first non-blank line. Duplicate tokens: last occurrence wins.
EmbeddingLoad load_embeddings(const std::filesystem::path& path);

// Exact-match lookup; callers lowercase first.
std::optional<std::span<const float>> lookup(const EmbeddingTable& table,
                                             const std::string& token);

}  // namespace vqae

#endif  // VQAE_EMBED_H_
