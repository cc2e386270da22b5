#include "vqae/embed.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>

#include <spdlog/spdlog.h>

namespace vqae {
namespace {

bool IsAsciiSpace(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

bool IsAsciiPunct(char c) {
  unsigned char u = static_cast<unsigned char>(c);
  return u < 0x80 && std::ispunct(u);
}

std::vector<std::string_view> SplitSpace(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && IsAsciiSpace(line[i])) ++i;
    std::size_t start = i;
    while (i < line.size() && !IsAsciiSpace(line[i])) ++i;
    if (i > start) fields.push_back(line.substr(start, i - start));
  }
  return fields;
}

}  // namespace

std::string ascii_lower(std::string_view text) {
  std::string out(text);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

TokenSeq tokenize(std::string_view text, TokenSource source) {
  TokenSeq seq;
  seq.source = source;
  for (std::string_view field : SplitSpace(text)) {
    std::size_t b = 0;
    std::size_t e = field.size();
    while (b < e && IsAsciiPunct(field[b])) ++b;
    while (e > b && IsAsciiPunct(field[e - 1])) --e;
    if (b == e) continue;
    seq.tokens.push_back(ascii_lower(field.substr(b, e - b)));
  }
  return seq;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

EmbeddingTable::EmbeddingTable(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw EmbeddingError("embedding dimension must be positive");
}

bool EmbeddingTable::insert(const std::string& token,
                            std::span<const float> values) {
  if (values.size() != dim_) {
    throw EmbeddingError("vector for '" + token + "' has " +
                         std::to_string(values.size()) +
                         " components, expected " + std::to_string(dim_));
  }
  double sq = 0.0;
  for (float v : values) {
    if (!std::isfinite(v)) {
      throw EmbeddingError("non-finite component in vector for '" + token +
                           "'");
    }
    sq += static_cast<double>(v) * static_cast<double>(v);
  }
  auto [it, inserted] = index_.try_emplace(token, norms_.size());
  if (inserted) {
    storage_.insert(storage_.end(), values.begin(), values.end());
    norms_.push_back(std::sqrt(sq));
  } else {
    std::copy(values.begin(), values.end(),
              storage_.begin() + static_cast<std::ptrdiff_t>(it->second * dim_));
    norms_[it->second] = std::sqrt(sq);
  }
  return !inserted;
}

std::optional<EmbeddingTable::Entry> EmbeddingTable::find(
    const std::string& token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return Entry{std::span<const float>(storage_).subspan(it->second * dim_, dim_),
               norms_[it->second]};
}

EmbeddingLoad load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw EmbeddingError("cannot open embeddings file " + path.string());

  std::optional<EmbeddingTable> table;
  std::size_t duplicates = 0;
  std::vector<float> values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::vector<std::string_view> fields = SplitSpace(line);
    if (fields.empty()) continue;
    auto fail = [&](const std::string& why) {
      return EmbeddingError(path.string() + ":" + std::to_string(line_no) +
                            ": " + why);
    };
    if (fields.size() < 2) throw fail("row has no vector components");
    std::size_t dim = fields.size() - 1;
    if (!table) table.emplace(dim);
    if (dim != table->dim()) {
      throw fail("inconsistent dimension " + std::to_string(dim) +
                 ", expected " + std::to_string(table->dim()));
    }
    values.resize(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      std::string_view f = fields[i + 1];
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), values[i]);
      if (ec != std::errc() || ptr != f.data() + f.size()) {
        throw fail("malformed component '" + std::string(f) + "'");
      }
      if (!std::isfinite(values[i])) throw fail("non-finite component");
    }
    if (table->insert(std::string(fields[0]), values)) ++duplicates;
  }
  if (!table) throw EmbeddingError("no embeddings in " + path.string());
  if (duplicates > 0) {
    spdlog::warn("{}: {} duplicate tokens, last occurrence kept", path.string(),
                 duplicates);
  }
  return EmbeddingLoad{std::move(*table), duplicates};
}

std::optional<std::span<const float>> lookup(const EmbeddingTable& table,
                                             const std::string& token) {
  auto entry = table.find(token);
  if (!entry) return std::nullopt;
  return entry->values;
}

}  // namespace vqae
