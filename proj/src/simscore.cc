#include "vqae/simscore.h"

#include <cmath>
#include <optional>

namespace vqae {
namespace {

double Norm(std::span<const float> v) {
  double sq = 0.0;
  for (float x : v) sq += static_cast<double>(x) * static_cast<double>(x);
  return std::sqrt(sq);
}

double RescaledCosine(std::span<const float> u, std::span<const float> v,
                      double norm_u, double norm_v) {
  double dot = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += static_cast<double>(u[i]) * static_cast<double>(v[i]);
  }
  double cosine = dot / (norm_u * norm_v);
  // Rounding can push |cos| a hair past 1.
  if (cosine > 1.0) cosine = 1.0;
  if (cosine < -1.0) cosine = -1.0;
  return 0.5 * (1.0 + cosine);
}

std::vector<EmbeddingTable::Entry> InVocabulary(const TokenSeq& seq,
                                                const EmbeddingTable& table) {
  std::vector<EmbeddingTable::Entry> out;
  out.reserve(seq.size());
  for (const std::string& token : seq.tokens) {
    std::optional<EmbeddingTable::Entry> entry = table.find(token);
    if (entry && entry->norm > 0.0) out.push_back(*entry);
  }
  return out;
}

}  // namespace

double word_sim(std::span<const float> u, std::span<const float> v) {
  if (u.size() != v.size()) {
    throw SimilarityError("word_sim: dimension mismatch");
  }
  double norm_u = Norm(u);
  double norm_v = Norm(v);
  if (norm_u == 0.0 || norm_v == 0.0) {
    throw SimilarityError("word_sim: cosine undefined for a zero vector");
  }
  return RescaledCosine(u, v, norm_u, norm_v);
}

double seq_sim(const TokenSeq& a, const TokenSeq& b,
               const EmbeddingTable& table) {
  std::vector<EmbeddingTable::Entry> lhs = InVocabulary(a, table);
  std::vector<EmbeddingTable::Entry> rhs = InVocabulary(b, table);
  if (lhs.empty() || rhs.empty()) return 0.0;
  double total = 0.0;
  for (const auto& w : lhs) {
    double best = 0.0;
    for (const auto& c : rhs) {
      // Same table row: cosine is exactly 1, skip the rounding.
      double s = w.values.data() == c.values.data()
                     ? 1.0
                     : RescaledCosine(w.values, c.values, w.norm, c.norm);
      if (s > best) best = s;
    }
    total += best;
  }
  return total / static_cast<double>(lhs.size());
}

SimilarityScore qa_caption_sim(const TokenSeq& question, const TokenSeq& answer,
                               const TokenSeq& caption,
                               const EmbeddingTable& table) {
  SimilarityScore score;
  score.q_term = seq_sim(question, caption, table);
  score.a_term = seq_sim(answer, caption, table);
  score.value = 0.5 * (score.q_term + score.a_term);
  return score;
}

CaptionMatch best_caption(const TokenSeq& question, const TokenSeq& answer,
                          std::span<const Caption> captions,
                          const EmbeddingTable& table) {
  if (captions.empty()) {
    throw std::invalid_argument("best_caption: no captions");
  }
  std::optional<CaptionMatch> best;
  for (std::size_t i = 0; i < captions.size(); ++i) {
    SimilarityScore s = qa_caption_sim(
        question, answer, tokenize(captions[i].text, TokenSource::kCaption),
        table);
    bool better = !best || s.value > best->score.value ||
                  (s.value == best->score.value &&
                   captions[i].caption_id < best->caption_id);
    if (better) best = CaptionMatch{captions[i].caption_id, i, s};
  }
  return *best;
}

}  // namespace vqae
