// Caption relevance: rescaled cosine between words, mean-max between
// sequences, and the question/answer average against a caption.

#ifndef VQAE_SIMSCORE_H_
#define VQAE_SIMSCORE_H_

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "vqae/corpus.h"
#include "vqae/embed.h"

namespace vqae {

struct SimilarityScore {
  double value = 0.0;  // (q_term + a_term) / 2
  double q_term = 0.0;
  double a_term = 0.0;
};

class SimilarityError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// (1 + cos(u, v)) / 2. Throws SimilarityError on a dimension mismatch or a
// zero vector.
double word_sim(std::span<const float> u, std::span<const float> v);

// Mean over the in-vocabulary tokens of `a` of the best word_sim against the
// in-vocabulary tokens of `b`. Out-of-vocabulary and zero vectors are left
// out; 0 when either side has nothing left.
double seq_sim(const TokenSeq& a, const TokenSeq& b,
               const EmbeddingTable& table);

SimilarityScore qa_caption_sim(const TokenSeq& question, const TokenSeq& answer,
                               const TokenSeq& caption,
                               const EmbeddingTable& table);

struct CaptionMatch {
  std::int64_t caption_id = 0;
  std::size_t index = 0;  // position in the input span
  SimilarityScore score;
};

// Highest-scoring caption; ties go to the lowest caption_id. Throws
// std::invalid_argument when `captions` is empty.
CaptionMatch best_caption(const TokenSeq& question, const TokenSeq& answer,
                          std::span<const Caption> captions,
                          const EmbeddingTable& table);

}  // namespace vqae

#endif  // VQAE_SIMSCORE_H_
