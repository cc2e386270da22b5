// Answer and explanation metrics: consensus soft accuracy over the ten
// annotator answers, corpus BLEU-1..4 and sentence ROUGE-L.

#ifndef VQAE_METRICS_H_
#define VQAE_METRICS_H_

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "vqae/corpus.h"
#include "vqae/embed.h"

namespace vqae {

// (1/K) sum_k min(#{j != k : a_j == candidate} / 3, 1), evaluated with the
// literal leave-one-out loop. Throws std::invalid_argument unless K == 10.
double soft_accuracy(std::string_view candidate, const AnswerSet& answers);

struct SoftTarget {
  std::string answer_string;
  double accuracy = 0.0;
};

// One target per distinct annotator answer, in first-occurrence order.
std::vector<SoftTarget> soft_targets(const AnswerSet& answers);

// Corpus-level BLEU with uniform weights over orders 1..max_order and the
// standard brevity penalty. Unsmoothed: any order with zero clipped matches
// (or no candidate n-grams at all) yields 0. Throws std::invalid_argument on
// an empty corpus, mismatched lengths or max_order outside 1..4.
double bleu(const std::vector<TokenSeq>& candidates,
            const std::vector<TokenSeq>& references, int max_order);

inline constexpr double kRougeBeta = 1.2;

// LCS-based F-measure. Throws std::invalid_argument on empty input.
double rouge_l(const TokenSeq& candidate, const TokenSeq& reference,
               double beta = kRougeBeta);

std::size_t lcs_length(const std::vector<std::string>& a,
                       const std::vector<std::string>& b);

struct TextScore {
  std::array<double, 4> bleu{};  // B-1 .. B-4
  double rouge_l = 0.0;          // mean sentence ROUGE-L
};

TextScore text_scores(const std::vector<TokenSeq>& candidates,
                      const std::vector<TokenSeq>& references);

}  // namespace vqae

#endif  // VQAE_METRICS_H_
