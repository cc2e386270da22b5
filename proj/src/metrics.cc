#include "vqae/metrics.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace vqae {
namespace {

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts CountNgrams(const std::vector<std::string>& tokens,
                        std::size_t order) {
  NgramCounts counts;
  if (tokens.size() < order) return counts;
  for (std::size_t i = 0; i + order <= tokens.size(); ++i) {
    ++counts[std::vector<std::string>(tokens.begin() + i,
                                      tokens.begin() + i + order)];
  }
  return counts;
}

}  // namespace

double soft_accuracy(std::string_view candidate, const AnswerSet& answers) {
  const std::size_t k = answers.answers.size();
  if (k != kAnswersPerQuestion) {
    throw std::invalid_argument("soft_accuracy needs " +
                                std::to_string(kAnswersPerQuestion) +
                                " answers, got " + std::to_string(k));
  }
  const std::string target = normalize_answer(candidate);
  // Sum in thirds so the result is one correctly rounded division.
  std::size_t thirds = 0;
  for (std::size_t held_out = 0; held_out < k; ++held_out) {
    std::size_t matches = 0;
    for (std::size_t j = 0; j < k; ++j) {
      if (j != held_out && answers.answers[j] == target) ++matches;
    }
    thirds += std::min<std::size_t>(matches, 3);
  }
  return static_cast<double>(thirds) / static_cast<double>(3 * k);
}

std::vector<SoftTarget> soft_targets(const AnswerSet& answers) {
  std::vector<SoftTarget> out;
  for (const std::string& a : answers.answers) {
    bool seen = std::any_of(out.begin(), out.end(), [&](const SoftTarget& t) {
      return t.answer_string == a;
    });
    if (!seen) out.push_back(SoftTarget{a, soft_accuracy(a, answers)});
  }
  return out;
}

double bleu(const std::vector<TokenSeq>& candidates,
            const std::vector<TokenSeq>& references, int max_order) {
  if (candidates.empty()) throw std::invalid_argument("bleu: empty corpus");
  if (candidates.size() != references.size()) {
    throw std::invalid_argument("bleu: candidate/reference count mismatch");
  }
  if (max_order < 1 || max_order > 4) {
    throw std::invalid_argument("bleu: order must be in 1..4");
  }
  const auto orders = static_cast<std::size_t>(max_order);
  std::vector<std::size_t> matched(orders, 0), total(orders, 0);
  std::size_t cand_len = 0, ref_len = 0;
  for (std::size_t s = 0; s < candidates.size(); ++s) {
    const auto& cand = candidates[s].tokens;
    const auto& ref = references[s].tokens;
    cand_len += cand.size();
    ref_len += ref.size();
    for (std::size_t n = 1; n <= orders; ++n) {
      NgramCounts c = CountNgrams(cand, n);
      NgramCounts r = CountNgrams(ref, n);
      for (const auto& [gram, count] : c) {
        total[n - 1] += count;
        auto it = r.find(gram);
        if (it != r.end()) matched[n - 1] += std::min(count, it->second);
      }
    }
  }
  double log_precision = 0.0;
  for (std::size_t n = 0; n < orders; ++n) {
    if (matched[n] == 0 || total[n] == 0) return 0.0;
    log_precision += std::log(static_cast<double>(matched[n]) /
                              static_cast<double>(total[n]));
  }
  log_precision /= static_cast<double>(orders);
  double brevity = 1.0;
  if (cand_len < ref_len) {
    brevity = std::exp(1.0 - static_cast<double>(ref_len) /
                                 static_cast<double>(cand_len));
  }
  return brevity * std::exp(log_precision);
}

std::size_t lcs_length(const std::vector<std::string>& a,
                       const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), row(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      row[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1
                                    : std::max(prev[j], row[j - 1]);
    }
    std::swap(prev, row);
  }
  return prev[b.size()];
}

double rouge_l(const TokenSeq& candidate, const TokenSeq& reference,
               double beta) {
  if (candidate.empty() || reference.empty()) {
    throw std::invalid_argument("rouge_l: empty sequence");
  }
  const double lcs =
      static_cast<double>(lcs_length(candidate.tokens, reference.tokens));
  if (lcs == 0.0) return 0.0;
  const double precision = lcs / static_cast<double>(candidate.size());
  const double recall = lcs / static_cast<double>(reference.size());
  const double b2 = beta * beta;
  return (1.0 + b2) * precision * recall / (recall + b2 * precision);
}

TextScore text_scores(const std::vector<TokenSeq>& candidates,
                      const std::vector<TokenSeq>& references) {
  TextScore score;
  for (int n = 1; n <= 4; ++n) {
    score.bleu[static_cast<std::size_t>(n - 1)] =
        bleu(candidates, references, n);
  }
  double rouge_sum = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    rouge_sum += rouge_l(candidates[i], references[i]);
  }
  score.rouge_l = rouge_sum / static_cast<double>(candidates.size());
  return score;
}

}  // namespace vqae
