// Corpus-level synthesis driver: configuration, ordered parallel execution,
// run manifest, similarity histogram and the on-disk output formats.

#ifndef VQAE_PIPELINE_H_
#define VQAE_PIPELINE_H_

#include <array>
#include <algorithm>
#include <atomic>
#include <cstddef>
#include <filesystem>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "vqae/corpus.h"
#include "vqae/fuse.h"

namespace vqae {

// $VQAE_CONFIG_DIR/<name> when the variable is set, else the config/
// directory of the source tree.
std::filesystem::path default_config_path(const std::string& name);

// Reads VQAE_LOG (trace, debug, info, warn, error, off; default info) and
// routes all logging to stderr.
void configure_logging();

struct PipelineConfig {
  std::filesystem::path embeddings_path;
  std::filesystem::path rule_table_path = default_config_path("rules.json");
  std::filesystem::path type_inventory_path =
      default_config_path("question_types.txt");
  std::filesystem::path function_words_path =
      default_config_path("function_words.txt");
  double threshold = kDefaultThreshold;
  std::optional<std::string> postedit_cmd;
  std::size_t workers = 1;
  std::filesystem::path output_path;
  std::optional<std::filesystem::path> histogram_path;  // <out>.hist.json
  std::optional<std::filesystem::path> stats_path;      // <out>.stats.json

  // Throws std::invalid_argument.
  void validate() const;
};

struct CorpusPaths {
  std::filesystem::path questions;
  std::filesystem::path annotations;
  std::filesystem::path captions;
  std::string split = "train";
};

// Similarity-score histogram, 50 buckets of width 0.02 over [0, 1]; 1.0 lands
// in the last bucket.
class Histogram {
 public:
  static constexpr std::size_t kBuckets = 50;
  static constexpr double kWidth = 0.02;

  void add(double value);
  const std::array<std::size_t, kBuckets>& counts() const { return counts_; }
  std::size_t total() const;
  nlohmann::ordered_json to_json() const;

  static std::size_t bucket_of(double value);

 private:
  std::array<std::size_t, kBuckets> counts_{};
};

// Runs compute(i) for i in [0, count) on `workers` threads and hands results
// to emit(i, result) strictly in index order. At most `window` results are
// buffered at once.
template <typename T>
void ordered_parallel_map(std::size_t count, std::size_t workers,
                          const std::function<T(std::size_t)>& compute,
                          const std::function<void(std::size_t, T&&)>& emit,
                          std::size_t window = 4096) {
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) emit(i, compute(i));
    return;
  }
  std::vector<std::optional<T>> slots;
  for (std::size_t start = 0; start < count; start += window) {
    const std::size_t end = std::min(count, start + window);
    slots.assign(end - start, std::nullopt);
    std::atomic<std::size_t> next{start};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
      std::vector<std::jthread> pool;
      for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
          for (std::size_t i = next++; i < end; i = next++) {
            try {
              slots[i - start].emplace(compute(i));
            } catch (...) {
              std::lock_guard<std::mutex> lock(failure_mutex);
              if (!failure) failure = std::current_exception();
            }
          }
        });
      }
    }
    if (failure) std::rethrow_exception(failure);
    for (std::size_t i = start; i < end; ++i) {
      emit(i, std::move(*slots[i - start]));
    }
  }
}

std::vector<ExplanationRecord> synthesize_all(
    const std::vector<QARecord>& records, const SynthesisContext& context,
    std::size_t workers);

// Pipes text through `sh -c cmd` and returns its stdout with trailing
// whitespace trimmed. Throws std::runtime_error on a non-zero exit.
PostEditor command_postedit(const std::string& cmd);

struct ExplanationFile {
  std::optional<nlohmann::json> manifest;
  std::vector<ExplanationRecord> records;
};

// JSON-lines: an optional {"manifest": ...} header line, then one record per
// line.
ExplanationFile read_explanations(const std::filesystem::path& path);

nlohmann::ordered_json to_json(const StatsRow& row);
nlohmann::ordered_json to_json(const SplitStats& stats);
nlohmann::ordered_json to_json(const StatsReport& report);

std::vector<ExplainedQA> retained_explanations(
    const std::vector<ExplanationRecord>& records);

struct SynthSummary {
  std::size_t records = 0;
  std::size_t retained = 0;
  std::size_t fused = 0;
  std::size_t caption_only = 0;
  std::size_t unconverted = 0;
};

// Loads everything, synthesizes, and writes the explanations file (manifest
// header plus records), the stats report and the histogram. Returns 0 on
// success; on any error logs it, removes partial output and returns 1.
int run_synth(const PipelineConfig& config, const CorpusPaths& corpus,
              SynthSummary* summary = nullptr);

}  // namespace vqae

#endif  // VQAE_PIPELINE_H_
