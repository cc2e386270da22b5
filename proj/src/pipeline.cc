#include "vqae/pipeline.h"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sys/wait.h>
#include <unistd.h>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "vqae/checksum.h"
#include "vqae/embed.h"
#include "vqae/qadecl.h"

#ifndef VQAE_DEFAULT_CONFIG_DIR
#define VQAE_DEFAULT_CONFIG_DIR "config"
#endif

namespace vqae {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr const char* kFormat = "vqae-explanations/1";

void WriteJsonFile(const std::filesystem::path& path, const ordered_json& doc) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << doc.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::filesystem::path Sidecar(const std::filesystem::path& out,
                              const char* suffix) {
  return std::filesystem::path(out.string() + suffix);
}

std::filesystem::path Partial(const std::filesystem::path& p) {
  return std::filesystem::path(p.string() + ".partial");
}

}  // namespace

std::filesystem::path default_config_path(const std::string& name) {
  if (const char* dir = std::getenv("VQAE_CONFIG_DIR"); dir && *dir) {
    return std::filesystem::path(dir) / name;
  }
  return std::filesystem::path(VQAE_DEFAULT_CONFIG_DIR) / name;
}

void configure_logging() {
  auto logger = spdlog::get("vqae");
  if (!logger) logger = spdlog::stderr_color_mt("vqae");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::level::level_enum level = spdlog::level::info;
  if (const char* env = std::getenv("VQAE_LOG"); env && *env) {
    level = spdlog::level::from_str(env);
  }
  spdlog::set_level(level);
}

void PipelineConfig::validate() const {
  validate_threshold(threshold);
  if (workers < 1) throw std::invalid_argument("workers must be at least 1");
  if (embeddings_path.empty()) {
    throw std::invalid_argument("an embeddings file is required");
  }
  if (output_path.empty()) throw std::invalid_argument("an output path is required");
}

std::size_t Histogram::bucket_of(double value) {
  double clamped = std::clamp(value, 0.0, 1.0);
  auto index = static_cast<std::size_t>(std::floor(clamped * kBuckets));
  return std::min(index, kBuckets - 1);
}

void Histogram::add(double value) { ++counts_[bucket_of(value)]; }

std::size_t Histogram::total() const {
  std::size_t n = 0;
  for (std::size_t c : counts_) n += c;
  return n;
}

ordered_json Histogram::to_json() const {
  ordered_json buckets = ordered_json::array();
  for (std::size_t i = 0; i < kBuckets; ++i) {
    // Edges as i/50 so they print as short decimals.
    buckets.push_back({{"lo", static_cast<double>(i) / kBuckets},
                       {"hi", static_cast<double>(i + 1) / kBuckets},
                       {"count", counts_[i]}});
  }
  return ordered_json{{"bucket_width", kWidth},
                      {"total", total()},
                      {"buckets", std::move(buckets)}};
}

std::vector<ExplanationRecord> synthesize_all(
    const std::vector<QARecord>& records, const SynthesisContext& context,
    std::size_t workers) {
  std::vector<ExplanationRecord> out;
  out.reserve(records.size());
  ordered_parallel_map<ExplanationRecord>(
      records.size(), workers,
      [&](std::size_t i) { return synthesize(records[i], context); },
      [&](std::size_t, ExplanationRecord&& r) { out.push_back(std::move(r)); });
  return out;
}

PostEditor command_postedit(const std::string& cmd) {
  return [cmd](const std::string& text) {
    char name[] = "/tmp/vqae-postedit-XXXXXX";
    int fd = mkstemp(name);
    if (fd < 0) throw std::runtime_error("postedit: cannot create temp file");
    std::string payload = text + "\n";
    bool written =
        ::write(fd, payload.data(), payload.size()) ==
        static_cast<ssize_t>(payload.size());
    ::close(fd);
    if (!written) {
      std::remove(name);
      throw std::runtime_error("postedit: cannot write temp file");
    }
    std::string shell = "(" + cmd + ") < '" + name + "'";
    FILE* pipe = popen(shell.c_str(), "r");
    if (!pipe) {
      std::remove(name);
      throw std::runtime_error("postedit: cannot run '" + cmd + "'");
    }
    std::string output;
    char buffer[4096];
    std::size_t n;
    while ((n = std::fread(buffer, 1, sizeof buffer, pipe)) > 0) {
      output.append(buffer, n);
    }
    int status = pclose(pipe);
    std::remove(name);
    if (status == -1 || !WIFEXITED(status) || WEXITSTATUS(status) != 0) {
      throw std::runtime_error("postedit: '" + cmd + "' failed");
    }
    while (!output.empty() &&
           std::isspace(static_cast<unsigned char>(output.back()))) {
      output.pop_back();
    }
    return output;
  };
}

ExplanationFile read_explanations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  ExplanationFile file;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      json doc = json::parse(line);
      if (doc.contains("manifest")) {
        file.manifest = doc["manifest"];
        continue;
      }
      file.records.push_back(explanation_from_json(doc));
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": " + e.what());
    }
  }
  return file;
}

ordered_json to_json(const StatsRow& row) {
  return ordered_json{{"#Images", row.images},
                      {"#Q&A", row.qa},
                      {"#E", row.explanations},
                      {"#Unique Q", row.unique_questions},
                      {"#Unique A", row.unique_answers},
                      {"#Unique E", row.unique_explanations}};
}

ordered_json to_json(const SplitStats& stats) {
  ordered_json by_type = ordered_json::object();
  for (const auto& [type, count] : stats.by_type) {
    by_type[type] = {
        {"qa", count.qa},
        {"explained", count.explained},
        {"rate", count.qa ? static_cast<double>(count.explained) /
                                static_cast<double>(count.qa)
                          : 0.0}};
  }
  return ordered_json{{"split", stats.split},
                      {"source", to_json(stats.source)},
                      {"explained", to_json(stats.explained)},
                      {"by_type", std::move(by_type)}};
}

ordered_json to_json(const StatsReport& report) {
  ordered_json splits = ordered_json::array();
  for (const SplitStats& s : report.splits) splits.push_back(to_json(s));
  ordered_json doc{{"splits", std::move(splits)}};
  doc["total"] = report.total ? to_json(*report.total) : ordered_json(nullptr);
  return doc;
}

std::vector<ExplainedQA> retained_explanations(
    const std::vector<ExplanationRecord>& records) {
  std::vector<ExplainedQA> out;
  for (const ExplanationRecord& r : records) {
    if (r.retained) out.push_back(ExplainedQA{r.question_id, r.explanation_text});
  }
  return out;
}

int run_synth(const PipelineConfig& config, const CorpusPaths& corpus,
              SynthSummary* summary) {
  const std::filesystem::path& out_path = config.output_path;
  const std::filesystem::path stats_path =
      config.stats_path.value_or(Sidecar(out_path, ".stats.json"));
  const std::filesystem::path hist_path =
      config.histogram_path.value_or(Sidecar(out_path, ".hist.json"));
  const std::filesystem::path outputs[] = {out_path, stats_path, hist_path};

  try {
    config.validate();
    EmbeddingLoad embeddings = load_embeddings(config.embeddings_path);
    RuleTable rules = RuleTable::load(config.rule_table_path);
    FunctionWords words = FunctionWords::load(config.function_words_path);
    TypeInventory types = TypeInventory::load(config.type_inventory_path);
    CorpusLoad load =
        load_corpus(corpus.questions, corpus.annotations, corpus.captions);
    spdlog::info("{} QA records, {} embeddings (dim {}), {} rules",
                 load.records.size(), embeddings.table.size(),
                 embeddings.table.dim(), rules.rules().size());

    ordered_json manifest{
        {"format", kFormat},
        {"split", corpus.split},
        {"threshold", config.threshold},
        {"rule_table_version", rules.version()},
        {"rule_table_sha256", sha256_file(config.rule_table_path)},
        {"embeddings_sha256", sha256_file(config.embeddings_path)},
        {"embedding_dim", embeddings.table.dim()},
        {"type_inventory_sha256", sha256_file(config.type_inventory_path)},
        {"function_words_sha256", sha256_file(config.function_words_path)},
        {"postedit_cmd", config.postedit_cmd ? ordered_json(*config.postedit_cmd)
                                             : ordered_json(nullptr)},
        {"inputs",
         {{"questions_sha256", sha256_file(corpus.questions)},
          {"annotations_sha256", sha256_file(corpus.annotations)},
          {"captions_sha256", sha256_file(corpus.captions)}}},
    };
    manifest["config_sha256"] = sha256_hex(manifest.dump());

    SynthesisContext context;
    context.table = &embeddings.table;
    context.rules = &rules;
    context.words = &words;
    context.threshold = config.threshold;
    if (config.postedit_cmd) {
      context.external_postedit = command_postedit(*config.postedit_cmd);
    }

    std::ofstream out(Partial(out_path), std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + out_path.string());
    out << ordered_json{{"manifest", manifest}}.dump() << '\n';

    Histogram histogram;
    SynthSummary counts;
    std::vector<ExplainedQA> retained;
    ordered_parallel_map<ExplanationRecord>(
        load.records.size(), config.workers,
        [&](std::size_t i) { return synthesize(load.records[i], context); },
        [&](std::size_t, ExplanationRecord&& r) {
          out << to_json(r).dump() << '\n';
          histogram.add(r.similarity.value);
          ++counts.records;
          switch (r.provenance) {
            case Provenance::kFused: ++counts.fused; break;
            case Provenance::kCaptionOnly: ++counts.caption_only; break;
            case Provenance::kNone: ++counts.unconverted; break;
          }
          if (r.retained) {
            ++counts.retained;
            retained.push_back(ExplainedQA{r.question_id, r.explanation_text});
          }
        });
    out.close();
    if (!out) throw std::runtime_error("write failed for " + out_path.string());

    StatsReport report =
        stats_report({SplitInput{corpus.split, &load.records, &retained}}, &types);
    ordered_json stats{
        {"manifest_config_sha256", manifest["config_sha256"]},
        {"threshold", config.threshold},
        {"summary",
         {{"records", counts.records},
          {"retained", counts.retained},
          {"fused", counts.fused},
          {"caption_only", counts.caption_only},
          {"unconverted", counts.unconverted}}},
        {"warnings",
         {{"questions_without_captions",
           load.warnings.questions_without_captions},
          {"parse_mismatches", load.warnings.parse_mismatches},
          {"duplicate_embeddings", embeddings.duplicate_tokens}}},
        {"report", to_json(report)},
    };
    WriteJsonFile(Partial(stats_path), stats);
    WriteJsonFile(Partial(hist_path), histogram.to_json());

    for (const auto& p : outputs) std::filesystem::rename(Partial(p), p);
    spdlog::info("{} of {} QA pairs retained at threshold {}", counts.retained,
                 counts.records, config.threshold);
    if (summary) *summary = counts;
    return 0;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    std::error_code ignored;
    for (const auto& p : outputs) std::filesystem::remove(Partial(p), ignored);
    return 1;
  }
}

}  // namespace vqae
