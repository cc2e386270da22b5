// vqae: explanation synthesis for visual question answering.
//
//   vqae score    --embeddings E --question Q --answer A --caption C
//   vqae convert  [--rules R] [--input pairs.jsonl]
//   vqae fuse     --embeddings E --question Q --answer A --caption C ...
//   vqae synth    --embeddings E --questions Q --annotations A --captions C
//                 --out O [--threshold T] [--workers N] [--histogram H]
//   vqae filter   --in X [--out Y] --threshold T [--retained-only]
//   vqae stats    --questions Q --annotations A --captions C [--explanations X]
//   vqae eval     --candidates X --references Y
//
// stdout carries JSON; logs go to stderr (level from VQAE_LOG).

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "vqae/corpus.h"
#include "vqae/embed.h"
#include "vqae/fuse.h"
#include "vqae/metrics.h"
#include "vqae/pipeline.h"
#include "vqae/qadecl.h"
#include "vqae/simscore.h"

namespace {

using nlohmann::json;
using nlohmann::ordered_json;
using vqae::TokenSource;

void AddThreshold(CLI::App* cmd, double& threshold) {
  cmd->add_option("--threshold", threshold,
                  "minimum explanation similarity for retention")
      ->capture_default_str();
}

int RunScore(const std::string& embeddings, const std::string& question,
             const std::string& answer, const std::string& caption) {
  vqae::EmbeddingLoad load = vqae::load_embeddings(embeddings);
  vqae::SimilarityScore s = vqae::qa_caption_sim(
      vqae::tokenize(question, TokenSource::kQuestion),
      vqae::tokenize(answer, TokenSource::kAnswer),
      vqae::tokenize(caption, TokenSource::kCaption), load.table);
  std::cout << ordered_json{{"value", s.value},
                            {"q_term", s.q_term},
                            {"a_term", s.a_term}}
                   .dump()
            << '\n';
  return 0;
}

int RunConvert(const std::string& rules_path, const std::string& types_path,
               const std::string& input) {
  vqae::RuleTable rules = vqae::RuleTable::load(rules_path);
  vqae::TypeInventory types = vqae::TypeInventory::load(types_path);
  std::ifstream file;
  if (!input.empty() && input != "-") {
    file.open(input);
    if (!file) throw std::runtime_error("cannot open " + input);
  }
  std::istream& in = file.is_open() ? file : std::cin;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json pair;
    try {
      pair = json::parse(line);
      pair.at("question").get<std::string>();
      pair.at("answer").get<std::string>();
    } catch (const std::exception& e) {
      throw std::runtime_error("input line " + std::to_string(line_no) +
                               ": expected {\"question\", \"answer\"}: " +
                               e.what());
    }
    vqae::Question q{pair.value("question_id", std::int64_t{0}), 0,
                     pair["question"].get<std::string>()};
    std::string answer =
        vqae::normalize_answer(pair["answer"].get<std::string>());
    std::optional<vqae::Statement> st = vqae::to_statement(q, answer, rules);
    ordered_json out{{"question", q.text},
                     {"answer", answer},
                     {"question_type", types.classify(q.text).prefix}};
    if (st) {
      out["statement"] = st->text;
      out["tree"] = vqae::print_bracketed(st->tree);
      out["rule_id"] = st->rule_id;
      out["provenance"] = "converted";
    } else {
      out["statement"] = nullptr;
      out["tree"] = nullptr;
      out["rule_id"] = nullptr;
      out["provenance"] = "none";
    }
    std::cout << out.dump() << '\n';
  }
  return 0;
}

struct FuseArgs {
  std::string embeddings;
  std::string rules = vqae::default_config_path("rules.json").string();
  std::string stopwords = vqae::default_config_path("function_words.txt").string();
  std::string question;
  std::string answer;
  std::vector<std::string> captions;
  std::vector<std::string> parses;
  double threshold = vqae::kDefaultThreshold;
  std::string postedit_cmd;
};

int RunFuse(const FuseArgs& args) {
  vqae::validate_threshold(args.threshold);
  if (!args.parses.empty() && args.parses.size() != args.captions.size()) {
    throw std::invalid_argument("--parse must be given once per --caption");
  }
  vqae::EmbeddingLoad load = vqae::load_embeddings(args.embeddings);
  vqae::RuleTable rules = vqae::RuleTable::load(args.rules);
  vqae::FunctionWords words = vqae::FunctionWords::load(args.stopwords);

  vqae::QARecord record;
  record.question = vqae::Question{0, 0, args.question};
  record.answer_set = vqae::make_answer_set(
      0, std::vector<std::string>(vqae::kAnswersPerQuestion, args.answer));
  for (std::size_t i = 0; i < args.captions.size(); ++i) {
    vqae::Caption c{static_cast<std::int64_t>(i), 0, args.captions[i],
                    std::nullopt};
    if (!args.parses.empty() && !args.parses[i].empty()) {
      c.tree = vqae::parse_bracketed(args.parses[i]);
    }
    record.captions.push_back(std::move(c));
  }

  vqae::SynthesisContext ctx;
  ctx.table = &load.table;
  ctx.rules = &rules;
  ctx.words = &words;
  ctx.threshold = args.threshold;
  if (!args.postedit_cmd.empty()) {
    ctx.external_postedit = vqae::command_postedit(args.postedit_cmd);
  }
  std::cout << vqae::to_json(vqae::synthesize(record, ctx)).dump() << '\n';
  return 0;
}

int RunFilter(const std::string& in_path, const std::string& out_path,
              double threshold, bool retained_only) {
  vqae::validate_threshold(threshold);
  vqae::ExplanationFile file = vqae::read_explanations(in_path);
  std::ofstream file_out;
  if (!out_path.empty() && out_path != "-") {
    file_out.open(out_path, std::ios::binary | std::ios::trunc);
    if (!file_out) throw std::runtime_error("cannot write " + out_path);
  }
  std::ostream& out = file_out.is_open() ? file_out : std::cout;
  if (file.manifest) {
    ordered_json manifest = *file.manifest;
    manifest["filter_threshold"] = threshold;
    out << ordered_json{{"manifest", manifest}}.dump() << '\n';
  }
  std::size_t kept = 0;
  for (vqae::ExplanationRecord& r : file.records) {
    r.retained = vqae::retain(r, threshold);
    if (r.retained) ++kept;
    if (retained_only && !r.retained) continue;
    out << vqae::to_json(r).dump() << '\n';
  }
  spdlog::info("{} of {} retained at threshold {}", kept, file.records.size(),
               threshold);
  return 0;
}

int RunStats(const vqae::CorpusPaths& corpus, const std::string& explanations,
             const std::string& types_path) {
  vqae::CorpusLoad load =
      vqae::load_corpus(corpus.questions, corpus.annotations, corpus.captions);
  vqae::TypeInventory types = vqae::TypeInventory::load(types_path);
  std::vector<vqae::ExplainedQA> retained;
  if (!explanations.empty()) {
    retained =
        vqae::retained_explanations(vqae::read_explanations(explanations).records);
  }
  vqae::StatsReport report = vqae::stats_report(
      {vqae::SplitInput{corpus.split, &load.records, &retained}}, &types);
  std::cout << vqae::to_json(report).dump(2) << '\n';
  return 0;
}

// One text per line: a JSON string, or an object carrying
// "explanation_text", "explanation" or "text". Manifest lines are skipped.
std::vector<vqae::TokenSeq> ReadTexts(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<vqae::TokenSeq> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json doc = json::parse(line);
    std::optional<std::string> text;
    if (doc.is_string()) {
      text = doc.get<std::string>();
    } else if (doc.is_object()) {
      if (doc.contains("manifest")) continue;
      for (const char* key : {"explanation_text", "explanation", "text"}) {
        if (doc.contains(key) && doc[key].is_string()) {
          text = doc[key].get<std::string>();
          break;
        }
      }
    }
    if (!text) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": no text field");
    }
    out.push_back(vqae::tokenize(*text, TokenSource::kExplanation));
  }
  return out;
}

int RunEval(const std::string& candidates, const std::string& references) {
  std::vector<vqae::TokenSeq> all_cand = ReadTexts(candidates);
  std::vector<vqae::TokenSeq> all_ref = ReadTexts(references);
  if (all_cand.size() != all_ref.size()) {
    throw std::runtime_error("candidate and reference files differ in length (" +
                             std::to_string(all_cand.size()) + " vs " +
                             std::to_string(all_ref.size()) + ")");
  }
  // Pairs with an empty side (unconverted records) are not scored.
  std::vector<vqae::TokenSeq> cand, ref;
  for (std::size_t i = 0; i < all_cand.size(); ++i) {
    if (all_cand[i].empty() || all_ref[i].empty()) continue;
    cand.push_back(std::move(all_cand[i]));
    ref.push_back(std::move(all_ref[i]));
  }
  const std::size_t skipped = all_cand.size() - cand.size();
  if (skipped) spdlog::warn("{} pairs with empty text skipped", skipped);
  vqae::TextScore s = vqae::text_scores(cand, ref);
  std::cout << ordered_json{{"B-1", s.bleu[0]},
                            {"B-2", s.bleu[1]},
                            {"B-3", s.bleu[2]},
                            {"B-4", s.bleu[3]},
                            {"R", s.rouge_l},
                            {"count", cand.size()},
                            {"skipped_empty", skipped},
                            {"bleu_smoothing", "none"},
                            {"rouge_beta", vqae::kRougeBeta}}
                   .dump(2)
            << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  vqae::configure_logging();
  CLI::App app{"Synthesize and evaluate explanations for visual QA pairs"};
  app.require_subcommand(1);

  std::string embeddings;
  std::string rules = vqae::default_config_path("rules.json").string();
  std::string types = vqae::default_config_path("question_types.txt").string();
  std::string stopwords =
      vqae::default_config_path("function_words.txt").string();
  double threshold = vqae::kDefaultThreshold;

  std::string question, answer, caption, input;
  auto* score = app.add_subcommand("score", "similarity of a QA pair to a caption");
  score->add_option("--embeddings", embeddings)->required();
  score->add_option("--question", question)->required();
  score->add_option("--answer", answer)->required();
  score->add_option("--caption", caption)->required();

  auto* convert = app.add_subcommand("convert", "QA pairs (JSON lines) to statements");
  convert->add_option("--rules", rules)->capture_default_str();
  convert->add_option("--types", types)->capture_default_str();
  convert->add_option("--input", input, "JSON lines file; stdin when omitted");

  FuseArgs fuse_args;
  auto* fuse = app.add_subcommand("fuse", "synthesize one explanation");
  fuse->add_option("--embeddings", fuse_args.embeddings)->required();
  fuse->add_option("--rules", fuse_args.rules)->capture_default_str();
  fuse->add_option("--stopwords", fuse_args.stopwords)->capture_default_str();
  fuse->add_option("--question", fuse_args.question)->required();
  fuse->add_option("--answer", fuse_args.answer)->required();
  fuse->add_option("--caption", fuse_args.captions)->required();
  fuse->add_option("--parse", fuse_args.parses,
                   "bracketed parse per caption (\"\" for none)");
  fuse->add_option("--postedit-cmd", fuse_args.postedit_cmd);
  AddThreshold(fuse, fuse_args.threshold);

  vqae::PipelineConfig config;
  vqae::CorpusPaths corpus;
  std::string histogram, stats_out, postedit_cmd;
  auto* synth = app.add_subcommand("synth", "synthesize explanations for a corpus");
  synth->add_option("--embeddings", config.embeddings_path)->required();
  synth->add_option("--rules", config.rule_table_path)->capture_default_str();
  synth->add_option("--types", config.type_inventory_path)->capture_default_str();
  synth->add_option("--stopwords", config.function_words_path)
      ->capture_default_str();
  synth->add_option("--questions", corpus.questions)->required();
  synth->add_option("--annotations", corpus.annotations)->required();
  synth->add_option("--captions", corpus.captions)->required();
  synth->add_option("--split", corpus.split)->capture_default_str();
  synth->add_option("--out", config.output_path)->required();
  synth->add_option("--workers", config.workers)->capture_default_str();
  synth->add_option("--histogram", histogram, "histogram path (default <out>.hist.json)");
  synth->add_option("--stats", stats_out, "stats path (default <out>.stats.json)");
  synth->add_option("--postedit-cmd", postedit_cmd,
                    "shell command applied to each post-edited explanation");
  AddThreshold(synth, config.threshold);

  std::string filter_in, filter_out;
  bool retained_only = false;
  auto* filter = app.add_subcommand("filter", "re-apply the retention threshold");
  filter->add_option("--in", filter_in)->required();
  filter->add_option("--out", filter_out, "output file; stdout when omitted");
  filter->add_flag("--retained-only", retained_only);
  AddThreshold(filter, threshold);

  vqae::CorpusPaths stats_corpus;
  std::string stats_explanations;
  auto* stats = app.add_subcommand("stats", "dataset statistics table");
  stats->add_option("--questions", stats_corpus.questions)->required();
  stats->add_option("--annotations", stats_corpus.annotations)->required();
  stats->add_option("--captions", stats_corpus.captions)->required();
  stats->add_option("--explanations", stats_explanations);
  stats->add_option("--split", stats_corpus.split)->capture_default_str();
  stats->add_option("--types", types)->capture_default_str();

  std::string candidates, references;
  auto* eval = app.add_subcommand("eval", "BLEU-1..4 and ROUGE-L");
  eval->add_option("--candidates", candidates)->required();
  eval->add_option("--references", references)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*score) return RunScore(embeddings, question, answer, caption);
    if (*convert) return RunConvert(rules, types, input);
    if (*fuse) return RunFuse(fuse_args);
    if (*synth) {
      if (!histogram.empty()) config.histogram_path = histogram;
      if (!stats_out.empty()) config.stats_path = stats_out;
      if (!postedit_cmd.empty()) config.postedit_cmd = postedit_cmd;
      return vqae::run_synth(config, corpus);
    }
    if (*filter) return RunFilter(filter_in, filter_out, threshold, retained_only);
    if (*stats) return RunStats(stats_corpus, stats_explanations, types);
    if (*eval) return RunEval(candidates, references);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 1;
}
