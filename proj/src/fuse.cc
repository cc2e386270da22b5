#include "vqae/fuse.h"

#include <cctype>
#include <fstream>
#include <stdexcept>

namespace vqae {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

struct NodeInfo {
  NodePath path;
  Span span;
  std::vector<std::string> yield;
};

std::vector<NodeInfo> Nodes(const ConstTree& tree) {
  std::vector<NodeInfo> out;
  visit_preorder(tree, [&](const Node& node, const NodePath& path) {
    out.push_back(NodeInfo{path, node.span(), yield_of(node)});
  });
  return out;
}

std::set<std::string> ContentSet(const std::vector<std::string>& yield,
                                  const FunctionWords& words) {
  std::set<std::string> out;
  for (const std::string& t : yield) {
    if (words.is_content(t)) out.insert(t);
  }
  return out;
}

bool AddsContent(const std::vector<std::string>& yield,
                 const std::set<std::string>& known,
                 const FunctionWords& words) {
  for (const std::string& t : yield) {
    if (words.is_content(t) && !known.count(t)) return true;
  }
  return false;
}

bool IsArticle(const std::string& lower) { return lower == "a" || lower == "an"; }

bool StartsWithVowelLetter(std::string_view token) {
  if (token.empty()) return false;
  char c = static_cast<char>(std::tolower(static_cast<unsigned char>(token[0])));
  return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
}

// Per input token: nullopt when dropped, else the (possibly rewritten) token.
std::vector<std::optional<std::string>> PlanTokenEdits(
    const std::vector<std::string>& tokens) {
  std::vector<std::optional<std::string>> plan(tokens.size());
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!kept.empty() &&
        ascii_lower(tokens[kept.back()]) == ascii_lower(tokens[i])) {
      continue;
    }
    plan[i] = tokens[i];
    kept.push_back(i);
  }
  for (std::size_t k = 0; k + 1 < kept.size(); ++k) {
    std::string& token = *plan[kept[k]];
    if (!IsArticle(ascii_lower(token))) continue;
    const bool an = StartsWithVowelLetter(*plan[kept[k + 1]]);
    const bool upper = std::isupper(static_cast<unsigned char>(token[0]));
    token = an ? (upper ? "An" : "an") : (upper ? "A" : "a");
  }
  return plan;
}

std::vector<std::string> SplitSpace(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!current.empty()) out.push_back(std::move(current));
      current.clear();
    } else {
      current += c;
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

std::optional<Node> ApplyPlan(const Node& node,
                              const std::vector<std::optional<std::string>>& plan,
                              std::size_t& next_leaf) {
  if (node.is_leaf()) {
    const auto& edit = plan[next_leaf++];
    if (!edit) return std::nullopt;
    return Node::Leaf(node.label(), *edit);
  }
  std::vector<Node> children;
  for (const Node& child : node.children()) {
    if (auto kept = ApplyPlan(child, plan, next_leaf)) {
      children.push_back(std::move(*kept));
    }
  }
  if (children.empty()) return std::nullopt;
  return Node::Internal(node.label(), std::move(children));
}

}  // namespace

FunctionWords::FunctionWords(std::vector<std::string> words) {
  for (std::string& w : words) words_.insert(ascii_lower(w));
}

FunctionWords FunctionWords::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open stoplist " + path.string());
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    for (std::string& w : SplitSpace(line)) words.push_back(std::move(w));
  }
  return FunctionWords(std::move(words));
}

bool FunctionWords::is_content(std::string_view token) const {
  return token.size() >= 2 && words_.find(ascii_lower(token)) == words_.end();
}

std::optional<Alignment> align(const ConstTree& statement,
                               const ConstTree& caption,
                               const FunctionWords& words) {
  std::vector<NodeInfo> s_nodes = Nodes(statement);
  std::vector<NodeInfo> c_nodes = Nodes(caption);
  const NodeInfo* best_s = nullptr;
  const NodeInfo* best_c = nullptr;
  auto better = [&](const NodeInfo& s, const NodeInfo& c) {
    if (!best_s) return true;
    if (s.yield.size() != best_s->yield.size()) {
      return s.yield.size() > best_s->yield.size();
    }
    if (c.span.begin != best_c->span.begin) {
      return c.span.begin < best_c->span.begin;
    }
    return s.span.begin < best_s->span.begin;
  };
  // Pre-order visits ancestors first, so keeping the first of equal keys
  // selects the outermost node of a unary chain.
  for (const NodeInfo& c : c_nodes) {
    if (ContentSet(c.yield, words).empty()) continue;
    for (const NodeInfo& s : s_nodes) {
      if (s.yield != c.yield) continue;
      if (better(s, c)) {
        best_s = &s;
        best_c = &c;
      }
    }
  }
  if (!best_s) return std::nullopt;
  return Alignment{best_s->span, best_c->span, best_s->path, best_c->path,
                   best_s->yield};
}

MergeResult merge(const ConstTree& statement, const ConstTree& caption,
                  const Alignment& alignment, const FunctionWords& words) {
  std::set<std::string> caption_words;
  for (std::string& t : yield_of(caption.root())) caption_words.insert(t);

  std::optional<NodePath> graft_path;
  NodePath path = alignment.statement_path;
  while (!path.empty()) {
    path.pop_back();
    if (AddsContent(yield_of(node_at(statement, path)), caption_words, words)) {
      graft_path = path;
      break;
    }
  }
  if (!graft_path) return MergeResult{caption, false};
  const Node& graft = node_at(statement, *graft_path);

  std::set<std::string> graft_words;
  for (std::string& t : yield_of(graft)) graft_words.insert(t);
  NodePath target = alignment.caption_path;
  while (!target.empty()) {
    NodePath parent(target.begin(), target.end() - 1);
    if (AddsContent(yield_of(node_at(caption, parent)), graft_words, words)) {
      break;
    }
    target = std::move(parent);
  }
  // A widened target is never a unary child (its parent would have the same
  // yield), so it is the outermost node with its span.
  return MergeResult{replace_child(caption, node_at(caption, target).span(),
                                   graft, SpanMatch::kOutermost),
                     true};
}

std::string postedit(std::string_view text) {
  std::vector<std::string> tokens = SplitSpace(text);
  std::vector<std::optional<std::string>> plan = PlanTokenEdits(tokens);
  std::string out;
  for (const auto& t : plan) {
    if (!t) continue;
    if (!out.empty()) out += ' ';
    out += *t;
  }
  if (!out.empty()) {
    out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  }
  while (!out.empty() && (out.back() == '.' || out.back() == ' ')) {
    out.pop_back();
  }
  if (!out.empty()) out += '.';
  return out;
}

ConstTree postedit_tree(const ConstTree& tree) {
  std::vector<std::optional<std::string>> plan =
      PlanTokenEdits(leaves_of(tree.root()));
  std::size_t next_leaf = 0;
  // The first leaf is always kept, so the root survives.
  return ConstTree(*ApplyPlan(tree.root(), plan, next_leaf));
}

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::kFused: return "fused";
    case Provenance::kCaptionOnly: return "caption_only";
    case Provenance::kNone: return "none";
  }
  return "none";
}

Provenance provenance_from_string(std::string_view s) {
  if (s == "fused") return Provenance::kFused;
  if (s == "caption_only") return Provenance::kCaptionOnly;
  if (s == "none") return Provenance::kNone;
  throw std::invalid_argument("unknown provenance '" + std::string(s) + "'");
}

bool retain(const ExplanationRecord& record, double threshold) {
  return record.provenance != Provenance::kNone &&
         record.similarity.value >= threshold;
}

ordered_json to_json(const ExplanationRecord& r) {
  ordered_json j;
  j["question_id"] = r.question_id;
  j["caption_id"] = r.caption_id;
  j["explanation_text"] = r.explanation_text;
  j["explanation_tree"] = r.explanation_tree
                              ? ordered_json(print_bracketed(*r.explanation_tree))
                              : ordered_json(nullptr);
  j["similarity"] = {{"value", r.similarity.value},
                     {"q_term", r.similarity.q_term},
                     {"a_term", r.similarity.a_term}};
  j["retained"] = r.retained;
  j["provenance"] = std::string(to_string(r.provenance));
  j["rule_id"] = r.rule_id.empty() ? ordered_json(nullptr)
                                   : ordered_json(r.rule_id);
  j["statement"] = r.statement.empty() ? ordered_json(nullptr)
                                       : ordered_json(r.statement);
  return j;
}

ExplanationRecord explanation_from_json(const json& j) {
  ExplanationRecord r;
  r.question_id = j.at("question_id").get<std::int64_t>();
  r.caption_id = j.at("caption_id").get<std::int64_t>();
  r.explanation_text = j.at("explanation_text").get<std::string>();
  if (auto t = j.find("explanation_tree"); t != j.end() && t->is_string()) {
    r.explanation_tree = parse_bracketed(t->get<std::string>());
  }
  const json& s = j.at("similarity");
  r.similarity = SimilarityScore{s.at("value").get<double>(),
                                 s.at("q_term").get<double>(),
                                 s.at("a_term").get<double>()};
  r.retained = j.at("retained").get<bool>();
  r.provenance = provenance_from_string(j.at("provenance").get<std::string>());
  if (auto v = j.find("rule_id"); v != j.end() && v->is_string()) {
    r.rule_id = v->get<std::string>();
  }
  if (auto v = j.find("statement"); v != j.end() && v->is_string()) {
    r.statement = v->get<std::string>();
  }
  return r;
}

void validate_threshold(double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw std::invalid_argument("threshold must lie in [0, 1], got " +
                                std::to_string(threshold));
  }
}

ConstTree caption_tree(const Caption& caption) {
  if (caption.tree) return *caption.tree;
  std::vector<std::string> tokens =
      tokenize(caption.text, TokenSource::kCaption).tokens;
  if (tokens.empty()) tokens = SplitSpace(caption.text);
  return flat_tree(tokens);
}

ExplanationRecord synthesize(const QARecord& record,
                             const SynthesisContext& ctx) {
  validate_threshold(ctx.threshold);
  const EmbeddingTable& table = *ctx.table;
  const std::string& answer = record.answer_set.majority_answer;
  TokenSeq q = tokenize(record.question.text, TokenSource::kQuestion);
  TokenSeq a = tokenize(answer, TokenSource::kAnswer);

  CaptionMatch match = best_caption(q, a, record.captions, table);
  const Caption& caption = record.captions[match.index];

  ExplanationRecord out;
  out.question_id = record.question.question_id;
  out.caption_id = match.caption_id;

  std::optional<Statement> statement =
      to_statement(record.question, answer, *ctx.rules);
  if (!statement) {
    out.provenance = Provenance::kNone;
    out.retained = false;
    return out;
  }
  out.rule_id = statement->rule_id;
  out.statement = statement->text;

  ConstTree base = caption_tree(caption);
  ConstTree fused_tree = base;
  out.provenance = Provenance::kCaptionOnly;
  if (auto alignment = align(statement->tree, base, *ctx.words)) {
    MergeResult merged = merge(statement->tree, base, *alignment, *ctx.words);
    if (merged.fused) {
      fused_tree = std::move(merged.tree);
      out.provenance = Provenance::kFused;
    }
  }

  out.explanation_text = postedit(join_tokens(leaves_of(fused_tree.root())));
  out.explanation_tree = postedit_tree(fused_tree);
  if (ctx.external_postedit) {
    std::string edited = ctx.external_postedit(out.explanation_text);
    std::vector<std::string> edited_tokens =
        tokenize(edited, TokenSource::kExplanation).tokens;
    if (!edited_tokens.empty()) {
      if (edited_tokens !=
          tokenize(out.explanation_text, TokenSource::kExplanation).tokens) {
        out.explanation_tree = flat_tree(edited_tokens);
      }
      out.explanation_text = std::move(edited);
    }
  }

  out.similarity = qa_caption_sim(
      q, a, tokenize(out.explanation_text, TokenSource::kExplanation), table);
  out.retained = retain(out, ctx.threshold);
  return out;
}

}  // namespace vqae
