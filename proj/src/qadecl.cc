#include "vqae/qadecl.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <unordered_map>

#include "vqae/checksum.h"
#include "vqae/embed.h"

namespace vqae {
namespace {

using nlohmann::json;

// Closed-class lexicon shared by the noun-phrase heuristic and the tagger.
const std::set<std::string, std::less<>> kDeterminers = {
    "the", "a", "an", "some", "any", "each", "every", "another", "both", "no"};
const std::set<std::string, std::less<>> kDemonstratives = {"this", "that",
                                                            "these", "those"};
const std::set<std::string, std::less<>> kPossessives = {
    "his", "her", "their", "its", "my", "your", "our"};
const std::set<std::string, std::less<>> kPronouns = {
    "he", "she", "it", "they", "you", "i", "we", "him", "them", "me", "us"};
const std::set<std::string, std::less<>> kPrepositions = {
    "in",      "on",     "at",     "of",     "to",      "for",   "with",
    "by",      "from",   "into",   "onto",   "under",   "over",  "near",
    "behind",  "above",  "below",  "between", "through", "across", "inside",
    "outside", "around", "beside", "about",  "against", "along", "atop"};
const std::set<std::string, std::less<>> kConjunctions = {"and", "or", "but"};
const std::unordered_map<std::string, std::string> kAuxiliaries = {
    {"is", "VBZ"},   {"are", "VBP"},  {"was", "VBD"},  {"were", "VBD"},
    {"be", "VB"},    {"been", "VBN"}, {"being", "VBG"}, {"am", "VBP"},
    {"do", "VBP"},   {"does", "VBZ"}, {"did", "VBD"},  {"has", "VBZ"},
    {"have", "VBP"}, {"had", "VBD"},  {"can", "MD"},   {"could", "MD"},
    {"will", "MD"},  {"would", "MD"}, {"should", "MD"}, {"may", "MD"},
    {"might", "MD"}, {"must", "MD"}};
// Words that modify a following head noun; a noun phrase cannot end on them.
const std::set<std::string, std::less<>> kModifiers = {
    "red",    "blue",  "green", "yellow", "white",  "black", "brown",
    "orange", "pink",  "purple", "gray",  "grey",   "silver", "gold",
    "big",    "small", "large", "little", "tall",   "short", "long",
    "young",  "old",   "tiny",  "huge",   "many",   "several", "other",
    "two",    "three", "four",  "five",   "six",    "seven", "eight",
    "nine",   "ten"};
const std::set<std::string, std::less<>> kNumberWords = {
    "zero",     "one",     "two",     "three",     "four",     "five",
    "six",      "seven",   "eight",   "nine",      "ten",      "eleven",
    "twelve",   "thirteen", "fourteen", "fifteen", "sixteen",  "seventeen",
    "eighteen", "nineteen", "twenty"};

bool IsNumeral(std::string_view s) {
  if (s.empty()) return false;
  bool digit = false;
  for (char c : s) {
    if (std::isdigit(static_cast<unsigned char>(c))) {
      digit = true;
    } else if (c != '.' && c != ',') {
      return false;
    }
  }
  return digit;
}

bool Contains(const std::set<std::string, std::less<>>& set,
              std::string_view s) {
  return set.find(s) != set.end();
}

bool IsAuxiliary(std::string_view s) {
  return kAuxiliaries.count(std::string(s)) > 0;
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

bool IsSlotRef(std::string_view token) {
  return token.size() > 1 && token[0] == '$';
}

class RuleBuilder {
 public:
  RuleBuilder(const json& doc, std::size_t index) : doc_(doc), index_(index) {}

  RewriteRule Build() {
    if (!doc_.is_object()) Fail("rule must be an object");
    RewriteRule rule{
        .rule_id = String("rule_id"),
        .question_pattern = {},
        .answer_type = AnswerType::kPhrase,
        .template_tokens = {},
        .template_tree = ParseTree(),
    };
    if (rule.rule_id.empty()) Fail("empty rule_id");
    id_ = rule.rule_id;

    std::set<std::string> bound;
    for (const std::string& raw : SplitSpace(String("question_pattern"))) {
      PatternToken token = Token(raw, "question_pattern");
      if (token.is_slot) {
        if (token.text == "ans") Fail("$ans cannot appear in question_pattern");
        if (!bound.insert(token.text).second) {
          Fail("slot $" + token.text + " bound twice");
        }
      }
      rule.question_pattern.push_back(std::move(token));
    }
    if (rule.question_pattern.empty()) Fail("empty question_pattern");
    bound.insert("ans");

    std::string type = String("answer_type");
    if (type == "yes") {
      rule.answer_type = AnswerType::kYes;
    } else if (type == "no") {
      rule.answer_type = AnswerType::kNo;
    } else if (type == "number") {
      rule.answer_type = AnswerType::kNumber;
    } else if (type == "phrase") {
      rule.answer_type = AnswerType::kPhrase;
    } else {
      Fail("unknown answer_type '" + type + "'");
    }

    std::vector<std::string> template_words = SplitSpace(String("template"));
    if (template_words.empty()) Fail("empty template");
    for (const std::string& raw : template_words) {
      PatternToken token = Token(raw, "template");
      if (token.is_slot && !bound.count(token.text)) {
        Fail("template references unbound slot $" + token.text);
      }
      rule.template_tokens.push_back(std::move(token));
    }

    std::vector<std::string> leaves = leaves_of(rule.template_tree.root());
    for (const std::string& leaf : leaves) {
      if (IsSlotRef(leaf) && !bound.count(leaf.substr(1))) {
        Fail("template_tree references unbound slot " + leaf);
      }
    }
    if (leaves != template_words) {
      Fail("template_tree leaves '" + join_tokens(leaves) +
           "' do not match template '" + join_tokens(template_words) + "'");
    }
    return rule;
  }

 private:
  [[noreturn]] void Fail(const std::string& why) const {
    std::string who = id_.empty() ? "rule #" + std::to_string(index_)
                                  : "rule '" + id_ + "'";
    throw RuleTableError(who + ": " + why);
  }

  std::string String(const char* field) const {
    auto it = doc_.find(field);
    if (it == doc_.end() || !it->is_string()) {
      Fail(std::string("field '") + field + "' must be a string");
    }
    return it->get<std::string>();
  }

  ConstTree ParseTree() const {
    try {
      return parse_bracketed(String("template_tree"));
    } catch (const TreeError& e) {
      Fail(std::string("template_tree: ") + e.what());
    }
  }

  PatternToken Token(const std::string& raw, const char* field) const {
    if (IsSlotRef(raw)) return PatternToken{raw.substr(1), true};
    TokenSeq clean = tokenize(raw);
    if (clean.tokens.size() != 1 || clean.tokens[0] != raw) {
      Fail(std::string(field) + ": literal '" + raw +
           "' is not a lowercase token");
    }
    return PatternToken{raw, false};
  }

  const json& doc_;
  std::size_t index_;
  std::string id_;
};

using Bindings = std::unordered_map<std::string, std::vector<std::string>>;

bool Match(const std::vector<PatternToken>& pattern, std::size_t p,
           const std::vector<std::string>& tokens, std::size_t t,
           Bindings& bound) {
  if (p == pattern.size()) return t == tokens.size();
  const PatternToken& pt = pattern[p];
  if (!pt.is_slot) {
    if (t >= tokens.size() || tokens[t] != pt.text) return false;
    return Match(pattern, p + 1, tokens, t + 1, bound);
  }
  const bool last = p + 1 == pattern.size();
  const bool noun_phrase = pt.text.rfind("np", 0) == 0;
  // Shortest binding first.
  for (std::size_t len = last ? tokens.size() - std::min(t, tokens.size()) : 1;
       t + len <= tokens.size() && len > 0; ++len) {
    std::vector<std::string> span(tokens.begin() + t,
                                  tokens.begin() + t + len);
    if (noun_phrase && !plausible_noun_phrase(span)) continue;
    bound[pt.text] = std::move(span);
    if (Match(pattern, p + 1, tokens, t + len, bound)) return true;
  }
  bound.erase(pt.text);
  return false;
}

bool Accepts(AnswerType rule, AnswerType answer) {
  if (rule == AnswerType::kPhrase) {
    return answer == AnswerType::kPhrase || answer == AnswerType::kNumber;
  }
  return rule == answer;
}

Node Expand(const Node& node, const Bindings& bound) {
  if (node.is_leaf()) {
    if (!IsSlotRef(node.token())) return node;
    const std::vector<std::string>& tokens = bound.at(node.token().substr(1));
    if (tokens.size() == 1) return Node::Leaf(node.label(), tokens.front());
    std::vector<Node> leaves;
    for (const std::string& t : tokens) {
      leaves.push_back(Node::Leaf(lexicon_tag(t), t));
    }
    return Node::Internal(node.label(), std::move(leaves));
  }
  std::vector<Node> children;
  for (const Node& child : node.children()) {
    children.push_back(Expand(child, bound));
  }
  return Node::Internal(node.label(), std::move(children));
}

}  // namespace

TypeInventory::TypeInventory(std::vector<std::string> prefixes)
    : prefixes_(std::move(prefixes)) {
  for (const std::string& p : prefixes_) {
    tokenized_.push_back(tokenize(p, TokenSource::kQuestion).tokens);
    if (tokenized_.back().empty()) {
      throw std::invalid_argument("empty question type prefix");
    }
  }
}

TypeInventory TypeInventory::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open type inventory " + path.string());
  std::vector<std::string> prefixes;
  std::string line;
  while (std::getline(in, line)) {
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::string prefix = join_tokens(SplitSpace(line));
    if (!prefix.empty()) prefixes.push_back(ascii_lower(prefix));
  }
  return TypeInventory(std::move(prefixes));
}

QuestionType TypeInventory::classify(std::string_view question) const {
  std::vector<std::string> tokens =
      tokenize(question, TokenSource::kQuestion).tokens;
  QuestionType best{kOtherType, 0};
  for (std::size_t i = 0; i < prefixes_.size(); ++i) {
    const auto& prefix = tokenized_[i];
    if (prefix.size() <= best.rank || prefix.size() > tokens.size()) continue;
    if (std::equal(prefix.begin(), prefix.end(), tokens.begin())) {
      best = QuestionType{prefixes_[i], prefix.size()};
    }
  }
  return best;
}

AnswerType answer_type_of(std::string_view answer) {
  std::string a = join_tokens(tokenize(answer, TokenSource::kAnswer).tokens);
  if (a == "yes") return AnswerType::kYes;
  if (a == "no") return AnswerType::kNo;
  if (IsNumeral(a) || Contains(kNumberWords, a)) return AnswerType::kNumber;
  return AnswerType::kPhrase;
}

std::string_view to_string(AnswerType type) {
  switch (type) {
    case AnswerType::kYes: return "yes";
    case AnswerType::kNo: return "no";
    case AnswerType::kNumber: return "number";
    case AnswerType::kPhrase: return "phrase";
  }
  return "phrase";
}

RuleTable RuleTable::from_json(const json& doc,
                               const std::string& fallback_version) {
  RuleTable table;
  const json* rules = &doc;
  table.version_ = fallback_version;
  if (doc.is_object()) {
    if (auto v = doc.find("version"); v != doc.end() && v->is_string()) {
      table.version_ = v->get<std::string>();
    }
    auto r = doc.find("rules");
    if (r == doc.end()) throw RuleTableError("rule table object needs 'rules'");
    rules = &*r;
  }
  if (!rules->is_array()) throw RuleTableError("rules must be a JSON array");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < rules->size(); ++i) {
    RewriteRule rule = RuleBuilder((*rules)[i], i).Build();
    if (!ids.insert(rule.rule_id).second) {
      throw RuleTableError("duplicate rule_id '" + rule.rule_id + "'");
    }
    table.rules_.push_back(std::move(rule));
  }
  return table;
}

RuleTable RuleTable::load(const std::filesystem::path& path) {
  std::string bytes = read_file(path);
  json doc;
  try {
    doc = json::parse(bytes);
  } catch (const json::parse_error& e) {
    throw RuleTableError(path.string() + ": invalid JSON: " + e.what());
  }
  return from_json(doc, "sha256:" + sha256_hex(bytes).substr(0, 16));
}

const RewriteRule* RuleTable::find(std::string_view rule_id) const {
  for (const RewriteRule& r : rules_) {
    if (r.rule_id == rule_id) return &r;
  }
  return nullptr;
}

bool plausible_noun_phrase(const std::vector<std::string>& tokens) {
  if (tokens.empty()) return false;
  const std::string& first = tokens.front();
  const std::string& last = tokens.back();
  if (Contains(kPrepositions, first) || Contains(kConjunctions, first)) {
    return false;
  }
  for (const std::string& t : tokens) {
    if (IsAuxiliary(t)) return false;
  }
  if (Contains(kDeterminers, last) || Contains(kPossessives, last) ||
      Contains(kPrepositions, last) || Contains(kConjunctions, last) ||
      Contains(kModifiers, last)) {
    return false;
  }
  if (tokens.size() > 1 && Contains(kDemonstratives, last)) return false;
  if (last.size() > 2 && last.ends_with("'s")) return false;
  return true;
}

std::string lexicon_tag(std::string_view token) {
  std::string t(token);
  if (Contains(kDeterminers, t) || Contains(kDemonstratives, t)) return "DT";
  if (Contains(kPossessives, t)) return "PRP$";
  if (Contains(kPronouns, t)) return "PRP";
  if (Contains(kPrepositions, t)) return "IN";
  if (Contains(kConjunctions, t)) return "CC";
  if (IsNumeral(t) || Contains(kNumberWords, t)) return "CD";
  if (auto it = kAuxiliaries.find(t); it != kAuxiliaries.end()) {
    return it->second;
  }
  if (t == "not") return "RB";
  if (t == "there") return "EX";
  return "X";
}

std::optional<Statement> to_statement(const Question& question,
                                      std::string_view answer,
                                      const RuleTable& rules) {
  std::vector<std::string> q =
      tokenize(question.text, TokenSource::kQuestion).tokens;
  std::vector<std::string> a = tokenize(answer, TokenSource::kAnswer).tokens;
  if (q.empty() || a.empty()) return std::nullopt;
  const AnswerType type = answer_type_of(answer);

  for (const RewriteRule& rule : rules.rules()) {
    if (!Accepts(rule.answer_type, type)) continue;
    Bindings bound;
    if (!Match(rule.question_pattern, 0, q, 0, bound)) continue;
    bound["ans"] = a;

    std::vector<std::string> words;
    for (const PatternToken& t : rule.template_tokens) {
      if (!t.is_slot) {
        words.push_back(t.text);
        continue;
      }
      const auto& slot = bound.at(t.text);
      words.insert(words.end(), slot.begin(), slot.end());
    }
    return Statement{join_tokens(words),
                     ConstTree(Expand(rule.template_tree.root(), bound)),
                     rule.rule_id};
  }
  return std::nullopt;
}

}  // namespace vqae
