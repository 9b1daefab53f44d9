#include "eval/evaluation.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <sstream>

#include "core/errors.hpp"
#include "prompts/templates.hpp"

namespace cycleprompt::eval {

using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

const std::map<std::string, std::string, std::less<>>& number_words() {
  static const std::map<std::string, std::string, std::less<>> m{
      {"none", "0"},      {"zero", "0"},     {"one", "1"},       {"two", "2"},        {"three", "3"},
      {"four", "4"},      {"five", "5"},     {"six", "6"},       {"seven", "7"},      {"eight", "8"},
      {"nine", "9"},      {"ten", "10"},     {"eleven", "11"},   {"twelve", "12"},    {"thirteen", "13"},
      {"fourteen", "14"}, {"fifteen", "15"}, {"sixteen", "16"},  {"seventeen", "17"}, {"eighteen", "18"},
      {"nineteen", "19"}, {"twenty", "20"},  {"thirty", "30"},   {"forty", "40"},     {"fifty", "50"},
      {"sixty", "60"},    {"seventy", "70"}, {"eighty", "80"},   {"ninety", "90"}};
  return m;
}

bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

double exact_mean(int ones, int count) { return static_cast<double>(ones) / static_cast<double>(count); }

}  // namespace

const char* to_string(QaSource source) {
  switch (source) {
    case QaSource::kVqav2: return "vqav2";
    case QaSource::kFigureqa: return "figureqa";
    case QaSource::kCustom: return "custom";
  }
  return "custom";
}

QaSource parse_qa_source(std::string_view name) {
  if (name == "vqav2") return QaSource::kVqav2;
  if (name == "figureqa") return QaSource::kFigureqa;
  if (name == "custom") return QaSource::kCustom;
  throw ParseError("unknown benchmark source '" + std::string(name) + "'");
}

const char* to_string(GradeMode mode) {
  return mode == GradeMode::kExactNormalized ? "exact_normalized" : "vqa_consensus";
}

GradeMode parse_grade_mode(std::string_view name) {
  if (name == "exact_normalized") return GradeMode::kExactNormalized;
  if (name == "vqa_consensus") return GradeMode::kVqaConsensus;
  throw ParseError("unknown grade mode '" + std::string(name) + "'");
}

std::string normalize_answer(std::string_view answer) {
  std::string spaced;
  spaced.reserve(answer.size());
  for (std::size_t i = 0; i < answer.size(); ++i) {
    const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(answer[i])));
    const bool between_digits = i > 0 && i + 1 < answer.size() && is_digit(answer[i - 1]) && is_digit(answer[i + 1]);
    if (std::isalnum(static_cast<unsigned char>(c))) {
      spaced += c;
    } else if (c == '.' && between_digits) {
      spaced += c;
    } else if ((c == ',' && between_digits) || c == '\'') {
      // 1,000 -> 1000; don't -> dont
    } else {
      spaced += ' ';
    }
  }
  std::istringstream in(spaced);
  std::string token;
  std::string out;
  while (in >> token) {
    if (token == "a" || token == "an" || token == "the") continue;
    if (const auto it = number_words().find(token); it != number_words().end()) token = it->second;
    if (!out.empty()) out += ' ';
    out += token;
  }
  return out;
}

bool grade_answer(std::string_view predicted, const std::vector<std::string>& gold, GradeMode mode) {
  if (gold.empty()) throw PreconditionError("gold answers must not be empty");
  const std::string p = normalize_answer(predicted);
  int matches = 0;
  for (const auto& g : gold) {
    if (normalize_answer(g) == p) ++matches;
  }
  if (mode == GradeMode::kExactNormalized) return matches > 0;
  // min(matches / 3, 1) >= 1
  return std::min(matches, 3) == 3;
}

double mean_alignment(const std::vector<Assertion>& assertions) {
  if (assertions.empty()) throw PreconditionError("no assertions to average");
  int ones = 0;
  for (const auto& a : assertions) {
    if (!a.alignment) throw PreconditionError("assertion '" + a.text + "' has not been scored");
    if (*a.alignment != 0.0 && *a.alignment != 1.0) throw PreconditionError("alignments must be 0 or 1");
    if (*a.alignment == 1.0) ++ones;
  }
  return exact_mean(ones, static_cast<int>(assertions.size()));
}

std::vector<std::string> parse_assertion_lines(std::string_view response) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  std::istringstream in{std::string(response)};
  std::string line;
  while (std::getline(in, line)) {
    std::string_view v = line;
    auto t = trim(v);
    v = t;
    // Bullets, then "1." / "1)" numbering.
    while (!v.empty() && (v.front() == '-' || v.front() == '*' || v.front() == '\xe2')) {
      if (v.front() == '\xe2') {
        if (v.substr(0, 3) != "\xe2\x80\xa2") break;
        v.remove_prefix(3);
      } else {
        v.remove_prefix(1);
      }
      t = trim(v);
      v = t;
    }
    std::size_t digits = 0;
    while (digits < v.size() && is_digit(v[digits])) ++digits;
    if (digits > 0 && digits < v.size() && (v[digits] == '.' || v[digits] == ')')) v.remove_prefix(digits + 1);
    std::string text = trim(v);
    if (text.empty()) continue;
    if (seen.insert(text).second) out.push_back(std::move(text));
  }
  return out;
}

bool parse_yes(std::string_view reply) {
  const auto n = normalize_answer(reply);
  return n == "yes" || n.rfind("yes ", 0) == 0;
}

std::string render_visual_qa_prompt(std::string_view question) {
  return prompts::fill(prompts::kVisualQa, {{"{question}", question}});
}

std::string render_text_qa_prompt(std::string_view caption, std::string_view question) {
  return prompts::fill(prompts::kTextQa, {{"{caption}", caption}, {"{question}", question}});
}

Evaluator::Evaluator(providers::ChatBinding text, providers::ChatBinding vision)
    : text_(std::move(text)), vision_(std::move(vision)) {}

std::string Evaluator::visual_qa(const QAItem& item) const {
  if (!item.image) throw PreconditionError("item " + item.item_id + " has no image");
  if (trim(item.question).empty()) throw PreconditionError("item " + item.item_id + " has no question");
  return trim(vision_.complete({{providers::Role::kUser, render_visual_qa_prompt(item.question), {*item.image}}}));
}

std::string Evaluator::text_qa(std::string_view caption, std::string_view question) const {
  if (trim(caption).empty() || trim(question).empty()) {
    throw PreconditionError("text QA needs a caption and a question");
  }
  return trim(text_.complete({{providers::Role::kUser, render_text_qa_prompt(caption, question), {}}}));
}

DaResult Evaluator::da_score(std::string_view caption, const std::filesystem::path& image,
                             bool include_negatives) const {
  if (trim(caption).empty()) throw PreconditionError("DA-Score needs a caption");
  const auto positives = parse_assertion_lines(
      text_.complete({{providers::Role::kUser, prompts::fill(prompts::kDecomposeCaption, {{"{caption}", caption}}), {}}}));
  if (positives.empty()) throw DecompositionError("caption decomposed into zero assertions");

  DaResult r;
  for (const auto& p : positives) r.assertions.push_back({p, Polarity::kPositive, std::nullopt});
  if (include_negatives) {
    std::string listing;
    for (const auto& p : positives) listing += p + "\n";
    listing.pop_back();
    const auto negatives = parse_assertion_lines(text_.complete(
        {{providers::Role::kUser, prompts::fill(prompts::kNegateAssertions, {{"{assertions}", listing}}), {}}}));
    if (negatives.size() != positives.size()) {
      throw DecompositionError("expected " + std::to_string(positives.size()) + " counter-assertions, got " +
                               std::to_string(negatives.size()));
    }
    for (const auto& n : negatives) r.assertions.push_back({n, Polarity::kNegative, std::nullopt});
  }

  std::vector<Assertion> pos_only;
  for (auto& a : r.assertions) {
    const bool yes = parse_yes(vision_.complete(
        {{providers::Role::kUser, prompts::fill(prompts::kAlignmentQuestion, {{"{assertion}", a.text}}), {image}}}));
    // A contradiction the image shows counts against the caption.
    a.alignment = (a.polarity == Polarity::kPositive) == yes ? 1.0 : 0.0;
    if (a.polarity == Polarity::kPositive) pos_only.push_back(a);
  }
  r.positive = mean_alignment(pos_only);
  if (include_negatives) r.with_negatives = mean_alignment(r.assertions);
  r.score = r.with_negatives.value_or(r.positive);
  return r;
}

EvalReport make_report(std::vector<GradedItem> items, const std::vector<DaResult>& da) {
  std::sort(items.begin(), items.end(), [](const GradedItem& a, const GradedItem& b) { return a.item_id < b.item_id; });
  EvalReport r;
  r.n_items = static_cast<int>(items.size());
  for (const auto& it : items) r.n_correct += it.correct ? 1 : 0;
  r.accuracy = r.n_items == 0 ? 0.0 : exact_mean(r.n_correct, r.n_items);
  r.per_item = std::move(items);
  if (!da.empty()) {
    // Per-caption scores averaged in a fixed (input) order.
    double p = 0.0;
    double n = 0.0;
    bool all_negative = true;
    for (const auto& d : da) {
      p += d.positive;
      if (d.with_negatives) n += *d.with_negatives;
      else all_negative = false;
    }
    r.da_positive = p / static_cast<double>(da.size());
    if (all_negative) r.da_with_negatives = n / static_cast<double>(da.size());
  }
  return r;
}

json to_json(const EvalReport& r) {
  json items = json::array();
  for (const auto& it : r.per_item) {
    items.push_back(
        {{"item_id", it.item_id}, {"question", it.question}, {"prediction", it.prediction}, {"correct", it.correct}});
  }
  json j{{"accuracy", r.accuracy}, {"n_items", r.n_items}, {"n_correct", r.n_correct}, {"per_item", std::move(items)}};
  j["da_positive"] = r.da_positive ? json(*r.da_positive) : json(nullptr);
  j["da_with_negatives"] = r.da_with_negatives ? json(*r.da_with_negatives) : json(nullptr);
  return j;
}

EvalReport eval_report_from_json(const json& j) {
  try {
    EvalReport r;
    r.accuracy = j.at("accuracy").get<double>();
    r.n_items = j.at("n_items").get<int>();
    r.n_correct = j.at("n_correct").get<int>();
    if (j.contains("da_positive") && !j["da_positive"].is_null()) r.da_positive = j["da_positive"].get<double>();
    if (j.contains("da_with_negatives") && !j["da_with_negatives"].is_null()) {
      r.da_with_negatives = j["da_with_negatives"].get<double>();
    }
    for (const auto& it : j.at("per_item")) {
      r.per_item.push_back({it.at("item_id").get<std::string>(), it.value("question", ""),
                            it.at("prediction").get<std::string>(), it.at("correct").get<bool>()});
    }
    return r;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed eval report: ") + e.what());
  }
}

}  // namespace cycleprompt::eval
