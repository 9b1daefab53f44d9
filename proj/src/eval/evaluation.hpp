#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "providers/provider.hpp"

namespace cycleprompt::eval {

enum class QaSource { kVqav2, kFigureqa, kCustom };

const char* to_string(QaSource source);
/// "vqav2", "figureqa", "custom". Throws ParseError.
QaSource parse_qa_source(std::string_view name);

struct QAItem {
  std::string item_id;
  std::optional<std::filesystem::path> image;
  std::string question;
  // VQAv2: the multiple-choice answer first, then the annotator answers.
  std::vector<std::string> gold_answers;
  QaSource source = QaSource::kCustom;

  friend bool operator==(const QAItem&, const QAItem&) = default;
};

enum class GradeMode { kExactNormalized, kVqaConsensus };

const char* to_string(GradeMode mode);
GradeMode parse_grade_mode(std::string_view name);

/// Lowercase, punctuation stripped (decimal points kept), articles dropped,
/// number words folded to digits, whitespace collapsed.
std::string normalize_answer(std::string_view answer);

/// Throws PreconditionError when `gold` is empty.
/// VQA_CONSENSUS: min(matches / 3, 1) >= 1, i.e. at least three matches.
bool grade_answer(std::string_view predicted, const std::vector<std::string>& gold, GradeMode mode);

enum class Polarity { kPositive, kNegative };

struct Assertion {
  std::string text;
  Polarity polarity = Polarity::kPositive;
  std::optional<double> alignment;
};

struct DaResult {
  // Mean over positives, or over all assertions when negatives were asked for.
  double score = 0.0;
  double positive = 0.0;
  std::optional<double> with_negatives;
  std::vector<Assertion> assertions;
};

/// Exact mean of 0/1 alignments; empty input is a PreconditionError.
double mean_alignment(const std::vector<Assertion>& assertions);

/// One assertion per non-empty line; bullets and numbering removed,
/// duplicates dropped.
std::vector<std::string> parse_assertion_lines(std::string_view response);

/// "yes" at the start of the normalized reply; anything else is a no.
bool parse_yes(std::string_view reply);

std::string render_visual_qa_prompt(std::string_view question);
std::string render_text_qa_prompt(std::string_view caption, std::string_view question);

class Evaluator {
 public:
  /// `text` answers from captions and decomposes; `vision` sees images.
  Evaluator(providers::ChatBinding text, providers::ChatBinding vision);

  /// Throws PreconditionError without an image.
  std::string visual_qa(const QAItem& item) const;
  /// The request carries no image.
  std::string text_qa(std::string_view caption, std::string_view question) const;
  /// Throws DecompositionError when nothing usable comes back.
  DaResult da_score(std::string_view caption, const std::filesystem::path& image, bool include_negatives) const;

 private:
  providers::ChatBinding text_;
  providers::ChatBinding vision_;
};

struct GradedItem {
  std::string item_id;
  std::string question;
  std::string prediction;
  bool correct = false;
};

struct EvalReport {
  double accuracy = 0.0;
  int n_items = 0;
  int n_correct = 0;
  std::optional<double> da_positive;
  std::optional<double> da_with_negatives;
  std::vector<GradedItem> per_item;
};

/// Sorts by item id; accuracy is n_correct / n_items from integer counts.
/// DA columns are means of the per-caption scores given.
EvalReport make_report(std::vector<GradedItem> items, const std::vector<DaResult>& da = {});

nlohmann::json to_json(const EvalReport& report);
/// Throws ParseError.
EvalReport eval_report_from_json(const nlohmann::json& j);

/// Deterministic subset: ids sorted, seeded shuffle, first n taken (n == 0
/// keeps every item). Throws FormatError on layout problems or when n exceeds
/// the corpus.
///
/// VQAV2: a directory holding one *questions*.json and one *annotations*.json;
///        images under <dir>/<data_subtype>/ or <dir>/images/.
/// FIGUREQA: qa_pairs.json or its directory; images under png/.
/// CUSTOM: JSON lines {item_id, question, answers | answer, image?}.
std::vector<QAItem> load_benchmark_subset(const std::filesystem::path& path, QaSource source, int n,
                                          std::uint64_t seed);

}  // namespace cycleprompt::eval
