#include <doctest.h>

#include <random>

#include "core/errors.hpp"
#include "eval/evaluation.hpp"
#include "support.hpp"

using namespace cycleprompt;
using namespace cycleprompt::eval;
using nlohmann::json;

namespace {

struct DaScript {
  std::vector<std::string> positives;
  std::vector<std::string> negatives;
  std::vector<bool> yes;  // positives first, then negatives
};

std::string listing(const std::vector<std::string>& lines) {
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) out += std::to_string(i + 1) + ". " + lines[i] + "\n";
  return out;
}

DaResult run_da(const DaScript& s, bool negatives, const std::filesystem::path& image) {
  auto text = std::make_shared<providers::MockProvider>();
  std::vector<std::string> text_script{listing(s.positives)};
  if (negatives) text_script.push_back(listing(s.negatives));
  text->set_script(providers::MockProvider::kGlobalScope, text_script);
  auto vision = std::make_shared<providers::MockProvider>();
  std::vector<std::string> answers;
  for (bool y : s.yes) answers.push_back(y ? "Yes." : "No, it does not.");
  vision->set_script(providers::MockProvider::kGlobalScope, answers);
  const Evaluator ev(testing::chat_binding(text), testing::chat_binding(vision));
  return ev.da_score("a caption", image, negatives);
}

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("answer normalization table") {
  const std::pair<const char*, const char*> table[] = {
      {"Yes", "yes"},
      {"yes.", "yes"},
      {"  NO!  ", "no"},
      {"Two", "2"},
      {"two dogs", "2 dogs"},
      {"The cat", "cat"},
      {"a red car", "red car"},
      {"An apple", "apple"},
      {"3.5", "3.5"},
      {"end.", "end"},
      {"1,000", "1000"},
      {"red, blue", "red blue"},
      {"don't", "dont"},
      {"Ten", "10"},
      {"twenty", "20"},
      {"zero", "0"},
      {"none", "0"},
      {"left-side", "left side"},
      {"black and white", "black and white"},
      {"the the", ""},
      {"", ""},
      {"?!", ""},
      {"Blue\tsky", "blue sky"},
      {"it's a dog", "its dog"},
      {"(yes)", "yes"},
      {"42", "42"},
      {"4.", "4"},
      {"on the table", "on table"},
      {"Eleven", "11"},
      {"Tennis", "tennis"},
  };
  for (const auto& [in, want] : table) {
    CAPTURE(in);
    CHECK(normalize_answer(in) == want);
  }
}

TEST_CASE("grading modes") {
  CHECK(grade_answer("Two", {"2"}, GradeMode::kExactNormalized));
  CHECK_FALSE(grade_answer("three", {"2"}, GradeMode::kExactNormalized));
  const std::vector<std::string> gold{"yes", "yes", "no", "yes", "no"};
  CHECK(grade_answer("Yes", gold, GradeMode::kVqaConsensus));
  CHECK_FALSE(grade_answer("no", gold, GradeMode::kVqaConsensus));
  CHECK(grade_answer("no", gold, GradeMode::kExactNormalized));
  CHECK_THROWS_AS(grade_answer("x", {}, GradeMode::kExactNormalized), PreconditionError);
  CHECK(parse_grade_mode("vqa_consensus") == GradeMode::kVqaConsensus);
  CHECK_THROWS_AS(parse_grade_mode("fuzzy"), ParseError);
}

TEST_CASE("assertion lines") {
  const auto lines = parse_assertion_lines("1. There is a cat.\n2) The cat is black.\n\n- There is a sofa.\n"
                                           "* There is a cat.\n\xe2\x80\xa2 A lamp is on.\n");
  CHECK(lines == std::vector<std::string>{"There is a cat.", "The cat is black.", "There is a sofa.", "A lamp is on."});
  CHECK(parse_assertion_lines("  \n\n").empty());
  CHECK(parse_yes("Yes, it does."));
  CHECK_FALSE(parse_yes("No."));
  CHECK_FALSE(parse_yes("Yesterday"));
}

TEST_CASE("DA score hand-computed values") {
  testing::TempDir dir;
  const auto img = testing::write_solid_png(dir / "i.png", 4, 4, 0, 0, 0);
  const DaScript s{{"p1", "p2", "p3"}, {"n1", "n2", "n3"}, {true, false, false, false, true, false}};
  const auto r = run_da(s, true, img);
  CHECK(r.positive == 1.0 / 3.0);
  REQUIRE(r.with_negatives);
  CHECK(*r.with_negatives == 0.5);
  CHECK(r.score == 0.5);
  REQUIRE(r.assertions.size() == 6);
  CHECK(r.assertions[3].polarity == Polarity::kNegative);
  CHECK(r.assertions[3].alignment == 1.0);
  CHECK(r.assertions[4].alignment == 0.0);

  const DaScript p{{"p1", "p2", "p3", "p4"}, {}, {true, true, false, true}};
  const auto q = run_da(p, false, img);
  CHECK(q.positive == 0.75);
  CHECK_FALSE(q.with_negatives);
  CHECK(q.score == 0.75);
}

TEST_CASE("DA score over random scripts") {
  testing::TempDir dir;
  const auto img = testing::write_solid_png(dir / "i.png", 4, 4, 0, 0, 0);
  std::mt19937 rng(7);
  for (int trial = 0; trial < 1000; ++trial) {
    const int k = 1 + static_cast<int>(rng() % 8);
    const bool neg = rng() % 2 == 0;
    DaScript s;
    for (int i = 0; i < k; ++i) s.positives.push_back("pos " + std::to_string(i));
    if (neg)
      for (int i = 0; i < k; ++i) s.negatives.push_back("neg " + std::to_string(i));
    const int asked = neg ? 2 * k : k;
    int pos_ones = 0;
    int all_ones = 0;
    for (int i = 0; i < asked; ++i) {
      const bool y = rng() % 2 == 0;
      s.yes.push_back(y);
      const bool aligned = i < k ? y : !y;
      all_ones += aligned ? 1 : 0;
      if (i < k) pos_ones += aligned ? 1 : 0;
    }
    const auto r = run_da(s, neg, img);
    CAPTURE(trial);
    CHECK(r.positive == static_cast<double>(pos_ones) / k);
    CHECK(r.positive >= 0.0);
    CHECK(r.positive <= 1.0);
    if (neg) {
      REQUIRE(r.with_negatives);
      CHECK(*r.with_negatives == static_cast<double>(all_ones) / asked);
    }
  }
}

TEST_CASE("DA decomposition failures") {
  testing::TempDir dir;
  const auto img = testing::write_solid_png(dir / "i.png", 4, 4, 0, 0, 0);
  auto text = std::make_shared<providers::MockProvider>();
  text->set_script(providers::MockProvider::kGlobalScope, {"\n  \n", "1. a\n2. b", "1. not a"});
  auto vision = std::make_shared<providers::MockProvider>();
  const Evaluator ev(testing::chat_binding(text), testing::chat_binding(vision));
  CHECK_THROWS_AS(ev.da_score("c", img, false), DecompositionError);
  CHECK_THROWS_AS(ev.da_score("c", img, true), DecompositionError);
  CHECK(vision->chat_calls() == 0);
  CHECK_THROWS_AS(ev.da_score(" ", img, false), PreconditionError);
  CHECK_THROWS_AS(mean_alignment({}), PreconditionError);
}

TEST_CASE("text QA carries no image, visual QA does") {
  testing::TempDir dir;
  const auto img = testing::write_solid_png(dir / "i.png", 4, 4, 0, 0, 0);
  auto text = std::make_shared<providers::MockProvider>();
  text->set_script(providers::MockProvider::kGlobalScope, {" two "});
  auto vision = std::make_shared<providers::MockProvider>();
  vision->set_script(providers::MockProvider::kGlobalScope, {"2"});
  const Evaluator ev(testing::chat_binding(text), testing::chat_binding(vision));
  CHECK(ev.text_qa("Two cats.", "How many cats?") == "two");
  CHECK(text->chat_log()[0].messages[0].image_refs.empty());
  CHECK(text->chat_log()[0].messages[0].text == render_text_qa_prompt("Two cats.", "How many cats?"));
  QAItem item{"q1", img, "How many cats?", {"2"}, QaSource::kCustom};
  CHECK(ev.visual_qa(item) == "2");
  CHECK(vision->chat_log()[0].messages[0].image_refs.size() == 1);
  item.image.reset();
  CHECK_THROWS_AS(ev.visual_qa(item), PreconditionError);
}

TEST_CASE("reports round trip") {
  auto r = make_report({{"b", "q2", "no", false}, {"a", "q1", "yes", true}, {"c", "q3", "2", true}},
                       {DaResult{0.5, 0.5, 0.25, {}}, DaResult{1.0, 1.0, 0.75, {}}});
  CHECK(r.per_item[0].item_id == "a");
  CHECK(r.n_correct == 2);
  CHECK(r.accuracy == 2.0 / 3.0);
  CHECK(r.da_positive == 0.75);
  CHECK(r.da_with_negatives == 0.5);
  const auto back = eval_report_from_json(json::parse(to_json(r).dump()));
  CHECK(to_json(back) == to_json(r));
  CHECK_THROWS_AS(eval_report_from_json(json::object()), ParseError);
  CHECK(make_report({}).accuracy == 0.0);
}

TEST_CASE("custom benchmark loading") {
  testing::TempDir dir;
  std::string lines;
  for (int i = 0; i < 12; ++i) {
    lines += json{{"item_id", "q" + std::to_string(i)}, {"question", "Q?"}, {"answer", "yes"}, {"image", "x.png"}}
                 .dump() +
             "\n";
  }
  testing::write_text(dir / "c.jsonl", lines);
  const auto all = load_benchmark_subset(dir / "c.jsonl", QaSource::kCustom, 0, 5);
  CHECK(all.size() == 12);
  CHECK(all[0].image == dir.path() / "x.png");
  const auto a = load_benchmark_subset(dir / "c.jsonl", QaSource::kCustom, 4, 5);
  const auto b = load_benchmark_subset(dir / "c.jsonl", QaSource::kCustom, 4, 5);
  CHECK(a == b);
  CHECK(a.size() == 4);
  const auto c = load_benchmark_subset(dir / "c.jsonl", QaSource::kCustom, 4, 6);
  CHECK(a != c);
  CHECK_THROWS_AS(load_benchmark_subset(dir / "c.jsonl", QaSource::kCustom, 13, 5), FormatError);
  testing::write_text(dir / "bad.jsonl", "{\"item_id\": 1}\n");
  CHECK_THROWS_AS(load_benchmark_subset(dir / "bad.jsonl", QaSource::kCustom, 0, 0), FormatError);
  testing::write_text(dir / "noans.jsonl", "{\"item_id\": 1, \"question\": \"q\"}\n");
  CHECK_THROWS_AS(load_benchmark_subset(dir / "noans.jsonl", QaSource::kCustom, 0, 0), FormatError);
}

TEST_CASE("VQAv2 layout") {
  testing::TempDir dir;
  testing::write_text(dir / "v2_OpenEnded_mscoco_val2014_questions.json",
                      R"({"data_subtype": "val2014", "questions": [
                            {"question_id": 11, "image_id": 42, "question": "What color?"},
                            {"question_id": 10, "image_id": 7, "question": "How many?"}]})");
  testing::write_text(dir / "v2_mscoco_val2014_annotations.json",
                      R"({"annotations": [
                            {"question_id": 11, "multiple_choice_answer": "red", "answers": [{"answer": "red"}]},
                            {"question_id": 10, "multiple_choice_answer": "2", "answers": [{"answer": "two"}]}]})");
  const auto items = load_benchmark_subset(dir.path(), QaSource::kVqav2, 0, 0);
  REQUIRE(items.size() == 2);
  for (const auto& it : items) {
    if (it.item_id == "11") {
      CHECK(it.gold_answers == std::vector<std::string>{"red", "red"});
      CHECK(it.image->filename() == "COCO_val2014_000000000042.jpg");
    }
  }
  testing::write_text(dir / "extra_questions.json", "{}");
  CHECK_THROWS_AS(load_benchmark_subset(dir.path(), QaSource::kVqav2, 0, 0), FormatError);
}

TEST_CASE("FigureQA layout") {
  testing::TempDir dir;
  testing::write_text(dir / "qa_pairs.json", R"({"qa_pairs": [
      {"image_index": 3, "question_string": "Is Red the minimum?", "answer": 1},
      {"image_index": 3, "question_string": "Is Blue the maximum?", "answer": 0}]})");
  const auto items = load_benchmark_subset(dir.path(), QaSource::kFigureqa, 0, 0);
  REQUIRE(items.size() == 2);
  for (const auto& it : items) {
    CHECK(it.image == dir.path() / "png" / "3.png");
    if (it.item_id == "3-0") CHECK(it.gold_answers == std::vector<std::string>{"yes"});
    if (it.item_id == "3-1") CHECK(it.gold_answers == std::vector<std::string>{"no"});
  }
  testing::write_text(dir / "qa_pairs.json", R"({"qa_pairs": [{"image_index": 3, "question_string": "q", "answer": 2}]})");
  CHECK_THROWS_AS(load_benchmark_subset(dir.path(), QaSource::kFigureqa, 0, 0), FormatError);
}

}  // TEST_SUITE
