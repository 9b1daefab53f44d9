#include <algorithm>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "core/errors.hpp"
#include "core/hashing.hpp"
#include "core/shuffle.hpp"
#include "eval/evaluation.hpp"

namespace cycleprompt::eval {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json load_json(const fs::path& path) {
  std::string content;
  try {
    content = read_file(path);
  } catch (const PreconditionError& e) {
    throw FormatError(e.what());
  }
  auto j = json::parse(content, nullptr, false);
  if (j.is_discarded()) throw FormatError(path.string() + ": not valid JSON");
  return j;
}

fs::path find_one(const fs::path& dir, std::string_view needle) {
  std::vector<fs::path> hits;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    const auto name = entry.path().filename().string();
    if (entry.is_regular_file() && entry.path().extension() == ".json" && name.find(needle) != std::string::npos) {
      hits.push_back(entry.path());
    }
  }
  if (ec) throw FormatError("cannot list " + dir.string() + ": " + ec.message());
  if (hits.size() != 1) {
    throw FormatError(fmt::format("{}: expected exactly one *{}*.json, found {}", dir.string(), needle, hits.size()));
  }
  return hits.front();
}

std::string id_string(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw FormatError("identifier is neither a string nor an integer");
}

std::vector<QAItem> load_vqav2(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw FormatError("VQAv2 input must be a directory: " + dir.string());
  const json q = load_json(find_one(dir, "questions"));
  const json a = load_json(find_one(dir, "annotations"));
  if (!q.contains("questions") || !q["questions"].is_array()) throw FormatError("questions file lacks 'questions'");
  if (!a.contains("annotations") || !a["annotations"].is_array()) {
    throw FormatError("annotations file lacks 'annotations'");
  }
  const std::string subtype = q.value("data_subtype", a.value("data_subtype", std::string("val2014")));

  std::map<std::string, std::vector<std::string>> gold;
  for (const auto& ann : a["annotations"]) {
    if (!ann.contains("question_id")) throw FormatError("annotation without question_id");
    std::vector<std::string> answers;
    if (ann.contains("multiple_choice_answer")) answers.push_back(ann["multiple_choice_answer"].get<std::string>());
    for (const auto& ans : ann.value("answers", json::array())) answers.push_back(ans.at("answer").get<std::string>());
    if (answers.empty()) throw FormatError("annotation without answers");
    gold[id_string(ann["question_id"])] = std::move(answers);
  }

  std::vector<QAItem> items;
  for (const auto& qq : q["questions"]) {
    if (!qq.contains("question_id") || !qq.contains("image_id") || !qq.contains("question")) {
      throw FormatError("question entry lacks question_id, image_id or question");
    }
    QAItem it;
    it.source = QaSource::kVqav2;
    it.item_id = id_string(qq["question_id"]);
    it.question = qq["question"].get<std::string>();
    const auto g = gold.find(it.item_id);
    if (g == gold.end()) throw FormatError("no annotation for question " + it.item_id);
    it.gold_answers = g->second;
    const auto image_name = fmt::format("COCO_{}_{:012d}.jpg", subtype, qq["image_id"].get<long long>());
    it.image = fs::exists(dir / subtype / image_name) ? dir / subtype / image_name : dir / "images" / image_name;
    items.push_back(std::move(it));
  }
  return items;
}

std::vector<QAItem> load_figureqa(const fs::path& path) {
  const fs::path file = fs::is_directory(path) ? path / "qa_pairs.json" : path;
  const fs::path dir = file.parent_path();
  const json j = load_json(file);
  if (!j.contains("qa_pairs") || !j["qa_pairs"].is_array()) throw FormatError("qa_pairs file lacks 'qa_pairs'");
  std::map<long long, int> per_image;
  std::vector<QAItem> items;
  for (const auto& p : j["qa_pairs"]) {
    if (!p.contains("image_index") || !p.contains("question_string") || !p.contains("answer")) {
      throw FormatError("qa pair lacks image_index, question_string or answer");
    }
    const auto image_index = p["image_index"].get<long long>();
    const int answer = p["answer"].get<int>();
    if (answer != 0 && answer != 1) throw FormatError("FigureQA answers must be 0 or 1");
    QAItem it;
    it.source = QaSource::kFigureqa;
    it.item_id = fmt::format("{}-{}", image_index, per_image[image_index]++);
    it.question = p["question_string"].get<std::string>();
    it.gold_answers = {answer == 1 ? "yes" : "no"};
    it.image = dir / "png" / fmt::format("{}.png", image_index);
    items.push_back(std::move(it));
  }
  return items;
}

std::vector<QAItem> load_custom(const fs::path& path) {
  std::string content;
  try {
    content = read_file(path);
  } catch (const PreconditionError& e) {
    throw FormatError(e.what());
  }
  std::vector<QAItem> items;
  std::istringstream in(content);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = fmt::format("{}:{}", path.string(), lineno);
    const auto j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("item_id") || !j.contains("question")) {
      throw FormatError(where + ": expected an object with item_id and question");
    }
    QAItem it;
    it.source = QaSource::kCustom;
    it.item_id = id_string(j["item_id"]);
    it.question = j["question"].get<std::string>();
    if (j.contains("answers")) {
      for (const auto& a : j["answers"]) it.gold_answers.push_back(a.get<std::string>());
    } else if (j.contains("answer")) {
      it.gold_answers.push_back(j["answer"].get<std::string>());
    }
    if (it.gold_answers.empty()) throw FormatError(where + ": no gold answers");
    if (j.contains("image") && j["image"].is_string()) {
      const fs::path img = j["image"].get<std::string>();
      it.image = img.is_absolute() ? img : path.parent_path() / img;
    }
    items.push_back(std::move(it));
  }
  return items;
}

}  // namespace

std::vector<QAItem> load_benchmark_subset(const fs::path& path, QaSource source, int n, std::uint64_t seed) {
  if (n < 0) throw FormatError("subset size must be non-negative");
  std::vector<QAItem> items;
  try {
    switch (source) {
      case QaSource::kVqav2: items = load_vqav2(path); break;
      case QaSource::kFigureqa: items = load_figureqa(path); break;
      case QaSource::kCustom: items = load_custom(path); break;
    }
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  std::sort(items.begin(), items.end(), [](const QAItem& a, const QAItem& b) { return a.item_id < b.item_id; });
  for (std::size_t i = 1; i < items.size(); ++i) {
    if (items[i].item_id == items[i - 1].item_id) throw FormatError("duplicate item id " + items[i].item_id);
  }
  if (static_cast<std::size_t>(n) > items.size()) {
    throw FormatError(fmt::format("requested {} items but {} holds only {}", n, path.string(), items.size()));
  }
  seeded_shuffle(items, seed);
  if (n > 0) items.resize(static_cast<std::size_t>(n));
  return items;
}

}  // namespace cycleprompt::eval
