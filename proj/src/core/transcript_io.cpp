#include "core/transcript_io.hpp"

#include <sstream>

#include "core/errors.hpp"

namespace cycleprompt::core {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string relativize(const fs::path& path, const fs::path& base) {
  if (base.empty()) return path.generic_string();
  const auto rel = path.lexically_normal().lexically_relative(base.lexically_normal());
  if (rel.empty() || *rel.begin() == "..") return path.generic_string();
  return rel.generic_string();
}

fs::path absolutize(const std::string& stored, const fs::path& base) {
  fs::path p(stored);
  if (base.empty() || p.is_absolute()) return p;
  return base / p;
}

template <typename T>
T require(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ParseError(std::string("missing key '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad value for '") + key + "': " + e.what());
  }
}

}  // namespace

json to_json(const Artifact& a, const fs::path& base_dir) {
  json j;
  j["modality"] = to_string(a.modality());
  j["checksum"] = a.checksum();
  if (a.is_text()) {
    j["text"] = a.text_payload();
  } else {
    j["image"] = relativize(a.image_ref(), base_dir);
  }
  if (a.prompt()) j["prompt"] = *a.prompt();
  return j;
}

Artifact artifact_from_json(const json& j, const fs::path& base_dir) {
  const auto modality = parse_modality(require<std::string>(j, "modality"));
  std::optional<std::string> prompt;
  if (j.contains("prompt")) prompt = require<std::string>(j, "prompt");
  auto checksum = require<std::string>(j, "checksum");
  if (modality == Modality::kText) {
    auto a = Artifact::restore(modality, require<std::string>(j, "text"), std::move(checksum), std::move(prompt));
    if (!a.verify()) throw ParseError("text artifact checksum mismatch");
    return a;
  }
  return Artifact::restore(modality, absolutize(require<std::string>(j, "image"), base_dir).string(),
                           std::move(checksum), std::move(prompt));
}

json to_json(const CycleConfig& c) {
  return json{{"max_cycles", c.max_cycles},
              {"hint_strategy", to_string(c.hint_strategy)},
              {"seed", c.seed},
              {"provider_retries", c.provider_retries},
              {"counting", to_string(c.counting)},
              {"call_budget", c.call_budget}};
}

CycleConfig cycle_config_from_json(const json& j) {
  CycleConfig c;
  c.max_cycles = require<int>(j, "max_cycles");
  c.hint_strategy = parse_hint_strategy(require<std::string>(j, "hint_strategy"));
  c.seed = require<std::uint64_t>(j, "seed");
  c.provider_retries = require<int>(j, "provider_retries");
  c.counting = parse_cycle_counting(require<std::string>(j, "counting"));
  c.call_budget = require<int>(j, "call_budget");
  return c;
}

json to_json(const Transcript& t, const fs::path& base_dir) {
  json records = json::array();
  for (const auto& r : t.records) {
    records.push_back(json{{"index", r.index},
                           {"input_x", to_json(r.input_x, base_dir)},
                           {"output_y", to_json(r.output_y, base_dir)},
                           {"backtranslated_s", to_json(r.backtranslated_s, base_dir)},
                           {"hint", r.hint ? json(*r.hint) : json(nullptr)},
                           {"verdict", json{{"status", to_string(r.verdict.status)}, {"evidence", r.verdict.evidence}}},
                           {"discriminated", r.discriminated}});
  }
  return json{{"config", to_json(t.config)},
              {"task", json{{"instruction", t.task.instruction()}, {"compose_rule", to_string(t.task.compose_rule())}}},
              {"original_s", to_json(t.original_s, base_dir)},
              {"records", std::move(records)},
              {"final_output", t.final_output ? to_json(*t.final_output, base_dir) : json(nullptr)},
              {"stop_reason", to_string(t.stop_reason)}};
}

Transcript transcript_from_json(const json& j, const fs::path& base_dir) {
  Transcript t;
  t.config = cycle_config_from_json(require<json>(j, "config"));
  const auto task = require<json>(j, "task");
  try {
    t.task = TaskSpec(require<std::string>(task, "instruction"),
                      parse_compose_rule(require<std::string>(task, "compose_rule")));
  } catch (const CompositionError& e) {
    throw ParseError(std::string("invalid task: ") + e.what());
  }
  t.original_s = artifact_from_json(require<json>(j, "original_s"), base_dir);
  for (const auto& r : require<json>(j, "records")) {
    CycleRecord rec;
    rec.index = require<int>(r, "index");
    rec.input_x = artifact_from_json(require<json>(r, "input_x"), base_dir);
    rec.output_y = artifact_from_json(require<json>(r, "output_y"), base_dir);
    rec.backtranslated_s = artifact_from_json(require<json>(r, "backtranslated_s"), base_dir);
    if (!r.at("hint").is_null()) rec.hint = require<std::string>(r, "hint");
    const auto v = require<json>(r, "verdict");
    rec.verdict.status = parse_verdict_status(require<std::string>(v, "status"));
    rec.verdict.evidence = require<std::string>(v, "evidence");
    rec.discriminated = require<bool>(r, "discriminated");
    t.records.push_back(std::move(rec));
  }
  if (j.contains("final_output") && !j.at("final_output").is_null()) {
    t.final_output = artifact_from_json(j.at("final_output"), base_dir);
  }
  t.stop_reason = parse_stop_reason(require<std::string>(j, "stop_reason"));
  return t;
}

std::string serialize_transcript(const Transcript& t, const fs::path& base_dir) {
  return to_json(t, base_dir).dump(2, ' ', false, json::error_handler_t::replace) + "\n";
}

std::string compat_line(int cycle, std::string_view text) {
  std::string line = "{\"cycle\": ";
  line += std::to_string(cycle);
  line += ", \"text\": ";
  line += json(std::string(text)).dump(-1, ' ', false, json::error_handler_t::replace);
  line += "}";
  return line;
}

std::string export_compat(const Transcript& t) {
  std::string out;
  for (const auto& r : t.records) {
    out += compat_line(r.index, r.output_y.text_payload());
    out += '\n';
  }
  return out;
}

std::vector<CompatEntry> parse_compat(std::string_view content) {
  std::vector<CompatEntry> out;
  std::istringstream in{std::string(content)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!j.is_object() || j.size() != 2) throw ParseError("line " + std::to_string(lineno) + ": expected {cycle, text}");
    out.push_back({require<int>(j, "cycle"), require<std::string>(j, "text")});
  }
  return out;
}

}  // namespace cycleprompt::core
