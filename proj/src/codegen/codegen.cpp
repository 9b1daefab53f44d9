#include "codegen/codegen.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "core/errors.hpp"
#include "core/hashing.hpp"
#include "prompts/templates.hpp"

namespace cycleprompt::codegen {

namespace fs = std::filesystem;
using core::Artifact;

namespace {

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::string cur;
  for (char c : text) {
    if (c == '\n') {
      if (!cur.empty() && cur.back() == '\r') cur.pop_back();
      lines.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty() && cur.back() == '\r') cur.pop_back();
  lines.push_back(std::move(cur));
  return lines;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

bool is_blank(std::string_view line) { return line.find_first_not_of(" \t") == std::string_view::npos; }

bool is_fence(std::string_view line) {
  const auto b = line.find_first_not_of(" \t");
  return b != std::string_view::npos && line.substr(b, 3) == "```";
}

const std::set<std::string, std::less<>>& python_keywords() {
  static const std::set<std::string, std::less<>> kw{
      "def",   "class",  "import", "from",   "return", "if",     "elif",     "else",   "for",
      "while", "try",    "except", "finally", "with",  "raise",  "assert",   "pass",   "break",
      "continue", "lambda", "async", "await", "yield", "global", "nonlocal", "del",    "match",
      "case", "not", "True", "False", "None"};
  return kw;
}

enum class LineKind { kBlank, kCode, kProse };

// A line is code-like when it is indented, starts with a keyword or a code
// sigil, or is an identifier followed by code punctuation.
LineKind classify(std::string_view line) {
  if (is_blank(line)) return LineKind::kBlank;
  if (is_fence(line)) return LineKind::kProse;
  const char first = line.front();
  if (first == ' ' || first == '\t') return LineKind::kCode;
  if (std::string_view("#@\"')]}").find(first) != std::string_view::npos) return LineKind::kCode;
  if (!(std::isalpha(static_cast<unsigned char>(first)) || first == '_')) return LineKind::kProse;

  std::size_t i = 0;
  while (i < line.size() && (std::isalnum(static_cast<unsigned char>(line[i])) || line[i] == '_')) ++i;
  const std::string_view token = line.substr(0, i);
  if (python_keywords().count(token) > 0) return LineKind::kCode;
  if (i == line.size()) return LineKind::kProse;

  const char next = line[i];
  if (next == '(' || next == '[' || next == '=') return LineKind::kCode;
  // Attribute access, not a sentence end.
  if (next == '.' && i + 1 < line.size() &&
      (std::isalpha(static_cast<unsigned char>(line[i + 1])) || line[i + 1] == '_')) {
    return LineKind::kCode;
  }
  // Tuple unpacking; "Sure, here it is" has no assignment.
  if (next == ',' && line.find('=', i) != std::string_view::npos) return LineKind::kCode;
  if (next == ' ' || next == '\t') {
    const auto j = line.find_first_not_of(" \t", i);
    if (j == std::string_view::npos) return LineKind::kProse;
    // Binary or augmented-assignment operator after the name.
    if (std::string_view("=+-*/%<>!&|^:").find(line[j]) != std::string_view::npos && line[j] != ':') {
      return LineKind::kCode;
    }
  }
  return LineKind::kProse;
}

// Longest run of code-like lines (ties go to the later run), trimmed.
std::optional<std::string> longest_code_run(std::string_view text) {
  const auto lines = split_lines(text);
  std::size_t best_begin = 0;
  std::size_t best_end = 0;
  std::size_t best_weight = 0;
  std::size_t i = 0;
  while (i < lines.size()) {
    if (classify(lines[i]) != LineKind::kCode) {
      ++i;
      continue;
    }
    std::size_t j = i;
    std::size_t weight = 0;
    std::size_t last_code = i;
    while (j < lines.size()) {
      const auto kind = classify(lines[j]);
      if (kind == LineKind::kProse) break;
      if (kind == LineKind::kCode) {
        ++weight;
        last_code = j;
      }
      ++j;
    }
    if (weight >= best_weight) {
      best_weight = weight;
      best_begin = i;
      best_end = last_code + 1;
    }
    i = j;
  }
  if (best_weight == 0) return std::nullopt;
  std::string out;
  for (std::size_t k = best_begin; k < best_end; ++k) {
    out += lines[k];
    if (k + 1 < best_end) out += '\n';
  }
  auto trimmed = trim(out);
  if (trimmed.empty()) return std::nullopt;
  return trimmed;
}

std::vector<std::string> fenced_blocks(std::string_view text) {
  std::vector<std::string> blocks;
  const auto lines = split_lines(text);
  std::optional<std::string> open;
  for (const auto& line : lines) {
    if (is_fence(line)) {
      if (open) {
        blocks.push_back(std::move(*open));
        open.reset();
      } else {
        open.emplace();
      }
      continue;
    }
    if (open) {
      *open += line;
      *open += '\n';
    }
  }
  // An unterminated fence runs to the end of the response.
  if (open) blocks.push_back(std::move(*open));
  return blocks;
}

}  // namespace

std::string extract_code(std::string_view response) {
  const auto blocks = fenced_blocks(response);
  for (auto it = blocks.rbegin(); it != blocks.rend(); ++it) {
    if (auto code = longest_code_run(*it)) return *code;
  }
  if (auto code = longest_code_run(response)) return *code;
  throw ExtractionError("no code found in model response");
}

std::string_view write_code_prompt() { return prompts::kWriteCode; }

std::string render_describe_prompt(std::string_view code) {
  return prompts::fill(prompts::kDescribeCode, {{"[code]", code}});
}

std::string render_discriminator_prompt(std::string_view original_description, std::string_view code,
                                        std::string_view concluded_description) {
  return prompts::fill(prompts::kDiscriminateCode, {{"[Task description]", original_description},
                                                    {"[code]", code},
                                                    {"[Conclusion]", concluded_description}});
}

CodegenPack::CodegenPack(providers::ChatBinding chat) : chat_(std::move(chat)) {}

CodeCandidate CodegenPack::forward_generate_code(std::string_view task_description, int cycle_index) const {
  if (trim(task_description).empty()) throw PreconditionError("task description must not be empty");
  CodeCandidate c;
  c.cycle_index = cycle_index;
  c.raw_response = chat_.complete({{providers::Role::kSystem, std::string(write_code_prompt()), {}},
                                   {providers::Role::kUser, std::string(task_description), {}}});
  c.code = extract_code(c.raw_response);
  return c;
}

std::string CodegenPack::backward_describe_code(std::string_view code) const {
  if (trim(code).empty()) throw PreconditionError("code must not be empty");
  return chat_.complete({{providers::Role::kUser, render_describe_prompt(code), {}}});
}

core::Judgement CodegenPack::discriminate_code(std::string_view original_description,
                                               std::string_view concluded_description, std::string_view code) const {
  if (trim(original_description).empty() || trim(concluded_description).empty() || trim(code).empty()) {
    throw PreconditionError("discriminator inputs must not be empty");
  }
  const std::string response = chat_.complete(
      {{providers::Role::kUser, render_discriminator_prompt(original_description, code, concluded_description), {}}});
  const auto original = Artifact::text(std::string(original_description));
  const auto concluded = Artifact::text(std::string(concluded_description));
  auto verdict = core::detect_consistency(original, concluded, response,
                                          [](const Artifact&, const Artifact&, std::string_view out) {
                                            return core::matches_consistency_template(out);
                                          });
  core::Judgement j{std::move(verdict), std::nullopt};
  if (j.verdict.status == core::VerdictStatus::kInconsistent) j.hint = trim(response);
  return j;
}

core::TaskSpec CodegenPack::task_spec() { return core::TaskSpec(std::string(write_code_prompt())); }

core::CycleFunctions CodegenPack::functions() const {
  core::CycleFunctions fns;
  fns.forward = [this](const core::ForwardInput& in) {
    return Artifact::text(forward_generate_code(in.data.text_payload(), in.index).code);
  };
  fns.backward = [this](const Artifact& y, int) { return Artifact::text(backward_describe_code(y.text_payload())); };
  fns.discriminate = [this](const core::DiscriminatorInput& in) {
    return discriminate_code(in.original.text_payload(), in.backtranslated.text_payload(), in.output.text_payload());
  };
  return fns;
}

core::Transcript run_code_cycle(const CodeTask& task, const CodegenPack& pack, const core::CycleConfig& config) {
  if (trim(task.description).empty()) throw PreconditionError("task " + task.task_id + " has an empty description");
  return core::run_cycle(CodegenPack::task_spec(), Artifact::text(task.description), pack.functions(), config);
}

std::vector<CodeTask> load_humaneval(const fs::path& path) {
  std::string content;
  try {
    content = read_file(path);
  } catch (const PreconditionError& e) {
    throw FormatError(e.what());
  }
  std::vector<CodeTask> tasks;
  std::set<std::string> seen;
  std::istringstream in(content);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (is_blank(line)) continue;
    const auto j = nlohmann::json::parse(line, nullptr, false);
    const auto where = path.string() + ":" + std::to_string(lineno);
    if (j.is_discarded() || !j.is_object()) throw FormatError(where + ": not a JSON object");
    for (const char* key : {"task_id", "prompt", "entry_point", "test"}) {
      if (!j.contains(key) || !j[key].is_string()) throw FormatError(where + ": missing string field '" + key + "'");
    }
    CodeTask t;
    t.task_id = j["task_id"].get<std::string>();
    t.description = j["prompt"].get<std::string>();
    t.entry_point = j["entry_point"].get<std::string>();
    t.test = j["test"].get<std::string>();
    if (trim(t.description).empty()) throw FormatError(where + ": empty prompt");
    if (!seen.insert(t.task_id).second) throw FormatError(where + ": duplicate task_id " + t.task_id);
    tasks.push_back(std::move(t));
  }
  return tasks;
}

fs::path export_completions(const std::vector<std::pair<std::string, core::Transcript>>& runs, const fs::path& out) {
  std::string body;
  for (const auto& [task_id, transcript] : runs) {
    if (!transcript.final_output) throw ModalityError("task " + task_id + " has no final output");
    if (!transcript.final_output->is_text()) throw ModalityError("task " + task_id + " produced an image, not code");
    body += nlohmann::json{{"task_id", task_id}, {"completion", transcript.final_output->text_payload()}}.dump(
        -1, ' ', false, nlohmann::json::error_handler_t::replace);
    body += '\n';
  }
  write_file_atomic(out, body);
  return out;
}

std::vector<Completion> parse_completions(const fs::path& path) {
  std::vector<Completion> out;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (is_blank(line)) continue;
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("task_id") || !j.contains("completion")) {
      throw FormatError("malformed completion line in " + path.string());
    }
    out.push_back({j["task_id"].get<std::string>(), j["completion"].get<std::string>()});
  }
  return out;
}

fs::path export_execution_requests(const std::vector<Completion>& completions, const std::vector<CodeTask>& tasks,
                                   double timeout_s, const fs::path& out) {
  if (!(timeout_s > 0.0 && timeout_s <= 60.0)) throw PreconditionError("timeout_s must be in (0, 60]");
  std::map<std::string, const CodeTask*> by_id;
  for (const auto& t : tasks) by_id[t.task_id] = &t;
  std::string body;
  for (const auto& c : completions) {
    const auto it = by_id.find(c.task_id);
    if (it == by_id.end()) throw FormatError("no task " + c.task_id + " for completion");
    const auto& task = *it->second;
    if (!task.entry_point || task.test.empty()) throw FormatError("task " + c.task_id + " has no entry point or test");
    if (c.completion.empty()) throw FormatError("empty completion for " + c.task_id);
    body += nlohmann::json{{"task_id", c.task_id},
                           {"completion", c.completion},
                           {"test_source", task.test},
                           {"entry_point", *task.entry_point},
                           {"timeout_s", timeout_s}}
                .dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
    body += '\n';
  }
  write_file_atomic(out, body);
  return out;
}

}  // namespace cycleprompt::codegen
