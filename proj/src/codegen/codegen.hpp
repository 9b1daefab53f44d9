#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "core/cycle.hpp"
#include "providers/provider.hpp"

namespace cycleprompt::codegen {

struct CodeTask {
  std::string task_id;
  // The original specification s_0, e.g. a signature plus docstring.
  std::string description;
  std::optional<std::string> entry_point;
  std::string test;
};

struct CodeCandidate {
  std::string raw_response;
  std::string code;
  int cycle_index = 0;
};

/// Pulls Python code out of a model response.
///
/// The last fenced block wins; without fences, the longest run of code-like
/// lines is taken. The result is trimmed and idempotent under re-extraction.
/// Throws ExtractionError when nothing code-like remains.
std::string extract_code(std::string_view response);

std::string_view write_code_prompt();
std::string render_describe_prompt(std::string_view code);
std::string render_discriminator_prompt(std::string_view original_description, std::string_view code,
                                        std::string_view concluded_description);

/// The Text-Code-Text cycle over one chat binding.
class CodegenPack {
 public:
  explicit CodegenPack(providers::ChatBinding chat);

  /// Description (possibly hint-augmented) to code.
  CodeCandidate forward_generate_code(std::string_view task_description, int cycle_index = 0) const;
  /// Code to a concluded task description.
  std::string backward_describe_code(std::string_view code) const;
  /// A consistency-template reply gives CONSISTENT and no hint; any other
  /// reply becomes the hint verbatim.
  core::Judgement discriminate_code(std::string_view original_description, std::string_view concluded_description,
                                    std::string_view code) const;

  core::CycleFunctions functions() const;

  /// Instruction t: the write-code system prompt, prefix-composed.
  static core::TaskSpec task_spec();

 private:
  providers::ChatBinding chat_;
};

/// Defaults to ANCHORED_APPEND; the caller's config is used as given.
core::Transcript run_code_cycle(const CodeTask& task, const CodegenPack& pack, const core::CycleConfig& config);

/// One JSON object per line with at least task_id, prompt, entry_point, test.
/// Throws FormatError on malformed lines or duplicate task ids.
std::vector<CodeTask> load_humaneval(const std::filesystem::path& path);

struct Completion {
  std::string task_id;
  std::string completion;
  friend bool operator==(const Completion&, const Completion&) = default;
};

/// Writes `{"task_id": ..., "completion": ...}` lines in input order.
/// Throws ModalityError for image outputs and FileWriteError on IO failure.
std::filesystem::path export_completions(const std::vector<std::pair<std::string, core::Transcript>>& runs,
                                         const std::filesystem::path& out);

/// Throws FormatError.
std::vector<Completion> parse_completions(const std::filesystem::path& path);

/// Request lines for the external sandbox scorer:
/// `{"task_id", "completion", "test_source", "entry_point", "timeout_s"}`.
/// Completions without a matching task, or tasks without an entry point,
/// throw FormatError. timeout_s must lie in (0, 60].
std::filesystem::path export_execution_requests(const std::vector<Completion>& completions,
                                                const std::vector<CodeTask>& tasks, double timeout_s,
                                                const std::filesystem::path& out);

}  // namespace cycleprompt::codegen
