#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace cycleprompt::core {

enum class Modality { kText, kImage };

/// A text payload or a reference to an image file, plus a content checksum.
///
/// Image checksums hash the file bytes at construction time, so an artifact
/// stays verifiable for as long as the file is not rewritten.
class Artifact {
 public:
  static Artifact text(std::string payload);
  /// Throws PreconditionError when the file cannot be read.
  static Artifact image(std::filesystem::path ref, std::optional<std::string> prompt = std::nullopt);
  /// Rebuilds an artifact from persisted fields without touching the file system.
  static Artifact restore(Modality modality, std::string payload, std::string checksum,
                          std::optional<std::string> prompt = std::nullopt);

  Modality modality() const noexcept { return modality_; }
  bool is_text() const noexcept { return modality_ == Modality::kText; }

  /// Throws ModalityError for image artifacts.
  const std::string& text_payload() const;
  /// Throws ModalityError for text artifacts.
  const std::filesystem::path& image_ref() const;

  const std::string& checksum() const noexcept { return checksum_; }
  /// Instruction carried alongside an image input.
  const std::optional<std::string>& prompt() const noexcept { return prompt_; }

  /// Recomputes the checksum from the payload.
  bool verify() const;

  friend bool operator==(const Artifact&, const Artifact&) = default;

 private:
  Artifact() = default;

  Modality modality_ = Modality::kText;
  std::variant<std::string, std::filesystem::path> payload_;
  std::string checksum_;
  std::optional<std::string> prompt_;
};

enum class ComposeRule { kPrefix, kTemplate };

/// Fixed instruction `t` plus the rule that joins it with working data `s`.
/// Template instructions must contain the `{input}` slot.
class TaskSpec {
 public:
  /// Throws CompositionError for an empty instruction.
  TaskSpec(std::string instruction, ComposeRule rule = ComposeRule::kPrefix);

  const std::string& instruction() const noexcept { return instruction_; }
  ComposeRule compose_rule() const noexcept { return rule_; }

  friend bool operator==(const TaskSpec&, const TaskSpec&) = default;

 private:
  std::string instruction_;
  ComposeRule rule_;
};

inline constexpr std::string_view kTemplateSlot = "{input}";

enum class VerdictStatus { kConsistent, kInconsistent, kUndecided };

struct ConsistencyVerdict {
  VerdictStatus status = VerdictStatus::kUndecided;
  std::string evidence;

  friend bool operator==(const ConsistencyVerdict&, const ConsistencyVerdict&) = default;
};

enum class HintStrategy { kLiteralAlg1, kAnchoredAppend, kReplace };

enum class CycleCounting {
  // max_cycles counts the initial cycle: N records in total.
  kTotal,
  // max_cycles counts refinements only: N + 1 records in total.
  kRefinements,
};

struct CycleConfig {
  int max_cycles = 4;
  HintStrategy hint_strategy = HintStrategy::kAnchoredAppend;
  std::uint64_t seed = 0;
  int provider_retries = 3;
  CycleCounting counting = CycleCounting::kTotal;
  // Total f/g/d invocations allowed per run; 0 selects 4 * max_records().
  int call_budget = 0;

  int max_records() const noexcept {
    return counting == CycleCounting::kTotal ? max_cycles : max_cycles + 1;
  }
  int effective_call_budget() const noexcept { return call_budget > 0 ? call_budget : 4 * max_records(); }

  friend bool operator==(const CycleConfig&, const CycleConfig&) = default;
};

struct CycleRecord {
  int index = 0;
  Artifact input_x = Artifact::text("");
  Artifact output_y = Artifact::text("");
  Artifact backtranslated_s = Artifact::text("");
  std::optional<std::string> hint;
  ConsistencyVerdict verdict;
  bool discriminated = false;
  std::int64_t timing_ms = 0;
};

enum class StopReason {
  kRunning,
  kConsistent,
  // LITERAL_ALG1 only: Consistent(s_0, s_{i+1}) held after the hint update.
  kPostUpdateConsistent,
  kMaxCycles,
  kUndecided,
};

struct Transcript {
  CycleConfig config;
  TaskSpec task{"-"};
  Artifact original_s = Artifact::text("");
  std::vector<CycleRecord> records;
  std::optional<Artifact> final_output;
  StopReason stop_reason = StopReason::kRunning;
};

struct ForwardInput {
  const TaskSpec& task;
  const Artifact& data;
  const Artifact& composed;
  int index;
};

struct DiscriminatorInput {
  const Artifact& original;
  const Artifact& backtranslated;
  const Artifact& output;
  int index;
};

struct Judgement {
  ConsistencyVerdict verdict;
  std::optional<std::string> hint;
};

using ForwardFn = std::function<Artifact(const ForwardInput&)>;
using BackwardFn = std::function<Artifact(const Artifact& output, int index)>;
using DiscriminatorFn = std::function<Judgement(const DiscriminatorInput&)>;
using ConsistencyFn = std::function<bool(const Artifact& original, const Artifact& candidate)>;
using PredicateFn =
    std::function<bool(const Artifact& original, const Artifact& candidate, std::string_view output)>;

struct CycleFunctions {
  ForwardFn forward;
  BackwardFn backward;
  DiscriminatorFn discriminate;
  // Optional; enables the post-update check under LITERAL_ALG1.
  ConsistencyFn consistent;
};

/// x = t + s. Image data is returned unchanged with the instruction attached
/// as prompt metadata.
Artifact compose_input(const TaskSpec& task, const Artifact& data);

inline constexpr std::string_view kLiteralSeparator = "\n";
inline constexpr std::string_view kAnchoredSeparator = "\nHint:\n";

Artifact apply_hint(const Artifact& current_s, const Artifact& backtranslated_s, const Artifact& original_s,
                    std::string_view hint, HintStrategy strategy);

ConsistencyVerdict detect_consistency(const Artifact& original_s, const Artifact& candidate_s,
                                      std::string_view discriminator_output, const PredicateFn& predicate);

/// Lowercases, drops punctuation and collapses whitespace.
std::string normalize_for_match(std::string_view text);

/// Tolerant substring test for the "cycle is consistent" sentence.
bool matches_consistency_template(std::string_view output);

/// Runs the initial cycle and then refinement cycles until the discriminator
/// reports consistency or the record limit is reached.
///
/// Any Error escaping f, g or d (and BudgetExceeded) carries the partial
/// transcript, which `resume_cycle` accepts.
Transcript run_cycle(const TaskSpec& task, const Artifact& original_s, const CycleFunctions& fns,
                     const CycleConfig& config);

/// Continues a partial transcript from its last completed record.
Transcript resume_cycle(Transcript partial, const CycleFunctions& fns);

/// Working data s_i for every record, reconstructed from the transcript alone.
/// The result has records.size() + 1 entries; the last one is the data the
/// next cycle would consume.
std::vector<Artifact> replay_working_data(const Transcript& transcript);

/// Structural invariant violations, empty when the transcript is well formed.
std::vector<std::string> check_invariants(const Transcript& transcript);

const char* to_string(Modality m);
const char* to_string(ComposeRule r);
const char* to_string(VerdictStatus s);
const char* to_string(HintStrategy s);
const char* to_string(CycleCounting c);
const char* to_string(StopReason r);

// Inverse of to_string; throw ParseError on unknown names.
Modality parse_modality(std::string_view name);
ComposeRule parse_compose_rule(std::string_view name);
VerdictStatus parse_verdict_status(std::string_view name);
HintStrategy parse_hint_strategy(std::string_view name);
CycleCounting parse_cycle_counting(std::string_view name);
StopReason parse_stop_reason(std::string_view name);

}  // namespace cycleprompt::core
