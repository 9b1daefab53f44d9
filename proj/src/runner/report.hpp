#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "eval/evaluation.hpp"
#include "runner/config.hpp"
#include "runner/manifest.hpp"

namespace cycleprompt::runner {

inline constexpr const char* kEvalFile = "eval.json";
inline constexpr const char* kReportFile = "report.md";
inline constexpr const char* kCompletionsFile = "completions.jsonl";
inline constexpr const char* kRequestsFile = "requests.jsonl";
inline constexpr double kSandboxTimeoutS = 10.0;

struct EvalSummary {
  std::string arm;
  std::string source;
  std::string grade_mode;
  eval::EvalReport report;
};

/// Counts, early-stop rate, mean cycles to consistency, and accuracy/DA rows
/// when an evaluation is given. Timestamps are never included, so the text
/// is stable for a fixed manifest.
std::string render_report(const RunManifest& manifest, const std::optional<EvalSummary>& eval = std::nullopt);

/// Reads manifest.json (and eval.json when present) and writes report.md.
std::filesystem::path write_report(const std::filesystem::path& run_dir);

/// Answers the configured benchmark subset and writes eval.json into the run
/// directory. Caption arms read captions from the run's transcripts.
EvalSummary evaluate_run(const RunConfig& config, const std::filesystem::path& run_dir);

enum class ExportFormat { kCompletions, kCompat, kRequests };

ExportFormat parse_export_format(std::string_view name);

/// kCompletions: completions.jsonl for a codegen run (DONE tasks, manifest
/// order). kCompat: one <task>.jsonl per DONE task in the `out` directory.
/// kRequests: sandbox execution requests joining completions with the tests
/// of the run's problem file.
std::filesystem::path export_run(const std::filesystem::path& run_dir, ExportFormat format,
                                 const std::filesystem::path& out);

struct DoctorCheck {
  std::string role;
  bool ok = false;
  std::string message;
};

/// Validates provider bindings. Live chat roles get a single one-token call
/// unless `offline`; image roles are never called.
std::vector<DoctorCheck> doctor(const RunConfig& config, bool offline);

}  // namespace cycleprompt::runner
