#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "codegen/codegen.hpp"
#include "runner/config.hpp"
#include "runner/manifest.hpp"
#include "synthetic/synthetic.hpp"

namespace cycleprompt::runner {

struct TaskInput {
  std::string id;
  std::variant<codegen::CodeTask, std::filesystem::path, synthetic::FactSet> data;
};

/// Tasks in a stable order. Codegen reads a problem file; caption reads an
/// image or a directory of images (or, without an input, the images of the
/// configured benchmark subset); synthetic reads a .facts file or directory.
/// Throws ConfigError / FormatError.
std::vector<TaskInput> enumerate_tasks(const RunConfig& config);

struct BatchHooks {
  // Checked before each task starts; true leaves the rest PENDING.
  std::function<bool()> should_stop;
  std::function<void(const TaskEntry&)> on_task_done;
};

inline constexpr const char* kConfigFile = "config.json";
inline constexpr const char* kTasksDir = "tasks";
inline constexpr const char* kTranscriptFile = "transcript.json";
inline constexpr const char* kPartialTranscriptFile = "transcript.partial.json";
inline constexpr const char* kCompatFile = "cycles.jsonl";
inline constexpr const char* kErrorFile = "error.txt";

/// Runs every task into a new (or empty) output directory. Task failures are
/// recorded in the manifest and never abort the batch. Throws ConfigError when
/// the output directory already holds files.
RunManifest run_batch(const RunConfig& config, const BatchHooks& hooks = {});

/// Re-runs every task that is not DONE. Throws FingerprintMismatch when the
/// configuration differs from the one the run started with.
RunManifest resume_batch(const RunConfig& config, const BatchHooks& hooks = {});

/// 0 when every task is DONE, 1 otherwise.
int exit_code_for(const RunManifest& manifest);

}  // namespace cycleprompt::runner
