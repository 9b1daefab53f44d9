#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace cycleprompt::runner {

enum class TaskStatus { kPending, kDone, kFailed };

const char* to_string(TaskStatus s);
TaskStatus parse_task_status(std::string_view name);

struct TaskEntry {
  std::string id;
  // Directory under tasks/, derived from the id.
  std::string dir;
  TaskStatus status = TaskStatus::kPending;
  std::optional<std::string> stop_reason;
  int records = 0;
  // Index of the record whose verdict was consistent.
  std::optional<int> consistent_at;
  std::string error;

  friend bool operator==(const TaskEntry&, const TaskEntry&) = default;
};

struct TaskTimes {
  std::string started;
  std::string finished;
  std::int64_t duration_ms = 0;
};

struct RunManifest {
  std::string fingerprint;
  std::string domain;
  std::vector<TaskEntry> tasks;

  // Wall-clock data lives here and nowhere else in a run directory.
  std::string created;
  std::string updated;
  std::map<std::string, TaskTimes> times;

  int count(TaskStatus s) const;
  TaskEntry* find(const std::string& id);
  const TaskEntry* find(const std::string& id) const;
};

inline constexpr const char* kManifestFile = "manifest.json";

nlohmann::json to_json(const RunManifest& m);
/// Same document with the timestamps removed.
nlohmann::json to_json_without_timestamps(const RunManifest& m);
/// Throws ParseError.
RunManifest manifest_from_json(const nlohmann::json& j);

/// Atomic replace. Throws FileWriteError.
void write_manifest(const std::filesystem::path& run_dir, const RunManifest& m);
/// Throws ConfigError when absent, ParseError when malformed.
RunManifest read_manifest(const std::filesystem::path& run_dir);

/// Filesystem-safe directory names, unique within `ids` and stable for a
/// given id list.
std::vector<std::string> task_dir_names(const std::vector<std::string>& ids);

/// Current UTC time, ISO 8601 with milliseconds.
std::string utc_timestamp();

}  // namespace cycleprompt::runner
