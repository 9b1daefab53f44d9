#include "runner/manifest.hpp"

#include <cctype>
#include <chrono>
#include <ctime>
#include <set>

#include <fmt/format.h>

#include "core/errors.hpp"
#include "core/hashing.hpp"

namespace cycleprompt::runner {

namespace fs = std::filesystem;
using nlohmann::json;

const char* to_string(TaskStatus s) {
  switch (s) {
    case TaskStatus::kPending: return "pending";
    case TaskStatus::kDone: return "done";
    case TaskStatus::kFailed: return "failed";
  }
  return "pending";
}

TaskStatus parse_task_status(std::string_view name) {
  if (name == "pending") return TaskStatus::kPending;
  if (name == "done") return TaskStatus::kDone;
  if (name == "failed") return TaskStatus::kFailed;
  throw ParseError("unknown task status '" + std::string(name) + "'");
}

int RunManifest::count(TaskStatus s) const {
  int n = 0;
  for (const auto& t : tasks) n += t.status == s ? 1 : 0;
  return n;
}

TaskEntry* RunManifest::find(const std::string& id) {
  for (auto& t : tasks) {
    if (t.id == id) return &t;
  }
  return nullptr;
}

const TaskEntry* RunManifest::find(const std::string& id) const {
  return const_cast<RunManifest*>(this)->find(id);
}

json to_json_without_timestamps(const RunManifest& m) {
  json tasks = json::array();
  for (const auto& t : m.tasks) {
    json e{{"id", t.id}, {"dir", t.dir}, {"status", to_string(t.status)}, {"records", t.records}};
    e["stop_reason"] = t.stop_reason ? json(*t.stop_reason) : json(nullptr);
    e["consistent_at"] = t.consistent_at ? json(*t.consistent_at) : json(nullptr);
    if (!t.error.empty()) e["error"] = t.error;
    tasks.push_back(std::move(e));
  }
  return json{{"version", 1}, {"fingerprint", m.fingerprint}, {"domain", m.domain}, {"tasks", std::move(tasks)}};
}

json to_json(const RunManifest& m) {
  json j = to_json_without_timestamps(m);
  json per_task = json::object();
  for (const auto& [id, t] : m.times) {
    per_task[id] = {{"started", t.started}, {"finished", t.finished}, {"duration_ms", t.duration_ms}};
  }
  j["timestamps"] = {{"created", m.created}, {"updated", m.updated}, {"tasks", std::move(per_task)}};
  return j;
}

RunManifest manifest_from_json(const json& j) {
  try {
    RunManifest m;
    if (j.at("version").get<int>() != 1) throw ParseError("unsupported manifest version");
    m.fingerprint = j.at("fingerprint").get<std::string>();
    m.domain = j.at("domain").get<std::string>();
    for (const auto& e : j.at("tasks")) {
      TaskEntry t;
      t.id = e.at("id").get<std::string>();
      t.dir = e.at("dir").get<std::string>();
      t.status = parse_task_status(e.at("status").get<std::string>());
      t.records = e.value("records", 0);
      if (e.contains("stop_reason") && !e["stop_reason"].is_null()) t.stop_reason = e["stop_reason"].get<std::string>();
      if (e.contains("consistent_at") && !e["consistent_at"].is_null()) t.consistent_at = e["consistent_at"].get<int>();
      t.error = e.value("error", "");
      m.tasks.push_back(std::move(t));
    }
    if (j.contains("timestamps")) {
      const auto& ts = j["timestamps"];
      m.created = ts.value("created", "");
      m.updated = ts.value("updated", "");
      const json per_task = ts.value("tasks", json::object());
      for (const auto& [id, t] : per_task.items()) {
        m.times[id] = {t.value("started", ""), t.value("finished", ""), t.value("duration_ms", std::int64_t{0})};
      }
    }
    return m;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed manifest: ") + e.what());
  }
}

void write_manifest(const fs::path& run_dir, const RunManifest& m) {
  write_file_atomic(run_dir / kManifestFile, to_json(m).dump(2) + "\n");
}

RunManifest read_manifest(const fs::path& run_dir) {
  const auto file = run_dir / kManifestFile;
  if (!fs::exists(file)) throw ConfigError(run_dir.string() + " holds no manifest");
  const auto j = json::parse(read_file(file), nullptr, false);
  if (j.is_discarded()) throw ParseError(file.string() + ": not valid JSON");
  return manifest_from_json(j);
}

std::vector<std::string> task_dir_names(const std::vector<std::string>& ids) {
  std::vector<std::string> out;
  std::set<std::string> used;
  for (const auto& id : ids) {
    std::string name;
    for (char c : id) {
      const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '-';
      name += ok ? c : '_';
    }
    if (name.empty() || name == "." || name == "..") name = "task";
    if (used.count(name) > 0) name += fmt::format("-{:08x}", fnv1a64(id) & 0xffffffffu);
    const std::string base = name;
    for (int n = 2; used.count(name) > 0; ++n) name = fmt::format("{}-{}", base, n);
    used.insert(name);
    out.push_back(std::move(name));
  }
  return out;
}

std::string utc_timestamp() {
  using namespace std::chrono;
  const auto now = system_clock::now();
  const auto ms = duration_cast<milliseconds>(now.time_since_epoch()).count() % 1000;
  const std::time_t t = system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  return fmt::format("{:04d}-{:02d}-{:02d}T{:02d}:{:02d}:{:02d}.{:03d}Z", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                     tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
}

}  // namespace cycleprompt::runner
