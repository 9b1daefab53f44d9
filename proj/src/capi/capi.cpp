#include "cycleprompt/cycleprompt.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "core/errors.hpp"
#include "runner/batch.hpp"
#include "runner/config.hpp"
#include "runner/manifest.hpp"
#include "runner/report.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cycleprompt;

struct cp_session {
  runner::RunConfig config;
  cp_task_callback callback = nullptr;
  void* user = nullptr;
};

namespace {

thread_local std::string last_error;

cp_status status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfig:
    case ErrorCode::kPrecondition:
      return CP_ERR_CONFIG;
    case ErrorCode::kFingerprintMismatch:
      return CP_ERR_FINGERPRINT;
    case ErrorCode::kFileWrite:
      return CP_ERR_IO;
    case ErrorCode::kProvider:
      return CP_ERR_PROVIDER;
    case ErrorCode::kFormat:
    case ErrorCode::kParse:
    case ErrorCode::kModality:
    case ErrorCode::kImageDecode:
    case ErrorCode::kExtraction:
    case ErrorCode::kDecomposition:
      return CP_ERR_FORMAT;
    default:
      return CP_ERR_INTERNAL;
  }
}

template <typename F>
cp_status guarded(F&& body) {
  try {
    last_error.clear();
    return body();
  } catch (const Error& e) {
    last_error = fmt::format("{}: {}", to_string(e.code()), e.what());
    return status_for(e.code());
  } catch (const json::exception& e) {
    last_error = std::string("json: ") + e.what();
    return CP_ERR_CONFIG;
  } catch (const std::filesystem::filesystem_error& e) {
    last_error = std::string("io: ") + e.what();
    return CP_ERR_IO;
  } catch (const std::exception& e) {
    last_error = std::string("internal: ") + e.what();
    return CP_ERR_INTERNAL;
  } catch (...) {
    last_error = "internal: unknown exception";
    return CP_ERR_INTERNAL;
  }
}

cp_status argument_error(const char* what) {
  last_error = std::string("argument: ") + what;
  return CP_ERR_ARGUMENT;
}

char* dup_string(const std::string& s) {
  auto* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void give(char** out, const std::string& s) {
  if (out != nullptr) *out = dup_string(s);
}

const fs::path& run_dir_of(const cp_session* s) {
  if (!s->config.output_dir) throw ConfigError("no output directory configured");
  return *s->config.output_dir;
}

runner::BatchHooks hooks_for(const cp_session* s) {
  runner::BatchHooks hooks;
  if (s->callback != nullptr) {
    hooks.on_task_done = [s](const runner::TaskEntry& e) {
      const std::string status = runner::to_string(e.status);
      s->callback(e.id.c_str(), status.c_str(), e.error.c_str(), s->user);
    };
  }
  return hooks;
}

cp_status batch_status(const runner::RunManifest& m) {
  if (runner::exit_code_for(m) == 0) return CP_OK;
  last_error = fmt::format("{} of {} tasks not DONE", m.tasks.size() - m.count(runner::TaskStatus::kDone),
                           m.tasks.size());
  return CP_PARTIAL;
}

json parse_overrides(const char* text) {
  if (text == nullptr || *text == '\0') return json::object();
  auto j = json::parse(text);
  if (!j.is_object()) throw ConfigError("overrides must be a JSON object");
  return j;
}

}  // namespace

extern "C" {

const char* cp_last_error(void) { return last_error.c_str(); }

const char* cp_version(void) { return "0.1.0"; }

cp_status cp_session_open(const char* config_path, const char* overrides_json, cp_session** out) {
  if (out == nullptr) return argument_error("out is NULL");
  *out = nullptr;
  return guarded([&] {
    const json overrides = parse_overrides(overrides_json);
    auto session = std::make_unique<cp_session>();
    if (config_path != nullptr) {
      session->config = runner::load_run_config(config_path, overrides);
    } else {
      session->config = runner::parse_run_config(json::object(), fs::current_path(), overrides);
    }
    *out = session.release();
    return CP_OK;
  });
}

cp_status cp_session_open_run(const char* run_dir, const char* overrides_json, cp_session** out) {
  if (out == nullptr) return argument_error("out is NULL");
  if (run_dir == nullptr) return argument_error("run_dir is NULL");
  *out = nullptr;
  return guarded([&] {
    auto session = std::make_unique<cp_session>();
    session->config = runner::load_run_config_from_run_dir(run_dir, parse_overrides(overrides_json));
    *out = session.release();
    return CP_OK;
  });
}

void cp_session_close(cp_session* session) { delete session; }

cp_status cp_set_task_callback(cp_session* session, cp_task_callback callback, void* user) {
  if (session == nullptr) return argument_error("session is NULL");
  session->callback = callback;
  session->user = user;
  return CP_OK;
}

cp_status cp_config_json(cp_session* session, char** out) {
  if (session == nullptr || out == nullptr) return argument_error("NULL session or out");
  return guarded([&] {
    give(out, session->config.resolved.dump(2));
    return CP_OK;
  });
}

cp_status cp_run(cp_session* session) {
  if (session == nullptr) return argument_error("session is NULL");
  return guarded([&] { return batch_status(runner::run_batch(session->config, hooks_for(session))); });
}

cp_status cp_resume(cp_session* session) {
  if (session == nullptr) return argument_error("session is NULL");
  return guarded([&] { return batch_status(runner::resume_batch(session->config, hooks_for(session))); });
}

cp_status cp_eval(cp_session* session, char** summary_json) {
  if (session == nullptr) return argument_error("session is NULL");
  return guarded([&] {
    const auto s = runner::evaluate_run(session->config, run_dir_of(session));
    give(summary_json, json{{"arm", s.arm},
                            {"source", s.source},
                            {"grade_mode", s.grade_mode},
                            {"report", eval::to_json(s.report)}}
                           .dump(2));
    return CP_OK;
  });
}

cp_status cp_export(cp_session* session, const char* format, const char* out_path, char** written_path) {
  if (session == nullptr || format == nullptr) return argument_error("NULL session or format");
  return guarded([&] {
    const auto f = runner::parse_export_format(format);
    const fs::path out = out_path != nullptr ? fs::absolute(out_path) : fs::path{};
    give(written_path, runner::export_run(run_dir_of(session), f, out).string());
    return CP_OK;
  });
}

cp_status cp_report(cp_session* session, char** written_path) {
  if (session == nullptr) return argument_error("session is NULL");
  return guarded([&] {
    give(written_path, runner::write_report(run_dir_of(session)).string());
    return CP_OK;
  });
}

cp_status cp_doctor(cp_session* session, int offline, char** text) {
  if (session == nullptr) return argument_error("session is NULL");
  return guarded([&] {
    const auto checks = runner::doctor(session->config, offline != 0);
    std::string body;
    bool ok = true;
    for (const auto& c : checks) {
      body += fmt::format("{} {}: {}\n", c.ok ? "ok  " : "FAIL", c.role, c.message);
      ok = ok && c.ok;
    }
    if (checks.empty()) body = "no providers configured\n";
    give(text, body);
    if (ok) return CP_OK;
    last_error = "provider check failed";
    for (const auto& c : checks) {
      if (!c.ok && session->config.providers.count(c.role) == 0) return CP_ERR_CONFIG;
    }
    return CP_ERR_PROVIDER;
  });
}

cp_status cp_manifest_json(cp_session* session, char** out) {
  if (session == nullptr || out == nullptr) return argument_error("NULL session or out");
  return guarded([&] {
    give(out, runner::to_json_without_timestamps(runner::read_manifest(run_dir_of(session))).dump(2));
    return CP_OK;
  });
}

void cp_string_free(char* s) { std::free(s); }

int cp_exit_code(cp_status status) {
  switch (status) {
    case CP_OK:
      return 0;
    case CP_ERR_CONFIG:
    case CP_ERR_FINGERPRINT:
    case CP_ERR_ARGUMENT:
    case CP_ERR_FORMAT:
      return 2;
    default:
      return 1;
  }
}

}  // extern "C"
