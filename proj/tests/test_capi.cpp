// Links only the shared library and its public header.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cycleprompt/cycleprompt.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Scratch {
  fs::path root;
  Scratch() {
    std::string tmpl = (fs::temp_directory_path() / "cpcapi-XXXXXX").string();
    REQUIRE(::mkdtemp(tmpl.data()) != nullptr);
    root = tmpl;
  }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(root, ec);
  }
};

void put(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_facts(const fs::path& dir) {
  put(dir / "one.facts", "a=1\nb=2\nc=3\nd=4\n");
  put(dir / "two.facts", "p=1\nq=2\nr=3\n");
}

std::string take(char* s) {
  std::string out = s == nullptr ? "" : s;
  cp_string_free(s);
  return out;
}

int cli(const std::string& args) {
  const std::string cmd = std::string(CP_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(rc));
  return WEXITSTATUS(rc);
}

struct Seen {
  std::vector<std::string> lines;
};

void on_task(const char* id, const char* status, const char*, void* user) {
  static_cast<Seen*>(user)->lines.push_back(std::string(id) + " " + status);
}

}  // namespace

TEST_CASE("sessions run, report and resume through the C API") {
  Scratch s;
  write_facts(s.root / "facts");
  const auto overrides =
      json{{"input", (s.root / "facts").string()}, {"output_dir", (s.root / "run").string()}}.dump();
  cp_session* session = nullptr;
  REQUIRE(cp_session_open(nullptr, overrides.c_str(), &session) == CP_OK);
  Seen seen;
  CHECK(cp_set_task_callback(session, on_task, &seen) == CP_OK);
  CHECK(cp_run(session) == CP_OK);
  CHECK(seen.lines == std::vector<std::string>{"one done", "two done"});

  char* out = nullptr;
  REQUIRE(cp_manifest_json(session, &out) == CP_OK);
  const auto manifest = json::parse(take(out));
  CHECK(manifest["tasks"].size() == 2);
  CHECK_FALSE(manifest.contains("created"));

  REQUIRE(cp_report(session, &out) == CP_OK);
  CHECK(slurp(take(out)).find("mean cycles to consistency: 3.0") != std::string::npos);

  CHECK(cp_run(session) == CP_ERR_CONFIG);
  CHECK(std::string(cp_last_error()).find("not empty") != std::string::npos);
  cp_session_close(session);

  REQUIRE(cp_session_open_run((s.root / "run").string().c_str(), nullptr, &session) == CP_OK);
  CHECK(cp_resume(session) == CP_OK);
  CHECK(cp_export(session, "completions", nullptr, &out) == CP_ERR_FORMAT);
  REQUIRE(cp_export(session, "compat", (s.root / "compat").string().c_str(), &out) == CP_OK);
  CHECK(fs::exists(fs::path(take(out)) / "one.jsonl"));
  cp_session_close(session);

  REQUIRE(cp_session_open_run((s.root / "run").string().c_str(), R"({"cycle": {"seed": 5}})", &session) == CP_OK);
  CHECK(cp_resume(session) == CP_ERR_FINGERPRINT);
  cp_session_close(session);
}

TEST_CASE("argument and configuration errors") {
  cp_session* session = nullptr;
  CHECK(cp_session_open(nullptr, nullptr, nullptr) == CP_ERR_ARGUMENT);
  CHECK(cp_session_open(nullptr, "[1]", &session) == CP_ERR_CONFIG);
  CHECK(session == nullptr);
  CHECK(cp_session_open(nullptr, "{\"bogus\": 1}", &session) == CP_ERR_CONFIG);
  CHECK(cp_session_open("/nonexistent/config.json", nullptr, &session) == CP_ERR_CONFIG);
  CHECK(cp_session_open_run("/nonexistent/run", nullptr, &session) != CP_OK);
  CHECK(cp_run(nullptr) == CP_ERR_ARGUMENT);
  CHECK(std::string(cp_version()) == "0.1.0");

  REQUIRE(cp_session_open(nullptr, nullptr, &session) == CP_OK);
  char* text = nullptr;
  REQUIRE(cp_config_json(session, &text) == CP_OK);
  CHECK(json::parse(take(text))["domain"] == "synthetic");
  CHECK(cp_doctor(session, 1, &text) == CP_OK);
  CHECK(take(text) == "no providers configured\n");
  cp_session_close(session);

  REQUIRE(cp_session_open(nullptr, R"({"domain": "codegen"})", &session) == CP_OK);
  CHECK(cp_doctor(session, 1, &text) == CP_ERR_CONFIG);
  CHECK(take(text).find("FAIL text") != std::string::npos);
  cp_session_close(session);

  CHECK(cp_exit_code(CP_OK) == 0);
  CHECK(cp_exit_code(CP_PARTIAL) == 1);
  CHECK(cp_exit_code(CP_ERR_PROVIDER) == 1);
  CHECK(cp_exit_code(CP_ERR_CONFIG) == 2);
  CHECK(cp_exit_code(CP_ERR_FINGERPRINT) == 2);
}

TEST_CASE("command-line exit codes") {
  Scratch s;
  write_facts(s.root / "facts");
  const auto facts = (s.root / "facts").string();
  const auto run = (s.root / "run").string();
  CHECK(cli("run --domain synthetic -i " + facts + " -o " + run) == 0);
  CHECK(fs::exists(fs::path(run) / "report.md"));
  CHECK(cli("run --domain synthetic -i " + facts + " -o " + run) == 2);
  CHECK(cli("resume " + run) == 0);
  CHECK(cli("report " + run) == 0);
  CHECK(cli("export " + run + " --format compat --out " + (s.root / "compat").string()) == 0);
  CHECK(cli("run --domain synthetic --max-cycles 0 -i " + facts + " -o " + (s.root / "x").string()) == 2);
  CHECK(cli("frobnicate") == 2);

  put(s.root / "p.jsonl",
      R"({"task_id": "T/0", "prompt": "def f(x):\n", "entry_point": "f", "test": "def check(c): pass"})"
      "\n"
      R"({"task_id": "T/1", "prompt": "def g(x):\n", "entry_point": "g", "test": "def check(c): pass"})"
      "\n");
  put(s.root / "script.json",
      json{{"T/0", {"```python\ndef f(x):\n    return x\n```", "Returns x.",
                    "The cycle is consistent, and I have no more advice."}},
           {"T/1", {"I will not write code."}}}
          .dump());
  const auto code_run = (s.root / "code").string();
  CHECK(cli("run --domain codegen -i " + (s.root / "p.jsonl").string() + " -o " + code_run + " --script text=" +
            (s.root / "script.json").string()) == 1);
  CHECK(cli("export " + code_run + " --format completions") == 0);
  CHECK(slurp(fs::path(code_run) / "completions.jsonl").find("T/0") != std::string::npos);
  CHECK(cli("doctor --offline") == 0);
  CHECK(cli("doctor --offline -c /nonexistent.json") == 2);
}
