#include <doctest.h>

#include <map>

#include "core/errors.hpp"
#include "fake_server.hpp"
#include "runner/batch.hpp"
#include "runner/report.hpp"
#include "support.hpp"

using namespace cycleprompt;
using namespace cycleprompt::runner;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void write_facts(const fs::path& dir) {
  testing::write_text(dir / "alpha.facts", "a=1\nb=2\nc=3\nd=4\ne=5\n");
  testing::write_text(dir / "beta.facts", "color=red\nsize=3\nshape=round\nweight=9\n");
  testing::write_text(dir / "gamma.facts", "x=1\ny=2\nz=3\n");
}

RunConfig synthetic_config(const fs::path& facts, const fs::path& out, json extra = json::object()) {
  json doc{{"domain", "synthetic"}, {"input", facts.string()}, {"output_dir", out.string()}};
  doc.merge_patch(extra);
  return parse_run_config(doc, fs::current_path());
}

// Every file under `dir` except the manifest, by relative path.
std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), dir).string();
    if (rel == kManifestFile) continue;
    out[rel] = read_file(e.path());
  }
  return out;
}

json manifest_core(const fs::path& dir) { return to_json_without_timestamps(read_manifest(dir)); }

void write_problems(const fs::path& file) {
  std::string lines;
  for (int i = 0; i < 2; ++i) {
    lines += json{{"task_id", "P/" + std::to_string(i)},
                  {"prompt", "def f" + std::to_string(i) + "(x):\n    \"\"\"Return x.\"\"\"\n"},
                  {"entry_point", "f" + std::to_string(i)},
                  {"test", "def check(c):\n    assert c(1) == 1\n"}}
                 .dump() +
             "\n";
  }
  testing::write_text(file, lines);
}

}  // namespace

TEST_SUITE("runner") {

TEST_CASE("config validation") {
  testing::TempDir dir;
  CHECK_THROWS_AS(parse_run_config(json{{"domian", "synthetic"}}, dir.path()), ConfigError);
  CHECK_THROWS_AS(parse_run_config(json{{"cycle", {{"max_cycles", 0}}}}, dir.path()), ConfigError);
  CHECK_THROWS_AS(parse_run_config(json{{"domain", "audio"}}, dir.path()), ConfigError);
  CHECK_THROWS_AS(
      parse_run_config(json{{"providers", {{"text", {{"mock", json::object()}, {"live", {{"base_url", "x"}}}}}}}},
                       dir.path()),
      ConfigError);
  CHECK_THROWS_AS(parse_run_config(json::array(), dir.path()), ConfigError);
  CHECK_THROWS_AS(load_run_config(dir / "missing.json"), ConfigError);

  const auto c = parse_run_config(json{{"input", "facts"}}, dir.path());
  CHECK(c.input == dir.path() / "facts");
  CHECK(c.cycle.max_cycles == 4);
  const auto d = parse_run_config(json{{"input", "facts"}, {"parallelism", 4}, {"output_dir", "/tmp/else"}}, dir.path());
  CHECK(c.fingerprint() == d.fingerprint());
  const auto e = parse_run_config(json{{"input", "facts"}, {"cycle", {{"seed", 1}}}}, dir.path());
  CHECK(c.fingerprint() != e.fingerprint());
}

TEST_CASE("synthetic batch, report and export") {
  testing::TempDir dir;
  write_facts(dir / "facts");
  const auto cfg = synthetic_config(dir / "facts", dir / "run");
  const auto m = run_batch(cfg);
  REQUIRE(m.tasks.size() == 3);
  CHECK(m.count(TaskStatus::kDone) == 3);
  CHECK(exit_code_for(m) == 0);
  for (const auto& t : m.tasks) {
    CHECK(t.consistent_at == 3);
    CHECK(fs::exists(dir / "run" / kTasksDir / t.dir / kTranscriptFile));
    CHECK(fs::exists(dir / "run" / kTasksDir / t.dir / kCompatFile));
  }
  const auto report = read_file(write_report(dir / "run"));
  CHECK(report.find("mean cycles to consistency: 3.0") != std::string::npos);
  CHECK(report.find("early-stop rate: 1.000 (3/3)") != std::string::npos);
  CHECK(report.find("## Evaluation") == std::string::npos);
  CHECK(read_file(write_report(dir / "run")) == report);

  const auto out = export_run(dir / "run", ExportFormat::kCompat, dir / "compat");
  CHECK(read_file(out / "beta.jsonl") == read_file(dir / "run" / kTasksDir / m.tasks[1].dir / kCompatFile));
  CHECK_THROWS_AS(export_run(dir / "run", ExportFormat::kCompletions, {}), ModalityError);

  CHECK_THROWS_AS(run_batch(cfg), ConfigError);
}

TEST_CASE("an interrupted batch resumes to the clean result") {
  testing::TempDir dir;
  write_facts(dir / "facts");
  run_batch(synthetic_config(dir / "facts", dir / "clean"));

  int done = 0;
  BatchHooks hooks;
  hooks.should_stop = [&done] { return done >= 1; };
  hooks.on_task_done = [&done](const TaskEntry&) { ++done; };
  const auto cut = run_batch(synthetic_config(dir / "facts", dir / "cut"), hooks);
  CHECK(cut.count(TaskStatus::kDone) == 1);
  CHECK(cut.count(TaskStatus::kPending) == 2);
  CHECK(exit_code_for(cut) == 1);

  const auto resumed = resume_batch(load_run_config_from_run_dir(dir / "cut"));
  CHECK(resumed.count(TaskStatus::kDone) == 3);
  CHECK(snapshot(dir / "cut") == snapshot(dir / "clean"));
  CHECK(manifest_core(dir / "cut") == manifest_core(dir / "clean"));
}

TEST_CASE("resume refuses a changed configuration") {
  testing::TempDir dir;
  write_facts(dir / "facts");
  run_batch(synthetic_config(dir / "facts", dir / "run"));
  CHECK_THROWS_AS(resume_batch(load_run_config_from_run_dir(dir / "run", json{{"cycle", {{"max_cycles", 6}}}})),
                  FingerprintMismatch);
  CHECK_NOTHROW(resume_batch(load_run_config_from_run_dir(dir / "run", json{{"parallelism", 2}})));
}

TEST_CASE("batches are deterministic apart from manifest timestamps") {
  testing::TempDir dir;
  write_facts(dir / "facts");
  const json divergent{{"synthetic", {{"mode", "divergent"}}}, {"cycle", {{"max_cycles", 6}}}};
  run_batch(synthetic_config(dir / "facts", dir / "a", divergent));
  json parallel = divergent;
  parallel["parallelism"] = 3;
  run_batch(synthetic_config(dir / "facts", dir / "b", parallel));
  // The stored configs differ only in parallelism.
  auto a = snapshot(dir / "a");
  auto b = snapshot(dir / "b");
  auto ca = json::parse(a.at(kConfigFile));
  auto cb = json::parse(b.at(kConfigFile));
  CHECK(ca["parallelism"] == 1);
  ca.erase("parallelism");
  cb.erase("parallelism");
  CHECK(ca == cb);
  a.erase(kConfigFile);
  b.erase(kConfigFile);
  CHECK(a == b);
  CHECK(manifest_core(dir / "a") == manifest_core(dir / "b"));
}

TEST_CASE("every artifact stays inside the output directory") {
  testing::TempDir dir;
  write_facts(dir / "facts");
  const auto before = snapshot(dir.path());
  run_batch(synthetic_config(dir / "facts", dir / "run"));
  for (const auto& [rel, _] : snapshot(dir.path())) {
    if (before.count(rel)) continue;
    CHECK(rel.rfind("run/", 0) == 0);
  }
}

TEST_CASE("caption batch with mock providers") {
  testing::TempDir dir;
  testing::write_solid_png(dir / "imgs" / "one.png", 12, 8, 10, 20, 30);
  testing::write_solid_png(dir / "imgs" / "two.png", 6, 6, 200, 20, 30);
  testing::write_text(dir / "vision.json",
                      json{{"one", {"c0", "better one", "c1"}}, {"two", {"d0", "better two", "d1"}}}.dump());
  const json doc{{"domain", "caption"},
                 {"input", (dir / "imgs").string()},
                 {"output_dir", (dir / "run").string()},
                 {"cycle", {{"max_cycles", 1}}},
                 {"providers",
                  {{"vision", {{"mock", {{"script", (dir / "vision.json").string()}}}}},
                   {"image", {{"mock", json::object()}}}}}};
  const auto m = run_batch(parse_run_config(doc, dir.path()));
  REQUIRE(m.count(TaskStatus::kDone) == 2);
  for (const auto& t : m.tasks) {
    const auto task_dir = dir / "run" / kTasksDir / t.dir;
    CHECK(t.records == 2);
    CHECK(fs::exists(task_dir / "original.png"));
    CHECK(fs::exists(task_dir / "gen_1.png"));
    CHECK(fs::exists(task_dir / "gen_2.png"));
    CHECK(fs::exists(task_dir / "composite_1.png"));
  }
}

TEST_CASE("codegen batch, failures and exports") {
  testing::TempDir dir;
  write_problems(dir / "p.jsonl");
  const std::string ok = "The cycle is consistent, and I have no more advice.";
  testing::write_text(dir / "text.json",
                      json{{"P/0", {"```python\ndef f0(x):\n    return x\n```", "Returns x.", ok}},
                           {"P/1", {"no code here at all."}}}
                          .dump());
  const json doc{{"domain", "codegen"},
                 {"input", (dir / "p.jsonl").string()},
                 {"output_dir", (dir / "run").string()},
                 {"providers", {{"text", {{"mock", {{"script", (dir / "text.json").string()}}}}}}}};
  const auto m = run_batch(parse_run_config(doc, dir.path()));
  CHECK(m.tasks[0].status == TaskStatus::kDone);
  CHECK(m.tasks[1].status == TaskStatus::kFailed);
  CHECK(m.tasks[1].error.rfind("ExtractionError", 0) == 0);
  CHECK(exit_code_for(m) == 1);
  CHECK(fs::exists(dir / "run" / kTasksDir / m.tasks[1].dir / kErrorFile));

  const auto comp = export_run(dir / "run", ExportFormat::kCompletions, {});
  CHECK(read_file(comp) == "{\"completion\":\"def f0(x):\\n    return x\",\"task_id\":\"P/0\"}\n");
  const auto req = export_run(dir / "run", ExportFormat::kRequests, {});
  const auto j = json::parse(read_file(req));
  CHECK(j["task_id"] == "P/0");
  CHECK(j["timeout_s"] == kSandboxTimeoutS);
}

TEST_CASE("caption evaluation over a custom benchmark") {
  testing::TempDir dir;
  testing::write_solid_png(dir / "bench" / "cat.png", 4, 4, 0, 0, 0);
  testing::write_text(dir / "bench" / "qa.jsonl",
                      "{\"item_id\": \"q1\", \"question\": \"How many cats?\", \"answer\": \"one\", \"image\": \"cat.png\"}\n"
                      "{\"item_id\": \"q2\", \"question\": \"Is it red?\", \"answer\": \"no\", \"image\": \"cat.png\"}\n");
  testing::write_text(dir / "vision.json",
                      json{{"cat", {"A cat.", "One black cat.", "c"}}, {"da:cat", {"yes", "no"}}}.dump());
  testing::write_text(dir / "text.json",
                      json{{"q1", {"1"}}, {"q2", {"yes"}}, {"da:cat", {"1. There is a cat.", "1. There is no cat."}}}
                          .dump());
  const json doc{
      {"domain", "caption"},
      {"output_dir", (dir / "run").string()},
      {"cycle", {{"max_cycles", 1}}},
      {"eval", {{"benchmark", (dir / "bench" / "qa.jsonl").string()}, {"source", "custom"}, {"subset", 0}}},
      {"providers",
       {{"vision", {{"mock", {{"script", (dir / "vision.json").string()}}}}},
        {"image", {{"mock", json::object()}}},
        {"text", {{"mock", {{"script", (dir / "text.json").string()}}}}}}}};
  const auto cfg = parse_run_config(doc, dir.path());
  REQUIRE(run_batch(cfg).count(TaskStatus::kDone) == 1);
  const auto s = evaluate_run(cfg, dir / "run");
  CHECK(s.report.n_items == 2);
  CHECK(s.report.n_correct == 1);
  CHECK(s.report.da_positive == 1.0);
  CHECK(s.report.da_with_negatives == 1.0);
  const auto report = read_file(write_report(dir / "run"));
  CHECK(report.find("accuracy: 0.500 (1/2)") != std::string::npos);
  CHECK(report.find("not comparable") != std::string::npos);
}

TEST_CASE("doctor checks bindings") {
  testing::TempDir dir;
  const json doc{{"domain", "codegen"}, {"providers", {{"text", {{"mock", json::object()}}}}}};
  const auto checks = doctor(parse_run_config(doc, dir.path()), true);
  REQUIRE(checks.size() == 1);
  CHECK(checks[0].role == "text");
  const auto missing = doctor(parse_run_config(json{{"domain", "caption"}}, dir.path()), true);
  bool any_failed = false;
  for (const auto& c : missing) any_failed |= !c.ok;
  CHECK(any_failed);
}

TEST_CASE("live credentials never reach the run directory") {
  testing::FakeServer server;
  const std::string secret = "sk-live-scrub-7c1e9a55d0";
  ::setenv("CP_SCRUB_KEY", secret.c_str(), 1);
  for (int i = 0; i < 2; ++i) {
    server.queue(200, testing::FakeServer::chat_reply("```python\ndef f" + std::to_string(i) + "(x):\n    return x\n```"));
    server.queue(200, testing::FakeServer::chat_reply("Returns x."));
    server.queue(200, testing::FakeServer::chat_reply("The cycle is consistent, and I have no more advice."));
  }
  testing::TempDir dir;
  write_problems(dir / "p.jsonl");
  const json doc{
      {"domain", "codegen"},
      {"input", (dir / "p.jsonl").string()},
      {"output_dir", (dir / "run").string()},
      {"cycle", {{"provider_retries", 1}}},
      {"providers",
       {{"text", {{"live", {{"base_url", server.base_url()}, {"model", "m"}, {"api_key_env", "CP_SCRUB_KEY"}}}}}}}};
  const auto m = run_batch(parse_run_config(doc, dir.path()));
  CHECK(m.count(TaskStatus::kDone) == 2);
  CHECK(server.requests().size() == 6);
  CHECK(server.requests()[0].auth == "Bearer " + secret);
  for (const auto& [rel, content] : snapshot(dir / "run")) {
    CAPTURE(rel);
    CHECK(content.find(secret) == std::string::npos);
  }
  CHECK(read_file(dir / "run" / kManifestFile).find(secret) == std::string::npos);
  ::unsetenv("CP_SCRUB_KEY");
}

}  // TEST_SUITE
