#include <doctest.h>

#include "codegen/codegen.hpp"
#include "core/errors.hpp"
#include "core/transcript_io.hpp"
#include "prompts/templates.hpp"
#include "support.hpp"

using namespace cycleprompt;
using namespace cycleprompt::codegen;

namespace {

const char* kCode = "def count_up():\n    return list(range(11))";

}  // namespace

TEST_SUITE("codegen") {

TEST_CASE("rendered prompts match the golden files") {
  CHECK(render_describe_prompt(kCode) == testing::fixture_text("prompts/describe_code.txt"));
  CHECK(std::string(write_code_prompt()) == testing::fixture_text("prompts/write_code.txt"));
  CHECK(render_discriminator_prompt("Write a function counting from 0 to 10.", kCode,
                                    "The function returns the integers from 0 to 10") ==
        testing::fixture_text("prompts/code_discriminator.txt"));
  CHECK(std::string(write_code_prompt()).find("NO code comment") != std::string::npos);
  CHECK(std::string(prompts::kDiscriminateCode).find(prompts::kConsistencyTemplate) != std::string::npos);
}

TEST_CASE("code extraction across response shapes") {
  SUBCASE("single fenced block") {
    CHECK(extract_code("Here:\n```python\ndef f():\n    return 1\n```\nDone.") == "def f():\n    return 1");
  }
  SUBCASE("the last fenced block wins") {
    CHECK(extract_code("```python\nx = 1\n```\nBetter:\n```python\ny = 2\n```") == "y = 2");
  }
  SUBCASE("unterminated fence runs to the end") {
    CHECK(extract_code("```python\nimport math\nprint(math.pi)\n") == "import math\nprint(math.pi)");
  }
  SUBCASE("bare code") { CHECK(extract_code("def f(x):\n    return x * 2\n") == "def f(x):\n    return x * 2"); }
  SUBCASE("prose around unfenced code") {
    const auto code = extract_code("Sure, here is the function.\ndef f(x):\n    return x + 1\nThis adds one.");
    CHECK(code == "def f(x):\n    return x + 1");
  }
  SUBCASE("prose only") { CHECK_THROWS_AS(extract_code("I cannot help with that request."), ExtractionError); }
  SUBCASE("empty") { CHECK_THROWS_AS(extract_code(""), ExtractionError); }
}

TEST_CASE("extraction is idempotent") {
  const char* responses[] = {
      "```python\ndef f():\n    return 1\n```",
      "Text first.\ndef g(a, b):\n    if a > b:\n        return a\n    return b\nText after.",
      "```\nclass A:\n    pass\n```\n```python\nimport os\nos.getcwd()\n```",
      "x = [i for i in range(3)]\nprint(x)",
  };
  for (const char* r : responses) {
    const auto once = extract_code(r);
    CHECK(extract_code(once) == once);
  }
}

TEST_CASE("the pack sends the write-code prompt as system message") {
  auto mock = std::make_shared<providers::MockProvider>();
  mock->set_script(providers::MockProvider::kGlobalScope, {"```python\ndef f():\n    return 1\n```"});
  const CodegenPack pack(testing::chat_binding(mock));
  const auto c = pack.forward_generate_code("Return one.");
  CHECK(c.code == "def f():\n    return 1");
  const auto log = mock->chat_log();
  REQUIRE(log.size() == 1);
  REQUIRE(log[0].messages.size() == 2);
  CHECK(log[0].messages[0].role == providers::Role::kSystem);
  CHECK(log[0].messages[0].text == prompts::kWriteCode);
  CHECK(log[0].messages[1].text == "Return one.");
}

TEST_CASE("discriminator verdicts") {
  auto mock = std::make_shared<providers::MockProvider>();
  mock->set_script(providers::MockProvider::kGlobalScope,
                   {"The cycle is consistent, and I have no more advice.", "  Handle negative inputs.  "});
  const CodegenPack pack(testing::chat_binding(mock));
  auto j = pack.discriminate_code("desc", "concl", "x = 1");
  CHECK(j.verdict.status == core::VerdictStatus::kConsistent);
  CHECK_FALSE(j.hint);
  j = pack.discriminate_code("desc", "concl", "x = 1");
  CHECK(j.verdict.status == core::VerdictStatus::kInconsistent);
  CHECK(j.hint == "Handle negative inputs.");
  // The discriminator prompt fills the original task into the description slot.
  CHECK(mock->chat_log()[0].messages[0].text == render_discriminator_prompt("desc", "x = 1", "concl"));
}

TEST_CASE("a full code cycle with anchored hints") {
  auto mock = std::make_shared<providers::MockProvider>();
  mock->set_script(providers::MockProvider::kGlobalScope,
                   {"```python\ndef f(n):\n    return n\n```", "Returns n.", "It should double n.",
                    "```python\ndef f(n):\n    return 2 * n\n```", "Returns 2n.",
                    "The cycle is consistent, and I have no more advice."});
  const CodegenPack pack(testing::chat_binding(mock));
  core::CycleConfig cfg;
  cfg.hint_strategy = core::HintStrategy::kAnchoredAppend;
  const auto t = run_code_cycle({"t/0", "Double n.", "f", ""}, pack, cfg);
  CHECK(t.records.size() == 2);
  CHECK(t.stop_reason == core::StopReason::kConsistent);
  CHECK(t.final_output->text_payload() == "def f(n):\n    return 2 * n");
  CHECK(mock->chat_log()[3].messages[1].text == "Double n.\nHint:\nIt should double n.");
  CHECK(core::check_invariants(t).empty());
}

TEST_CASE("problem file loading") {
  testing::TempDir dir;
  const auto good = dir / "p.jsonl";
  testing::write_text(good, R"({"task_id": "A/0", "prompt": "def f():\n", "entry_point": "f", "test": "def check(c): pass"})"
                            "\n\n"
                            R"({"task_id": "A/1", "prompt": "def g():\n", "entry_point": "g", "test": "def check(c): pass"})"
                            "\n");
  const auto tasks = load_humaneval(good);
  REQUIRE(tasks.size() == 2);
  CHECK(tasks[1].task_id == "A/1");
  CHECK(tasks[0].entry_point == "f");

  testing::write_text(dir / "dup.jsonl", R"({"task_id": "A", "prompt": "x", "entry_point": "f", "test": "t"})"
                                         "\n"
                                         R"({"task_id": "A", "prompt": "y", "entry_point": "f", "test": "t"})");
  CHECK_THROWS_AS(load_humaneval(dir / "dup.jsonl"), FormatError);
  testing::write_text(dir / "missing.jsonl", R"({"task_id": "A", "prompt": "x"})");
  CHECK_THROWS_AS(load_humaneval(dir / "missing.jsonl"), FormatError);
  testing::write_text(dir / "bad.jsonl", "not json\n");
  CHECK_THROWS_AS(load_humaneval(dir / "bad.jsonl"), FormatError);
  CHECK_THROWS_AS(load_humaneval(dir / "absent.jsonl"), FormatError);
}

TEST_CASE("completion and sandbox request exports") {
  testing::TempDir dir;
  core::Transcript t;
  t.final_output = core::Artifact::text("def f():\n    return \"q\"");
  const auto out = export_completions({{"A/0", t}}, dir / "c.jsonl");
  CHECK(read_file(out) == "{\"completion\":\"def f():\\n    return \\\"q\\\"\",\"task_id\":\"A/0\"}\n");
  const auto back = parse_completions(out);
  REQUIRE(back.size() == 1);
  CHECK(back[0] == Completion{"A/0", "def f():\n    return \"q\""});

  const std::vector<CodeTask> tasks{{"A/0", "def f():", "f", "def check(c):\n    assert c() == 'q'\n"}};
  const auto req = export_execution_requests(back, tasks, 5.0, dir / "r.jsonl");
  const auto j = nlohmann::json::parse(read_file(req));
  CHECK(j["task_id"] == "A/0");
  CHECK(j["entry_point"] == "f");
  CHECK(j["test_source"] == tasks[0].test);
  CHECK(j["timeout_s"] == 5.0);
  CHECK_THROWS_AS(export_execution_requests({{"B/9", "x"}}, tasks, 5.0, dir / "r2.jsonl"), FormatError);
  CHECK_THROWS_AS(export_execution_requests(back, tasks, 0.0, dir / "r3.jsonl"), PreconditionError);

  core::Transcript img;
  testing::write_solid_png(dir / "i.png", 2, 2, 0, 0, 0);
  img.final_output = core::Artifact::image(dir / "i.png");
  CHECK_THROWS_AS(export_completions({{"X", img}}, dir / "x.jsonl"), ModalityError);
}

}  // TEST_SUITE
