// Command-line front end. Talks to the engine only through the C API.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cycleprompt/cycleprompt.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Flags {
  std::optional<std::string> domain;
  std::optional<std::string> input;
  std::optional<std::string> output_dir;
  std::optional<int> parallelism;

  std::optional<int> max_cycles;
  std::optional<std::string> hint_strategy;
  std::optional<std::string> counting;
  std::optional<std::uint64_t> seed;
  std::optional<int> provider_retries;
  std::optional<int> retry_backoff_ms;
  std::optional<int> call_budget;

  std::optional<int> word_budget;
  std::optional<int> padding_px;
  std::optional<std::string> image_size;

  std::optional<std::string> synthetic_mode;
  std::optional<int> droppable;

  std::optional<std::string> benchmark;
  std::optional<std::string> source;
  std::optional<int> subset;
  std::optional<std::uint64_t> eval_seed;
  std::optional<std::string> grade_mode;
  std::optional<std::string> caption_arm;
  std::optional<bool> da_score;
  std::optional<bool> da_negatives;

  std::vector<std::string> mock;
  std::vector<std::string> script;
  std::vector<std::string> live;
};

std::string absolute(const std::string& p) { return fs::absolute(p).lexically_normal().string(); }

template <typename T>
void put(json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

std::pair<std::string, std::string> split_role(const std::string& spec, const char* flag) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size()) {
    throw CLI::ValidationError(flag, "expected ROLE=VALUE, got '" + spec + "'");
  }
  return {spec.substr(0, eq), spec.substr(eq + 1)};
}

json overrides_from(const Flags& f) {
  json o = json::object();
  put(o, "domain", f.domain);
  if (f.input) o["input"] = absolute(*f.input);
  if (f.output_dir) o["output_dir"] = absolute(*f.output_dir);
  put(o, "parallelism", f.parallelism);

  json cycle = json::object();
  put(cycle, "max_cycles", f.max_cycles);
  put(cycle, "hint_strategy", f.hint_strategy);
  put(cycle, "counting", f.counting);
  put(cycle, "seed", f.seed);
  put(cycle, "provider_retries", f.provider_retries);
  put(cycle, "retry_backoff_ms", f.retry_backoff_ms);
  put(cycle, "call_budget", f.call_budget);
  if (!cycle.empty()) o["cycle"] = cycle;

  json caption = json::object();
  put(caption, "word_budget", f.word_budget);
  put(caption, "padding_px", f.padding_px);
  put(caption, "image_size", f.image_size);
  if (!caption.empty()) o["caption"] = caption;

  json synthetic = json::object();
  put(synthetic, "mode", f.synthetic_mode);
  put(synthetic, "droppable", f.droppable);
  if (!synthetic.empty()) o["synthetic"] = synthetic;

  json ev = json::object();
  if (f.benchmark) ev["benchmark"] = absolute(*f.benchmark);
  put(ev, "source", f.source);
  put(ev, "subset", f.subset);
  put(ev, "seed", f.eval_seed);
  put(ev, "grade_mode", f.grade_mode);
  put(ev, "caption_arm", f.caption_arm);
  put(ev, "da_score", f.da_score);
  put(ev, "da_negatives", f.da_negatives);
  if (!ev.empty()) o["eval"] = ev;

  // A flag replaces the role's binding kind; null removes the other one
  // under merge-patch semantics.
  json providers = json::object();
  for (const auto& spec : f.mock) {
    const auto [role, dir] = split_role(spec, "--mock");
    providers[role]["live"] = nullptr;
    providers[role]["mock"]["fixtures"] = absolute(dir);
  }
  for (const auto& spec : f.script) {
    const auto [role, file] = split_role(spec, "--script");
    providers[role]["live"] = nullptr;
    providers[role]["mock"]["script"] = absolute(file);
  }
  for (const auto& spec : f.live) {
    const auto [role, rest] = split_role(spec, "--live");
    const auto comma = rest.find(',');
    if (comma == std::string::npos) throw CLI::ValidationError("--live", "expected ROLE=BASE_URL,MODEL[,KEY_ENV]");
    json live{{"base_url", rest.substr(0, comma)}};
    auto model = rest.substr(comma + 1);
    if (const auto c2 = model.find(','); c2 != std::string::npos) {
      live["api_key_env"] = model.substr(c2 + 1);
      model = model.substr(0, c2);
    }
    live["model"] = model;
    providers[role]["mock"] = nullptr;
    providers[role]["live"] = live;
  }
  if (!providers.empty()) o["providers"] = providers;
  return o;
}

void add_run_flags(CLI::App* app, Flags& f) {
  app->add_option("--domain", f.domain, "codegen, caption or synthetic");
  app->add_option("-i,--input", f.input, "Problem file, image, directory or .facts file");
  app->add_option("-o,--output-dir", f.output_dir, "Run directory (created empty)");
  app->add_option("-j,--parallelism", f.parallelism, "Concurrent tasks")->check(CLI::PositiveNumber);
  app->add_option("-n,--max-cycles", f.max_cycles, "Cycle limit N")->check(CLI::PositiveNumber);
  app->add_option("--hint-strategy", f.hint_strategy, "auto, literal_alg1, anchored_append or replace");
  app->add_option("--counting", f.counting, "auto, total or refinements");
  app->add_option("--seed", f.seed, "Run seed");
  app->add_option("--provider-retries", f.provider_retries, "Retries after the first attempt");
  app->add_option("--retry-backoff-ms", f.retry_backoff_ms, "Initial retry backoff");
  app->add_option("--call-budget", f.call_budget, "Provider calls per task, 0 for the default");
  app->add_option("--word-budget", f.word_budget, "Caption length target");
  app->add_option("--padding-px", f.padding_px, "Gap between composite panels");
  app->add_option("--image-size", f.image_size, "Generated image size, e.g. 1024x1024");
  app->add_option("--synthetic-mode", f.synthetic_mode, "convergent or divergent");
  app->add_option("--droppable", f.droppable, "Facts the convergent renderer drops");
}

void add_eval_flags(CLI::App* app, Flags& f) {
  app->add_option("--benchmark", f.benchmark, "Benchmark directory or file");
  app->add_option("--source", f.source, "vqav2, figureqa or custom");
  app->add_option("--subset", f.subset, "Items to sample, 0 for all");
  app->add_option("--eval-seed", f.eval_seed, "Subset sampling seed");
  app->add_option("--grade-mode", f.grade_mode, "exact_normalized or vqa_consensus");
  app->add_option("--arm", f.caption_arm, "final, initial, zero_shot or visual");
  app->add_flag("--da-score,!--no-da-score", f.da_score, "Compute the DA-Score");
  app->add_flag("--da-negatives,!--no-da-negatives", f.da_negatives, "Add negated assertions");
}

void add_provider_flags(CLI::App* app, Flags& f) {
  app->add_option("--mock", f.mock, "ROLE=FIXTURE_DIR offline responses by request hash");
  app->add_option("--script", f.script, "ROLE=FILE ordered offline responses");
  app->add_option("--live", f.live, "ROLE=BASE_URL,MODEL[,KEY_ENV] OpenAI-compatible endpoint");
}

int fail(cp_status s) {
  std::cerr << "error: " << cp_last_error() << "\n";
  return cp_exit_code(s);
}

void print_task(const char* id, const char* status, const char* detail, void*) {
  if (detail != nullptr && *detail != '\0') {
    std::fprintf(stderr, "%s %s: %s\n", status, id, detail);
  } else {
    std::fprintf(stderr, "%s %s\n", status, id);
  }
}

struct Session {
  cp_session* s = nullptr;
  ~Session() { cp_session_close(s); }
};

void print_owned(char* text, std::ostream& out) {
  if (text == nullptr) return;
  out << text;
  if (*text != '\0' && text[std::char_traits<char>::length(text) - 1] != '\n') out << "\n";
  cp_string_free(text);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Run forward/backward prompt cycles over code, captions or synthetic facts."};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(cp_version()));

  Flags f;
  std::optional<std::string> config;
  std::string run_dir;
  bool print_config = false;

  auto* run = app.add_subcommand("run", "Run every task into a new run directory");
  run->add_option("-c,--config", config, "JSON config, merged over the built-in defaults")->check(CLI::ExistingFile);
  run->add_flag("--print-config", print_config, "Print the resolved config and exit");
  add_run_flags(run, f);
  add_eval_flags(run, f);
  add_provider_flags(run, f);

  auto* resume = app.add_subcommand("resume", "Re-run the tasks of a run that are not DONE");
  resume->add_option("run_dir", run_dir, "Run directory")->required()->check(CLI::ExistingDirectory);
  add_provider_flags(resume, f);

  auto* ev = app.add_subcommand("eval", "Answer benchmark questions from a caption run");
  ev->add_option("run_dir", run_dir, "Run directory")->required();
  add_eval_flags(ev, f);
  add_provider_flags(ev, f);

  std::string format = "compat";
  std::optional<std::string> out;
  auto* exp = app.add_subcommand("export", "Write completions, sandbox requests or per-cycle JSONL");
  exp->add_option("run_dir", run_dir, "Run directory")->required()->check(CLI::ExistingDirectory);
  exp->add_option("-f,--format", format, "completions, requests or compat")->capture_default_str();
  exp->add_option("--out", out, "Output file or directory");

  auto* rep = app.add_subcommand("report", "Write report.md for a run");
  rep->add_option("run_dir", run_dir, "Run directory")->required()->check(CLI::ExistingDirectory);

  bool offline = false;
  std::optional<std::string> doctor_run;
  auto* doc = app.add_subcommand("doctor", "Check provider bindings with at most one tiny call each");
  doc->add_option("-c,--config", config, "JSON config")->check(CLI::ExistingFile);
  doc->add_option("--run", doctor_run, "Check the bindings stored in a run directory");
  doc->add_flag("--offline", offline, "Validate bindings and credentials without calling anything");
  add_run_flags(doc, f);
  add_provider_flags(doc, f);

  // Usage errors share the configuration exit code.
  std::string overrides;
  try {
    app.parse(argc, argv);
    overrides = overrides_from(f).dump();
  } catch (const CLI::Error& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  Session session;
  cp_status st = CP_OK;
  if (*run || (*doc && !doctor_run)) {
    st = cp_session_open(config ? config->c_str() : nullptr, overrides.c_str(), &session.s);
  } else {
    const std::string dir = doctor_run ? *doctor_run : run_dir;
    st = cp_session_open_run(dir.c_str(), overrides.c_str(), &session.s);
  }
  if (st != CP_OK) return fail(st);
  cp_set_task_callback(session.s, print_task, nullptr);

  if (*run) {
    if (print_config) {
      char* text = nullptr;
      if ((st = cp_config_json(session.s, &text)) != CP_OK) return fail(st);
      print_owned(text, std::cout);
      return 0;
    }
    st = cp_run(session.s);
    if (st != CP_OK && st != CP_PARTIAL) return fail(st);
    char* path = nullptr;
    if (cp_report(session.s, &path) == CP_OK) print_owned(path, std::cout);
    if (st == CP_PARTIAL) std::cerr << cp_last_error() << "\n";
    return cp_exit_code(st);
  }
  if (*resume) {
    st = cp_resume(session.s);
    if (st != CP_OK && st != CP_PARTIAL) return fail(st);
    char* path = nullptr;
    if (cp_report(session.s, &path) == CP_OK) print_owned(path, std::cout);
    return cp_exit_code(st);
  }
  if (*ev) {
    char* summary = nullptr;
    if ((st = cp_eval(session.s, &summary)) != CP_OK) return fail(st);
    print_owned(summary, std::cout);
    char* path = nullptr;
    if ((st = cp_report(session.s, &path)) != CP_OK) return fail(st);
    cp_string_free(path);
    return 0;
  }
  if (*exp) {
    char* path = nullptr;
    if ((st = cp_export(session.s, format.c_str(), out ? out->c_str() : nullptr, &path)) != CP_OK) return fail(st);
    print_owned(path, std::cout);
    return 0;
  }
  if (*rep) {
    char* path = nullptr;
    if ((st = cp_report(session.s, &path)) != CP_OK) return fail(st);
    print_owned(path, std::cout);
    return 0;
  }
  char* text = nullptr;
  st = cp_doctor(session.s, offline ? 1 : 0, &text);
  print_owned(text, std::cout);
  return st == CP_OK ? 0 : fail(st);
}
