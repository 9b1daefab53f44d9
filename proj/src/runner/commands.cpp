#include <cstdlib>
#include <map>
#include <set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "caption/caption.hpp"
#include "codegen/codegen.hpp"
#include "core/errors.hpp"
#include "core/hashing.hpp"
#include "core/transcript_io.hpp"
#include "runner/batch.hpp"
#include "runner/report.hpp"

namespace cycleprompt::runner {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* arm_name(CaptionArm arm) {
  switch (arm) {
    case CaptionArm::kFinal: return "final";
    case CaptionArm::kInitial: return "initial";
    case CaptionArm::kZeroShot: return "zero_shot";
    case CaptionArm::kVisual: return "visual";
  }
  return "final";
}

core::Transcript load_transcript(const fs::path& run_dir, const TaskEntry& t) {
  const fs::path dir = run_dir / kTasksDir / t.dir;
  const auto j = json::parse(read_file(dir / kTranscriptFile), nullptr, false);
  if (j.is_discarded()) throw ParseError((dir / kTranscriptFile).string() + ": not valid JSON");
  return core::transcript_from_json(j, dir);
}

}  // namespace

EvalSummary evaluate_run(const RunConfig& config, const fs::path& run_dir) {
  if (!config.eval.benchmark) throw ConfigError("eval.benchmark is not configured");
  const auto items =
      eval::load_benchmark_subset(*config.eval.benchmark, config.eval.source, config.eval.subset, config.eval.seed);
  const ProviderSet providers = make_providers(config);
  const auto arm = config.eval.caption_arm;
  // FigureQA is binary: strict equality after normalization.
  const auto mode =
      config.eval.source == eval::QaSource::kFigureqa ? eval::GradeMode::kExactNormalized : config.eval.grade_mode;

  std::map<std::string, std::string> captions;  // image stem -> caption
  std::map<std::string, fs::path> images;
  if (arm != CaptionArm::kVisual) {
    std::optional<RunManifest> manifest;
    if (arm != CaptionArm::kZeroShot) manifest = read_manifest(run_dir);
    for (const auto& item : items) {
      if (!item.image) throw FormatError("item " + item.item_id + " has no image");
      const auto stem = item.image->stem().string();
      if (!images.emplace(stem, *item.image).second) continue;
      if (arm == CaptionArm::kZeroShot) {
        const caption::CaptionPack pack(providers.chat_binding(config, kVisionRole, "zero_shot:" + stem), {}, run_dir);
        captions[stem] = pack.zero_shot_caption(*item.image);
        continue;
      }
      const auto* entry = manifest->find(stem);
      if (entry == nullptr || entry->status != TaskStatus::kDone) continue;
      const auto t = load_transcript(run_dir, *entry);
      const auto& caption = arm == CaptionArm::kFinal ? *t.final_output : t.records.front().output_y;
      captions[stem] = caption.text_payload();
    }
  }

  std::vector<eval::GradedItem> graded;
  for (const auto& item : items) {
    eval::GradedItem g{item.item_id, item.question, "", false};
    if (arm == CaptionArm::kVisual) {
      const eval::Evaluator scoped({}, providers.chat_binding(config, kVisionRole, item.item_id));
      g.prediction = scoped.visual_qa(item);
    } else {
      const auto it = captions.find(item.image->stem().string());
      // No caption (task not DONE): counted as unanswered.
      if (it != captions.end()) {
        const eval::Evaluator scoped(providers.chat_binding(config, kTextRole, item.item_id), {});
        g.prediction = scoped.text_qa(it->second, item.question);
      }
    }
    g.correct = !g.prediction.empty() && eval::grade_answer(g.prediction, item.gold_answers, mode);
    graded.push_back(std::move(g));
  }

  std::vector<eval::DaResult> da;
  if (config.eval.da_score && arm != CaptionArm::kVisual) {
    for (const auto& [stem, caption] : captions) {
      const eval::Evaluator scoped(providers.chat_binding(config, kTextRole, "da:" + stem),
                                   providers.chat_binding(config, kVisionRole, "da:" + stem));
      da.push_back(scoped.da_score(caption, images.at(stem), config.eval.da_negatives));
    }
  }

  EvalSummary s{arm_name(arm), eval::to_string(config.eval.source), eval::to_string(mode),
                eval::make_report(std::move(graded), da)};
  json doc{{"fingerprint", config.fingerprint()},
           {"arm", s.arm},
           {"source", s.source},
           {"grade_mode", s.grade_mode},
           {"note", "scores depend on the bound providers; not comparable across model bindings"},
           {"report", eval::to_json(s.report)}};
  std::error_code ec;
  fs::create_directories(run_dir, ec);
  write_file_atomic(run_dir / kEvalFile, doc.dump(2) + "\n");
  return s;
}

ExportFormat parse_export_format(std::string_view name) {
  if (name == "completions") return ExportFormat::kCompletions;
  if (name == "compat") return ExportFormat::kCompat;
  if (name == "requests") return ExportFormat::kRequests;
  throw ParseError("unknown export format '" + std::string(name) + "'");
}

fs::path export_run(const fs::path& run_dir, ExportFormat format, const fs::path& out) {
  const auto manifest = read_manifest(run_dir);
  if (format != ExportFormat::kCompat) {
    if (manifest.domain != "codegen") throw ModalityError("completions export needs a codegen run");
    std::vector<std::pair<std::string, core::Transcript>> runs;
    for (const auto& t : manifest.tasks) {
      if (t.status == TaskStatus::kDone) runs.emplace_back(t.id, load_transcript(run_dir, t));
    }
    if (format == ExportFormat::kCompletions) {
      return codegen::export_completions(runs, out.empty() ? run_dir / kCompletionsFile : out);
    }
    std::vector<codegen::Completion> completions;
    for (const auto& [id, t] : runs) {
      if (!t.final_output || !t.final_output->is_text()) throw ModalityError("task " + id + " has no code output");
      completions.push_back({id, t.final_output->text_payload()});
    }
    const auto config = load_run_config_from_run_dir(run_dir);
    if (!config.input) throw ConfigError("the run has no problem file");
    return codegen::export_execution_requests(completions, codegen::load_humaneval(*config.input), kSandboxTimeoutS,
                                              out.empty() ? run_dir / kRequestsFile : out);
  }
  const fs::path dir = out.empty() ? run_dir / "export" : out;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw FileWriteError("cannot create " + dir.string() + ": " + ec.message());
  for (const auto& t : manifest.tasks) {
    if (t.status != TaskStatus::kDone) continue;
    write_file_atomic(dir / (t.dir + ".jsonl"), core::export_compat(load_transcript(run_dir, t)));
  }
  return dir;
}

std::vector<DoctorCheck> doctor(const RunConfig& config, bool offline) {
  std::vector<DoctorCheck> out;
  for (const auto& role : required_roles(config.domain)) {
    if (config.providers.count(role) == 0) out.push_back({role, false, "required by the domain but not configured"});
  }
  ProviderSet providers;
  try {
    providers = make_providers(config);
  } catch (const Error& e) {
    out.push_back({"*", false, e.what()});
    return out;
  }
  for (const auto& [role, b] : config.providers) {
    if (b.kind == ProviderBinding::Kind::kMock) {
      std::string what = "mock";
      if (b.fixtures) what += ", fixtures " + b.fixtures->string();
      if (b.script) what += ", script " + b.script->string();
      out.push_back({role, true, what});
      continue;
    }
    const auto& env = b.endpoint.api_key_env;
    if (!env.empty() && (std::getenv(env.c_str()) == nullptr || *std::getenv(env.c_str()) == '\0')) {
      out.push_back({role, false, "environment variable " + env + " is not set"});
      continue;
    }
    if (offline || role == kImageRole) {
      out.push_back({role, true, fmt::format("{} at {} (credentials present, not contacted)", b.endpoint.model_id,
                                             b.endpoint.base_url)});
      continue;
    }
    try {
      providers::ChatRequest req;
      req.model_id = b.endpoint.model_id;
      req.max_tokens = 1;
      req.messages = {{providers::Role::kUser, "Reply with OK.", {}}};
      providers::chat_complete(*providers.chat.at(role), req, providers::RetryPolicy{});
      out.push_back({role, true, fmt::format("{} at {} answered", b.endpoint.model_id, b.endpoint.base_url)});
    } catch (const Error& e) {
      out.push_back({role, false, e.what()});
    }
  }
  return out;
}

}  // namespace cycleprompt::runner
