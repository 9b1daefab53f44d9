#include "runner/batch.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <mutex>
#include <set>
#include <thread>

#include <fmt/format.h>

#include "caption/caption.hpp"
#include "core/errors.hpp"
#include "core/hashing.hpp"
#include "core/transcript_io.hpp"

namespace cycleprompt::runner {

namespace fs = std::filesystem;

namespace {

bool is_image_file(const fs::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

std::vector<fs::path> sorted_files(const fs::path& dir, const std::function<bool(const fs::path&)>& keep) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && keep(e.path())) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

const fs::path& require_input(const RunConfig& config) {
  if (!config.input) throw ConfigError("no input configured");
  if (!fs::exists(*config.input)) throw ConfigError("input not found: " + config.input->string());
  return *config.input;
}

std::vector<TaskInput> caption_tasks(const RunConfig& config) {
  std::vector<fs::path> images;
  if (config.input) {
    const auto& in = require_input(config);
    images = fs::is_directory(in) ? sorted_files(in, is_image_file) : std::vector<fs::path>{in};
  } else if (config.eval.benchmark) {
    std::set<fs::path> unique;
    for (const auto& item :
         eval::load_benchmark_subset(*config.eval.benchmark, config.eval.source, config.eval.subset, config.eval.seed)) {
      if (item.image) unique.insert(*item.image);
    }
    images.assign(unique.begin(), unique.end());
  } else {
    throw ConfigError("the caption domain needs an input image, directory or eval.benchmark");
  }
  std::vector<TaskInput> out;
  std::set<std::string> seen;
  for (const auto& img : images) {
    const auto id = img.stem().string();
    if (!seen.insert(id).second) throw ConfigError("two input images share the name " + id);
    out.push_back({id, img});
  }
  return out;
}

struct Outcome {
  TaskEntry entry;
  TaskTimes times;
};

TaskEntry summarize(TaskEntry e, const core::Transcript& t) {
  e.status = TaskStatus::kDone;
  e.records = static_cast<int>(t.records.size());
  e.stop_reason = core::to_string(t.stop_reason);
  if (t.stop_reason == core::StopReason::kConsistent || t.stop_reason == core::StopReason::kPostUpdateConsistent) {
    e.consistent_at = t.records.back().index;
  }
  e.error.clear();
  return e;
}

core::Transcript run_task(const RunConfig& config, const ProviderSet& providers, const TaskInput& task,
                          const fs::path& dir) {
  switch (config.domain) {
    case Domain::kCodegen: {
      const codegen::CodegenPack pack(providers.chat_binding(config, kTextRole, task.id));
      return codegen::run_code_cycle(std::get<codegen::CodeTask>(task.data), pack, config.cycle);
    }
    case Domain::kCaption: {
      caption::CaptionOptions options;
      options.padding_px = config.caption.padding_px;
      options.word_budget = config.caption.word_budget;
      const caption::CaptionPack pack(providers.chat_binding(config, kVisionRole, task.id),
                                      providers.image_binding(config, kImageRole, task.id), dir, options);
      return caption::run_caption_cycle(std::get<fs::path>(task.data), pack, config.cycle);
    }
    case Domain::kSynthetic: {
      const auto& facts = std::get<synthetic::FactSet>(task.data);
      const std::uint64_t seed = config.cycle.seed ^ fnv1a64(task.id);
      const auto policy = config.synthetic.mode == synthetic::SyntheticMode::kConvergent
                              ? synthetic::RenderPolicy::convergent(
                                    synthetic::pick_droppable(facts, config.synthetic.droppable, seed), seed)
                              : synthetic::RenderPolicy::divergent(seed);
      return synthetic::run_synthetic_cycle(facts, synthetic::SyntheticPack(policy), config.cycle);
    }
  }
  throw ConfigError("unknown domain");
}

Outcome execute(const RunConfig& config, const ProviderSet& providers, const TaskInput& task, TaskEntry entry) {
  Outcome out;
  out.times.started = utc_timestamp();
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path dir = *config.output_dir / kTasksDir / entry.dir;
  std::error_code ec;
  fs::remove_all(dir, ec);
  fs::create_directories(dir, ec);

  try {
    if (ec) throw FileWriteError("cannot create " + dir.string() + ": " + ec.message());
    const auto transcript = run_task(config, providers, task, dir);
    write_file_atomic(dir / kTranscriptFile, core::serialize_transcript(transcript, dir));
    write_file_atomic(dir / kCompatFile, core::export_compat(transcript));
    out.entry = summarize(std::move(entry), transcript);
  } catch (const Error& e) {
    if (const auto partial = e.partial_transcript()) {
      try {
        write_file_atomic(dir / kPartialTranscriptFile, core::serialize_transcript(*partial, dir));
      } catch (const Error&) {
        // The failure itself is what gets reported.
      }
    }
    entry.status = TaskStatus::kFailed;
    entry.error = fmt::format("{}: {}", to_string(e.code()), e.what());
    try {
      write_file_atomic(dir / kErrorFile, entry.error + "\n");
    } catch (const Error&) {
    }
    out.entry = std::move(entry);
  } catch (const std::exception& e) {
    entry.status = TaskStatus::kFailed;
    entry.error = fmt::format("internal: {}", e.what());
    out.entry = std::move(entry);
  }
  out.times.finished = utc_timestamp();
  out.times.duration_ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

// Runs the tasks whose manifest status is not DONE; the manifest is written by
// this thread only, under the lock, after every task.
void drive(const RunConfig& config, const std::vector<TaskInput>& tasks, RunManifest& manifest,
           const BatchHooks& hooks) {
  for (const auto& r : required_roles(config.domain)) {
    if (config.providers.count(r) == 0) throw ConfigError("the domain needs a '" + r + "' provider");
  }
  const ProviderSet providers = make_providers(config);

  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (manifest.tasks[i].status != TaskStatus::kDone) todo.push_back(i);
  }

  std::mutex mu;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stopped{false};
  auto record = [&](std::size_t i, Outcome o) {
    std::lock_guard lock(mu);
    manifest.tasks[i] = o.entry;
    manifest.times[o.entry.id] = o.times;
    manifest.updated = utc_timestamp();
    write_manifest(*config.output_dir, manifest);
    if (hooks.on_task_done) hooks.on_task_done(o.entry);
  };
  auto worker = [&] {
    while (true) {
      if (stopped.load()) return;
      if (hooks.should_stop) {
        std::lock_guard lock(mu);
        if (hooks.should_stop()) {
          stopped = true;
          return;
        }
      }
      const std::size_t k = next.fetch_add(1);
      if (k >= todo.size()) return;
      const std::size_t i = todo[k];
      TaskEntry entry;
      {
        std::lock_guard lock(mu);
        entry = manifest.tasks[i];
      }
      record(i, execute(config, providers, tasks[i], std::move(entry)));
    }
  };

  const auto n_workers = std::min<std::size_t>(static_cast<std::size_t>(config.parallelism), todo.size());
  if (n_workers <= 1) {
    // Ordered mock scripts stay on one thread.
    worker();
    return;
  }
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
}

bool is_empty_dir(const fs::path& dir) {
  return fs::is_directory(dir) && fs::directory_iterator(dir) == fs::directory_iterator();
}

}  // namespace

std::vector<TaskInput> enumerate_tasks(const RunConfig& config) {
  std::vector<TaskInput> out;
  switch (config.domain) {
    case Domain::kCodegen:
      for (auto& t : codegen::load_humaneval(require_input(config))) {
        auto id = t.task_id;
        out.push_back({std::move(id), std::move(t)});
      }
      break;
    case Domain::kCaption:
      out = caption_tasks(config);
      break;
    case Domain::kSynthetic: {
      const auto& in = require_input(config);
      const auto files = fs::is_directory(in)
                             ? sorted_files(in, [](const fs::path& p) { return p.extension() == ".facts"; })
                             : std::vector<fs::path>{in};
      for (const auto& f : files) out.push_back({f.stem().string(), synthetic::load_fact_file(f)});
      break;
    }
  }
  if (out.empty()) throw ConfigError("the input holds no tasks");
  return out;
}

RunManifest run_batch(const RunConfig& config, const BatchHooks& hooks) {
  if (!config.output_dir) throw ConfigError("no output directory configured");
  const fs::path& root = *config.output_dir;
  if (fs::exists(root) && !is_empty_dir(root)) {
    throw ConfigError(root.string() + " is not empty; use resume to continue a run");
  }
  const auto tasks = enumerate_tasks(config);
  std::error_code ec;
  fs::create_directories(root / kTasksDir, ec);
  if (ec) throw FileWriteError("cannot create " + root.string() + ": " + ec.message());

  write_file_atomic(root / kConfigFile, config.persisted().dump(2) + "\n");
  RunManifest manifest;
  manifest.fingerprint = config.fingerprint();
  manifest.domain = to_string(config.domain);
  std::vector<std::string> ids;
  for (const auto& t : tasks) ids.push_back(t.id);
  const auto dirs = task_dir_names(ids);
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    TaskEntry e;
    e.id = ids[i];
    e.dir = dirs[i];
    manifest.tasks.push_back(std::move(e));
  }
  manifest.created = manifest.updated = utc_timestamp();
  write_manifest(root, manifest);

  drive(config, tasks, manifest, hooks);
  return manifest;
}

RunManifest resume_batch(const RunConfig& config, const BatchHooks& hooks) {
  if (!config.output_dir) throw ConfigError("no run directory given");
  RunManifest manifest = read_manifest(*config.output_dir);
  const auto current = config.fingerprint();
  if (manifest.fingerprint != current) {
    throw FingerprintMismatch(fmt::format("configuration changed since the run started (manifest {}, now {})",
                                          manifest.fingerprint.substr(0, 12), current.substr(0, 12)));
  }
  const auto tasks = enumerate_tasks(config);
  bool same = tasks.size() == manifest.tasks.size();
  for (std::size_t i = 0; same && i < tasks.size(); ++i) same = tasks[i].id == manifest.tasks[i].id;
  if (!same) throw ConfigError("the input's task list no longer matches the manifest");

  drive(config, tasks, manifest, hooks);
  return manifest;
}

int exit_code_for(const RunManifest& manifest) {
  return manifest.count(TaskStatus::kDone) == static_cast<int>(manifest.tasks.size()) ? 0 : 1;
}

}  // namespace cycleprompt::runner
