#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "core/cycle.hpp"
#include "eval/evaluation.hpp"
#include "providers/http_provider.hpp"
#include "providers/mock_provider.hpp"
#include "providers/provider.hpp"
#include "synthetic/synthetic.hpp"

namespace cycleprompt::runner {

enum class Domain { kCodegen, kCaption, kSynthetic };

const char* to_string(Domain d);
Domain parse_domain(std::string_view name);

// Provider roles. "text" writes and describes code, answers from captions and
// decomposes them; "vision" sees images; "image" renders captions.
inline constexpr const char* kTextRole = "text";
inline constexpr const char* kVisionRole = "vision";
inline constexpr const char* kImageRole = "image";

struct ProviderBinding {
  enum class Kind { kMock, kLive } kind = Kind::kMock;
  // mock
  std::optional<std::filesystem::path> fixtures;
  std::optional<std::filesystem::path> script;
  // live
  providers::HttpEndpoint endpoint;
  int timeout_s = 120;
  int max_tokens = 1024;
};

struct CaptionSettings {
  int word_budget = 130;
  int padding_px = 10;
  providers::ImageSize image_size = providers::ImageSize::k1024;
};

struct SyntheticSettings {
  synthetic::SyntheticMode mode = synthetic::SyntheticMode::kConvergent;
  int droppable = 3;
};

// Which text answers the benchmark questions. kVisual skips captions and asks
// the vision model directly (the gold-standard ceiling).
enum class CaptionArm { kFinal, kInitial, kZeroShot, kVisual };

struct EvalSettings {
  std::optional<std::filesystem::path> benchmark;
  eval::QaSource source = eval::QaSource::kVqav2;
  int subset = 200;
  std::uint64_t seed = 0;
  eval::GradeMode grade_mode = eval::GradeMode::kExactNormalized;
  CaptionArm caption_arm = CaptionArm::kFinal;
  bool da_score = true;
  bool da_negatives = true;
};

struct RunConfig {
  Domain domain = Domain::kSynthetic;
  core::CycleConfig cycle;
  int retry_backoff_ms = 1000;
  std::optional<std::filesystem::path> input;
  std::optional<std::filesystem::path> output_dir;
  int parallelism = 1;
  CaptionSettings caption;
  SyntheticSettings synthetic;
  EvalSettings eval;
  std::map<std::string, ProviderBinding> providers;

  // Defaults merged with the file and overrides, paths made absolute.
  nlohmann::json resolved;

  /// SHA-256 of the resolved config without output_dir and parallelism.
  std::string fingerprint() const;
  /// Resolved config as persisted in a run directory.
  nlohmann::json persisted() const;
};

/// Built-in defaults, parsed from the checked-in defaults file.
const nlohmann::json& default_config();

/// Merges defaults, `document` and `overrides` (JSON merge patches, in that
/// order) and validates. Relative paths resolve against `base_dir`.
/// Throws ConfigError.
RunConfig parse_run_config(const nlohmann::json& document, const std::filesystem::path& base_dir,
                           const nlohmann::json& overrides = nlohmann::json::object());

/// Throws ConfigError when the file is missing or malformed.
RunConfig load_run_config(const std::filesystem::path& path,
                          const nlohmann::json& overrides = nlohmann::json::object());

/// The configuration persisted in a run directory, with output_dir set to it.
/// `overrides` are applied on top, e.g. eval settings chosen after the run.
RunConfig load_run_config_from_run_dir(const std::filesystem::path& run_dir,
                                       const nlohmann::json& overrides = nlohmann::json::object());

/// Providers instantiated once per batch and shared by its tasks.
struct ProviderSet {
  std::map<std::string, std::shared_ptr<providers::ChatProvider>> chat;
  std::map<std::string, std::shared_ptr<providers::ImageProvider>> image;
  std::map<std::string, std::shared_ptr<providers::MockProvider>> mocks;

  /// A binding for `role`, scoped to `task_id` for scripted mocks.
  /// Throws ConfigError when the role is not configured.
  providers::ChatBinding chat_binding(const RunConfig& config, const std::string& role,
                                      const std::string& task_id) const;
  providers::ImageBinding image_binding(const RunConfig& config, const std::string& role,
                                        const std::string& task_id) const;
};

/// Throws ConfigError, e.g. for a global mock script with parallelism > 1.
ProviderSet make_providers(const RunConfig& config);

/// Roles a domain needs.
std::vector<std::string> required_roles(Domain domain);

}  // namespace cycleprompt::runner
