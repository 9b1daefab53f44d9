#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "core/cycle.hpp"

namespace cycleprompt::core {

// Image paths inside `base_dir` are written relative to it, so two run
// directories with the same content serialize identically. Wall-clock timings
// are left out of the canonical form.
nlohmann::json to_json(const Transcript& transcript, const std::filesystem::path& base_dir = {});
nlohmann::json to_json(const CycleConfig& config);
nlohmann::json to_json(const Artifact& artifact, const std::filesystem::path& base_dir = {});

/// Throws ParseError on schema violations.
Transcript transcript_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
CycleConfig cycle_config_from_json(const nlohmann::json& j);
Artifact artifact_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});

/// Pretty-printed canonical form terminated by a newline.
std::string serialize_transcript(const Transcript& transcript, const std::filesystem::path& base_dir = {});

/// One `{"cycle": <i>, "text": "<escaped>"}` line, without the newline.
std::string compat_line(int cycle, std::string_view text);

/// Every record's text output as compatibility lines, each newline-terminated.
/// Throws ModalityError when an output is an image.
std::string export_compat(const Transcript& transcript);

struct CompatEntry {
  int cycle = 0;
  std::string text;
  friend bool operator==(const CompatEntry&, const CompatEntry&) = default;
};

/// Parses compatibility lines; blank lines are skipped. Throws ParseError.
std::vector<CompatEntry> parse_compat(std::string_view content);

}  // namespace cycleprompt::core
