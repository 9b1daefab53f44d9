#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>

#include "core/cycle.hpp"
#include "providers/provider.hpp"

namespace cycleprompt::caption {

struct CompositeSpec {
  std::filesystem::path left;   // reference
  std::filesystem::path right;  // candidate
  std::filesystem::path out_path;
  int padding_px = 10;
};

/// Writes the side-by-side PNG. Throws ImageDecodeError, FileWriteError.
std::filesystem::path build_composite(const CompositeSpec& spec);

std::string composite_name(int cycle);  // composite_<cycle>.png
std::string generated_name(int cycle);  // gen_<cycle>.png
inline constexpr const char* kOriginalName = "original.png";

/// Whitespace-separated tokens.
std::size_t word_count(std::string_view text);

std::string render_discriminator_prompt(std::string_view current_caption);

/// Removes openings such as "The reference image shows" or "New description:"
/// and wrapping quotes, then capitalizes. Text without a preamble comes back
/// trimmed but otherwise unchanged.
std::string strip_preamble(std::string_view response);

struct CaptionOptions {
  int padding_px = 10;
  // Soft target; captions over it are reported through `log`, never cut.
  int word_budget = 130;
  std::function<void(const std::string&)> log;
};

/// The Image-Text-Image cycle. Generated images and composites are written
/// once into `run_dir`.
class CaptionPack {
 public:
  CaptionPack(providers::ChatBinding vision, providers::ImageBinding image, std::filesystem::path run_dir,
              CaptionOptions options = {});

  /// Checks the image decodes before calling the provider.
  std::string initial_caption(const std::filesystem::path& image) const;
  /// Baseline arm.
  std::string zero_shot_caption(const std::filesystem::path& image) const;
  /// Renders gen_<cycle>.png from the caption.
  std::filesystem::path generate_candidate(const std::string& caption, int cycle) const;
  /// Builds composite_<cycle>.png and asks for a rewritten caption.
  std::string discriminate_caption(const std::filesystem::path& reference, const std::filesystem::path& candidate,
                                   std::string_view current_caption, int cycle) const;

  core::CycleFunctions functions() const;
  const std::filesystem::path& run_dir() const noexcept { return run_dir_; }

  static core::TaskSpec task_spec();

 private:
  void check_budget(const std::string& caption, const char* what) const;

  providers::ChatBinding vision_;
  providers::ImageBinding image_;
  std::filesystem::path run_dir_;
  CaptionOptions options_;
};

/// REPLACE strategy, max_cycles refinements after the initial caption.
core::CycleConfig caption_cycle_config(int max_cycles = 4);

/// Copies the image to <run_dir>/original.png and runs the cycle.
/// Throws PreconditionError unless the strategy is REPLACE.
core::Transcript run_caption_cycle(const std::filesystem::path& image, const CaptionPack& pack,
                                   const core::CycleConfig& config);

}  // namespace cycleprompt::caption
