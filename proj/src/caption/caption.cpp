#include "caption/caption.hpp"

#include <cctype>
#include <regex>
#include <sstream>

#include <fmt/format.h>

#include "core/errors.hpp"
#include "core/hashing.hpp"
#include "image/image.hpp"
#include "prompts/templates.hpp"

namespace cycleprompt::caption {

namespace fs = std::filesystem;
using core::Artifact;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

const std::vector<std::regex>& preamble_patterns() {
  constexpr auto flags = std::regex::icase | std::regex::ECMAScript;
  static const std::vector<std::regex> patterns{
      std::regex(R"(^(?:here is\s+)?(?:the\s+|an?\s+)?(?:new|updated|revised|improved)\s+description)"
                 R"((?:\s+of\s+the\s+(?:reference|original)\s+image)?(?:\s+is|\s+would\s+be)?\s*[:\-]\s*)",
                 flags),
      std::regex(R"(^(?:in\s+|compared\s+to\s+)?the\s+image\s+on\s+the\s+(?:left|right)(?:\s+side)?)"
                 R"((?:\s+(?:shows|depicts|features|contains|displays|presents|has|is))?\s*[:,]?\s*)",
                 flags),
      std::regex(R"(^(?:in\s+|compared\s+to\s+)?(?:the\s+)?(?:reference|candidate|original|generated|left|right))"
                 R"((?:-hand)?\s+image(?:\s+on\s+the\s+(?:left|right))?)"
                 R"((?:\s+(?:shows|depicts|features|contains|displays|presents|has|is))?\s*[:,]?\s*)",
                 flags),
  };
  return patterns;
}

bool is_quote(char c) { return c == '"' || c == '\''; }

}  // namespace

std::string composite_name(int cycle) { return fmt::format("composite_{}.png", cycle); }
std::string generated_name(int cycle) { return fmt::format("gen_{}.png", cycle); }

fs::path build_composite(const CompositeSpec& spec) {
  if (spec.padding_px < 0) throw PreconditionError("composite padding must be non-negative");
  const auto left = image::decode_file(spec.left);
  const auto right = image::decode_file(spec.right);
  image::write_png(image::side_by_side(left, right, spec.padding_px), spec.out_path);
  return spec.out_path;
}

std::size_t word_count(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::size_t n = 0;
  std::string w;
  while (in >> w) ++n;
  return n;
}

std::string render_discriminator_prompt(std::string_view current_caption) {
  return prompts::fill(prompts::kCaptionDiscriminator, {{"{description}", current_caption}});
}

std::string strip_preamble(std::string_view response) {
  std::string text = trim(response);
  const std::string original = text;
  bool changed = true;
  while (changed && !text.empty()) {
    changed = false;
    for (const auto& re : preamble_patterns()) {
      std::smatch m;
      if (std::regex_search(text, m, re, std::regex_constants::match_continuous) && m.length(0) > 0) {
        text = trim(std::string_view(text).substr(static_cast<std::size_t>(m.length(0))));
        changed = true;
      }
    }
    if (text.size() >= 2 && is_quote(text.front()) && text.back() == text.front()) {
      text = trim(std::string_view(text).substr(1, text.size() - 2));
      changed = true;
    }
  }
  // A reply that is nothing but a preamble is kept as sent.
  if (text.empty()) return original;
  if (text != original) text[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(text[0])));
  return text;
}

CaptionPack::CaptionPack(providers::ChatBinding vision, providers::ImageBinding image, fs::path run_dir,
                         CaptionOptions options)
    : vision_(std::move(vision)), image_(std::move(image)), run_dir_(std::move(run_dir)),
      options_(std::move(options)) {}

void CaptionPack::check_budget(const std::string& caption, const char* what) const {
  const auto words = word_count(caption);
  if (options_.log && options_.word_budget > 0 && words > static_cast<std::size_t>(options_.word_budget)) {
    options_.log(fmt::format("{} has {} words, over the {}-word budget", what, words, options_.word_budget));
  }
}

std::string CaptionPack::initial_caption(const fs::path& img) const {
  image::decode_file(img);
  auto caption = vision_.complete({{providers::Role::kUser, std::string(prompts::kInitialCaption), {img}}});
  check_budget(caption, "initial caption");
  return caption;
}

std::string CaptionPack::zero_shot_caption(const fs::path& img) const {
  image::decode_file(img);
  auto caption = vision_.complete({{providers::Role::kUser, std::string(prompts::kZeroShotCaption), {img}}});
  check_budget(caption, "zero-shot caption");
  return caption;
}

fs::path CaptionPack::generate_candidate(const std::string& caption, int cycle) const {
  if (trim(caption).empty()) throw PreconditionError("cannot render an empty caption");
  return image_.generate(caption, run_dir_ / generated_name(cycle));
}

std::string CaptionPack::discriminate_caption(const fs::path& reference, const fs::path& candidate,
                                              std::string_view current_caption, int cycle) const {
  const auto composite = build_composite({reference, candidate, run_dir_ / composite_name(cycle), options_.padding_px});
  const std::string response =
      vision_.complete({{providers::Role::kUser, render_discriminator_prompt(current_caption), {composite}}});
  auto caption = strip_preamble(response);
  check_budget(caption, fmt::format("caption {}", cycle).c_str());
  return caption;
}

core::TaskSpec CaptionPack::task_spec() { return core::TaskSpec(std::string(prompts::kInitialCaption)); }

core::CycleFunctions CaptionPack::functions() const {
  core::CycleFunctions fns;
  // Cycle 0 captions the image; afterwards the rewritten caption is the output.
  fns.forward = [this](const core::ForwardInput& in) {
    if (in.data.is_text()) return Artifact::text(in.data.text_payload());
    return Artifact::text(initial_caption(in.data.image_ref()));
  };
  fns.backward = [this](const Artifact& y, int index) {
    const auto& caption = y.text_payload();
    return Artifact::image(generate_candidate(caption, index + 1), caption);
  };
  fns.discriminate = [this](const core::DiscriminatorInput& in) {
    const int cycle = in.index + 1;
    auto caption =
        discriminate_caption(in.original.image_ref(), in.backtranslated.image_ref(), in.output.text_payload(), cycle);
    if (trim(caption).empty()) return core::Judgement{{core::VerdictStatus::kUndecided, "empty rewrite"}, std::nullopt};
    // No consistency predicate: every rewrite is the next caption.
    return core::Judgement{{core::VerdictStatus::kInconsistent, composite_name(cycle)}, std::move(caption)};
  };
  return fns;
}

core::CycleConfig caption_cycle_config(int max_cycles) {
  core::CycleConfig c;
  c.max_cycles = max_cycles;
  c.hint_strategy = core::HintStrategy::kReplace;
  c.counting = core::CycleCounting::kRefinements;
  return c;
}

core::Transcript run_caption_cycle(const fs::path& img, const CaptionPack& pack, const core::CycleConfig& config) {
  if (config.hint_strategy != core::HintStrategy::kReplace) {
    throw PreconditionError("the caption cycle requires the replace hint strategy");
  }
  if (!fs::exists(img)) throw PreconditionError("image not found: " + img.string());
  std::error_code ec;
  fs::create_directories(pack.run_dir(), ec);
  if (ec) throw FileWriteError("cannot create " + pack.run_dir().string() + ": " + ec.message());
  const auto original = pack.run_dir() / kOriginalName;
  image::write_png(image::decode_file(img), original);
  return core::run_cycle(CaptionPack::task_spec(), Artifact::image(original), pack.functions(), config);
}

}  // namespace cycleprompt::caption
