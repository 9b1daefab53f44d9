#pragma once

#include <initializer_list>
#include <string>
#include <string_view>

namespace cycleprompt::prompts {

// Verbatim templates used by the code and caption cycles.
extern const std::string_view kDescribeCode;
extern const std::string_view kWriteCode;
extern const std::string_view kDiscriminateCode;
extern const std::string_view kCaptionDiscriminator;
extern const std::string_view kZeroShotCaption;

// Engine-authored prompts.
extern const std::string_view kInitialCaption;
extern const std::string_view kVisualQa;
extern const std::string_view kTextQa;
extern const std::string_view kDecomposeCaption;
extern const std::string_view kNegateAssertions;
extern const std::string_view kAlignmentQuestion;

// The consistency sentence the code discriminator is instructed to emit.
inline constexpr std::string_view kConsistencyTemplate =
    "The cycle is consistent, and I have no more advice.";

struct Slot {
  std::string_view name;
  std::string_view value;
};

/// Substitutes every slot occurrence in a single left-to-right pass.
std::string fill(std::string_view tmpl, std::initializer_list<Slot> slots);

}  // namespace cycleprompt::prompts
