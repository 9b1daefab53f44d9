#include "core/cycle.hpp"

#include <array>
#include <cctype>
#include <chrono>
#include <memory>
#include <regex>
#include <utility>

#include "core/errors.hpp"
#include "core/hashing.hpp"

namespace cycleprompt::core {

// ---------------------------------------------------------------------------
// Artifact

Artifact Artifact::text(std::string payload) {
  Artifact a;
  a.modality_ = Modality::kText;
  a.checksum_ = sha256_hex(payload);
  a.payload_ = std::move(payload);
  return a;
}

Artifact Artifact::image(std::filesystem::path ref, std::optional<std::string> prompt) {
  Artifact a;
  a.modality_ = Modality::kImage;
  a.checksum_ = sha256_file(ref);
  a.payload_ = std::move(ref);
  a.prompt_ = std::move(prompt);
  return a;
}

Artifact Artifact::restore(Modality modality, std::string payload, std::string checksum,
                           std::optional<std::string> prompt) {
  Artifact a;
  a.modality_ = modality;
  if (modality == Modality::kText) {
    a.payload_ = std::move(payload);
  } else {
    a.payload_ = std::filesystem::path(std::move(payload));
  }
  a.checksum_ = std::move(checksum);
  a.prompt_ = std::move(prompt);
  return a;
}

const std::string& Artifact::text_payload() const {
  if (modality_ != Modality::kText) throw ModalityError("artifact is an image, not text");
  return std::get<std::string>(payload_);
}

const std::filesystem::path& Artifact::image_ref() const {
  if (modality_ != Modality::kImage) throw ModalityError("artifact is text, not an image");
  return std::get<std::filesystem::path>(payload_);
}

bool Artifact::verify() const {
  if (modality_ == Modality::kText) return sha256_hex(text_payload()) == checksum_;
  std::error_code ec;
  if (!std::filesystem::is_regular_file(image_ref(), ec)) return false;
  return sha256_file(image_ref()) == checksum_;
}

// ---------------------------------------------------------------------------
// TaskSpec and composition

TaskSpec::TaskSpec(std::string instruction, ComposeRule rule) : instruction_(std::move(instruction)), rule_(rule) {
  if (instruction_.empty()) throw CompositionError("task instruction must not be empty");
  if (rule_ == ComposeRule::kTemplate && instruction_.find(kTemplateSlot) == std::string::npos) {
    throw CompositionError("template instruction has no {input} slot");
  }
}

Artifact compose_input(const TaskSpec& task, const Artifact& data) {
  if (!data.is_text()) {
    return Artifact::restore(Modality::kImage, data.image_ref().string(), data.checksum(), task.instruction());
  }
  const std::string& s = data.text_payload();
  if (task.compose_rule() == ComposeRule::kPrefix) return Artifact::text(task.instruction() + s);

  // Split on the slot; every other {identifier} is a placeholder nobody fills.
  static const std::regex kPlaceholder(R"(\{[A-Za-z_][A-Za-z0-9_]*\})");
  const std::string& t = task.instruction();
  std::string out;
  std::size_t pos = 0;
  while (pos <= t.size()) {
    const auto hit = t.find(kTemplateSlot, pos);
    const std::string literal = t.substr(pos, hit == std::string::npos ? std::string::npos : hit - pos);
    std::smatch m;
    if (std::regex_search(literal, m, kPlaceholder)) {
      throw CompositionError("template has unfilled placeholder " + m.str());
    }
    out.append(literal);
    if (hit == std::string::npos) break;
    out.append(s);
    pos = hit + kTemplateSlot.size();
  }
  return Artifact::text(std::move(out));
}

// ---------------------------------------------------------------------------
// Hint application

Artifact apply_hint(const Artifact& current_s, const Artifact& backtranslated_s, const Artifact& original_s,
                    std::string_view hint, HintStrategy strategy) {
  if (hint.empty()) throw PreconditionError("hint must not be empty");
  switch (strategy) {
    case HintStrategy::kReplace:
      return Artifact::text(std::string(hint));
    case HintStrategy::kLiteralAlg1: {
      if (!backtranslated_s.is_text() || !current_s.is_text()) {
        throw StrategyError("LITERAL_ALG1 cannot append a hint to an image artifact");
      }
      std::string out = backtranslated_s.text_payload();
      out.append(kLiteralSeparator);
      out.append(hint);
      return Artifact::text(std::move(out));
    }
    case HintStrategy::kAnchoredAppend: {
      if (!current_s.is_text() || !original_s.is_text()) {
        throw StrategyError("ANCHORED_APPEND cannot append a hint to an image artifact");
      }
      const std::string& current = current_s.text_payload();
      const std::string& anchor = original_s.text_payload();
      if (current.compare(0, anchor.size(), anchor) != 0) {
        throw StrategyError("ANCHORED_APPEND requires the original data as a prefix of the working data");
      }
      std::string out = current;
      out.append(kAnchoredSeparator);
      out.append(hint);
      return Artifact::text(std::move(out));
    }
  }
  throw StrategyError("unknown hint strategy");
}

// ---------------------------------------------------------------------------
// Consistency

std::string normalize_for_match(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      pending_space = !out.empty();
    } else if (std::ispunct(c)) {
      // Punctuation separates words the same way whitespace does.
      pending_space = !out.empty();
    } else {
      if (pending_space) out.push_back(' ');
      pending_space = false;
      out.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  return out;
}

bool matches_consistency_template(std::string_view output) {
  static const std::string kNeedle = normalize_for_match("The cycle is consistent, and I have no more advice.");
  return normalize_for_match(output).find(kNeedle) != std::string::npos;
}

ConsistencyVerdict detect_consistency(const Artifact& original_s, const Artifact& candidate_s,
                                      std::string_view discriminator_output, const PredicateFn& predicate) {
  const bool blank = discriminator_output.find_first_not_of(" \t\r\n") == std::string_view::npos;
  if (blank) return {VerdictStatus::kUndecided, "empty discriminator output"};
  if (predicate && predicate(original_s, candidate_s, discriminator_output)) {
    return {VerdictStatus::kConsistent, std::string(discriminator_output)};
  }
  return {VerdictStatus::kInconsistent, std::string(discriminator_output)};
}

// ---------------------------------------------------------------------------
// The cycle loop

namespace {

class CallMeter {
 public:
  explicit CallMeter(int budget) : budget_(budget) {}
  void charge(const char* what) {
    if (used_ >= budget_) {
      throw BudgetExceeded("call budget of " + std::to_string(budget_) + " exhausted before " + what);
    }
    ++used_;
  }
  void preload(int used) { used_ = used; }

 private:
  int budget_;
  int used_ = 0;
};

void validate(const CycleConfig& config, const CycleFunctions& fns) {
  if (config.max_cycles < 1) throw PreconditionError("max_cycles must be at least 1");
  if (config.provider_retries < 0) throw PreconditionError("provider_retries must be non-negative");
  if (!fns.forward || !fns.backward || !fns.discriminate) {
    throw PreconditionError("forward, backward and discriminator functions are all required");
  }
}

std::int64_t elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

std::vector<Artifact> replay_working_data(const Transcript& transcript) {
  std::vector<Artifact> states;
  states.reserve(transcript.records.size() + 1);
  states.push_back(transcript.original_s);
  for (const auto& rec : transcript.records) {
    if (rec.hint) {
      states.push_back(apply_hint(states.back(), rec.backtranslated_s, transcript.original_s, *rec.hint,
                                  transcript.config.hint_strategy));
    } else {
      states.push_back(states.back());
    }
  }
  return states;
}

Transcript run_cycle(const TaskSpec& task, const Artifact& original_s, const CycleFunctions& fns,
                     const CycleConfig& config) {
  Transcript t;
  t.config = config;
  t.task = task;
  t.original_s = original_s;
  return resume_cycle(std::move(t), fns);
}

Transcript resume_cycle(Transcript t, const CycleFunctions& fns) {
  validate(t.config, fns);
  if (t.stop_reason != StopReason::kRunning) return t;

  const int limit = t.config.max_records();
  CallMeter meter(t.config.effective_call_budget());
  {
    int used = 0;
    for (const auto& rec : t.records) used += rec.discriminated ? 3 : 2;
    meter.preload(used);
  }
  Artifact s = replay_working_data(t).back();

  auto fail = [&t](Error& e) {
    auto partial = std::make_shared<Transcript>(t);
    if (!partial->records.empty()) partial->final_output = partial->records.back().output_y;
    e.attach_partial(std::move(partial));
  };

  try {
    for (int i = static_cast<int>(t.records.size()); i < limit; ++i) {
      const auto start = std::chrono::steady_clock::now();
      CycleRecord rec;
      rec.index = i;
      rec.input_x = compose_input(t.task, s);

      meter.charge("forward generator");
      rec.output_y = fns.forward(ForwardInput{t.task, s, rec.input_x, i});
      meter.charge("backward generator");
      rec.backtranslated_s = fns.backward(rec.output_y, i);

      if (i == limit - 1) {
        rec.verdict = {VerdictStatus::kUndecided, "discriminator not invoked on the final cycle"};
        rec.timing_ms = elapsed_ms(start);
        t.records.push_back(std::move(rec));
        t.stop_reason = StopReason::kMaxCycles;
        break;
      }

      meter.charge("discriminator");
      Judgement j = fns.discriminate(DiscriminatorInput{t.original_s, rec.backtranslated_s, rec.output_y, i});
      rec.discriminated = true;
      rec.verdict = std::move(j.verdict);

      if (rec.verdict.status == VerdictStatus::kConsistent) {
        rec.timing_ms = elapsed_ms(start);
        t.records.push_back(std::move(rec));
        t.stop_reason = StopReason::kConsistent;
        break;
      }
      if (!j.hint || j.hint->empty()) {
        // Nothing to refine with; another identical cycle would repeat itself.
        rec.verdict.status = VerdictStatus::kUndecided;
        rec.timing_ms = elapsed_ms(start);
        t.records.push_back(std::move(rec));
        t.stop_reason = StopReason::kUndecided;
        break;
      }

      s = apply_hint(s, rec.backtranslated_s, t.original_s, *j.hint, t.config.hint_strategy);
      rec.hint = std::move(j.hint);
      rec.timing_ms = elapsed_ms(start);
      t.records.push_back(std::move(rec));

      if (t.config.hint_strategy == HintStrategy::kLiteralAlg1 && fns.consistent && fns.consistent(t.original_s, s)) {
        t.stop_reason = StopReason::kPostUpdateConsistent;
        break;
      }
    }
  } catch (Error& e) {
    fail(e);
    throw;
  }
  if (t.stop_reason == StopReason::kRunning) t.stop_reason = StopReason::kMaxCycles;
  t.final_output = t.records.back().output_y;
  return t;
}

std::vector<std::string> check_invariants(const Transcript& t) {
  std::vector<std::string> problems;
  const int limit = t.config.max_records();
  if (static_cast<int>(t.records.size()) > t.config.max_cycles + 1) {
    problems.push_back("more records than max_cycles + 1");
  }
  if (static_cast<int>(t.records.size()) > limit) problems.push_back("more records than the configured limit");
  for (std::size_t i = 0; i < t.records.size(); ++i) {
    const auto& rec = t.records[i];
    if (rec.index != static_cast<int>(i)) problems.push_back("record indices are not contiguous from 0");
    const bool last = i + 1 == t.records.size();
    const bool consistent = rec.verdict.status == VerdictStatus::kConsistent;
    const bool undecided_stop = last && t.stop_reason == StopReason::kUndecided;
    const bool at_limit = rec.index == limit - 1;
    if (consistent && !last) problems.push_back("records follow a CONSISTENT verdict");
    if (rec.hint.has_value() == (consistent || at_limit || undecided_stop)) {
      problems.push_back("record " + std::to_string(i) + " hint presence contradicts its verdict");
    }
    for (const Artifact* a : {&rec.input_x, &rec.output_y, &rec.backtranslated_s}) {
      if (a->is_text() && !a->verify()) problems.push_back("record " + std::to_string(i) + " checksum mismatch");
    }
  }
  if (!t.records.empty()) {
    if (!t.final_output || !(*t.final_output == t.records.back().output_y)) {
      problems.push_back("final_output differs from the last record's output");
    }
    try {
      const auto states = replay_working_data(t);
      for (std::size_t i = 0; i < t.records.size(); ++i) {
        if (!(compose_input(t.task, states[i]) == t.records[i].input_x)) {
          problems.push_back("record " + std::to_string(i) + " input is not reconstructible");
        }
      }
    } catch (const Error& e) {
      problems.push_back(std::string("replay failed: ") + e.what());
    }
  }
  return problems;
}

// ---------------------------------------------------------------------------
// Names

namespace {

template <typename E, std::size_t N>
E parse_enum(std::string_view name, const std::array<std::pair<E, const char*>, N>& table, const char* what) {
  for (const auto& [value, text] : table) {
    if (name == text) return value;
  }
  throw ParseError(std::string("unknown ") + what + " '" + std::string(name) + "'");
}

template <typename E, std::size_t N>
const char* name_of(E value, const std::array<std::pair<E, const char*>, N>& table) {
  for (const auto& [v, text] : table) {
    if (v == value) return text;
  }
  return "?";
}

constexpr std::array<std::pair<Modality, const char*>, 2> kModalities{{
    {Modality::kText, "text"},
    {Modality::kImage, "image"},
}};
constexpr std::array<std::pair<ComposeRule, const char*>, 2> kRules{{
    {ComposeRule::kPrefix, "prefix"},
    {ComposeRule::kTemplate, "template"},
}};
constexpr std::array<std::pair<VerdictStatus, const char*>, 3> kStatuses{{
    {VerdictStatus::kConsistent, "consistent"},
    {VerdictStatus::kInconsistent, "inconsistent"},
    {VerdictStatus::kUndecided, "undecided"},
}};
constexpr std::array<std::pair<HintStrategy, const char*>, 3> kStrategies{{
    {HintStrategy::kLiteralAlg1, "literal_alg1"},
    {HintStrategy::kAnchoredAppend, "anchored_append"},
    {HintStrategy::kReplace, "replace"},
}};
constexpr std::array<std::pair<CycleCounting, const char*>, 2> kCountings{{
    {CycleCounting::kTotal, "total"},
    {CycleCounting::kRefinements, "refinements"},
}};
constexpr std::array<std::pair<StopReason, const char*>, 5> kStops{{
    {StopReason::kRunning, "running"},
    {StopReason::kConsistent, "consistent"},
    {StopReason::kPostUpdateConsistent, "post_update_consistent"},
    {StopReason::kMaxCycles, "max_cycles"},
    {StopReason::kUndecided, "undecided"},
}};

}  // namespace

const char* to_string(Modality m) { return name_of(m, kModalities); }
const char* to_string(ComposeRule r) { return name_of(r, kRules); }
const char* to_string(VerdictStatus s) { return name_of(s, kStatuses); }
const char* to_string(HintStrategy s) { return name_of(s, kStrategies); }
const char* to_string(CycleCounting c) { return name_of(c, kCountings); }
const char* to_string(StopReason r) { return name_of(r, kStops); }

Modality parse_modality(std::string_view n) { return parse_enum(n, kModalities, "modality"); }
ComposeRule parse_compose_rule(std::string_view n) { return parse_enum(n, kRules, "compose rule"); }
VerdictStatus parse_verdict_status(std::string_view n) { return parse_enum(n, kStatuses, "verdict status"); }
HintStrategy parse_hint_strategy(std::string_view n) { return parse_enum(n, kStrategies, "hint strategy"); }
CycleCounting parse_cycle_counting(std::string_view n) { return parse_enum(n, kCountings, "cycle counting"); }
StopReason parse_stop_reason(std::string_view n) { return parse_enum(n, kStops, "stop reason"); }

}  // namespace cycleprompt::core
