#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "core/cycle.hpp"

namespace cycleprompt::synthetic {

/// key=value facts plus the keys currently emphasized by hints.
struct FactSet {
  std::map<std::string, std::string> facts;
  std::set<std::string> emphasis;

  /// Throws ParseError on bad keys/values or emphasis outside the key set.
  void validate() const;
  std::set<std::string> keys() const;

  friend bool operator==(const FactSet&, const FactSet&) = default;
};

/// Whether `key` is omitted when rendering at `cycle`.
using DropRule = std::function<bool(const std::string& key, int cycle, std::uint64_t seed)>;

struct RenderPolicy {
  DropRule drop_rule;  // empty: nothing dropped
  // Divergent mode: one spurious fact per cycle.
  bool inject = false;
  std::uint64_t seed = 0;

  /// Drops exactly the keys in `droppable` unless emphasized.
  static RenderPolicy convergent(std::set<std::string> droppable, std::uint64_t seed = 0);
  static RenderPolicy divergent(std::uint64_t seed = 0);
};

/// `d` keys of `facts`, picked by a seeded shuffle of the sorted key list.
std::set<std::string> pick_droppable(const FactSet& facts, int d, std::uint64_t seed);

/// The fact injected at `cycle`: key z<cycle> (suffixed if taken).
std::pair<std::string, std::string> injected_fact(const FactSet& s, int cycle, std::uint64_t seed);

/// "k1=v1; k2=v2;" over the surviving facts, sorted by key.
std::string render_facts(const FactSet& s, const RenderPolicy& policy, int cycle_index);
/// Canonical document of every fact, no policy applied.
std::string canonical_document(const FactSet& s);

/// Inverse of render. Throws ParseError on malformed segments or duplicate keys.
FactSet parse_facts(std::string_view document);

struct DiffResult {
  core::ConsistencyVerdict verdict;
  // Lexicographically first key missing from the roundtrip.
  std::optional<std::string> emphasize;
  std::vector<std::string> missing;
  std::vector<std::string> surplus;
};

/// CONSISTENT iff the fact maps are equal (emphasis is ignored).
DiffResult diff_hint(const FactSet& original, const FactSet& roundtrip);

/// Hint line text for a key.
std::string emphasis_hint(std::string_view key);

/// Working data is a canonical document followed by hint lines. Only
/// "emphasize <key>" lines count; emphasized keys absent from the document are
/// ignored.
FactSet parse_working(std::string_view working);

/// key=value lines; blank lines and '#' comments skipped. Throws FormatError.
FactSet load_fact_file(const std::filesystem::path& path);

class SyntheticPack {
 public:
  explicit SyntheticPack(RenderPolicy policy) : policy_(std::move(policy)) {}

  core::CycleFunctions functions() const;
  const RenderPolicy& policy() const noexcept { return policy_; }

  static core::TaskSpec task_spec();

 private:
  RenderPolicy policy_;
};

enum class SyntheticMode { kConvergent, kDivergent };

const char* to_string(SyntheticMode mode);
/// Throws ParseError.
SyntheticMode parse_synthetic_mode(std::string_view name);

/// Convergent: ANCHORED_APPEND, so hints accumulate on s_0. Divergent:
/// LITERAL_ALG1, so each roundtrip (with its injected fact) is carried forward.
core::CycleConfig synthetic_cycle_config(SyntheticMode mode, int max_cycles);

core::Transcript run_synthetic_cycle(const FactSet& original, const SyntheticPack& pack,
                                     const core::CycleConfig& config);

/// Size of the symmetric difference of the key=value pairs.
std::size_t symmetric_difference(const FactSet& a, const FactSet& b);

}  // namespace cycleprompt::synthetic
