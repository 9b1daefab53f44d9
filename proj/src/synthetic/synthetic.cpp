#include "synthetic/synthetic.hpp"

#include <algorithm>
#include <sstream>

#include <fmt/format.h>

#include "core/errors.hpp"
#include "core/hashing.hpp"
#include "core/shuffle.hpp"

namespace cycleprompt::synthetic {

using core::Artifact;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

constexpr std::string_view kEmphasize = "emphasize ";

void check_key(const std::string& key) {
  if (key.empty() || key.find_first_of(" \t\r\n=;") != std::string::npos) {
    throw ParseError("invalid fact key '" + key + "'");
  }
}

void check_value(const std::string& key, const std::string& value) {
  if (value.empty() || value.find_first_of(";\r\n") != std::string::npos || trim(value) != value) {
    throw ParseError("invalid value for fact '" + key + "'");
  }
}

std::vector<std::string> pair_diff(const FactSet& a, const FactSet& b) {
  std::vector<std::string> out;
  for (const auto& [k, v] : a.facts) {
    const auto it = b.facts.find(k);
    if (it == b.facts.end() || it->second != v) out.push_back(k);
  }
  return out;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) {
    if (!out.empty()) out += ", ";
    out += s;
  }
  return out;
}

}  // namespace

void FactSet::validate() const {
  for (const auto& [k, v] : facts) {
    check_key(k);
    check_value(k, v);
  }
  for (const auto& k : emphasis) {
    if (facts.count(k) == 0) throw ParseError("emphasized key '" + k + "' is not a fact");
  }
}

std::set<std::string> FactSet::keys() const {
  std::set<std::string> out;
  for (const auto& [k, v] : facts) out.insert(k);
  return out;
}

RenderPolicy RenderPolicy::convergent(std::set<std::string> droppable, std::uint64_t seed) {
  RenderPolicy p;
  p.seed = seed;
  p.drop_rule = [droppable = std::move(droppable)](const std::string& key, int, std::uint64_t) {
    return droppable.count(key) > 0;
  };
  return p;
}

RenderPolicy RenderPolicy::divergent(std::uint64_t seed) {
  RenderPolicy p;
  p.seed = seed;
  p.inject = true;
  return p;
}

std::set<std::string> pick_droppable(const FactSet& facts, int d, std::uint64_t seed) {
  if (d < 0 || static_cast<std::size_t>(d) > facts.facts.size()) {
    throw PreconditionError(fmt::format("cannot mark {} of {} facts droppable", d, facts.facts.size()));
  }
  std::vector<std::string> keys;
  for (const auto& [k, v] : facts.facts) keys.push_back(k);
  seeded_shuffle(keys, seed);
  return {keys.begin(), keys.begin() + d};
}

std::pair<std::string, std::string> injected_fact(const FactSet& s, int cycle, std::uint64_t seed) {
  std::string key = fmt::format("z{}", cycle);
  for (int n = 1; s.facts.count(key) > 0; ++n) key = fmt::format("z{}_{}", cycle, n);
  const auto h = fnv1a64(fmt::format("{}:{}", seed, cycle));
  return {key, fmt::format("{:08x}", h & 0xffffffffu)};
}

std::string render_facts(const FactSet& s, const RenderPolicy& policy, int cycle_index) {
  std::map<std::string, std::string> out;
  for (const auto& [k, v] : s.facts) {
    const bool dropped =
        policy.drop_rule && s.emphasis.count(k) == 0 && policy.drop_rule(k, cycle_index, policy.seed);
    if (!dropped) out.emplace(k, v);
  }
  if (policy.inject) out.insert(injected_fact(s, cycle_index, policy.seed));
  return canonical_document(FactSet{std::move(out), {}});
}

std::string canonical_document(const FactSet& s) {
  std::string doc;
  for (const auto& [k, v] : s.facts) {
    if (!doc.empty()) doc += ' ';
    doc += k;
    doc += '=';
    doc += v;
    doc += ';';
  }
  return doc;
}

FactSet parse_facts(std::string_view document) {
  FactSet out;
  std::size_t pos = 0;
  while (pos < document.size()) {
    const auto end = document.find(';', pos);
    const std::string_view raw =
        document.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
    const std::string segment = trim(raw);
    if (end == std::string_view::npos) {
      if (!segment.empty()) throw ParseError("unterminated fact segment '" + segment + "'");
      break;
    }
    if (segment.empty()) throw ParseError("empty fact segment");
    const auto eq = segment.find('=');
    if (eq == std::string::npos) throw ParseError("fact segment without '=': '" + segment + "'");
    std::string key = trim(std::string_view(segment).substr(0, eq));
    std::string value = trim(std::string_view(segment).substr(eq + 1));
    check_key(key);
    check_value(key, value);
    if (!out.facts.emplace(key, std::move(value)).second) throw ParseError("duplicate fact key '" + key + "'");
    pos = end + 1;
  }
  return out;
}

DiffResult diff_hint(const FactSet& original, const FactSet& roundtrip) {
  DiffResult r;
  r.missing = pair_diff(original, roundtrip);
  r.surplus = pair_diff(roundtrip, original);
  if (r.missing.empty() && r.surplus.empty()) {
    r.verdict = {core::VerdictStatus::kConsistent, "fact sets equal"};
    return r;
  }
  std::string evidence;
  if (!r.missing.empty()) evidence += "missing: " + join(r.missing);
  if (!r.surplus.empty()) evidence += std::string(evidence.empty() ? "" : "; ") + "surplus: " + join(r.surplus);
  r.verdict = {core::VerdictStatus::kInconsistent, std::move(evidence)};
  if (!r.missing.empty()) r.emphasize = r.missing.front();
  return r;
}

std::string emphasis_hint(std::string_view key) { return std::string(kEmphasize) + std::string(key); }

FactSet parse_working(std::string_view working) {
  const auto nl = working.find('\n');
  FactSet s = parse_facts(working.substr(0, nl));
  if (nl == std::string_view::npos) return s;
  std::istringstream rest{std::string(working.substr(nl + 1))};
  std::string line;
  while (std::getline(rest, line)) {
    line = trim(line);
    if (line.rfind(kEmphasize, 0) != 0) continue;
    auto key = trim(std::string_view(line).substr(kEmphasize.size()));
    if (s.facts.count(key) > 0) s.emphasis.insert(std::move(key));
  }
  return s;
}

FactSet load_fact_file(const std::filesystem::path& path) {
  std::string content;
  try {
    content = read_file(path);
  } catch (const PreconditionError& e) {
    throw FormatError(e.what());
  }
  FactSet s;
  std::istringstream in(content);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto where = fmt::format("{}:{}", path.string(), lineno);
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError(where + ": expected key=value");
    std::string key = trim(std::string_view(line).substr(0, eq));
    std::string value = trim(std::string_view(line).substr(eq + 1));
    try {
      check_key(key);
      check_value(key, value);
    } catch (const ParseError& e) {
      throw FormatError(where + ": " + e.what());
    }
    if (!s.facts.emplace(key, std::move(value)).second) throw FormatError(where + ": duplicate key " + key);
  }
  return s;
}

core::TaskSpec SyntheticPack::task_spec() { return core::TaskSpec("render facts:\n"); }

core::CycleFunctions SyntheticPack::functions() const {
  core::CycleFunctions fns;
  fns.forward = [this](const core::ForwardInput& in) {
    // x = t + s; strip t back off to read the working data.
    std::string_view x = in.composed.text_payload();
    x.remove_prefix(std::min(x.size(), in.task.instruction().size()));
    return Artifact::text(render_facts(parse_working(x), policy_, in.index));
  };
  fns.backward = [](const Artifact& y, int) { return Artifact::text(canonical_document(parse_facts(y.text_payload()))); };
  fns.discriminate = [](const core::DiscriminatorInput& in) {
    auto diff = diff_hint(parse_working(in.original.text_payload()), parse_facts(in.backtranslated.text_payload()));
    core::Judgement j{std::move(diff.verdict), std::nullopt};
    if (diff.emphasize) {
      j.hint = emphasis_hint(*diff.emphasize);
    } else if (!diff.surplus.empty()) {
      // Surplus facts are reported, but nothing can be emphasized away.
      j.hint = "unexpected facts: " + join(diff.surplus);
    }
    return j;
  };
  fns.consistent = [](const Artifact& original, const Artifact& candidate) {
    return parse_working(original.text_payload()).facts == parse_working(candidate.text_payload()).facts;
  };
  return fns;
}

const char* to_string(SyntheticMode mode) { return mode == SyntheticMode::kConvergent ? "convergent" : "divergent"; }

SyntheticMode parse_synthetic_mode(std::string_view name) {
  if (name == "convergent") return SyntheticMode::kConvergent;
  if (name == "divergent") return SyntheticMode::kDivergent;
  throw ParseError("unknown synthetic mode '" + std::string(name) + "'");
}

core::CycleConfig synthetic_cycle_config(SyntheticMode mode, int max_cycles) {
  core::CycleConfig c;
  c.max_cycles = max_cycles;
  c.hint_strategy =
      mode == SyntheticMode::kConvergent ? core::HintStrategy::kAnchoredAppend : core::HintStrategy::kLiteralAlg1;
  return c;
}

core::Transcript run_synthetic_cycle(const FactSet& original, const SyntheticPack& pack,
                                     const core::CycleConfig& config) {
  original.validate();
  return core::run_cycle(SyntheticPack::task_spec(), Artifact::text(canonical_document(original)), pack.functions(),
                         config);
}

std::size_t symmetric_difference(const FactSet& a, const FactSet& b) {
  return pair_diff(a, b).size() + pair_diff(b, a).size();
}

}  // namespace cycleprompt::synthetic
