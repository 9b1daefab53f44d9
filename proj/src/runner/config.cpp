#include "runner/config.hpp"

#include <fmt/format.h>

#include "core/errors.hpp"
#include "core/hashing.hpp"
#include "runner/defaults.hpp"

namespace cycleprompt::runner {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::set<std::string> kRoles{kTextRole, kVisionRole, kImageRole};

// Unknown keys are almost always typos; reject them rather than ignore.
void check_keys(const json& value, const json& schema, const std::string& where) {
  for (const auto& [key, v] : value.items()) {
    if (!schema.contains(key)) throw ConfigError(fmt::format("unknown config key '{}{}'", where, key));
    if (key == "providers") continue;
    if (schema[key].is_object()) {
      if (!v.is_object()) throw ConfigError(fmt::format("config key '{}{}' must be an object", where, key));
      check_keys(v, schema[key], where + key + ".");
    }
  }
}

template <typename T>
T get(const json& j, const char* key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(fmt::format("config key '{}{}' is missing or has the wrong type", where, key));
  }
}

std::optional<std::string> opt_string(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  if (!j[key].is_string()) throw ConfigError(fmt::format("config key '{}{}' must be a string", where, key));
  return j[key].get<std::string>();
}

// Resolves a relative path in place and returns it.
std::optional<fs::path> resolve_path(json& j, const char* key, const fs::path& base, const std::string& where) {
  auto s = opt_string(j, key, where);
  if (!s) return std::nullopt;
  fs::path p = *s;
  if (p.is_relative()) p = base / p;
  p = p.lexically_normal();
  j[key] = p.string();
  return p;
}

int positive(int v, int min, const std::string& name) {
  if (v < min) throw ConfigError(fmt::format("{} must be >= {}, got {}", name, min, v));
  return v;
}

template <typename F>
auto parse_enum(F&& f, const std::string& value, const std::string& name) {
  try {
    return f(value);
  } catch (const ParseError& e) {
    throw ConfigError(fmt::format("{}: {}", name, e.what()));
  }
}

void restore_defaults(json& j, const json& defaults) {
  for (const auto& [key, v] : defaults.items()) {
    if (!j.contains(key)) {
      j[key] = v;
    } else if (v.is_object() && key != "providers" && j[key].is_object()) {
      restore_defaults(j[key], v);
    }
  }
}

ProviderBinding parse_binding(json& j, const std::string& role, const fs::path& base) {
  const std::string where = "providers." + role + ".";
  if (!j.is_object()) throw ConfigError("provider binding '" + role + "' must be an object");
  for (const auto& [key, v] : j.items()) {
    if (key != "mock" && key != "live" && key != "max_tokens") {
      throw ConfigError(fmt::format("unknown config key '{}{}'", where, key));
    }
  }
  const bool mock = j.contains("mock");
  const bool live = j.contains("live");
  if (mock == live) throw ConfigError("provider '" + role + "' needs exactly one of 'mock' or 'live'");

  ProviderBinding b;
  if (j.contains("max_tokens")) b.max_tokens = positive(get<int>(j, "max_tokens", where), 1, where + "max_tokens");
  if (mock) {
    b.kind = ProviderBinding::Kind::kMock;
    auto& m = j["mock"];
    if (!m.is_object()) throw ConfigError(where + "mock must be an object");
    for (const auto& [key, v] : m.items()) {
      if (key != "fixtures" && key != "script") throw ConfigError(fmt::format("unknown config key '{}mock.{}'", where, key));
    }
    b.fixtures = resolve_path(m, "fixtures", base, where + "mock.");
    b.script = resolve_path(m, "script", base, where + "mock.");
    return b;
  }
  b.kind = ProviderBinding::Kind::kLive;
  auto& l = j["live"];
  if (!l.is_object()) throw ConfigError(where + "live must be an object");
  const std::string lw = where + "live.";
  for (const auto& [key, v] : l.items()) {
    static const std::set<std::string> known{"base_url", "model", "api_key_env", "chat_path", "image_path", "timeout_s"};
    if (known.count(key) == 0) throw ConfigError(fmt::format("unknown config key '{}{}'", lw, key));
  }
  b.endpoint.base_url = get<std::string>(l, "base_url", lw);
  b.endpoint.model_id = get<std::string>(l, "model", lw);
  if (b.endpoint.base_url.empty() || b.endpoint.model_id.empty()) throw ConfigError(lw + "base_url and model are required");
  if (auto v = opt_string(l, "api_key_env", lw)) b.endpoint.api_key_env = *v;
  if (auto v = opt_string(l, "chat_path", lw)) b.endpoint.chat_path = *v;
  if (auto v = opt_string(l, "image_path", lw)) b.endpoint.image_path = *v;
  if (l.contains("timeout_s")) b.timeout_s = positive(get<int>(l, "timeout_s", lw), 1, lw + "timeout_s");
  return b;
}

}  // namespace

const char* to_string(Domain d) {
  switch (d) {
    case Domain::kCodegen: return "codegen";
    case Domain::kCaption: return "caption";
    case Domain::kSynthetic: return "synthetic";
  }
  return "synthetic";
}

Domain parse_domain(std::string_view name) {
  if (name == "codegen") return Domain::kCodegen;
  if (name == "caption") return Domain::kCaption;
  if (name == "synthetic") return Domain::kSynthetic;
  throw ParseError("unknown domain '" + std::string(name) + "'");
}

const json& default_config() {
  static const json defaults = json::parse(kDefaultsJson);
  return defaults;
}

std::string RunConfig::fingerprint() const {
  json j = resolved;
  j.erase("output_dir");
  j.erase("parallelism");
  return sha256_hex(j.dump());
}

json RunConfig::persisted() const {
  json j = resolved;
  j.erase("output_dir");
  return j;
}

RunConfig parse_run_config(const json& document, const fs::path& base_dir, const json& overrides) {
  if (!document.is_object()) throw ConfigError("config must be a JSON object");
  if (!overrides.is_object()) throw ConfigError("config overrides must be a JSON object");
  check_keys(document, default_config(), "");
  check_keys(overrides, default_config(), "");

  json j = default_config();
  j.merge_patch(document);
  j.merge_patch(overrides);
  // merge_patch deletes keys patched with null; put the null defaults back
  // so the resolved document (and its fingerprint) has one shape.
  restore_defaults(j, default_config());
  const fs::path base = fs::absolute(base_dir.empty() ? fs::current_path() : base_dir);

  RunConfig c;
  c.domain = parse_enum(parse_domain, get<std::string>(j, "domain", ""), "domain");
  c.input = resolve_path(j, "input", base, "");
  c.output_dir = resolve_path(j, "output_dir", base, "");
  c.parallelism = positive(get<int>(j, "parallelism", ""), 1, "parallelism");

  auto& cy = j["cycle"];
  c.cycle.max_cycles = positive(get<int>(cy, "max_cycles", "cycle."), 1, "cycle.max_cycles");
  c.cycle.seed = get<std::uint64_t>(cy, "seed", "cycle.");
  c.cycle.provider_retries = positive(get<int>(cy, "provider_retries", "cycle."), 0, "cycle.provider_retries");
  c.cycle.call_budget = positive(get<int>(cy, "call_budget", "cycle."), 0, "cycle.call_budget");
  c.retry_backoff_ms = positive(get<int>(cy, "retry_backoff_ms", "cycle."), 0, "cycle.retry_backoff_ms");

  auto& sy = j["synthetic"];
  c.synthetic.mode = parse_enum(synthetic::parse_synthetic_mode, get<std::string>(sy, "mode", "synthetic."), "synthetic.mode");
  c.synthetic.droppable = positive(get<int>(sy, "droppable", "synthetic."), 0, "synthetic.droppable");

  const auto strategy = get<std::string>(cy, "hint_strategy", "cycle.");
  if (strategy == "auto") {
    switch (c.domain) {
      case Domain::kCodegen: c.cycle.hint_strategy = core::HintStrategy::kAnchoredAppend; break;
      case Domain::kCaption: c.cycle.hint_strategy = core::HintStrategy::kReplace; break;
      case Domain::kSynthetic:
        c.cycle.hint_strategy = synthetic::synthetic_cycle_config(c.synthetic.mode, 1).hint_strategy;
        break;
    }
  } else {
    c.cycle.hint_strategy = parse_enum(core::parse_hint_strategy, strategy, "cycle.hint_strategy");
  }
  if (c.domain == Domain::kCaption && c.cycle.hint_strategy != core::HintStrategy::kReplace) {
    throw ConfigError("the caption domain requires hint_strategy 'replace'");
  }
  const auto counting = get<std::string>(cy, "counting", "cycle.");
  if (counting == "auto") {
    // max_cycles counts refinements where the last record cannot be judged
    // before the budget runs out otherwise.
    c.cycle.counting = c.domain == Domain::kCodegen ? core::CycleCounting::kTotal : core::CycleCounting::kRefinements;
  } else {
    c.cycle.counting = parse_enum(core::parse_cycle_counting, counting, "cycle.counting");
  }
  // Record the effective choices so the fingerprint reflects them.
  cy["hint_strategy"] = core::to_string(c.cycle.hint_strategy);
  cy["counting"] = core::to_string(c.cycle.counting);

  auto& ca = j["caption"];
  c.caption.word_budget = positive(get<int>(ca, "word_budget", "caption."), 1, "caption.word_budget");
  c.caption.padding_px = positive(get<int>(ca, "padding_px", "caption."), 0, "caption.padding_px");
  c.caption.image_size =
      parse_enum(providers::parse_image_size, get<std::string>(ca, "image_size", "caption."), "caption.image_size");

  auto& ev = j["eval"];
  c.eval.benchmark = resolve_path(ev, "benchmark", base, "eval.");
  c.eval.source = parse_enum(eval::parse_qa_source, get<std::string>(ev, "source", "eval."), "eval.source");
  c.eval.subset = positive(get<int>(ev, "subset", "eval."), 0, "eval.subset");
  c.eval.seed = get<std::uint64_t>(ev, "seed", "eval.");
  c.eval.grade_mode = parse_enum(eval::parse_grade_mode, get<std::string>(ev, "grade_mode", "eval."), "eval.grade_mode");
  const auto arm = get<std::string>(ev, "caption_arm", "eval.");
  if (arm == "final") c.eval.caption_arm = CaptionArm::kFinal;
  else if (arm == "initial") c.eval.caption_arm = CaptionArm::kInitial;
  else if (arm == "zero_shot") c.eval.caption_arm = CaptionArm::kZeroShot;
  else if (arm == "visual") c.eval.caption_arm = CaptionArm::kVisual;
  else throw ConfigError("eval.caption_arm must be final, initial, zero_shot or visual");
  c.eval.da_score = get<bool>(ev, "da_score", "eval.");
  c.eval.da_negatives = get<bool>(ev, "da_negatives", "eval.");

  auto& pr = j["providers"];
  if (!pr.is_object()) throw ConfigError("providers must be an object");
  for (auto& [role, binding] : pr.items()) {
    if (kRoles.count(role) == 0) throw ConfigError("unknown provider role '" + role + "'");
    if (binding.is_null()) continue;
    c.providers[role] = parse_binding(binding, role, base);
  }
  c.resolved = std::move(j);
  return c;
}

RunConfig load_run_config(const fs::path& path, const json& overrides) {
  std::string content;
  try {
    content = read_file(path);
  } catch (const PreconditionError& e) {
    throw ConfigError(e.what());
  }
  const json doc = json::parse(content, nullptr, false);
  if (doc.is_discarded()) throw ConfigError(path.string() + ": not valid JSON");
  return parse_run_config(doc, fs::absolute(path).parent_path(), overrides);
}

RunConfig load_run_config_from_run_dir(const fs::path& run_dir, const json& overrides) {
  const auto file = run_dir / "config.json";
  if (!fs::exists(file)) throw ConfigError(run_dir.string() + " holds no config.json");
  if (!overrides.is_object()) throw ConfigError("config overrides must be a JSON object");
  json patch = overrides;
  patch["output_dir"] = fs::absolute(run_dir).lexically_normal().string();
  return load_run_config(file, patch);
}

std::vector<std::string> required_roles(Domain domain) {
  switch (domain) {
    case Domain::kCodegen: return {kTextRole};
    case Domain::kCaption: return {kVisionRole, kImageRole};
    case Domain::kSynthetic: return {};
  }
  return {};
}

ProviderSet make_providers(const RunConfig& config) {
  ProviderSet set;
  for (const auto& [role, b] : config.providers) {
    if (b.kind == ProviderBinding::Kind::kMock) {
      auto mock = std::make_shared<providers::MockProvider>();
      if (b.fixtures) {
        if (!fs::is_directory(*b.fixtures)) throw ConfigError("mock fixture directory not found: " + b.fixtures->string());
        mock->set_fixture_dir(*b.fixtures);
      }
      if (b.script) {
        try {
          mock->load_script(*b.script);
        } catch (const ParseError& e) {
          throw ConfigError(e.what());
        }
        if (mock->has_global_script() && config.parallelism > 1) {
          throw ConfigError("provider '" + role + "': a global ordered script cannot be shared by parallel tasks");
        }
      }
      set.mocks[role] = mock;
      set.chat[role] = mock;
      set.image[role] = mock;
    } else {
      auto live = std::make_shared<providers::OpenAiCompatibleProvider>(b.endpoint,
                                                                        providers::make_http_transport(b.timeout_s));
      set.chat[role] = live;
      set.image[role] = live;
    }
  }
  return set;
}

namespace {

providers::RetryPolicy policy_for(const RunConfig& config) {
  providers::RetryPolicy p;
  p.max_attempts = config.cycle.provider_retries + 1;
  p.backoff_ms = config.retry_backoff_ms;
  return p;
}

const ProviderBinding& binding_for(const RunConfig& config, const std::string& role) {
  const auto it = config.providers.find(role);
  if (it == config.providers.end()) throw ConfigError("no provider configured for role '" + role + "'");
  return it->second;
}

}  // namespace

providers::ChatBinding ProviderSet::chat_binding(const RunConfig& config, const std::string& role,
                                                 const std::string& task_id) const {
  const auto& b = binding_for(config, role);
  providers::ChatBinding out;
  if (const auto m = mocks.find(role); m != mocks.end()) {
    out.provider = m->second->scoped(task_id);
    out.model_id = "mock";
  } else {
    out.provider = chat.at(role);
    out.model_id = b.endpoint.model_id;
  }
  out.policy = policy_for(config);
  out.max_tokens = b.max_tokens;
  return out;
}

providers::ImageBinding ProviderSet::image_binding(const RunConfig& config, const std::string& role,
                                                   const std::string& task_id) const {
  const auto& b = binding_for(config, role);
  providers::ImageBinding out;
  if (const auto m = mocks.find(role); m != mocks.end()) {
    out.provider = m->second->scoped(task_id);
    out.model_id = "mock";
  } else {
    out.provider = image.at(role);
    out.model_id = b.endpoint.model_id;
  }
  out.policy = policy_for(config);
  out.size = config.caption.image_size;
  return out;
}

}  // namespace cycleprompt::runner
