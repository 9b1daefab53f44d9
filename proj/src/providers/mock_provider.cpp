#include "providers/mock_provider.hpp"

#include <nlohmann/json.hpp>

#include "core/hashing.hpp"
#include "image/image.hpp"

namespace cycleprompt::providers {

namespace fs = std::filesystem;

void MockProvider::set_fixture_dir(fs::path dir) {
  std::lock_guard lock(shared_->mu);
  shared_->fixture_dir = std::move(dir);
}

void MockProvider::set_script(const std::string& scope, std::vector<std::string> responses) {
  auto script = std::make_shared<Script>();
  script->responses.assign(responses.begin(), responses.end());
  std::lock_guard lock(shared_->mu);
  shared_->scripts[scope] = std::move(script);
}

void MockProvider::load_script(const fs::path& file) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(file));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("script " + file.string() + ": " + e.what());
  } catch (const PreconditionError& e) {
    throw ParseError(e.what());
  }
  auto as_list = [&file](const nlohmann::json& arr) {
    if (!arr.is_array()) throw ParseError("script " + file.string() + ": expected an array of strings");
    std::vector<std::string> out;
    for (const auto& item : arr) {
      if (!item.is_string()) throw ParseError("script " + file.string() + ": responses must be strings");
      out.push_back(item.get<std::string>());
    }
    return out;
  };
  if (j.is_array()) {
    set_script(kGlobalScope, as_list(j));
  } else if (j.is_object()) {
    for (const auto& [scope, arr] : j.items()) set_script(scope, as_list(arr));
  } else {
    throw ParseError("script " + file.string() + ": expected an array or an object");
  }
}

bool MockProvider::has_global_script() const {
  std::lock_guard lock(shared_->mu);
  return shared_->scripts.count(kGlobalScope) > 0;
}

void MockProvider::inject_failures(std::vector<ProviderErrorKind> kinds) {
  std::lock_guard lock(shared_->mu);
  shared_->failures.insert(shared_->failures.end(), kinds.begin(), kinds.end());
}

void MockProvider::set_render_size(int width, int height) {
  std::lock_guard lock(shared_->mu);
  shared_->render_width = width;
  shared_->render_height = height;
}

std::shared_ptr<MockProvider> MockProvider::scoped(const std::string& scope) {
  return std::shared_ptr<MockProvider>(new MockProvider(shared_, scope));
}

std::vector<ChatRequest> MockProvider::chat_log() const {
  std::lock_guard lock(shared_->mu);
  return shared_->log;
}

void MockProvider::maybe_fail() {
  std::optional<ProviderErrorKind> kind;
  {
    std::lock_guard lock(shared_->mu);
    if (!shared_->failures.empty()) {
      kind = shared_->failures.front();
      shared_->failures.pop_front();
    }
  }
  if (kind) throw ProviderError(*kind, "injected failure");
}

std::optional<std::string> MockProvider::next_scripted() {
  std::shared_ptr<Script> script;
  {
    std::lock_guard lock(shared_->mu);
    auto it = shared_->scripts.find(scope_);
    if (it == shared_->scripts.end()) it = shared_->scripts.find(kGlobalScope);
    if (it == shared_->scripts.end()) return std::nullopt;
    script = it->second;
  }
  std::optional<std::string> out;
  {
    std::lock_guard lock(shared_->mu);
    const auto me = std::this_thread::get_id();
    if (script->owner && *script->owner != me) {
      throw PreconditionError("ordered mock script for scope '" + scope_ + "' used from more than one thread");
    }
    script->owner = me;
    if (!script->responses.empty()) {
      out = std::move(script->responses.front());
      script->responses.pop_front();
    }
  }
  if (!out) {
    throw ProviderError(ProviderErrorKind::kMalformedResponse, "ordered mock script for scope '" + scope_ + "' is exhausted");
  }
  return out;
}

std::string MockProvider::chat_once(const ChatRequest& request) {
  ++shared_->chat_calls;
  {
    std::lock_guard lock(shared_->mu);
    shared_->log.push_back(request);
  }
  maybe_fail();
  if (auto scripted = next_scripted()) return *scripted;

  std::optional<fs::path> dir;
  {
    std::lock_guard lock(shared_->mu);
    dir = shared_->fixture_dir;
  }
  const std::string hash = request_hash(request);
  if (dir) {
    const auto file = *dir / (hash + ".txt");
    std::error_code ec;
    if (fs::is_regular_file(file, ec)) return read_file(file);
  }
  throw ProviderError(ProviderErrorKind::kMalformedResponse, "no mock fixture for request hash " + hash);
}

void MockProvider::generate_once(const ImageGenRequest& request) {
  ++shared_->image_calls;
  maybe_fail();
  int w = 0;
  int h = 0;
  {
    std::lock_guard lock(shared_->mu);
    w = shared_->render_width;
    h = shared_->render_height;
  }
  image::write_png(image::render_placeholder(request.prompt, w, h), request.output_path);
}

}  // namespace cycleprompt::providers
