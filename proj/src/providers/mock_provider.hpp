#pragma once

#include <atomic>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "providers/provider.hpp"

namespace cycleprompt::providers {

/// Offline backend. Never touches the network.
///
/// Two response sources, checked in order:
///   - an ordered script: responses consumed one per call, per scope;
///   - a fixture directory holding `<request_hash>.txt` files.
///
/// Image generation renders a placeholder derived from the prompt hash, so
/// identical prompts yield byte-identical files.
class MockProvider : public ChatProvider, public ImageProvider {
 public:
  // Scope used when a script file is a plain array.
  static constexpr const char* kGlobalScope = "*";

  MockProvider() = default;

  /// Loads `<dir>/*.txt` lazily by request hash.
  void set_fixture_dir(std::filesystem::path dir);
  /// Script file: a JSON array of strings (global scope) or an object mapping
  /// scope names to arrays. Throws ParseError.
  void load_script(const std::filesystem::path& file);
  void set_script(const std::string& scope, std::vector<std::string> responses);
  bool has_global_script() const;

  /// Failures raised before any scripted or fixture response, one per call.
  void inject_failures(std::vector<ProviderErrorKind> kinds);

  /// Side length of rendered placeholder images.
  void set_render_size(int width, int height);

  /// A handle whose script cursor is the one for `scope`. Scopes without a
  /// script fall back to the global script, then to fixtures.
  std::shared_ptr<MockProvider> scoped(const std::string& scope);

  std::string chat_once(const ChatRequest& request) override;
  void generate_once(const ImageGenRequest& request) override;

  int chat_calls() const { return shared_->chat_calls.load(); }
  int image_calls() const { return shared_->image_calls.load(); }
  /// Requests seen, most recent last (for prompt inspection in tests).
  std::vector<ChatRequest> chat_log() const;

 private:
  struct Script {
    std::deque<std::string> responses;
    // First consuming thread; any other thread is a concurrent user.
    std::optional<std::thread::id> owner;
  };
  struct Shared {
    std::mutex mu;
    std::optional<std::filesystem::path> fixture_dir;
    std::map<std::string, std::shared_ptr<Script>> scripts;
    std::deque<ProviderErrorKind> failures;
    std::vector<ChatRequest> log;
    int render_width = 64;
    int render_height = 64;
    std::atomic<int> chat_calls{0};
    std::atomic<int> image_calls{0};
  };

  MockProvider(std::shared_ptr<Shared> shared, std::string scope)
      : shared_(std::move(shared)), scope_(std::move(scope)) {}

  void maybe_fail();
  std::optional<std::string> next_scripted();

  std::shared_ptr<Shared> shared_ = std::make_shared<Shared>();
  std::string scope_ = kGlobalScope;
};

}  // namespace cycleprompt::providers
