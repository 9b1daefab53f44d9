#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "core/errors.hpp"

namespace cycleprompt::providers {

enum class Role { kSystem, kUser };

struct ChatMessage {
  Role role = Role::kUser;
  std::string text;
  std::vector<std::filesystem::path> image_refs;
};

struct ChatRequest {
  std::string model_id;
  std::vector<ChatMessage> messages;
  int max_tokens = 1024;
  // Engine calls are deterministic unless a caller opts out.
  double temperature = 0.0;

  /// Throws PreconditionError: needs a USER message and readable image files.
  void validate() const;
};

enum class ImageSize { k256, k512, k1024, k1792x1024, k1024x1792 };

const char* to_string(ImageSize size);
/// Accepts "1024x1024" style names. Throws ParseError.
ImageSize parse_image_size(const std::string& text);

struct ImageGenRequest {
  std::string model_id;
  std::string prompt;
  ImageSize size = ImageSize::k1024;
  std::filesystem::path output_path;

  /// Throws PreconditionError: non-empty prompt, existing output directory.
  void validate() const;
};

/// Exponential backoff without jitter: the delay before attempt k+1 is
/// backoff_ms * 2^(k-1).
struct RetryPolicy {
  int max_attempts = 1;
  int backoff_ms = 1000;
  std::set<ProviderErrorKind> retryable{ProviderErrorKind::kTransport, ProviderErrorKind::kRateLimit};

  /// Delays between consecutive attempts; max_attempts - 1 entries.
  std::vector<int> delay_schedule() const;
  bool is_retryable(ProviderErrorKind kind) const;
};

struct RetryHooks {
  // Defaults to sleeping the calling thread.
  std::function<void(int delay_ms)> sleep;
  std::function<void(int attempt, const ProviderError& error)> on_failure;
};

/// Runs `attempt` until it succeeds or the policy gives up. Content-filter
/// refusals are never retried. Retryable failures that use up every attempt
/// surface as EXHAUSTED_RETRIES with attempts == max_attempts.
std::string run_with_retries(const RetryPolicy& policy, const std::function<std::string()>& attempt,
                             const RetryHooks& hooks = {});

/// A chat backend performing exactly one attempt per call. Implementations
/// must tolerate concurrent calls.
class ChatProvider {
 public:
  virtual ~ChatProvider() = default;
  virtual std::string chat_once(const ChatRequest& request) = 0;
};

/// An image-generation backend performing exactly one attempt per call.
class ImageProvider {
 public:
  virtual ~ImageProvider() = default;
  /// Writes a decodable image at request.output_path.
  virtual void generate_once(const ImageGenRequest& request) = 0;
};

/// Assistant text of the first choice.
std::string chat_complete(ChatProvider& provider, const ChatRequest& request, const RetryPolicy& policy,
                          const RetryHooks& hooks = {});

std::filesystem::path generate_image(ImageProvider& provider, const ImageGenRequest& request,
                                     const RetryPolicy& policy, const RetryHooks& hooks = {});

/// A provider plus the per-role settings every call to it uses.
struct ChatBinding {
  std::shared_ptr<ChatProvider> provider;
  std::string model_id;
  RetryPolicy policy;
  int max_tokens = 1024;
  RetryHooks hooks;

  std::string complete(std::vector<ChatMessage> messages) const;
};

struct ImageBinding {
  std::shared_ptr<ImageProvider> provider;
  std::string model_id;
  RetryPolicy policy;
  ImageSize size = ImageSize::k1024;
  RetryHooks hooks;

  std::filesystem::path generate(const std::string& prompt, const std::filesystem::path& output_path) const;
};

/// Test mode: any attempt to open a socket fails hard.
void set_network_forbidden(bool forbidden);
bool network_forbidden();

/// Content hash of a chat request: message roles, texts and image bytes.
/// Model id and decoding parameters are not part of it.
std::string request_hash(const ChatRequest& request);
/// Content hash of an image request: prompt and size.
std::string request_hash(const ImageGenRequest& request);

}  // namespace cycleprompt::providers
