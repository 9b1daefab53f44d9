#include "providers/provider.hpp"

#include <atomic>
#include <cstdlib>

#include <nlohmann/json.hpp>

#include "core/hashing.hpp"

namespace cycleprompt::providers {

namespace fs = std::filesystem;

namespace {

std::atomic<bool>& forbidden_flag() {
  static std::atomic<bool> flag{[] {
    const char* env = std::getenv("CYCLEPROMPT_FORBID_NETWORK");
    return env != nullptr && std::string(env) == "1";
  }()};
  return flag;
}

}  // namespace

void set_network_forbidden(bool forbidden) { forbidden_flag().store(forbidden); }
bool network_forbidden() { return forbidden_flag().load(); }

void ChatRequest::validate() const {
  bool has_user = false;
  for (const auto& m : messages) {
    if (m.role == Role::kUser) has_user = true;
    for (const auto& ref : m.image_refs) {
      std::error_code ec;
      if (!fs::is_regular_file(ref, ec)) throw PreconditionError("image " + ref.string() + " does not exist");
    }
  }
  if (!has_user) throw PreconditionError("chat request needs at least one user message");
}

const char* to_string(ImageSize size) {
  switch (size) {
    case ImageSize::k256: return "256x256";
    case ImageSize::k512: return "512x512";
    case ImageSize::k1024: return "1024x1024";
    case ImageSize::k1792x1024: return "1792x1024";
    case ImageSize::k1024x1792: return "1024x1792";
  }
  return "1024x1024";
}

ImageSize parse_image_size(const std::string& text) {
  for (auto s : {ImageSize::k256, ImageSize::k512, ImageSize::k1024, ImageSize::k1792x1024, ImageSize::k1024x1792}) {
    if (text == to_string(s)) return s;
  }
  throw ParseError("unsupported image size '" + text + "'");
}

void ImageGenRequest::validate() const {
  if (prompt.empty()) throw PreconditionError("image prompt must not be empty");
  const auto parent = output_path.parent_path();
  std::error_code ec;
  if (!parent.empty() && !fs::is_directory(parent, ec)) {
    throw PreconditionError("output directory " + parent.string() + " does not exist");
  }
}

std::string chat_complete(ChatProvider& provider, const ChatRequest& request, const RetryPolicy& policy,
                          const RetryHooks& hooks) {
  request.validate();
  return run_with_retries(policy, [&] { return provider.chat_once(request); }, hooks);
}

fs::path generate_image(ImageProvider& provider, const ImageGenRequest& request, const RetryPolicy& policy,
                        const RetryHooks& hooks) {
  request.validate();
  run_with_retries(
      policy,
      [&] {
        provider.generate_once(request);
        return std::string();
      },
      hooks);
  return request.output_path;
}

std::string ChatBinding::complete(std::vector<ChatMessage> messages) const {
  if (!provider) throw PreconditionError("chat binding has no provider");
  ChatRequest request;
  request.model_id = model_id;
  request.messages = std::move(messages);
  request.max_tokens = max_tokens;
  return chat_complete(*provider, request, policy, hooks);
}

fs::path ImageBinding::generate(const std::string& prompt, const fs::path& output_path) const {
  if (!provider) throw PreconditionError("image binding has no provider");
  ImageGenRequest request;
  request.model_id = model_id;
  request.prompt = prompt;
  request.size = size;
  request.output_path = output_path;
  return generate_image(*provider, request, policy, hooks);
}

std::string request_hash(const ChatRequest& request) {
  nlohmann::json messages = nlohmann::json::array();
  for (const auto& m : request.messages) {
    nlohmann::json images = nlohmann::json::array();
    for (const auto& ref : m.image_refs) images.push_back(sha256_file(ref));
    messages.push_back({{"role", m.role == Role::kSystem ? "system" : "user"}, {"text", m.text}, {"images", images}});
  }
  return sha256_hex(nlohmann::json{{"kind", "chat"}, {"messages", messages}}.dump());
}

std::string request_hash(const ImageGenRequest& request) {
  return sha256_hex(nlohmann::json{{"kind", "image"}, {"prompt", request.prompt}, {"size", to_string(request.size)}}.dump());
}

}  // namespace cycleprompt::providers
