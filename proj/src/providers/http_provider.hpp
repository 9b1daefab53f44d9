#pragma once

#include <map>
#include <memory>
#include <string>

#include "providers/provider.hpp"

namespace cycleprompt::providers {

struct HttpResponse {
  // 0 when no HTTP exchange happened (connection failure, timeout).
  int status = 0;
  std::string body;
  std::string error;
};

class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse post(const std::string& url, const std::map<std::string, std::string>& headers,
                            const std::string& body) = 0;
  virtual HttpResponse get(const std::string& url) = 0;
};

/// cpp-httplib backed transport; refuses to connect while the network is
/// forbidden.
std::shared_ptr<HttpTransport> make_http_transport(int timeout_s = 120);

struct HttpEndpoint {
  std::string base_url;
  std::string model_id;
  // Name of the environment variable holding the API key; the key itself is
  // never stored.
  std::string api_key_env = "OPENAI_API_KEY";
  std::string chat_path = "/chat/completions";
  std::string image_path = "/images/generations";
};

/// Client for the widely deployed chat-completions and image-generations JSON
/// wire formats. Images are sent base64-embedded as data URLs.
class OpenAiCompatibleProvider : public ChatProvider, public ImageProvider {
 public:
  OpenAiCompatibleProvider(HttpEndpoint endpoint, std::shared_ptr<HttpTransport> transport);

  std::string chat_once(const ChatRequest& request) override;
  void generate_once(const ImageGenRequest& request) override;

  const HttpEndpoint& endpoint() const { return endpoint_; }

  /// JSON body sent for a chat request (exposed for wire-format tests).
  static std::string chat_body(const ChatRequest& request, const std::string& model_id);

 private:
  std::string api_key() const;
  [[noreturn]] static void raise_for_status(const HttpResponse& r);

  HttpEndpoint endpoint_;
  std::shared_ptr<HttpTransport> transport_;
};

}  // namespace cycleprompt::providers
