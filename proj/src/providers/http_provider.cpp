#include "providers/http_provider.hpp"

#include <cstdlib>

#include <nlohmann/json.hpp>

#include "core/hashing.hpp"
#include "image/image.hpp"

namespace cycleprompt::providers {

using nlohmann::json;

namespace {

std::string join_url(const std::string& base, const std::string& path) {
  if (!base.empty() && base.back() == '/' && !path.empty() && path.front() == '/') return base + path.substr(1);
  return base + path;
}

bool looks_like_content_filter(const json& body) {
  if (!body.is_object() || !body.contains("error") || !body["error"].is_object()) return false;
  const auto& err = body["error"];
  const std::string code = err.value("code", json()).is_string() ? err["code"].get<std::string>() : "";
  const std::string message = err.value("message", "");
  return code == "content_filter" || code == "content_policy_violation" ||
         message.find("content_policy") != std::string::npos || message.find("safety system") != std::string::npos;
}

std::string truncate(const std::string& s, std::size_t n = 300) { return s.size() <= n ? s : s.substr(0, n) + "..."; }

}  // namespace

OpenAiCompatibleProvider::OpenAiCompatibleProvider(HttpEndpoint endpoint, std::shared_ptr<HttpTransport> transport)
    : endpoint_(std::move(endpoint)), transport_(std::move(transport)) {}

std::string OpenAiCompatibleProvider::api_key() const {
  if (endpoint_.api_key_env.empty()) return {};
  const char* key = std::getenv(endpoint_.api_key_env.c_str());
  if (key == nullptr || *key == '\0') {
    throw ProviderError(ProviderErrorKind::kTransport,
                        "credentials missing: environment variable " + endpoint_.api_key_env + " is not set");
  }
  return key;
}

void OpenAiCompatibleProvider::raise_for_status(const HttpResponse& r) {
  if (r.status == 0) throw ProviderError(ProviderErrorKind::kTransport, "no response: " + r.error);
  if (r.status == 429) throw ProviderError(ProviderErrorKind::kRateLimit, "HTTP 429: " + truncate(r.body));
  if (r.status >= 500) {
    throw ProviderError(ProviderErrorKind::kTransport, "HTTP " + std::to_string(r.status) + ": " + truncate(r.body));
  }
  const json body = json::parse(r.body, nullptr, false);
  if (looks_like_content_filter(body)) {
    throw ProviderError(ProviderErrorKind::kContentFilter, "request refused: " + truncate(r.body));
  }
  throw ProviderError(ProviderErrorKind::kMalformedResponse,
                      "HTTP " + std::to_string(r.status) + ": " + truncate(r.body));
}

std::string OpenAiCompatibleProvider::chat_body(const ChatRequest& request, const std::string& model_id) {
  json messages = json::array();
  for (const auto& m : request.messages) {
    json content;
    if (m.image_refs.empty()) {
      content = m.text;
    } else {
      content = json::array({json{{"type", "text"}, {"text", m.text}}});
      for (const auto& ref : m.image_refs) {
        const std::string bytes = read_file(ref);
        const std::string url = "data:" + image::mime_type(bytes) + ";base64," + base64_encode(bytes);
        content.push_back(json{{"type", "image_url"}, {"image_url", json{{"url", url}}}});
      }
    }
    messages.push_back(json{{"role", m.role == Role::kSystem ? "system" : "user"}, {"content", std::move(content)}});
  }
  return json{{"model", model_id.empty() ? request.model_id : model_id},
              {"messages", std::move(messages)},
              {"max_tokens", request.max_tokens},
              {"temperature", request.temperature}}
      .dump();
}

std::string OpenAiCompatibleProvider::chat_once(const ChatRequest& request) {
  const std::string key = api_key();
  const std::string body = chat_body(request, request.model_id.empty() ? endpoint_.model_id : request.model_id);
  std::map<std::string, std::string> headers;
  if (!key.empty()) headers["Authorization"] = "Bearer " + key;

  const HttpResponse r = transport_->post(join_url(endpoint_.base_url, endpoint_.chat_path), headers, body);
  if (r.status != 200) raise_for_status(r);

  const json j = json::parse(r.body, nullptr, false);
  if (j.is_discarded() || !j.contains("choices") || !j["choices"].is_array() || j["choices"].empty()) {
    throw ProviderError(ProviderErrorKind::kMalformedResponse, "no choices in response: " + truncate(r.body));
  }
  const auto& choice = j["choices"][0];
  if (choice.value("finish_reason", json()).is_string() && choice["finish_reason"] == "content_filter") {
    throw ProviderError(ProviderErrorKind::kContentFilter, "completion withheld by content filter");
  }
  if (!choice.contains("message") || !choice["message"].contains("content")) {
    throw ProviderError(ProviderErrorKind::kMalformedResponse, "first choice has no message content");
  }
  const auto& content = choice["message"]["content"];
  if (content.is_string()) return content.get<std::string>();
  if (content.is_array()) {
    std::string text;
    for (const auto& part : content) {
      if (part.is_object() && part.value("type", "") == "text") text += part.value("text", "");
    }
    return text;
  }
  throw ProviderError(ProviderErrorKind::kMalformedResponse, "message content is neither text nor parts");
}

void OpenAiCompatibleProvider::generate_once(const ImageGenRequest& request) {
  const std::string key = api_key();
  std::map<std::string, std::string> headers;
  if (!key.empty()) headers["Authorization"] = "Bearer " + key;
  const std::string body = json{{"model", request.model_id.empty() ? endpoint_.model_id : request.model_id},
                                {"prompt", request.prompt},
                                {"size", to_string(request.size)},
                                {"n", 1},
                                {"response_format", "b64_json"}}
                               .dump();
  const HttpResponse r = transport_->post(join_url(endpoint_.base_url, endpoint_.image_path), headers, body);
  if (r.status != 200) raise_for_status(r);

  const json j = json::parse(r.body, nullptr, false);
  if (j.is_discarded() || !j.contains("data") || !j["data"].is_array() || j["data"].empty()) {
    throw ProviderError(ProviderErrorKind::kMalformedResponse, "no image data in response");
  }
  const auto& item = j["data"][0];
  std::string bytes;
  try {
    if (item.contains("b64_json") && item["b64_json"].is_string()) {
      bytes = base64_decode(item["b64_json"].get<std::string>());
    } else if (item.contains("url") && item["url"].is_string()) {
      const HttpResponse img = transport_->get(item["url"].get<std::string>());
      if (img.status != 200) raise_for_status(img);
      bytes = img.body;
    } else {
      throw ProviderError(ProviderErrorKind::kMalformedResponse, "image item carries neither b64_json nor url");
    }
    image::decode(bytes);
  } catch (const ParseError& e) {
    throw ProviderError(ProviderErrorKind::kMalformedResponse, e.what());
  } catch (const ImageDecodeError& e) {
    throw ProviderError(ProviderErrorKind::kMalformedResponse, std::string("undecodable image: ") + e.what());
  }
  write_file_atomic(request.output_path, bytes);
}

}  // namespace cycleprompt::providers
