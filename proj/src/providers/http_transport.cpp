#include <httplib.h>

#include <regex>

#include "providers/http_provider.hpp"

namespace cycleprompt::providers {

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, kUrl)) throw ProviderError(ProviderErrorKind::kTransport, "invalid URL " + url);
  return {m[1].str(), m[2].matched ? m[2].str() : "/"};
}

class HttplibTransport : public HttpTransport {
 public:
  explicit HttplibTransport(int timeout_s) : timeout_s_(timeout_s) {}

  HttpResponse post(const std::string& url, const std::map<std::string, std::string>& headers,
                    const std::string& body) override {
    guard();
    const auto parts = split_url(url);
    httplib::Client client(parts.origin);
    configure(client);
    httplib::Headers h(headers.begin(), headers.end());
    return convert(client.Post(parts.path, h, body, "application/json"));
  }

  HttpResponse get(const std::string& url) override {
    guard();
    const auto parts = split_url(url);
    httplib::Client client(parts.origin);
    configure(client);
    return convert(client.Get(parts.path));
  }

 private:
  static void guard() {
    if (network_forbidden()) {
      throw ProviderError(ProviderErrorKind::kTransport, "network access is disabled (test mode)");
    }
  }

  void configure(httplib::Client& client) const {
    client.set_connection_timeout(timeout_s_, 0);
    client.set_read_timeout(timeout_s_, 0);
    client.set_write_timeout(timeout_s_, 0);
    client.set_follow_location(true);
  }

  static HttpResponse convert(const httplib::Result& res) {
    HttpResponse out;
    if (!res) {
      out.error = httplib::to_string(res.error());
      return out;
    }
    out.status = res->status;
    out.body = res->body;
    return out;
  }

  int timeout_s_;
};

}  // namespace

std::shared_ptr<HttpTransport> make_http_transport(int timeout_s) {
  return std::make_shared<HttplibTransport>(timeout_s);
}

}  // namespace cycleprompt::providers
