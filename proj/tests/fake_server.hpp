#pragma once

#include <deque>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace testing {

// Local OpenAI-style endpoint answering from a queue of canned replies.
class FakeServer {
 public:
  struct Reply {
    int status;
    std::string body;
  };

  FakeServer() {
    auto handler = [this](const httplib::Request& req, httplib::Response& res) {
      std::lock_guard lock(mu_);
      requests_.push_back({req.path, req.body, req.get_header_value("Authorization")});
      if (replies_.empty()) {
        res.status = 500;
        res.set_content("{\"error\": {\"message\": \"no reply queued\"}}", "application/json");
        return;
      }
      const auto r = replies_.front();
      replies_.pop_front();
      res.status = r.status;
      res.set_content(r.body, "application/json");
    };
    server_.Post("/v1/chat/completions", handler);
    server_.Post("/v1/images/generations", handler);
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeServer() {
    server_.stop();
    thread_.join();
  }

  void queue(int status, std::string body) {
    std::lock_guard lock(mu_);
    replies_.push_back({status, std::move(body)});
  }
  static std::string chat_reply(const std::string& text) {
    using nlohmann::json;
    return json{{"choices", json::array({{{"message", {{"role", "assistant"}, {"content", text}}},
                                           {"finish_reason", "stop"}}})}}
        .dump();
  }

  struct Seen {
    std::string path;
    std::string body;
    std::string auth;
  };
  std::vector<Seen> requests() {
    std::lock_guard lock(mu_);
    return requests_;
  }
  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::mutex mu_;
  std::deque<Reply> replies_;
  std::vector<Seen> requests_;
};

}  // namespace testing
