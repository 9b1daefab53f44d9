#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "core/hashing.hpp"
#include "image/image.hpp"
#include "providers/mock_provider.hpp"
#include "providers/provider.hpp"

namespace testing {

namespace fs = std::filesystem;

inline fs::path fixture(const std::string& rel) { return fs::path(CP_FIXTURE_DIR) / rel; }

inline std::string fixture_text(const std::string& rel) { return cycleprompt::read_file(fixture(rel)); }

// Fresh directory under the system temp dir, removed on scope exit.
class TempDir {
 public:
  TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "cptest-XXXXXX").string();
    if (::mkdtemp(tmpl.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  fs::path path_;
};

inline void write_text(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

inline fs::path write_solid_png(const fs::path& p, int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  cycleprompt::image::Image img(w, h, 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) img.set(x, y, r, g, b);
  fs::create_directories(p.parent_path());
  cycleprompt::image::write_png(img, p);
  return p;
}

// No sleeping in tests.
inline cycleprompt::providers::RetryHooks no_sleep() {
  cycleprompt::providers::RetryHooks h;
  h.sleep = [](int) {};
  return h;
}

inline cycleprompt::providers::ChatBinding chat_binding(std::shared_ptr<cycleprompt::providers::ChatProvider> p,
                                                        int attempts = 1) {
  cycleprompt::providers::ChatBinding b;
  b.provider = std::move(p);
  b.model_id = "mock";
  b.policy.max_attempts = attempts;
  b.policy.backoff_ms = 1;
  b.hooks = no_sleep();
  return b;
}

inline cycleprompt::providers::ImageBinding image_binding(std::shared_ptr<cycleprompt::providers::ImageProvider> p) {
  cycleprompt::providers::ImageBinding b;
  b.provider = std::move(p);
  b.model_id = "mock";
  b.hooks = no_sleep();
  return b;
}

// Lines of a compatibility export, newline-terminated.
inline std::vector<std::string> read_lines(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == '\n') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

}  // namespace testing
