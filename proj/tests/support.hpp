/*
 * Copyright 2026 The vqa-forge Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <jpeglib.h>

#include "httplib.h"
#include "json.hpp"
#include "vqaforge/image.hpp"

namespace testsupport {

// Unique scratch directory, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("vqaforge_test_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// OpenAI-style chat-completions mock with a programmable reply function,
// optional per-call HTTP status sequence, and in-flight accounting for
// concurrency probes.
class MockOpenAiServer {
 public:
  // reply(body, call_index) -> assistant content
  std::function<std::string(const nlohmann::json&, int)> reply =
      [](const nlohmann::json&, int) { return std::string("ok"); };
  std::vector<int> status_sequence;  // empty = always 200; last entry repeats
  int delay_ms = 0;
  bool include_usage = true;

  MockOpenAiServer() {
    server_.Post("/chat/completions",
                 [this](const httplib::Request& req, httplib::Response& res) {
                   int call = calls_.fetch_add(1);
                   int inflight = inflight_.fetch_add(1) + 1;
                   int prev = max_inflight_.load();
                   while (inflight > prev &&
                          !max_inflight_.compare_exchange_weak(prev, inflight)) {
                   }
                   if (delay_ms > 0) {
                     std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
                   }
                   {
                     std::lock_guard lk(mu_);
                     bodies_.push_back(req.body);
                   }
                   int status = 200;
                   if (!status_sequence.empty()) {
                     status = status_sequence[std::min<std::size_t>(
                         std::size_t(call), status_sequence.size() - 1)];
                   }
                   if (status != 200) {
                     res.status = status;
                     res.set_content("mock error", "text/plain");
                   } else {
                     nlohmann::json body = nlohmann::json::parse(req.body, nullptr, false);
                     nlohmann::json out{
                         {"id", "mock"},
                         {"choices",
                          nlohmann::json::array(
                              {{{"index", 0},
                                {"message",
                                 {{"role", "assistant"}, {"content", reply(body, call)}}},
                                {"finish_reason", "stop"}}})}};
                     if (include_usage) {
                       out["usage"] = {{"prompt_tokens", 7}, {"completion_tokens", 11}};
                     }
                     res.set_content(out.dump(), "application/json");
                   }
                   inflight_.fetch_sub(1);
                 });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockOpenAiServer() {
    server_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  int calls() const { return calls_.load(); }
  int max_inflight() const { return max_inflight_.load(); }
  std::vector<std::string> bodies() const {
    std::lock_guard lk(mu_);
    return bodies_;
  }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> calls_{0};
  std::atomic<int> inflight_{0};
  std::atomic<int> max_inflight_{0};
  mutable std::mutex mu_;
  std::vector<std::string> bodies_;
};

// Bare httplib server for non-chat endpoints (search APIs, PDF hosts).
class MockHttpServer {
 public:
  httplib::Server server;

  void start() {
    port_ = server.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~MockHttpServer() {
    if (thread_.joinable()) {
      server.stop();
      thread_.join();
    }
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  std::thread thread_;
  int port_ = 0;
};

// Checkerboard test image; cell=1 gives the maximum-variance pattern.
inline vqaforge::RgbImage checkerboard(int width, int height, int cell = 1) {
  vqaforge::RgbImage img;
  img.width = width;
  img.height = height;
  img.pixels.resize(std::size_t(width) * height * 3);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      std::uint8_t v = ((x / cell + y / cell) % 2 == 0) ? 255 : 0;
      for (int c = 0; c < 3; ++c) img.pixels[(std::size_t(y) * width + x) * 3 + c] = v;
    }
  }
  return img;
}

inline std::filesystem::path write_checkerboard_png(const std::filesystem::path& path, int width,
                                                    int height, int cell = 1) {
  vqaforge::write_png_rgb(path, checkerboard(width, height, cell));
  return path;
}

// Minimal JPEG writer for decode tests; quality 95 keeps flat regions intact.
inline std::filesystem::path write_jpeg_rgb(const std::filesystem::path& path,
                                            const vqaforge::RgbImage& img) {
  FILE* fp = std::fopen(path.string().c_str(), "wb");
  jpeg_compress_struct cinfo;
  jpeg_error_mgr jerr;
  cinfo.err = jpeg_std_error(&jerr);
  jpeg_create_compress(&cinfo);
  jpeg_stdio_dest(&cinfo, fp);
  cinfo.image_width = JDIMENSION(img.width);
  cinfo.image_height = JDIMENSION(img.height);
  cinfo.input_components = 3;
  cinfo.in_color_space = JCS_RGB;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, 95, TRUE);
  jpeg_start_compress(&cinfo, TRUE);
  while (cinfo.next_scanline < cinfo.image_height) {
    JSAMPROW row = const_cast<JSAMPROW>(img.pixels.data() +
                                        std::size_t(cinfo.next_scanline) * img.width * 3);
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  jpeg_destroy_compress(&cinfo);
  std::fclose(fp);
  return path;
}

}  // namespace testsupport
