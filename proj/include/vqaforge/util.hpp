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

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace vqaforge {

std::string sha256_hex(std::string_view data);
std::string base64_encode(std::string_view bytes);

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
// Lowercase, collapse whitespace runs to single spaces, trim.
std::string normalize_ws(std::string_view s);
std::string replace_all(std::string s, std::string_view from, std::string_view to);
// Lowercase slug: alphanumeric runs joined by '-'.
std::string slugify(std::string_view s);
// Replaces characters outside [A-Za-z0-9._-] with '_' for use in file names.
std::string sanitize_filename(std::string_view s);
// Expands ${VAR} from the environment; throws ConfigError on unset variables.
std::string interpolate_env(const std::string& s);

std::string read_text_file(const std::filesystem::path& path);
std::vector<std::string> read_lines(const std::filesystem::path& path);
// Writes via a temp file in the same directory, then rename.
void write_text_atomic(const std::filesystem::path& path, std::string_view content);

struct JsonlFile {
  std::vector<nlohmann::json> rows;
  int corrupt_lines = 0;
};
JsonlFile read_jsonl(const std::filesystem::path& path);
void write_jsonl_atomic(const std::filesystem::path& path,
                        const std::vector<nlohmann::json>& rows);
nlohmann::json read_json(const std::filesystem::path& path);
void write_json_atomic(const std::filesystem::path& path, const nlohmann::json& value);

// round-half-up to the nearest integer
long long round_half_up(double x);

struct RetryPolicy {
  int max_retries = 3;
  int base_delay_ms = 500;  // doubled per attempt; delays are nondecreasing
};

class Semaphore {
 public:
  explicit Semaphore(int count) : count_(count) {}
  void acquire();
  void release();

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  int count_;
};

// Spaces request starts at least 1/rps apart. rps <= 0 disables limiting.
class RateLimiter {
 public:
  explicit RateLimiter(double rps) : interval_(rps > 0 ? 1.0 / rps : 0.0) {}
  void wait();

 private:
  std::mutex mu_;
  double interval_;
  std::chrono::steady_clock::time_point next_{};
};

}  // namespace vqaforge
