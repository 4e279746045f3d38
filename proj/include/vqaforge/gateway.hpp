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

#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "vqaforge/util.hpp"

namespace vqaforge {

struct EndpointConfig {
  std::string id;           // short name used in file names; defaults to model_id
  std::string base_url;     // e.g. http://127.0.0.1:8000 or http://host/v1
  std::string model_id;
  std::string api_key_env;  // empty = keyless endpoint
  double timeout_s = 120.0;
  int max_retries = 3;
  int backoff_base_ms = 500;  // doubled per retry, so delays are nondecreasing
  int max_concurrency = 4;
  std::filesystem::path cassette;  // used in record/replay modes

  static EndpointConfig from_json(const nlohmann::json& j);
};

struct ChatMessage {
  std::string role;  // system | user | assistant
  std::string text;
  std::string image_path;  // non-empty only on the single image-bearing message
};

struct ChatRequest {
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  int max_tokens = 512;
};

struct ChatResponse {
  std::string text;
  std::string finish_reason;
  std::optional<long> prompt_tokens;
  std::optional<long> completion_tokens;
  long latency_ms = 0;
  int retries = 0;

  nlohmann::json to_json() const;
  static ChatResponse from_json(const nlohmann::json& j);
};

enum class GatewayMode { live, record, replay };

GatewayMode gateway_mode_from_string(const std::string& s);

// One client per endpoint. Blocking request/response; shareable across
// threads, with at most max_concurrency requests in flight. In record mode
// every response is appended to the cassette; in replay mode responses are
// served from the cassette by canonical request hash (sequential per hash,
// so repeated identical requests replay faithfully) and a miss is an error.
class Gateway {
 public:
  Gateway(EndpointConfig cfg, GatewayMode mode);
  ~Gateway();

  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  // Text-only chat completion. Requires at least one user message and at
  // most one image attachment across all messages.
  ChatResponse complete(const ChatRequest& req);

  // Image attached as a base64 data URL placed before the question text in
  // the user message content. Fails before any network activity when the
  // image is missing or not PNG/JPEG.
  ChatResponse complete_vision(const ChatRequest& req);

  // Canonical OpenAI-style body; object keys are serialized sorted, so
  // dump() is stable across runs and platforms.
  nlohmann::json build_body(const ChatRequest& req) const;
  static std::string request_hash(const nlohmann::json& body);

  const EndpointConfig& config() const { return cfg_; }
  GatewayMode mode() const { return mode_; }

 private:
  ChatResponse dispatch(const nlohmann::json& body);
  ChatResponse http_round_trip(const nlohmann::json& body);

  EndpointConfig cfg_;
  GatewayMode mode_;
  Semaphore sem_;
  std::mutex cassette_mu_;
  std::map<std::string, std::deque<nlohmann::json>> replay_;  // hash -> responses in order
  std::ofstream record_out_;
};

}  // namespace vqaforge
