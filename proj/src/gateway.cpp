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
#include "vqaforge/gateway.hpp"

#include <chrono>
#include <cstdlib>
#include <thread>

#include "httplib.h"
#include "vqaforge/errors.hpp"
#include "vqaforge/image.hpp"

namespace vqaforge {

EndpointConfig EndpointConfig::from_json(const nlohmann::json& j) {
  EndpointConfig cfg;
  cfg.base_url = j.value("base_url", "");
  cfg.model_id = j.value("model_id", "");
  cfg.id = j.value("id", sanitize_filename(cfg.model_id));
  cfg.api_key_env = j.value("api_key_env", "");
  cfg.timeout_s = j.value("timeout_s", 120.0);
  cfg.max_retries = j.value("max_retries", 3);
  cfg.backoff_base_ms = j.value("backoff_base_ms", 500);
  cfg.max_concurrency = j.value("max_concurrency", 4);
  if (j.contains("cassette")) cfg.cassette = j.at("cassette").get<std::string>();
  return cfg;
}

nlohmann::json ChatResponse::to_json() const {
  nlohmann::json j{{"text", text}, {"finish_reason", finish_reason}, {"latency_ms", latency_ms}};
  if (prompt_tokens || completion_tokens) {
    nlohmann::json usage = nlohmann::json::object();
    if (prompt_tokens) usage["prompt_tokens"] = *prompt_tokens;
    if (completion_tokens) usage["completion_tokens"] = *completion_tokens;
    j["usage"] = usage;
  }
  return j;
}

ChatResponse ChatResponse::from_json(const nlohmann::json& j) {
  ChatResponse r;
  r.text = j.value("text", "");
  r.finish_reason = j.value("finish_reason", "");
  r.latency_ms = j.value("latency_ms", 0L);
  if (j.contains("usage")) {
    const auto& u = j.at("usage");
    if (u.contains("prompt_tokens")) r.prompt_tokens = u.at("prompt_tokens").get<long>();
    if (u.contains("completion_tokens")) {
      r.completion_tokens = u.at("completion_tokens").get<long>();
    }
  }
  return r;
}

GatewayMode gateway_mode_from_string(const std::string& s) {
  if (s == "live") return GatewayMode::live;
  if (s == "record") return GatewayMode::record;
  if (s == "replay") return GatewayMode::replay;
  throw ConfigError("unknown gateway mode: " + s);
}

Gateway::Gateway(EndpointConfig cfg, GatewayMode mode)
    : cfg_(std::move(cfg)), mode_(mode), sem_(std::max(1, cfg_.max_concurrency)) {
  if (cfg_.base_url.empty() && mode_ != GatewayMode::replay) {
    throw ConfigError("endpoint base_url not set for " + cfg_.model_id);
  }
  if (cfg_.timeout_s <= 0.0) {
    throw ConfigError("endpoint timeout must be positive for " + cfg_.model_id);
  }
  if (mode_ == GatewayMode::replay) {
    if (cfg_.cassette.empty() || !std::filesystem::exists(cfg_.cassette)) {
      throw ConfigError("replay mode requires an existing cassette: " +
                        cfg_.cassette.string());
    }
    for (auto& row : read_jsonl(cfg_.cassette).rows) {
      replay_[row.at("hash").get<std::string>()].push_back(row.at("response"));
    }
  } else if (mode_ == GatewayMode::record) {
    if (cfg_.cassette.empty()) throw ConfigError("record mode requires a cassette path");
    if (cfg_.cassette.has_parent_path()) {
      std::filesystem::create_directories(cfg_.cassette.parent_path());
    }
    record_out_.open(cfg_.cassette, std::ios::trunc);
    if (!record_out_) throw ConfigError("cannot open cassette: " + cfg_.cassette.string());
  }
}

Gateway::~Gateway() = default;

nlohmann::json Gateway::build_body(const ChatRequest& req) const {
  int images = 0;
  bool has_user = false;
  for (const auto& m : req.messages) {
    if (!m.image_path.empty()) ++images;
    if (m.role == "user") has_user = true;
  }
  if (!has_user) throw std::invalid_argument("ChatRequest needs at least one user message");
  if (images > 1) throw std::invalid_argument("ChatRequest allows at most one image");
  if (req.temperature < 0.0) throw std::invalid_argument("temperature must be >= 0");
  if (req.max_tokens < 1) throw std::invalid_argument("max_tokens must be >= 1");

  nlohmann::json messages = nlohmann::json::array();
  for (const auto& m : req.messages) {
    nlohmann::json msg{{"role", m.role}};
    if (m.image_path.empty()) {
      msg["content"] = m.text;
    } else {
      std::string bytes = read_text_file(m.image_path);
      ImageFormat fmt = sniff_image_format(bytes);
      if (fmt == ImageFormat::unknown) {
        throw DecodeError("attachment is not PNG or JPEG: " + m.image_path);
      }
      std::string mime = fmt == ImageFormat::png ? "image/png" : "image/jpeg";
      // image part first: attachments precede the question text
      msg["content"] = nlohmann::json::array(
          {{{"type", "image_url"},
            {"image_url", {{"url", "data:" + mime + ";base64," + base64_encode(bytes)}}}},
           {{"type", "text"}, {"text", m.text}}});
    }
    messages.push_back(std::move(msg));
  }
  return nlohmann::json{{"model", cfg_.model_id},
                        {"messages", std::move(messages)},
                        {"temperature", req.temperature},
                        {"max_tokens", req.max_tokens}};
}

std::string Gateway::request_hash(const nlohmann::json& body) { return sha256_hex(body.dump()); }

ChatResponse Gateway::complete(const ChatRequest& req) { return dispatch(build_body(req)); }

ChatResponse Gateway::complete_vision(const ChatRequest& req) {
  const ChatMessage* image_msg = nullptr;
  for (const auto& m : req.messages) {
    if (!m.image_path.empty()) image_msg = &m;
  }
  if (!image_msg) throw std::invalid_argument("complete_vision requires an image attachment");
  if (!std::filesystem::exists(image_msg->image_path)) {
    throw DecodeError("image file not found: " + image_msg->image_path);
  }
  return dispatch(build_body(req));
}

ChatResponse Gateway::dispatch(const nlohmann::json& body) {
  const std::string hash = request_hash(body);
  if (mode_ == GatewayMode::replay) {
    std::lock_guard lk(cassette_mu_);
    auto it = replay_.find(hash);
    if (it == replay_.end() || it->second.empty()) {
      throw CassetteMiss("cassette miss for request hash " + hash + " (" +
                         cfg_.cassette.string() + ")");
    }
    ChatResponse resp = ChatResponse::from_json(it->second.front());
    it->second.pop_front();
    return resp;
  }

  sem_.acquire();
  ChatResponse resp;
  try {
    resp = http_round_trip(body);
  } catch (...) {
    sem_.release();
    throw;
  }
  sem_.release();

  if (mode_ == GatewayMode::record) {
    std::lock_guard lk(cassette_mu_);
    record_out_ << nlohmann::json{{"hash", hash}, {"response", resp.to_json()}}.dump() << "\n";
    record_out_.flush();
  }
  return resp;
}

ChatResponse Gateway::http_round_trip(const nlohmann::json& body) {
  // split base_url into authority and optional path prefix
  std::string url = cfg_.base_url;
  std::string prefix;
  std::size_t scheme = url.find("://");
  if (scheme != std::string::npos) {
    std::size_t slash = url.find('/', scheme + 3);
    if (slash != std::string::npos) {
      prefix = url.substr(slash);
      url = url.substr(0, slash);
    }
  }
  if (!prefix.empty() && prefix.back() == '/') prefix.pop_back();

  httplib::Client client(url);
  client.set_connection_timeout(std::chrono::duration<double>(cfg_.timeout_s));
  client.set_read_timeout(std::chrono::duration<double>(cfg_.timeout_s));
  httplib::Headers headers;
  if (!cfg_.api_key_env.empty()) {
    const char* key = std::getenv(cfg_.api_key_env.c_str());
    if (key == nullptr) {
      throw ConfigError("API key environment variable not set: " + cfg_.api_key_env);
    }
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  const std::string payload = body.dump();
  const std::string path = prefix + "/chat/completions";
  int attempts = cfg_.max_retries + 1;
  int last_status = 0;
  std::string last_error;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(
          std::chrono::milliseconds(long(cfg_.backoff_base_ms) << (attempt - 1)));
    }
    auto start = std::chrono::steady_clock::now();
    httplib::Result res = client.Post(path, headers, payload, "application/json");
    auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::steady_clock::now() - start)
                       .count();
    if (!res) {
      last_status = 0;
      last_error = httplib::to_string(res.error());
      continue;  // transport error: retry
    }
    if (res->status >= 500) {
      last_status = res->status;
      last_error = "server error " + std::to_string(res->status);
      continue;
    }
    if (res->status >= 400) {
      throw HttpError(res->status, cfg_.model_id + ": HTTP " + std::to_string(res->status) +
                                       " from " + path + " (no retry on 4xx)");
    }
    nlohmann::json parsed = nlohmann::json::parse(res->body, nullptr, false);
    if (parsed.is_discarded() || !parsed.contains("choices") || parsed["choices"].empty()) {
      throw ParseError(cfg_.model_id + ": malformed chat-completions response body");
    }
    const auto& choice = parsed["choices"][0];
    if (!choice.contains("message") || !choice["message"].contains("content") ||
        !choice["message"]["content"].is_string()) {
      throw ParseError(cfg_.model_id + ": response missing message content");
    }
    ChatResponse out;
    out.text = choice["message"]["content"].get<std::string>();
    out.finish_reason = choice.value("finish_reason", "stop");
    if (parsed.contains("usage")) {
      const auto& u = parsed["usage"];
      if (u.contains("prompt_tokens")) out.prompt_tokens = u["prompt_tokens"].get<long>();
      if (u.contains("completion_tokens")) {
        out.completion_tokens = u["completion_tokens"].get<long>();
      }
    }
    out.latency_ms = long(elapsed);
    out.retries = attempt;
    return out;
  }
  throw HttpError(last_status, cfg_.model_id + ": retries exhausted for " + path + ": " +
                                   last_error);
}

}  // namespace vqaforge
