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
#include <thread>

#include "doctest.h"
#include "support.hpp"
#include "vqaforge/errors.hpp"
#include "vqaforge/gateway.hpp"

using namespace vqaforge;
using testsupport::MockOpenAiServer;
using testsupport::TempDir;

namespace {

EndpointConfig make_endpoint(const std::string& url, const std::string& model) {
  EndpointConfig cfg;
  cfg.id = model;
  cfg.base_url = url;
  cfg.model_id = model;
  cfg.backoff_base_ms = 1;  // keep retry tests fast
  cfg.timeout_s = 10.0;
  return cfg;
}

ChatRequest text_request(const std::string& text, double temperature = 0.2,
                         int max_tokens = 1024) {
  ChatRequest req;
  req.temperature = temperature;
  req.max_tokens = max_tokens;
  req.messages.push_back({"user", text, ""});
  return req;
}

}  // namespace

TEST_CASE("complete round-trips and serializes parameters exactly") {
  MockOpenAiServer server;
  server.reply = [](const nlohmann::json& body, int) {
    return "echo:" + body["messages"][0]["content"].get<std::string>();
  };
  Gateway gw(make_endpoint(server.url(), "m1"), GatewayMode::live);
  ChatResponse resp = gw.complete(text_request("hello", 0.2, 1024));
  CHECK(resp.text == "echo:hello");
  CHECK(resp.finish_reason == "stop");
  REQUIRE(resp.completion_tokens);
  CHECK(*resp.completion_tokens == 11);

  auto bodies = server.bodies();
  REQUIRE(bodies.size() == 1);
  nlohmann::json recorded = nlohmann::json::parse(bodies[0]);
  CHECK(recorded["temperature"].get<double>() == 0.2);
  CHECK(recorded["max_tokens"].get<int>() == 1024);
  CHECK(recorded["model"] == "m1");
}

TEST_CASE("500 twice then 200 succeeds with two retries") {
  MockOpenAiServer server;
  server.status_sequence = {500, 500, 200};
  Gateway gw(make_endpoint(server.url(), "m1"), GatewayMode::live);
  ChatResponse resp = gw.complete(text_request("x"));
  CHECK(resp.retries == 2);
  CHECK(server.calls() == 3);
}

TEST_CASE("retries exhausted on persistent 500") {
  MockOpenAiServer server;
  server.status_sequence = {500};
  EndpointConfig cfg = make_endpoint(server.url(), "m1");
  cfg.max_retries = 2;
  Gateway gw(cfg, GatewayMode::live);
  CHECK_THROWS_AS(gw.complete(text_request("x")), HttpError);
  CHECK(server.calls() == 3);  // 1 + 2 retries
}

TEST_CASE("401 fails immediately without retry") {
  MockOpenAiServer server;
  server.status_sequence = {401};
  Gateway gw(make_endpoint(server.url(), "m1"), GatewayMode::live);
  try {
    gw.complete(text_request("x"));
    FAIL("expected HttpError");
  } catch (const HttpError& e) {
    CHECK(e.status == 401);
  }
  CHECK(server.calls() == 1);
}

TEST_CASE("missing API key env is an error before any call") {
  MockOpenAiServer server;
  EndpointConfig cfg = make_endpoint(server.url(), "m1");
  cfg.api_key_env = "VQAFORGE_NO_SUCH_KEY_VAR";
  Gateway gw(cfg, GatewayMode::live);
  CHECK_THROWS_AS(gw.complete(text_request("x")), ConfigError);
  CHECK(server.calls() == 0);
}

TEST_CASE("bearer token is sent when configured") {
  testsupport::MockHttpServer raw;
  std::string seen_auth;
  raw.server.Post("/chat/completions",
                  [&](const httplib::Request& req, httplib::Response& res) {
                    seen_auth = req.get_header_value("Authorization");
                    nlohmann::json out{
                        {"choices",
                         nlohmann::json::array(
                             {{{"message", {{"role", "assistant"}, {"content", "ok"}}},
                               {"finish_reason", "stop"}}})}};
                    res.set_content(out.dump(), "application/json");
                  });
  raw.start();
  setenv("VQAFORGE_TEST_KEY", "sekrit", 1);
  EndpointConfig cfg = make_endpoint(raw.url(), "m1");
  cfg.api_key_env = "VQAFORGE_TEST_KEY";
  Gateway gw(cfg, GatewayMode::live);
  gw.complete(text_request("x"));
  CHECK(seen_auth == "Bearer sekrit");
  unsetenv("VQAFORGE_TEST_KEY");
}

TEST_CASE("malformed response body is a ParseError") {
  testsupport::MockHttpServer raw;
  raw.server.Post("/chat/completions", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("{\"unexpected\":true}", "application/json");
  });
  raw.start();
  Gateway gw(make_endpoint(raw.url(), "m1"), GatewayMode::live);
  CHECK_THROWS_AS(gw.complete(text_request("x")), ParseError);
}

TEST_CASE("vision request places the image part before the text part") {
  TempDir tmp;
  auto png = testsupport::write_checkerboard_png(tmp.path() / "tiny.png", 1, 1);
  MockOpenAiServer server;
  Gateway gw(make_endpoint(server.url(), "vlm"), GatewayMode::live);

  ChatRequest req;
  req.temperature = 0.2;
  req.max_tokens = 1024;
  req.messages.push_back({"user", "What is this?", png.string()});
  gw.complete_vision(req);

  auto bodies = server.bodies();
  REQUIRE(bodies.size() == 1);
  nlohmann::json body = nlohmann::json::parse(bodies[0]);
  const auto& content = body["messages"][0]["content"];
  REQUIRE(content.is_array());
  REQUIRE(content.size() == 2);
  CHECK(content[0]["type"] == "image_url");
  CHECK(content[1]["type"] == "text");
  CHECK(content[1]["text"] == "What is this?");
  std::string data_url = content[0]["image_url"]["url"].get<std::string>();
  CHECK(data_url.rfind("data:image/png;base64,", 0) == 0);
}

TEST_CASE("missing image file fails before any network call") {
  MockOpenAiServer server;
  Gateway gw(make_endpoint(server.url(), "vlm"), GatewayMode::live);
  ChatRequest req;
  req.messages.push_back({"user", "q", "/nonexistent/image.png"});
  CHECK_THROWS_AS(gw.complete_vision(req), DecodeError);
  CHECK(server.calls() == 0);
}

TEST_CASE("request validation") {
  MockOpenAiServer server;
  Gateway gw(make_endpoint(server.url(), "m"), GatewayMode::live);
  ChatRequest no_user;
  no_user.messages.push_back({"system", "s", ""});
  CHECK_THROWS_AS(gw.complete(no_user), std::invalid_argument);

  TempDir tmp;
  auto png = testsupport::write_checkerboard_png(tmp.path() / "a.png", 1, 1);
  ChatRequest two_images;
  two_images.messages.push_back({"user", "a", png.string()});
  two_images.messages.push_back({"user", "b", png.string()});
  CHECK_THROWS_AS(gw.complete(two_images), std::invalid_argument);
}

TEST_CASE("record then replay is deterministic with zero network calls") {
  TempDir tmp;
  auto cassette = tmp.path() / "cassette.jsonl";
  std::string recorded_text;
  {
    MockOpenAiServer server;
    server.reply = [](const nlohmann::json&, int call) {
      return "response-" + std::to_string(call);
    };
    EndpointConfig cfg = make_endpoint(server.url(), "m1");
    cfg.cassette = cassette;
    Gateway gw(cfg, GatewayMode::record);
    recorded_text = gw.complete(text_request("ping")).text;
    CHECK(server.calls() == 1);
  }
  // replay: no server at all
  EndpointConfig cfg = make_endpoint("", "m1");
  cfg.cassette = cassette;
  Gateway gw(cfg, GatewayMode::replay);
  ChatResponse replayed = gw.complete(text_request("ping"));
  CHECK(replayed.text == recorded_text);

  // same request again: cassette has only one entry for this hash
  CHECK_THROWS_AS(gw.complete(text_request("ping")), CassetteMiss);
}

TEST_CASE("replay of a mutated request is a cassette miss naming the hash") {
  TempDir tmp;
  auto cassette = tmp.path() / "cassette.jsonl";
  {
    MockOpenAiServer server;
    EndpointConfig cfg = make_endpoint(server.url(), "m1");
    cfg.cassette = cassette;
    Gateway gw(cfg, GatewayMode::record);
    gw.complete(text_request("original"));
  }
  EndpointConfig cfg = make_endpoint("", "m1");
  cfg.cassette = cassette;
  Gateway gw(cfg, GatewayMode::replay);
  nlohmann::json mutated_body = gw.build_body(text_request("mutated"));
  std::string expected_hash = Gateway::request_hash(mutated_body);
  try {
    gw.complete(text_request("mutated"));
    FAIL("expected CassetteMiss");
  } catch (const CassetteMiss& e) {
    CHECK(std::string(e.what()).find(expected_hash) != std::string::npos);
  }
}

TEST_CASE("repeated identical requests replay in recorded order") {
  TempDir tmp;
  auto cassette = tmp.path() / "cassette.jsonl";
  {
    MockOpenAiServer server;
    server.reply = [](const nlohmann::json&, int call) {
      return call == 0 ? "first" : "second";
    };
    EndpointConfig cfg = make_endpoint(server.url(), "m1");
    cfg.cassette = cassette;
    Gateway gw(cfg, GatewayMode::record);
    CHECK(gw.complete(text_request("same")).text == "first");
    CHECK(gw.complete(text_request("same")).text == "second");
  }
  EndpointConfig cfg = make_endpoint("", "m1");
  cfg.cassette = cassette;
  Gateway gw(cfg, GatewayMode::replay);
  CHECK(gw.complete(text_request("same")).text == "first");
  CHECK(gw.complete(text_request("same")).text == "second");
}

TEST_CASE("replay requires an existing cassette") {
  EndpointConfig cfg = make_endpoint("", "m1");
  cfg.cassette = "/nonexistent/cassette.jsonl";
  CHECK_THROWS_AS(Gateway(cfg, GatewayMode::replay), ConfigError);
}

TEST_CASE("request hash is stable across field construction order") {
  EndpointConfig cfg = make_endpoint("http://127.0.0.1:1", "m1");
  Gateway gw(cfg, GatewayMode::live);
  nlohmann::json a = gw.build_body(text_request("abc", 0.5, 7));
  nlohmann::json b = gw.build_body(text_request("abc", 0.5, 7));
  CHECK(Gateway::request_hash(a) == Gateway::request_hash(b));
  // canonical dump has sorted keys
  std::string dump = a.dump();
  CHECK(dump.find("\"max_tokens\"") < dump.find("\"messages\""));
  CHECK(dump.find("\"messages\"") < dump.find("\"model\""));
  CHECK(dump.find("\"model\"") < dump.find("\"temperature\""));
}

TEST_CASE("never more than max_concurrency requests in flight") {
  MockOpenAiServer server;
  server.delay_ms = 30;
  EndpointConfig cfg = make_endpoint(server.url(), "m1");
  cfg.max_concurrency = 3;
  Gateway gw(cfg, GatewayMode::live);

  std::vector<std::thread> threads;
  for (int i = 0; i < 12; ++i) {
    threads.emplace_back([&gw, i] { gw.complete(text_request("req" + std::to_string(i))); });
  }
  for (auto& t : threads) t.join();
  CHECK(server.calls() == 12);
  CHECK(server.max_inflight() <= 3);
}
