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
#include "vqaforge/inference.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "vqaforge/errors.hpp"

namespace vqaforge {

nlohmann::json InferenceParams::to_json() const {
  return {{"temperature", temperature}, {"max_tokens", max_tokens}};
}

nlohmann::json ModelAnswer::to_json() const {
  return {{"sample_id", sample_id},
          {"model_id", model_id},
          {"text", text},
          {"token_count", token_count},
          {"token_count_approx", token_count_approx},
          {"latency_ms", latency_ms},
          {"params", params.to_json()}};
}

ModelAnswer ModelAnswer::from_json(const nlohmann::json& j) {
  ModelAnswer a;
  a.sample_id = j.at("sample_id").get<std::string>();
  a.model_id = j.at("model_id").get<std::string>();
  a.text = j.at("text").get<std::string>();
  a.token_count = j.value("token_count", 0L);
  a.token_count_approx = j.value("token_count_approx", false);
  a.latency_ms = j.value("latency_ms", 0L);
  if (j.contains("params")) {
    a.params.temperature = j.at("params").value("temperature", 0.2);
    a.params.max_tokens = j.at("params").value("max_tokens", 1024);
  }
  return a;
}

std::filesystem::path answers_path(const std::filesystem::path& out_dir,
                                   const std::string& endpoint_id) {
  return out_dir / ("answers." + sanitize_filename(endpoint_id) + ".jsonl");
}

std::filesystem::path failures_path(const std::filesystem::path& out_dir,
                                    const std::string& endpoint_id) {
  return out_dir / ("failures." + sanitize_filename(endpoint_id) + ".jsonl");
}

namespace {

std::set<std::string> completed_sample_ids(const std::filesystem::path& out_dir,
                                           const std::string& endpoint_id, int* corrupt) {
  std::set<std::string> done;
  for (const auto& path : {answers_path(out_dir, endpoint_id), failures_path(out_dir, endpoint_id)}) {
    if (!std::filesystem::exists(path)) continue;
    JsonlFile file = read_jsonl(path);
    if (corrupt) *corrupt += file.corrupt_lines;
    for (const auto& row : file.rows) {
      if (row.contains("sample_id") && row.at("sample_id").is_string()) {
        done.insert(row.at("sample_id").get<std::string>());
      } else if (corrupt) {
        ++*corrupt;
      }
    }
  }
  return done;
}

long whitespace_token_count(const std::string& text) {
  std::istringstream ss(text);
  long count = 0;
  std::string tok;
  while (ss >> tok) ++count;
  return count;
}

}  // namespace

std::vector<PendingPair> resume_scan(const std::filesystem::path& out_dir,
                                     const std::vector<InstructionSample>& samples,
                                     const std::vector<std::string>& endpoint_ids,
                                     int* corrupt_lines) {
  std::vector<PendingPair> pending;
  std::vector<InstructionSample> sorted = samples;
  std::sort(sorted.begin(), sorted.end(),
            [](const InstructionSample& a, const InstructionSample& b) {
              return a.sample_id < b.sample_id;
            });
  std::vector<std::string> ids = endpoint_ids;
  std::sort(ids.begin(), ids.end());
  for (const auto& endpoint : ids) {
    std::set<std::string> done = completed_sample_ids(out_dir, endpoint, corrupt_lines);
    for (const auto& sample : sorted) {
      if (done.count(sample.sample_id) == 0) {
        pending.push_back({sample.sample_id, endpoint});
      }
    }
  }
  std::sort(pending.begin(), pending.end(), [](const PendingPair& a, const PendingPair& b) {
    return std::tie(a.sample_id, a.endpoint_id) < std::tie(b.sample_id, b.endpoint_id);
  });
  return pending;
}

InferenceRunStats run_inference(const std::vector<InstructionSample>& eval_samples,
                                const std::vector<Gateway*>& endpoints,
                                const InferenceParams& params,
                                const std::filesystem::path& out_dir,
                                const std::filesystem::path& images_root,
                                double failure_rate_cap) {
  std::filesystem::create_directories(out_dir);
  InferenceRunStats stats;
  for (Gateway* gateway : endpoints) {
    const std::string endpoint_id = gateway->config().id;
    const std::string model_id = gateway->config().model_id;
    int corrupt = 0;
    std::set<std::string> done = completed_sample_ids(out_dir, endpoint_id, &corrupt);
    if (corrupt > 0) {
      std::cerr << "[infer] " << endpoint_id << ": ignored " << corrupt
                << " corrupt checkpoint line(s)\n";
    }
    std::vector<const InstructionSample*> todo;
    for (const auto& s : eval_samples) {
      if (done.count(s.sample_id) == 0) todo.push_back(&s);
    }
    std::sort(todo.begin(), todo.end(),
              [](const InstructionSample* a, const InstructionSample* b) {
                return a->sample_id < b->sample_id;
              });

    std::ofstream answers_out(answers_path(out_dir, endpoint_id), std::ios::app);
    std::ofstream failures_out(failures_path(out_dir, endpoint_id), std::ios::app);
    if (!answers_out || !failures_out) {
      throw StageError("cannot open answer files under " + out_dir.string());
    }
    std::mutex io_mu;
    std::atomic<std::size_t> next{0};
    std::atomic<int> ok{0}, bad{0};

    auto worker = [&] {
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= todo.size()) return;
        const InstructionSample& sample = *todo[i];
        ChatRequest req;
        req.temperature = params.temperature;
        req.max_tokens = params.max_tokens;
        std::filesystem::path image = images_root.empty()
                                          ? std::filesystem::path(sample.image_path)
                                          : images_root / sample.image_path;
        // question sent verbatim, image attachment first; no prompt wrapping
        req.messages.push_back({"user", sample.question, image.string()});
        try {
          ChatResponse resp = gateway->complete_vision(req);
          ModelAnswer answer;
          answer.sample_id = sample.sample_id;
          answer.model_id = model_id;
          answer.text = resp.text;
          if (resp.completion_tokens) {
            answer.token_count = *resp.completion_tokens;
          } else {
            answer.token_count = whitespace_token_count(resp.text);
            answer.token_count_approx = true;
          }
          answer.latency_ms = resp.latency_ms;
          answer.params = params;
          std::lock_guard lk(io_mu);
          answers_out << answer.to_json().dump() << "\n";
          answers_out.flush();
          ++ok;
        } catch (const std::exception& e) {
          nlohmann::json failure{{"sample_id", sample.sample_id},
                                 {"endpoint_id", endpoint_id},
                                 {"model_id", model_id},
                                 {"reason", e.what()}};
          std::lock_guard lk(io_mu);
          failures_out << failure.dump() << "\n";
          failures_out.flush();
          ++bad;
        }
      }
    };

    int workers = std::max(1, gateway->config().max_concurrency);
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    answers_out.close();
    failures_out.close();

    stats.attempted += int(todo.size());
    stats.succeeded += ok.load();
    stats.failed += bad.load();

    // normalize checkpoint files: sorted by sample_id, duplicates dropped
    for (const auto& path :
         {answers_path(out_dir, endpoint_id), failures_path(out_dir, endpoint_id)}) {
      JsonlFile file = read_jsonl(path);
      std::map<std::string, nlohmann::json> by_sample;
      for (auto& row : file.rows) {
        if (row.contains("sample_id") && row.at("sample_id").is_string()) {
          by_sample.emplace(row.at("sample_id").get<std::string>(), std::move(row));
        }
      }
      std::vector<nlohmann::json> rows;
      rows.reserve(by_sample.size());
      for (auto& [id, row] : by_sample) rows.push_back(std::move(row));
      write_jsonl_atomic(path, rows);
    }
  }

  if (stats.attempted > 0) {
    double rate = double(stats.failed) / double(stats.attempted);
    if (rate > failure_rate_cap) {
      throw StageError("inference failure rate " + std::to_string(rate) + " exceeds cap " +
                       std::to_string(failure_rate_cap));
    }
  }
  return stats;
}

}  // namespace vqaforge
