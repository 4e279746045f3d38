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

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "vqaforge/dataset.hpp"
#include "vqaforge/gateway.hpp"

namespace vqaforge {

struct InferenceParams {
  double temperature = 0.2;
  int max_tokens = 1024;

  nlohmann::json to_json() const;
};

struct ModelAnswer {
  std::string sample_id;
  std::string model_id;
  std::string text;  // verbatim
  long token_count = 0;
  bool token_count_approx = false;  // whitespace-token fallback when usage absent
  long latency_ms = 0;
  InferenceParams params;

  nlohmann::json to_json() const;
  static ModelAnswer from_json(const nlohmann::json& j);
};

std::filesystem::path answers_path(const std::filesystem::path& out_dir,
                                   const std::string& endpoint_id);
std::filesystem::path failures_path(const std::filesystem::path& out_dir,
                                    const std::string& endpoint_id);

struct PendingPair {
  std::string sample_id;
  std::string endpoint_id;
};

// (sample, endpoint) pairs with neither an answer nor a terminal failure on
// disk, ordered by (sample_id, endpoint_id). Corrupt lines are counted and
// treated as absent.
std::vector<PendingPair> resume_scan(const std::filesystem::path& out_dir,
                                     const std::vector<InstructionSample>& samples,
                                     const std::vector<std::string>& endpoint_ids,
                                     int* corrupt_lines = nullptr);

struct InferenceRunStats {
  int attempted = 0;  // pairs issued this run
  int succeeded = 0;
  int failed = 0;
};

// Every pending (sample, endpoint) pair is attempted; request content is
// identical across endpoints except the model id. Answers stream to
// answers.<endpoint>.jsonl as they complete and the final files are
// rewritten sorted by sample_id. Throws StageError above the failure cap
// (files are kept either way, so a rerun resumes).
InferenceRunStats run_inference(const std::vector<InstructionSample>& eval_samples,
                                const std::vector<Gateway*>& endpoints,
                                const InferenceParams& params,
                                const std::filesystem::path& out_dir,
                                const std::filesystem::path& images_root,
                                double failure_rate_cap = 0.1);

}  // namespace vqaforge
