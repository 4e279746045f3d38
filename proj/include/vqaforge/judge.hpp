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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "vqaforge/dataset.hpp"
#include "vqaforge/gateway.hpp"
#include "vqaforge/inference.hpp"

namespace vqaforge {

// The editable part of the judge prompt. Must name all three rubric
// dimensions (relevance, helpfulness, accuracy) and demand the
// "Score: <integer 0-10>" output format; validated at load.
std::string default_judge_system_prompt();
std::string load_judge_system_prompt(const std::filesystem::path& file);

struct JudgePrompt {
  std::string system_text;
  std::string user_text;
  bool missing_record = false;  // built without caption/context ground truth
};

// User text carries, in fixed order: question, reference answer, caption,
// context sentences, candidate answer. The context block is omitted when
// empty; without a record only question/reference/candidate appear.
JudgePrompt build_judge_prompt(const InstructionSample& sample, const ModelAnswer& answer,
                               const FigureRecord* record, const std::string& system_text);

// First "Score: <int>" occurrence in [0,10] wins; fallback is the first
// standalone integer in range ("10" matches before "1"). Out-of-range values
// are never clamped; no parsable score is a ParseError.
int parse_score(const std::string& raw);

struct JudgeScore {
  std::string sample_id;
  std::string model_id;  // candidate model
  std::string judge_id;
  int score = 0;  // integer in [0, 10]
  std::string raw_text;

  nlohmann::json to_json() const;
  static JudgeScore from_json(const nlohmann::json& j);
};

struct JudgeOptions {
  double temperature = 0.0;
  int max_tokens = 256;
  double failure_rate_cap = 0.1;
};

struct JudgeRunStats {
  int attempted = 0;
  int succeeded = 0;
  int failed = 0;
  int reprompted = 0;
};

std::filesystem::path scores_path(const std::filesystem::path& out_dir,
                                  const std::string& judge_id);

// Scores every (answer, judge) pair not already on disk; one automatic
// re-prompt on a parse error. Checkpointed like inference.
JudgeRunStats judge_answers(const std::vector<ModelAnswer>& answers,
                            const std::map<std::string, InstructionSample>& samples,
                            const std::map<std::string, FigureRecord>& records_by_sample,
                            const std::vector<Gateway*>& judges, const std::string& system_text,
                            const JudgeOptions& options, const std::filesystem::path& out_dir);

struct StatLine {
  int n = 0;
  double mean = 0.0;
  double stddev = 0.0;  // sample std (n-1); 0 when n == 1

  nlohmann::json to_json() const;
};

struct ScoreRow {
  std::string judge_id;
  std::string model_id;
  StatLine detail;
  StatLine complex_task;
  StatLine overall;  // pooled over all items, not a mean of means

  nlohmann::json to_json() const;
};

// Per (judge, model): detail / complex / pooled-overall mean and sample
// standard deviation. Rows sorted by (judge_id, model_id).
std::vector<ScoreRow> aggregate_scores(const std::vector<JudgeScore>& scores,
                                       const std::map<std::string, TaskType>& task_by_sample);

// "M.MM ± S.SS"; empty string when n == 0.
std::string format_mean_std(const StatLine& line);

std::string score_table_csv(const std::vector<ScoreRow>& rows);
nlohmann::json score_table_json(const std::vector<ScoreRow>& rows);

}  // namespace vqaforge
