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

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "vqaforge/gateway.hpp"
#include "vqaforge/ingest.hpp"
#include "vqaforge/tfidf.hpp"

namespace vqaforge {

enum class TaskType { detail, complex };

std::string to_string(TaskType t);
TaskType task_type_from_string(const std::string& s);

struct Provenance {
  std::string model_id;
  std::string prompt_hash;  // sha256 over system + rendered user prompt
};

struct InstructionSample {
  std::string sample_id;  // "<paper_id>:<label-slug>:<task>"
  std::string paper_id;
  std::string image_path;
  std::string question;
  std::string answer;
  TaskType task_type = TaskType::detail;
  Provenance provenance;

  nlohmann::json to_json() const;
  static InstructionSample from_json(const nlohmann::json& j);
};

// Editable prompt templates; {{caption}}, {{context}} and {{label}} are
// substituted per record.
struct GenPrompts {
  std::string detail_system;
  std::string detail_user;
  std::string complex_system;
  std::string complex_user;
};

GenPrompts default_gen_prompts();
GenPrompts load_gen_prompts(const std::filesystem::path& dir);

std::string render_prompt(const std::string& prompt_template, const FigureRecord& record);

// "QUESTION: ... ANSWER: ..." -> (question, answer); ParseError otherwise.
std::pair<std::string, std::string> parse_question_answer(const std::string& text);

struct BuildStats {
  int attempted = 0;
  int succeeded = 0;
  int skipped = 0;
};

struct GenOptions {
  double temperature = 0.2;
  int max_tokens = 1024;
  double failure_rate_cap = 0.2;  // StageError above this fraction of skips
};

// Detail task: the LLM writes the description, the question comes from the
// template bank by TF-IDF/cosine match against that answer (model fitted on
// bank templates plus all generated answers).
std::vector<InstructionSample> build_detail_samples(const std::vector<FigureRecord>& records,
                                                    Gateway& gateway, const TemplateBank& bank,
                                                    const GenPrompts& prompts,
                                                    const GenOptions& options,
                                                    BuildStats* stats = nullptr);

// Complex task: the LLM writes both question and answer in a delimited format.
std::vector<InstructionSample> build_complex_samples(const std::vector<FigureRecord>& records,
                                                     Gateway& gateway, const GenPrompts& prompts,
                                                     const GenOptions& options,
                                                     BuildStats* stats = nullptr);

struct DatasetSplit {
  std::vector<InstructionSample> train;
  std::vector<InstructionSample> eval;
  std::uint64_t seed = 0;
};

// |eval| = round-half-up(eval_fraction * total); membership by seeded
// Fisher-Yates shuffle then prefix take, deterministic across platforms.
// Both halves come back sorted by sample_id.
DatasetSplit split_dataset(std::vector<InstructionSample> samples, double eval_fraction,
                           std::uint64_t seed);

}  // namespace vqaforge
