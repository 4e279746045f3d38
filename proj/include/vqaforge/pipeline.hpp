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
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "vqaforge/dataset.hpp"
#include "vqaforge/gateway.hpp"
#include "vqaforge/harvest.hpp"
#include "vqaforge/inference.hpp"
#include "vqaforge/judge.hpp"
#include "vqaforge/qc.hpp"

namespace vqaforge {

// All knobs for the pipeline, loaded from a single JSON file with ${VAR}
// interpolation; CLI flags override individual fields. Relative paths are
// resolved against the config file's directory.
struct PipelineConfig {
  std::filesystem::path config_dir;

  GatewayMode mode = GatewayMode::live;
  std::filesystem::path out_dir = "out";
  std::filesystem::path articles_dir;
  std::filesystem::path figures_dir;
  std::filesystem::path images_root;
  std::filesystem::path templates_file;     // empty = built-in bank
  std::filesystem::path prompts_dir;        // empty = built-in prompts
  std::filesystem::path judge_prompt_file;  // empty = built-in judge prompt
  std::filesystem::path lexicon_file;       // empty = built-in hedging lexicon

  QcThresholds qc;
  double eval_fraction = 0.03;
  std::uint64_t seed = 42;
  int context_cap = 6;
  GenOptions generation;
  InferenceParams inference;
  double inference_failure_cap = 0.1;
  JudgeOptions judging;

  EndpointConfig generator;
  std::vector<EndpointConfig> candidates;
  std::vector<EndpointConfig> judges;

  SearchApiConfig search;
  std::filesystem::path keywords_file;
  std::vector<std::string> topics;
  bool generate_keywords = false;
  int keyword_count = 100;
  DownloadOptions download;

  // explicit input overrides (default: under out_dir)
  std::optional<std::filesystem::path> records_file;
  std::optional<std::filesystem::path> qc_file;
  std::optional<std::filesystem::path> eval_file;
  std::optional<std::filesystem::path> answers_dir;

  static PipelineConfig load(const std::filesystem::path& config_file);

  std::filesystem::path records_path() const;
  std::filesystem::path qc_path() const;
  std::filesystem::path eval_path() const;
  std::filesystem::path answers_root() const;

  // Machine-independent hash over the semantic knobs (thresholds, seeds,
  // fractions, params, endpoint model ids); host paths, ports and cassette
  // locations are excluded so identical runs fingerprint identically on
  // different machines.
  std::string fingerprint() const;
};

extern const std::vector<std::string> kStageNames;

// Runs one stage; outputs are written atomically and the pipeline manifest
// is updated. Throws MissingInputError when required inputs are absent.
void run_stage(const std::string& stage, const PipelineConfig& config);

void stage_harvest(const PipelineConfig& config);
void stage_ingest(const PipelineConfig& config);
void stage_qc(const PipelineConfig& config);
void stage_build_dataset(const PipelineConfig& config);
void stage_infer(const PipelineConfig& config);
void stage_judge(const PipelineConfig& config);
void stage_metrics(const PipelineConfig& config);
void stage_report(const PipelineConfig& config);

// report.json / report.csv from the score table, metric distribution
// summaries and hedging totals. CSV cells are "M.MM ± S.SS"; the JSON keeps
// raw floats plus (model, metric, n, min, q1, median, q3, max) box-plot rows.
void emit_report(const nlohmann::json& score_table, const nlohmann::json& metrics_summary,
                 const nlohmann::json& hedging_by_model, const nlohmann::json& provenance,
                 const std::filesystem::path& out_dir);

// Fixed-width rendering of the score table for terminals.
std::string render_score_table_text(const nlohmann::json& score_table);

}  // namespace vqaforge
