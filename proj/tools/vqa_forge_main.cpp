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
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "vqaforge/errors.hpp"
#include "vqaforge/pipeline.hpp"

namespace {

using vqaforge::PipelineConfig;

struct CommonFlags {
  std::string config_file;
  std::string out_dir;
  std::string mode;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_file, "pipeline config JSON");
  cmd->add_option("--out", flags.out_dir, "output directory (overrides config)");
  cmd->add_option("--mode", flags.mode, "gateway mode: live | record | replay");
}

PipelineConfig build_config(const CommonFlags& flags) {
  PipelineConfig config;
  if (!flags.config_file.empty()) {
    config = PipelineConfig::load(flags.config_file);
  }
  if (!flags.out_dir.empty()) config.out_dir = flags.out_dir;
  if (!flags.mode.empty()) config.mode = vqaforge::gateway_mode_from_string(flags.mode);
  return config;
}

std::vector<vqaforge::EndpointConfig> load_endpoint_list(const std::string& path) {
  nlohmann::json doc = vqaforge::read_json(path);
  if (!doc.is_array()) throw vqaforge::ConfigError("endpoint file must be a JSON array: " + path);
  std::vector<vqaforge::EndpointConfig> endpoints;
  for (const auto& e : doc) endpoints.push_back(vqaforge::EndpointConfig::from_json(e));
  return endpoints;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vqa-forge: build and judge figure-grounded VQA benchmarks"};
  app.require_subcommand(1);

  CommonFlags flags;

  // harvest
  auto* harvest = app.add_subcommand("harvest", "search a paper API and bulk-download PDFs");
  add_common(harvest, flags);
  std::string keywords_file, api_base, topics;
  bool gen_keywords = false;
  harvest->add_option("--keywords-file", keywords_file, "plain text keywords, one per line");
  harvest->add_option("--api-base", api_base, "search API base URL");
  harvest->add_flag("--generate-keywords", gen_keywords, "generate keywords via the LLM gateway");
  harvest->add_option("--topics", topics, "seed topics for keyword generation (';'-separated)");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "parse markdown articles and figure metadata");
  add_common(ingest, flags);
  std::string articles_dir, figures_dir;
  ingest->add_option("--articles", articles_dir, "directory of <paper_id>.md files");
  ingest->add_option("--figures", figures_dir, "directory of <paper_id>.figures.json files");

  // qc
  auto* qc = app.add_subcommand("qc", "blur/dimension quality control for figure images");
  add_common(qc, flags);
  std::string records_flag;
  std::optional<double> min_variance;
  std::optional<int> min_dim;
  qc->add_option("--records", records_flag, "records.jsonl from ingest");
  qc->add_option("--min-variance", min_variance, "Laplacian variance threshold");
  qc->add_option("--min-dim", min_dim, "minimum width and height in pixels");

  // build-dataset
  auto* build = app.add_subcommand("build-dataset", "generate VQA samples and split train/eval");
  add_common(build, flags);
  std::string qc_flag, templates_flag;
  std::optional<std::uint64_t> seed;
  std::optional<double> eval_fraction;
  build->add_option("--records", records_flag, "records.jsonl from ingest");
  build->add_option("--qc", qc_flag, "qc.jsonl from qc");
  build->add_option("--templates", templates_flag, "template questions, one per line");
  build->add_option("--seed", seed, "split shuffle seed");
  build->add_option("--eval-fraction", eval_fraction, "eval split fraction in (0,1)");

  // infer
  auto* infer = app.add_subcommand("infer", "run eval samples through candidate VLM endpoints");
  add_common(infer, flags);
  std::string eval_flag, endpoints_flag;
  std::optional<double> temperature;
  std::optional<int> max_tokens;
  infer->add_option("--eval", eval_flag, "eval.jsonl from build-dataset");
  infer->add_option("--endpoints", endpoints_flag, "JSON array of candidate endpoints");
  infer->add_option("--temperature", temperature, "generation temperature");
  infer->add_option("--max-tokens", max_tokens, "maximum generation length in tokens");

  // judge
  auto* judge = app.add_subcommand("judge", "score answers with LLM judges");
  add_common(judge, flags);
  std::string answers_flag, judges_flag;
  judge->add_option("--answers", answers_flag, "directory containing answers.*.jsonl");
  judge->add_option("--eval", eval_flag, "eval.jsonl from build-dataset");
  judge->add_option("--records", records_flag, "records.jsonl from ingest");
  judge->add_option("--judges", judges_flag, "JSON array of judge endpoints");

  // metrics
  auto* metrics = app.add_subcommand("metrics", "ROUGE, hedging and length-ratio analysis");
  add_common(metrics, flags);
  std::string lexicon_flag;
  metrics->add_option("--answers", answers_flag, "directory containing answers.*.jsonl");
  metrics->add_option("--eval", eval_flag, "eval.jsonl from build-dataset");
  metrics->add_option("--records", records_flag, "records.jsonl from ingest");
  metrics->add_option("--lexicon", lexicon_flag, "hedging lexicon, one term per line");

  // report
  auto* report = app.add_subcommand("report", "emit the final score/metric report");
  add_common(report, flags);

  CLI11_PARSE(app, argc, argv);

  std::string stage = app.get_subcommands().front()->get_name();
  try {
    PipelineConfig config = build_config(flags);

    if (!keywords_file.empty()) config.keywords_file = keywords_file;
    if (!api_base.empty()) config.search.base_url = api_base;
    if (gen_keywords) config.generate_keywords = true;
    if (!topics.empty()) {
      config.topics.clear();
      std::size_t pos = 0;
      while (pos <= topics.size()) {
        std::size_t semi = topics.find(';', pos);
        std::string topic = semi == std::string::npos ? topics.substr(pos)
                                                      : topics.substr(pos, semi - pos);
        topic = vqaforge::trim(topic);
        if (!topic.empty()) config.topics.push_back(topic);
        if (semi == std::string::npos) break;
        pos = semi + 1;
      }
    }
    if (!articles_dir.empty()) config.articles_dir = articles_dir;
    if (!figures_dir.empty()) config.figures_dir = figures_dir;
    if (!records_flag.empty()) config.records_file = records_flag;
    if (!qc_flag.empty()) config.qc_file = qc_flag;
    if (!eval_flag.empty()) config.eval_file = eval_flag;
    if (!answers_flag.empty()) config.answers_dir = answers_flag;
    if (!templates_flag.empty()) config.templates_file = templates_flag;
    if (!lexicon_flag.empty()) config.lexicon_file = lexicon_flag;
    if (min_variance) config.qc.min_variance = *min_variance;
    if (min_dim) {
      config.qc.min_width = *min_dim;
      config.qc.min_height = *min_dim;
    }
    if (seed) config.seed = *seed;
    if (eval_fraction) config.eval_fraction = *eval_fraction;
    if (temperature) config.inference.temperature = *temperature;
    if (max_tokens) config.inference.max_tokens = *max_tokens;
    if (!endpoints_flag.empty()) config.candidates = load_endpoint_list(endpoints_flag);
    if (!judges_flag.empty()) config.judges = load_endpoint_list(judges_flag);

    vqaforge::run_stage(stage, config);
    return 0;
  } catch (const vqaforge::ConfigError& e) {
    std::cerr << "config/input error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config/input error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "stage '" << stage << "' failed: " << e.what() << "\n";
    return 1;
  }
}
