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
#include "vqaforge/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <iostream>
#include <map>
#include <memory>
#include <set>

#include "vqaforge/errors.hpp"
#include "vqaforge/image.hpp"
#include "vqaforge/metrics.hpp"
#include "vqaforge/text.hpp"
#include "vqaforge/tfidf.hpp"

namespace vqaforge {

namespace fs = std::filesystem;

const std::vector<std::string> kStageNames = {"harvest", "ingest",  "qc",      "build-dataset",
                                              "infer",   "judge",   "metrics", "report"};

namespace {

fs::path resolve(const fs::path& base, const fs::path& p) {
  if (p.empty() || p.is_absolute()) return p;
  return base / p;
}

nlohmann::json interpolate_tree(const nlohmann::json& node) {
  if (node.is_string()) return interpolate_env(node.get<std::string>());
  if (node.is_object()) {
    nlohmann::json out = nlohmann::json::object();
    for (auto it = node.begin(); it != node.end(); ++it) out[it.key()] = interpolate_tree(*it);
    return out;
  }
  if (node.is_array()) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& v : node) out.push_back(interpolate_tree(v));
    return out;
  }
  return node;
}

void require_input(const fs::path& path, const std::string& what) {
  if (!fs::exists(path)) {
    throw MissingInputError("missing " + what + ": " + path.string());
  }
}

void update_manifest(const PipelineConfig& config, const std::string& stage,
                     const nlohmann::json& summary) {
  fs::path path = config.out_dir / "pipeline.manifest.json";
  nlohmann::json manifest;
  if (fs::exists(path)) {
    manifest = read_json(path);
  } else {
    manifest = nlohmann::json::object();
  }
  manifest["config_fingerprint"] = config.fingerprint();
  manifest["seed"] = config.seed;
  manifest["stages"][stage] = summary;
  write_json_atomic(path, manifest);
}

std::vector<FigureRecord> load_records(const fs::path& path) {
  std::vector<FigureRecord> records;
  for (const auto& row : read_jsonl(path).rows) records.push_back(FigureRecord::from_json(row));
  return records;
}

std::vector<InstructionSample> load_samples(const fs::path& path) {
  std::vector<InstructionSample> samples;
  for (const auto& row : read_jsonl(path).rows) {
    samples.push_back(InstructionSample::from_json(row));
  }
  return samples;
}

std::string record_key(const std::string& paper_id, const std::string& label) {
  return paper_id + ":" + slugify(label);
}

// sample_id is "<paper_id>:<label-slug>:<task>"
std::string sample_record_key(const std::string& sample_id) {
  std::size_t cut = sample_id.rfind(':');
  return cut == std::string::npos ? sample_id : sample_id.substr(0, cut);
}

std::unique_ptr<Gateway> make_gateway(const PipelineConfig& config, EndpointConfig endpoint) {
  endpoint.cassette = resolve(config.config_dir, endpoint.cassette);
  return std::make_unique<Gateway>(std::move(endpoint), config.mode);
}

std::vector<std::string> cassette_ids(const PipelineConfig& config) {
  std::set<std::string> ids;
  auto add = [&](const EndpointConfig& e) {
    if (!e.cassette.empty()) ids.insert(e.cassette.filename().string());
  };
  add(config.generator);
  for (const auto& e : config.candidates) add(e);
  for (const auto& e : config.judges) add(e);
  return {ids.begin(), ids.end()};
}

}  // namespace

PipelineConfig PipelineConfig::load(const fs::path& config_file) {
  nlohmann::json raw = interpolate_tree(read_json(config_file));
  PipelineConfig cfg;
  cfg.config_dir = fs::absolute(config_file).parent_path();

  cfg.mode = gateway_mode_from_string(raw.value("mode", "live"));
  cfg.out_dir = resolve(cfg.config_dir, fs::path(raw.value("out_dir", "out")));

  const nlohmann::json paths = raw.value("paths", nlohmann::json::object());
  auto path_of = [&](const char* key) -> fs::path {
    if (!paths.contains(key) || paths.at(key).is_null()) return {};
    return resolve(cfg.config_dir, fs::path(paths.at(key).get<std::string>()));
  };
  cfg.articles_dir = path_of("articles_dir");
  cfg.figures_dir = path_of("figures_dir");
  cfg.images_root = path_of("images_root");
  cfg.templates_file = path_of("templates_file");
  cfg.prompts_dir = path_of("prompts_dir");
  cfg.judge_prompt_file = path_of("judge_prompt_file");
  cfg.lexicon_file = path_of("lexicon_file");

  if (raw.contains("qc")) {
    const auto& q = raw.at("qc");
    cfg.qc.min_variance = q.value("min_variance", cfg.qc.min_variance);
    cfg.qc.min_width = q.value("min_width", cfg.qc.min_width);
    cfg.qc.min_height = q.value("min_height", cfg.qc.min_height);
  }
  if (raw.contains("split")) {
    const auto& s = raw.at("split");
    cfg.eval_fraction = s.value("eval_fraction", cfg.eval_fraction);
    cfg.seed = s.value("seed", cfg.seed);
  }
  if (raw.contains("ingest")) {
    cfg.context_cap = raw.at("ingest").value("context_cap", cfg.context_cap);
  }
  if (raw.contains("generation")) {
    const auto& g = raw.at("generation");
    cfg.generation.temperature = g.value("temperature", cfg.generation.temperature);
    cfg.generation.max_tokens = g.value("max_tokens", cfg.generation.max_tokens);
    cfg.generation.failure_rate_cap = g.value("failure_rate_cap", cfg.generation.failure_rate_cap);
  }
  if (raw.contains("inference")) {
    const auto& i = raw.at("inference");
    cfg.inference.temperature = i.value("temperature", cfg.inference.temperature);
    cfg.inference.max_tokens = i.value("max_tokens", cfg.inference.max_tokens);
    cfg.inference_failure_cap = i.value("failure_rate_cap", cfg.inference_failure_cap);
  }
  if (raw.contains("judging")) {
    const auto& j = raw.at("judging");
    cfg.judging.temperature = j.value("temperature", cfg.judging.temperature);
    cfg.judging.max_tokens = j.value("max_tokens", cfg.judging.max_tokens);
    cfg.judging.failure_rate_cap = j.value("failure_rate_cap", cfg.judging.failure_rate_cap);
  }
  if (raw.contains("generator")) cfg.generator = EndpointConfig::from_json(raw.at("generator"));
  if (raw.contains("candidates")) {
    for (const auto& e : raw.at("candidates")) {
      cfg.candidates.push_back(EndpointConfig::from_json(e));
    }
  }
  if (raw.contains("judges")) {
    for (const auto& e : raw.at("judges")) cfg.judges.push_back(EndpointConfig::from_json(e));
  }
  if (raw.contains("harvest")) {
    const auto& h = raw.at("harvest");
    if (h.contains("api")) cfg.search = SearchApiConfig::from_json(h.at("api"));
    if (h.contains("keywords_file")) {
      cfg.keywords_file = resolve(cfg.config_dir, fs::path(h.at("keywords_file").get<std::string>()));
    }
    if (h.contains("topics")) cfg.topics = h.at("topics").get<std::vector<std::string>>();
    cfg.generate_keywords = h.value("generate_keywords", false);
    cfg.keyword_count = h.value("keyword_count", 100);
    cfg.download.workers = h.value("download_workers", cfg.download.workers);
    cfg.download.rate_limit_rps = h.value("rate_limit_rps", cfg.download.rate_limit_rps);
  }
  return cfg;
}

fs::path PipelineConfig::records_path() const {
  return records_file ? *records_file : out_dir / "records.jsonl";
}
fs::path PipelineConfig::qc_path() const { return qc_file ? *qc_file : out_dir / "qc.jsonl"; }
fs::path PipelineConfig::eval_path() const {
  return eval_file ? *eval_file : out_dir / "eval.jsonl";
}
fs::path PipelineConfig::answers_root() const { return answers_dir ? *answers_dir : out_dir; }

std::string PipelineConfig::fingerprint() const {
  nlohmann::json subset{
      {"qc", {{"min_variance", qc.min_variance}, {"min_width", qc.min_width},
              {"min_height", qc.min_height}}},
      {"eval_fraction", eval_fraction},
      {"seed", seed},
      {"context_cap", context_cap},
      {"generation",
       {{"temperature", generation.temperature},
        {"max_tokens", generation.max_tokens},
        {"failure_rate_cap", generation.failure_rate_cap}}},
      {"inference",
       {{"temperature", inference.temperature},
        {"max_tokens", inference.max_tokens},
        {"failure_rate_cap", inference_failure_cap}}},
      {"judging",
       {{"temperature", judging.temperature},
        {"max_tokens", judging.max_tokens},
        {"failure_rate_cap", judging.failure_rate_cap}}},
      {"generator_model", generator.model_id},
      {"keyword_count", keyword_count},
  };
  nlohmann::json candidate_models = nlohmann::json::array();
  for (const auto& e : candidates) candidate_models.push_back(e.model_id);
  nlohmann::json judge_models = nlohmann::json::array();
  for (const auto& e : judges) judge_models.push_back(e.model_id);
  subset["candidate_models"] = candidate_models;
  subset["judge_models"] = judge_models;
  return sha256_hex(subset.dump());
}

void run_stage(const std::string& stage, const PipelineConfig& config) {
  if (stage == "harvest") {
    stage_harvest(config);
  } else if (stage == "ingest") {
    stage_ingest(config);
  } else if (stage == "qc") {
    stage_qc(config);
  } else if (stage == "build-dataset") {
    stage_build_dataset(config);
  } else if (stage == "infer") {
    stage_infer(config);
  } else if (stage == "judge") {
    stage_judge(config);
  } else if (stage == "metrics") {
    stage_metrics(config);
  } else if (stage == "report") {
    stage_report(config);
  } else {
    throw ConfigError("unknown stage: " + stage);
  }
}

void stage_harvest(const PipelineConfig& config) {
  fs::create_directories(config.out_dir);
  KeywordSet keywords;
  if (config.generate_keywords) {
    if (config.topics.empty()) throw ConfigError("keyword generation requires --topics");
    auto gateway = make_gateway(config, config.generator);
    keywords = generate_keywords(config.topics, config.keyword_count, *gateway);
    save_keywords_file(keywords, config.out_dir / "keywords.txt");
  } else {
    require_input(config.keywords_file, "keywords file");
    keywords = load_keywords_file(config.keywords_file);
  }

  std::vector<PaperMeta> raw = search_papers(keywords, config.search);
  std::vector<PaperMeta> unique = dedupe_papers(raw);
  std::vector<nlohmann::json> rows;
  rows.reserve(unique.size());
  for (const auto& m : unique) rows.push_back(m.to_json());
  write_jsonl_atomic(config.out_dir / "papers.jsonl", rows);

  HarvestManifest manifest = download_pdfs(unique, config.out_dir / "pdfs", config.download);
  write_json_atomic(config.out_dir / "manifest.json", manifest.to_json());

  update_manifest(config, "harvest",
                  {{"keywords", keywords.keywords.size()},
                   {"search_results", raw.size()},
                   {"unique_papers", unique.size()},
                   {"downloaded", manifest.succeeded},
                   {"failed", manifest.failed}});
  std::cerr << "[harvest] " << unique.size() << " unique papers, " << manifest.succeeded
            << " downloaded\n";
}

void stage_ingest(const PipelineConfig& config) {
  require_input(config.articles_dir, "articles directory");
  require_input(config.figures_dir, "figures directory");
  fs::create_directories(config.out_dir);

  std::vector<fs::path> figure_files;
  for (const auto& entry : fs::directory_iterator(config.figures_dir)) {
    std::string name = entry.path().filename().string();
    if (name.size() > 13 && name.substr(name.size() - 13) == ".figures.json") {
      figure_files.push_back(entry.path());
    }
  }
  std::sort(figure_files.begin(), figure_files.end());

  int skipped = 0;
  std::vector<FigureAsset> assets;
  for (const auto& file : figure_files) {
    std::string name = file.filename().string();
    std::string paper_id = name.substr(0, name.size() - 13);
    FigureMetadataResult parsed = parse_figure_metadata(file, paper_id, config.images_root);
    skipped += parsed.skipped;
    for (auto& a : parsed.assets) assets.push_back(std::move(a));
  }

  std::map<std::string, ArticleDoc> docs;
  for (const auto& entry : fs::directory_iterator(config.articles_dir)) {
    if (entry.path().extension() != ".md") continue;
    std::string paper_id = entry.path().stem().string();
    docs.emplace(paper_id, make_article(paper_id, read_text_file(entry.path())));
  }

  BuildRecordsResult result = build_records(assets, docs, config.context_cap);
  std::vector<nlohmann::json> rows;
  rows.reserve(result.records.size());
  for (const auto& r : result.records) rows.push_back(r.to_json());
  write_jsonl_atomic(config.records_path(), rows);

  update_manifest(config, "ingest",
                  {{"articles", docs.size()},
                   {"records", result.records.size()},
                   {"skipped_assets", skipped},
                   {"warnings", result.warnings}});
  std::cerr << "[ingest] " << result.records.size() << " records from " << docs.size()
            << " articles (" << result.warnings << " warnings)\n";
}

void stage_qc(const PipelineConfig& config) {
  require_input(config.records_path(), "records file (run ingest first)");
  fs::create_directories(config.out_dir);
  std::vector<FigureRecord> records = load_records(config.records_path());

  int accepted = 0, blur = 0, dims = 0, decode_errors = 0;
  std::vector<nlohmann::json> rows;
  rows.reserve(records.size());
  for (const auto& record : records) {
    nlohmann::json row{{"paper_id", record.asset.paper_id},
                       {"figure_label", record.asset.figure_label}};
    try {
      fs::path image = resolve(config.images_root, fs::path(record.asset.image_path));
      QcReport report = qc_check(decode_gray(image), config.qc);
      nlohmann::json rj = report.to_json();
      for (auto it = rj.begin(); it != rj.end(); ++it) row[it.key()] = it.value();
      switch (report.verdict) {
        case QcVerdict::accept:
          ++accepted;
          break;
        case QcVerdict::reject_blur:
          ++blur;
          break;
        case QcVerdict::reject_dimensions:
          ++dims;
          break;
      }
    } catch (const DecodeError& e) {
      ++decode_errors;
      row["error"] = e.what();
    }
    rows.push_back(std::move(row));
  }
  write_jsonl_atomic(config.qc_path(), rows);

  update_manifest(config, "qc",
                  {{"checked", records.size()},
                   {"accepted", accepted},
                   {"rejected_blur", blur},
                   {"rejected_dimensions", dims},
                   {"decode_errors", decode_errors}});
  std::cerr << "[qc] " << accepted << " accepted, " << blur << " blur-rejected, " << dims
            << " dimension-rejected, " << decode_errors << " decode errors\n";
}

void stage_build_dataset(const PipelineConfig& config) {
  require_input(config.records_path(), "records file (run ingest first)");
  require_input(config.qc_path(), "qc file (run qc first)");
  fs::create_directories(config.out_dir);

  std::vector<FigureRecord> records = load_records(config.records_path());
  std::map<std::string, QcVerdict> verdicts;
  for (const auto& row : read_jsonl(config.qc_path()).rows) {
    if (!row.contains("verdict")) continue;  // decode-error entries carry no verdict
    verdicts[record_key(row.at("paper_id").get<std::string>(),
                        row.at("figure_label").get<std::string>())] =
        qc_verdict_from_string(row.at("verdict").get<std::string>());
  }
  std::vector<FigureRecord> accepted;
  for (auto& record : records) {
    auto it = verdicts.find(record_key(record.asset.paper_id, record.asset.figure_label));
    if (it != verdicts.end() && it->second == QcVerdict::accept) {
      accepted.push_back(std::move(record));
    }
  }
  if (accepted.empty()) throw StageError("no QC-accepted records to build from");

  TemplateBank bank = config.templates_file.empty() ? default_template_bank()
                                                    : load_template_bank(config.templates_file);
  GenPrompts prompts = config.prompts_dir.empty() ? default_gen_prompts()
                                                  : load_gen_prompts(config.prompts_dir);
  auto gateway = make_gateway(config, config.generator);

  BuildStats detail_stats, complex_stats;
  std::vector<InstructionSample> samples =
      build_detail_samples(accepted, *gateway, bank, prompts, config.generation, &detail_stats);
  std::vector<InstructionSample> complex_samples =
      build_complex_samples(accepted, *gateway, prompts, config.generation, &complex_stats);
  samples.insert(samples.end(), std::make_move_iterator(complex_samples.begin()),
                 std::make_move_iterator(complex_samples.end()));
  std::sort(samples.begin(), samples.end(),
            [](const InstructionSample& a, const InstructionSample& b) {
              return a.sample_id < b.sample_id;
            });

  DatasetSplit split = split_dataset(samples, config.eval_fraction, config.seed);

  auto dump_samples = [](const std::vector<InstructionSample>& list) {
    std::vector<nlohmann::json> rows;
    rows.reserve(list.size());
    for (const auto& s : list) rows.push_back(s.to_json());
    return rows;
  };
  write_jsonl_atomic(config.out_dir / "dataset.jsonl", dump_samples(samples));
  write_jsonl_atomic(config.out_dir / "train.jsonl", dump_samples(split.train));
  write_jsonl_atomic(config.out_dir / "eval.jsonl", dump_samples(split.eval));
  write_json_atomic(config.out_dir / "split_manifest.json",
                    {{"seed", split.seed},
                     {"eval_fraction", config.eval_fraction},
                     {"total", samples.size()},
                     {"train", split.train.size()},
                     {"eval", split.eval.size()}});

  update_manifest(config, "build-dataset",
                  {{"records_in", accepted.size()},
                   {"samples", samples.size()},
                   {"train", split.train.size()},
                   {"eval", split.eval.size()},
                   {"detail_skipped", detail_stats.skipped},
                   {"complex_skipped", complex_stats.skipped}});
  std::cerr << "[build-dataset] " << samples.size() << " samples (train " << split.train.size()
            << ", eval " << split.eval.size() << ")\n";
}

void stage_infer(const PipelineConfig& config) {
  require_input(config.eval_path(), "eval set (run build-dataset first)");
  if (config.candidates.empty()) throw ConfigError("no candidate endpoints configured");
  fs::create_directories(config.out_dir);

  std::vector<InstructionSample> samples = load_samples(config.eval_path());
  std::vector<std::unique_ptr<Gateway>> gateways;
  std::vector<Gateway*> raw;
  for (const auto& endpoint : config.candidates) {
    gateways.push_back(make_gateway(config, endpoint));
    raw.push_back(gateways.back().get());
  }
  InferenceRunStats stats = run_inference(samples, raw, config.inference, config.out_dir,
                                          config.images_root, config.inference_failure_cap);

  update_manifest(config, "infer",
                  {{"samples", samples.size()},
                   {"endpoints", config.candidates.size()},
                   {"attempted", stats.attempted},
                   {"succeeded", stats.succeeded},
                   {"failed", stats.failed}});
  std::cerr << "[infer] " << stats.succeeded << "/" << stats.attempted
            << " answers this run across " << config.candidates.size() << " endpoint(s)\n";
}

void stage_judge(const PipelineConfig& config) {
  require_input(config.eval_path(), "eval set (run build-dataset first)");
  require_input(config.records_path(), "records file (run ingest first)");
  if (config.judges.empty()) throw ConfigError("no judge endpoints configured");
  std::vector<fs::path> answer_files;
  for (const auto& endpoint : config.candidates) {
    fs::path f = answers_path(config.answers_root(), endpoint.id);
    if (!fs::exists(f)) {
      throw MissingInputError("missing answers.*.jsonl for endpoint '" + endpoint.id +
                              "': " + f.string() + " (run infer first)");
    }
    answer_files.push_back(f);
  }
  fs::create_directories(config.out_dir);

  std::map<std::string, InstructionSample> samples;
  std::map<std::string, TaskType> task_by_sample;
  for (auto& s : load_samples(config.eval_path())) {
    task_by_sample[s.sample_id] = s.task_type;
    samples.emplace(s.sample_id, std::move(s));
  }
  std::map<std::string, FigureRecord> records_by_key;
  for (auto& r : load_records(config.records_path())) {
    records_by_key.emplace(record_key(r.asset.paper_id, r.asset.figure_label), std::move(r));
  }
  std::map<std::string, FigureRecord> records_by_sample;
  for (const auto& [sample_id, sample] : samples) {
    auto it = records_by_key.find(sample_record_key(sample_id));
    if (it != records_by_key.end()) records_by_sample.emplace(sample_id, it->second);
  }

  std::vector<ModelAnswer> answers;
  for (const auto& file : answer_files) {
    for (const auto& row : read_jsonl(file).rows) answers.push_back(ModelAnswer::from_json(row));
  }

  std::string system_text = load_judge_system_prompt(config.judge_prompt_file);
  std::vector<std::unique_ptr<Gateway>> gateways;
  std::vector<Gateway*> raw;
  for (const auto& endpoint : config.judges) {
    gateways.push_back(make_gateway(config, endpoint));
    raw.push_back(gateways.back().get());
  }
  JudgeRunStats stats = judge_answers(answers, samples, records_by_sample, raw, system_text,
                                      config.judging, config.out_dir);

  std::vector<JudgeScore> scores;
  for (const auto& endpoint : config.judges) {
    for (const auto& row : read_jsonl(scores_path(config.out_dir, endpoint.id)).rows) {
      scores.push_back(JudgeScore::from_json(row));
    }
  }
  std::vector<ScoreRow> table = aggregate_scores(scores, task_by_sample);
  write_json_atomic(config.out_dir / "score_table.json", score_table_json(table));
  write_text_atomic(config.out_dir / "score_table.csv", score_table_csv(table));

  update_manifest(config, "judge",
                  {{"answers", answers.size()},
                   {"judges", config.judges.size()},
                   {"attempted", stats.attempted},
                   {"succeeded", stats.succeeded},
                   {"failed", stats.failed},
                   {"reprompted", stats.reprompted}});
  std::cerr << "[judge] " << stats.succeeded << "/" << stats.attempted
            << " scores this run from " << config.judges.size() << " judge(s)\n";
}

void stage_metrics(const PipelineConfig& config) {
  require_input(config.eval_path(), "eval set (run build-dataset first)");
  require_input(config.records_path(), "records file (run ingest first)");
  fs::create_directories(config.out_dir);

  std::map<std::string, InstructionSample> samples;
  for (auto& s : load_samples(config.eval_path())) samples.emplace(s.sample_id, std::move(s));
  std::map<std::string, FigureRecord> records_by_key;
  for (auto& r : load_records(config.records_path())) {
    records_by_key.emplace(record_key(r.asset.paper_id, r.asset.figure_label), std::move(r));
  }

  std::vector<std::string> lexicon = default_hedging_lexicon();
  if (!config.lexicon_file.empty()) {
    lexicon.clear();
    for (const auto& line : read_lines(config.lexicon_file)) {
      std::string term = trim(line);
      if (!term.empty()) lexicon.push_back(term);
    }
    if (lexicon.empty()) throw ConfigError("hedging lexicon file is empty");
  }

  nlohmann::json summary_models = nlohmann::json::object();
  for (const auto& endpoint : config.candidates) {
    fs::path f = answers_path(config.answers_root(), endpoint.id);
    if (!fs::exists(f)) {
      throw MissingInputError("missing answers.*.jsonl for endpoint '" + endpoint.id +
                              "': " + f.string() + " (run infer first)");
    }
    std::vector<ModelAnswer> answers;
    for (const auto& row : read_jsonl(f).rows) answers.push_back(ModelAnswer::from_json(row));
    std::sort(answers.begin(), answers.end(), [](const ModelAnswer& a, const ModelAnswer& b) {
      return a.sample_id < b.sample_id;
    });

    std::vector<std::string> texts;
    texts.reserve(answers.size());
    for (const auto& a : answers) texts.push_back(a.text);
    HedgingReport hedging = hedging_count(texts, lexicon);

    std::map<std::string, std::map<std::string, std::vector<double>>> dists;
    std::vector<nlohmann::json> rows;
    rows.reserve(answers.size());
    for (std::size_t i = 0; i < answers.size(); ++i) {
      const ModelAnswer& answer = answers[i];
      auto sit = samples.find(answer.sample_id);
      if (sit == samples.end()) continue;
      const InstructionSample& sample = sit->second;
      auto rit = records_by_key.find(sample_record_key(answer.sample_id));
      const FigureRecord* record = rit == records_by_key.end() ? nullptr : &rit->second;

      std::vector<std::string> cand = tokenize(answer.text);
      auto metric_block = [&](const std::string& reference_text) {
        std::vector<std::string> ref = tokenize(reference_text);
        nlohmann::json block{{"rouge1", rouge_n(cand, ref, 1).to_json()},
                             {"rouge2", rouge_n(cand, ref, 2).to_json()},
                             {"rougeL", rouge_l(cand, ref).to_json()}};
        if (ref.empty()) {
          block["length_ratio"] = nullptr;
        } else {
          block["length_ratio"] = double(cand.size()) / double(ref.size());
        }
        return block;
      };
      auto collect = [&](const std::string& variant, const nlohmann::json& block) {
        dists[variant]["rouge1_f1"].push_back(block["rouge1"]["f1"].get<double>());
        dists[variant]["rouge2_f1"].push_back(block["rouge2"]["f1"].get<double>());
        dists[variant]["rougeL_f1"].push_back(block["rougeL"]["f1"].get<double>());
        if (!block["length_ratio"].is_null()) {
          dists[variant]["length_ratio"].push_back(block["length_ratio"].get<double>());
        }
      };

      nlohmann::json row{{"sample_id", answer.sample_id}, {"model_id", answer.model_id}};
      nlohmann::json vs_ref = metric_block(sample.answer);
      row["vs_reference"] = vs_ref;
      collect("vs_reference", vs_ref);
      if (record != nullptr) {
        std::string caption_context = record->asset.caption;
        for (const auto& s : record->context_sentences) caption_context += " " + s;
        nlohmann::json vs_cc = metric_block(caption_context);
        row["vs_caption_context"] = vs_cc;
        collect("vs_caption_context", vs_cc);
      } else {
        row["vs_caption_context"] = nullptr;
      }
      nlohmann::json per_term = nlohmann::json::object();
      long answer_total = 0;
      for (const auto& [term, count] : hedging.per_answer[i]) {
        per_term[term] = count;
        answer_total += count;
      }
      row["hedging"] = {{"per_term", per_term}, {"total", answer_total}};
      rows.push_back(std::move(row));
    }
    write_jsonl_atomic(config.out_dir / ("metrics." + sanitize_filename(endpoint.id) + ".jsonl"),
                       rows);
    write_json_atomic(config.out_dir / ("hedging." + sanitize_filename(endpoint.id) + ".json"),
                      hedging.to_json());

    nlohmann::json model_summary{{"n_answers", rows.size()}, {"hedging", hedging.to_json()}};
    for (const auto& [variant, metrics] : dists) {
      nlohmann::json vj = nlohmann::json::object();
      for (const auto& [metric, values] : metrics) {
        vj[metric] = values.empty() ? nlohmann::json(nullptr)
                                    : summarize_distribution(values).to_json();
      }
      model_summary[variant] = vj;
    }
    summary_models[endpoint.model_id] = model_summary;
  }
  write_json_atomic(config.out_dir / "metrics_summary.json", {{"models", summary_models}});

  update_manifest(config, "metrics", {{"models", config.candidates.size()}});
  std::cerr << "[metrics] summaries for " << config.candidates.size() << " model(s)\n";
}

void stage_report(const PipelineConfig& config) {
  fs::path table_path = config.out_dir / "score_table.json";
  fs::path summary_path = config.out_dir / "metrics_summary.json";
  require_input(table_path, "score table (run judge first)");
  require_input(summary_path, "metrics summary (run metrics first)");

  nlohmann::json hedging = nlohmann::json::object();
  for (const auto& endpoint : config.candidates) {
    fs::path f = config.out_dir / ("hedging." + sanitize_filename(endpoint.id) + ".json");
    if (fs::exists(f)) hedging[endpoint.model_id] = read_json(f);
  }

  nlohmann::json provenance{{"config_fingerprint", config.fingerprint()},
                            {"cassette_ids", cassette_ids(config)},
                            {"inputs", {"score_table.json", "metrics_summary.json"}}};
  if (config.mode != GatewayMode::replay) {
    // wall-clock provenance would break replay-mode byte determinism
    std::time_t now = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    provenance["generated_at"] = buf;
  }

  emit_report(read_json(table_path), read_json(summary_path), hedging, provenance,
              config.out_dir);
  update_manifest(config, "report", {{"written", {"report.json", "report.csv"}}});
  std::cout << render_score_table_text(read_json(table_path));
  std::cerr << "[report] report.json and report.csv written\n";
}

void emit_report(const nlohmann::json& score_table, const nlohmann::json& metrics_summary,
                 const nlohmann::json& hedging_by_model, const nlohmann::json& provenance,
                 const fs::path& out_dir) {
  if (!score_table.contains("rows") || !score_table.at("rows").is_array()) {
    throw ParseError("score table JSON missing rows[]");
  }
  if (!metrics_summary.contains("models")) {
    throw ParseError("metrics summary JSON missing models{}");
  }

  nlohmann::json distributions = nlohmann::json::array();
  const auto& models = metrics_summary.at("models");
  for (auto mit = models.begin(); mit != models.end(); ++mit) {
    for (const std::string variant : {"vs_reference", "vs_caption_context"}) {
      if (!mit->contains(variant)) continue;
      const auto& block = mit->at(variant);
      for (auto it = block.begin(); it != block.end(); ++it) {
        if (it->is_null()) continue;
        distributions.push_back({{"model", mit.key()},
                                 {"metric", variant + "." + it.key()},
                                 {"n", (*it)["n"]},
                                 {"min", (*it)["min"]},
                                 {"q1", (*it)["q1"]},
                                 {"median", (*it)["median"]},
                                 {"q3", (*it)["q3"]},
                                 {"max", (*it)["max"]}});
      }
    }
  }

  nlohmann::json report{{"score_table", score_table},
                        {"distributions", distributions},
                        {"hedging", hedging_by_model},
                        {"provenance", provenance}};
  write_json_atomic(out_dir / "report.json", report);

  // CSV score table, "M.MM ± S.SS" cells to two decimals
  std::string csv = "Judge,Model,Detail,Complex,Overall\n";
  std::vector<std::string> footnotes;
  for (const auto& row : score_table.at("rows")) {
    auto cell = [&](const char* key) -> std::string {
      const auto& line = row.at(key);
      if (line.at("n").get<int>() == 0) {
        footnotes.push_back("# n=0: " + row.at("judge_id").get<std::string>() + "/" +
                            row.at("model_id").get<std::string>() + " " + key);
        return "";
      }
      StatLine s;
      s.n = line.at("n").get<int>();
      s.mean = line.at("mean").get<double>();
      s.stddev = line.at("std").get<double>();
      return format_mean_std(s);
    };
    std::string detail = cell("detail");
    std::string complex_cell = cell("complex");
    std::string overall = cell("overall");
    csv += row.at("judge_id").get<std::string>() + "," + row.at("model_id").get<std::string>() +
           "," + detail + "," + complex_cell + "," + overall + "\n";
  }
  for (const auto& note : footnotes) csv += note + "\n";
  write_text_atomic(out_dir / "report.csv", csv);
}

std::string render_score_table_text(const nlohmann::json& score_table) {
  std::vector<std::vector<std::string>> grid;
  grid.push_back({"Judge", "Model", "Detail", "Complex", "Overall"});
  for (const auto& row : score_table.at("rows")) {
    auto cell = [&](const char* key) {
      const auto& line = row.at(key);
      if (line.at("n").get<int>() == 0) return std::string("-");
      StatLine s;
      s.n = line.at("n").get<int>();
      s.mean = line.at("mean").get<double>();
      s.stddev = line.at("std").get<double>();
      return format_mean_std(s) + " (n=" + std::to_string(s.n) + ")";
    };
    grid.push_back({row.at("judge_id").get<std::string>(),
                    row.at("model_id").get<std::string>(), cell("detail"), cell("complex"),
                    cell("overall")});
  }
  std::vector<std::size_t> widths(grid[0].size(), 0);
  for (const auto& row : grid) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      // the ± glyph is two bytes but one column
      std::size_t visual = row[c].size() - (row[c].find("\xC2\xB1") != std::string::npos ? 1 : 0);
      widths[c] = std::max(widths[c], visual);
    }
  }
  std::string out;
  for (const auto& row : grid) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      std::size_t visual = row[c].size() - (row[c].find("\xC2\xB1") != std::string::npos ? 1 : 0);
      out += row[c];
      if (c + 1 < row.size()) out += std::string(widths[c] - visual + 2, ' ');
    }
    out += '\n';
  }
  return out;
}

}  // namespace vqaforge
