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
#include "vqaforge/judge.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <thread>

#include "vqaforge/errors.hpp"

namespace vqaforge {

std::string default_judge_system_prompt() {
  return
      "You are an impartial grader of answers about scientific figures. Compare the candidate "
      "answer against the question and the reference material, judging its relevance, "
      "helpfulness, and accuracy. Reply with \"Score: <integer 0-10>\" on the first line, "
      "followed by a one-line justification.";
}

std::string load_judge_system_prompt(const std::filesystem::path& file) {
  std::string text = std::filesystem::exists(file) ? read_text_file(file)
                                                   : default_judge_system_prompt();
  std::string lower = to_lower(text);
  for (const char* dim : {"relevance", "helpfulness", "accuracy"}) {
    if (lower.find(dim) == std::string::npos) {
      throw ConfigError(std::string("judge prompt must name rubric dimension '") + dim + "'");
    }
  }
  if (lower.find("score:") == std::string::npos) {
    throw ConfigError("judge prompt must demand the 'Score: <integer 0-10>' output format");
  }
  return text;
}

JudgePrompt build_judge_prompt(const InstructionSample& sample, const ModelAnswer& answer,
                               const FigureRecord* record, const std::string& system_text) {
  if (sample.sample_id != answer.sample_id) {
    throw std::invalid_argument("sample/answer mismatch: " + sample.sample_id + " vs " +
                                answer.sample_id);
  }
  JudgePrompt prompt;
  prompt.system_text = system_text;
  std::string& u = prompt.user_text;
  u += "[Question]\n" + sample.question + "\n\n";
  u += "[Reference Answer]\n" + sample.answer + "\n\n";
  if (record != nullptr) {
    u += "[Figure Caption]\n" + record->asset.caption + "\n\n";
    if (!record->context_sentences.empty()) {
      u += "[Figure Context]\n";
      for (const auto& s : record->context_sentences) u += "- " + s + "\n";
      u += "\n";
    }
  } else {
    prompt.missing_record = true;
  }
  u += "[Candidate Answer]\n" + answer.text + "\n";
  return prompt;
}

int parse_score(const std::string& raw) {
  const std::string lower = to_lower(raw);
  // pass 1: "score: <int>" occurrences, first in-range value wins
  std::size_t pos = 0;
  while ((pos = lower.find("score", pos)) != std::string::npos) {
    std::size_t i = pos + 5;
    while (i < lower.size() && (lower[i] == ' ' || lower[i] == '\t')) ++i;
    if (i < lower.size() && lower[i] == ':') {
      ++i;
      while (i < lower.size() && (lower[i] == ' ' || lower[i] == '\t')) ++i;
      std::size_t start = i;
      long value = 0;
      while (i < lower.size() && std::isdigit(static_cast<unsigned char>(lower[i])) &&
             i - start < 6) {
        value = value * 10 + (lower[i] - '0');
        ++i;
      }
      if (i > start && value >= 0 && value <= 10) return int(value);
    }
    pos += 5;
  }
  // pass 2: first standalone integer in [0, 10]; digit runs are consumed
  // whole so "10" is matched before its "1"
  for (std::size_t i = 0; i < lower.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(lower[i]))) continue;
    if (i > 0 && std::isalnum(static_cast<unsigned char>(lower[i - 1]))) continue;
    std::size_t start = i;
    long value = 0;
    while (i < lower.size() && std::isdigit(static_cast<unsigned char>(lower[i])) &&
           i - start < 6) {
      value = value * 10 + (lower[i] - '0');
      ++i;
    }
    bool standalone = i >= lower.size() || !std::isalnum(static_cast<unsigned char>(lower[i]));
    if (standalone && value <= 10) return int(value);
    while (i < lower.size() && std::isalnum(static_cast<unsigned char>(lower[i]))) ++i;
  }
  throw ParseError("no integer score in [0,10] found in judge response");
}

nlohmann::json JudgeScore::to_json() const {
  return {{"sample_id", sample_id},
          {"model_id", model_id},
          {"judge_id", judge_id},
          {"score", score},
          {"raw_text", raw_text}};
}

JudgeScore JudgeScore::from_json(const nlohmann::json& j) {
  JudgeScore s;
  s.sample_id = j.at("sample_id").get<std::string>();
  s.model_id = j.at("model_id").get<std::string>();
  s.judge_id = j.at("judge_id").get<std::string>();
  s.score = j.at("score").get<int>();
  s.raw_text = j.value("raw_text", "");
  if (s.score < 0 || s.score > 10) throw ParseError("score out of range in " + s.sample_id);
  return s;
}

std::filesystem::path scores_path(const std::filesystem::path& out_dir,
                                  const std::string& judge_id) {
  return out_dir / ("scores." + sanitize_filename(judge_id) + ".jsonl");
}

namespace {

std::filesystem::path judge_failures_path(const std::filesystem::path& out_dir,
                                          const std::string& judge_id) {
  return out_dir / ("failures." + sanitize_filename(judge_id) + ".jsonl");
}

std::string pair_key(const std::string& sample_id, const std::string& model_id) {
  return sample_id + "\x1f" + model_id;
}

}  // namespace

JudgeRunStats judge_answers(const std::vector<ModelAnswer>& answers,
                            const std::map<std::string, InstructionSample>& samples,
                            const std::map<std::string, FigureRecord>& records_by_sample,
                            const std::vector<Gateway*>& judges, const std::string& system_text,
                            const JudgeOptions& options, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  JudgeRunStats stats;

  for (Gateway* judge : judges) {
    const std::string judge_id = judge->config().id;
    std::set<std::string> done;
    for (const auto& path :
         {scores_path(out_dir, judge_id), judge_failures_path(out_dir, judge_id)}) {
      if (!std::filesystem::exists(path)) continue;
      for (const auto& row : read_jsonl(path).rows) {
        if (row.contains("sample_id") && row.contains("model_id")) {
          done.insert(pair_key(row.at("sample_id").get<std::string>(),
                               row.at("model_id").get<std::string>()));
        }
      }
    }

    std::vector<const ModelAnswer*> todo;
    for (const auto& answer : answers) {
      if (samples.count(answer.sample_id) == 0) {
        throw StageError("answer references unknown sample: " + answer.sample_id);
      }
      if (done.count(pair_key(answer.sample_id, answer.model_id)) == 0) {
        todo.push_back(&answer);
      }
    }
    std::sort(todo.begin(), todo.end(), [](const ModelAnswer* a, const ModelAnswer* b) {
      return std::tie(a->sample_id, a->model_id) < std::tie(b->sample_id, b->model_id);
    });

    std::ofstream scores_out(scores_path(out_dir, judge_id), std::ios::app);
    std::ofstream failures_out(judge_failures_path(out_dir, judge_id), std::ios::app);
    if (!scores_out || !failures_out) {
      throw StageError("cannot open score files under " + out_dir.string());
    }
    std::mutex io_mu;
    std::atomic<std::size_t> next{0};
    std::atomic<int> ok{0}, bad{0}, reprompts{0};

    auto worker = [&] {
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= todo.size()) return;
        const ModelAnswer& answer = *todo[i];
        const InstructionSample& sample = samples.at(answer.sample_id);
        auto rec_it = records_by_sample.find(answer.sample_id);
        JudgePrompt prompt = build_judge_prompt(
            sample, answer, rec_it == records_by_sample.end() ? nullptr : &rec_it->second,
            system_text);
        ChatRequest req;
        req.temperature = options.temperature;
        req.max_tokens = options.max_tokens;
        req.messages.push_back({"system", prompt.system_text, ""});
        req.messages.push_back({"user", prompt.user_text, ""});
        try {
          ChatResponse resp = judge->complete(req);
          int score;
          try {
            score = parse_score(resp.text);
          } catch (const ParseError&) {
            ++reprompts;  // one automatic re-prompt on unparseable output
            resp = judge->complete(req);
            score = parse_score(resp.text);
          }
          JudgeScore js;
          js.sample_id = answer.sample_id;
          js.model_id = answer.model_id;
          js.judge_id = judge_id;
          js.score = score;
          js.raw_text = resp.text;
          std::lock_guard lk(io_mu);
          scores_out << js.to_json().dump() << "\n";
          scores_out.flush();
          ++ok;
        } catch (const std::exception& e) {
          nlohmann::json failure{{"sample_id", answer.sample_id},
                                 {"model_id", answer.model_id},
                                 {"judge_id", judge_id},
                                 {"reason", e.what()}};
          std::lock_guard lk(io_mu);
          failures_out << failure.dump() << "\n";
          failures_out.flush();
          ++bad;
        }
      }
    };

    int workers = std::max(1, judge->config().max_concurrency);
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    scores_out.close();
    failures_out.close();

    stats.attempted += int(todo.size());
    stats.succeeded += ok.load();
    stats.failed += bad.load();
    stats.reprompted += reprompts.load();

    for (const auto& path :
         {scores_path(out_dir, judge_id), judge_failures_path(out_dir, judge_id)}) {
      JsonlFile file = read_jsonl(path);
      std::map<std::string, nlohmann::json> by_pair;
      for (auto& row : file.rows) {
        if (row.contains("sample_id") && row.contains("model_id")) {
          by_pair.emplace(pair_key(row.at("sample_id").get<std::string>(),
                                   row.at("model_id").get<std::string>()),
                          std::move(row));
        }
      }
      std::vector<nlohmann::json> rows;
      rows.reserve(by_pair.size());
      for (auto& [key, row] : by_pair) rows.push_back(std::move(row));
      write_jsonl_atomic(path, rows);
    }
  }

  if (stats.attempted > 0) {
    double rate = double(stats.failed) / double(stats.attempted);
    if (rate > options.failure_rate_cap) {
      throw StageError("judging failure rate " + std::to_string(rate) + " exceeds cap " +
                       std::to_string(options.failure_rate_cap));
    }
  }
  return stats;
}

nlohmann::json StatLine::to_json() const {
  nlohmann::json j{{"n", n}};
  if (n > 0) {
    j["mean"] = mean;
    j["std"] = stddev;
  } else {
    j["mean"] = nullptr;
    j["std"] = nullptr;
  }
  return j;
}

nlohmann::json ScoreRow::to_json() const {
  return {{"judge_id", judge_id},
          {"model_id", model_id},
          {"detail", detail.to_json()},
          {"complex", complex_task.to_json()},
          {"overall", overall.to_json()}};
}

namespace {

StatLine stat_line(const std::vector<int>& values) {
  StatLine line;
  line.n = int(values.size());
  if (values.empty()) return line;
  double sum = 0.0;
  for (int v : values) sum += v;
  line.mean = sum / double(values.size());
  if (values.size() == 1) {
    line.stddev = 0.0;
    return line;
  }
  double acc = 0.0;
  for (int v : values) {
    double d = double(v) - line.mean;
    acc += d * d;
  }
  line.stddev = std::sqrt(acc / double(values.size() - 1));
  return line;
}

}  // namespace

std::vector<ScoreRow> aggregate_scores(const std::vector<JudgeScore>& scores,
                                       const std::map<std::string, TaskType>& task_by_sample) {
  struct Group {
    std::vector<int> detail;
    std::vector<int> complex_task;
  };
  std::map<std::pair<std::string, std::string>, Group> groups;
  for (const auto& score : scores) {
    auto it = task_by_sample.find(score.sample_id);
    if (it == task_by_sample.end()) {
      throw StageError("score references sample with unknown task type: " + score.sample_id);
    }
    Group& g = groups[{score.judge_id, score.model_id}];
    if (it->second == TaskType::detail) {
      g.detail.push_back(score.score);
    } else {
      g.complex_task.push_back(score.score);
    }
  }
  std::vector<ScoreRow> rows;
  rows.reserve(groups.size());
  for (auto& [key, group] : groups) {
    ScoreRow row;
    row.judge_id = key.first;
    row.model_id = key.second;
    row.detail = stat_line(group.detail);
    row.complex_task = stat_line(group.complex_task);
    std::vector<int> pooled = group.detail;
    pooled.insert(pooled.end(), group.complex_task.begin(), group.complex_task.end());
    row.overall = stat_line(pooled);
    rows.push_back(std::move(row));
  }
  return rows;  // std::map iteration is already (judge_id, model_id) sorted
}

std::string format_mean_std(const StatLine& line) {
  if (line.n == 0) return "";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f \xC2\xB1 %.2f", line.mean, line.stddev);
  return buf;
}

std::string score_table_csv(const std::vector<ScoreRow>& rows) {
  std::string csv = "Judge,Model,Detail,Complex,Overall\n";
  std::vector<std::string> footnotes;
  for (const auto& row : rows) {
    csv += row.judge_id + "," + row.model_id + "," + format_mean_std(row.detail) + "," +
           format_mean_std(row.complex_task) + "," + format_mean_std(row.overall) + "\n";
    for (const auto& [name, line] :
         {std::pair<const char*, const StatLine&>{"detail", row.detail},
          {"complex", row.complex_task},
          {"overall", row.overall}}) {
      if (line.n == 0) {
        footnotes.push_back("# n=0: " + row.judge_id + "/" + row.model_id + " " + name);
      }
    }
  }
  for (const auto& note : footnotes) csv += note + "\n";
  return csv;
}

nlohmann::json score_table_json(const std::vector<ScoreRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& row : rows) out.push_back(row.to_json());
  return {{"rows", out}};
}

}  // namespace vqaforge
