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
#include <algorithm>
#include <random>

#include "doctest.h"
#include "support.hpp"
#include "vqaforge/errors.hpp"
#include "vqaforge/judge.hpp"

using namespace vqaforge;
using testsupport::MockOpenAiServer;
using testsupport::TempDir;

namespace {

InstructionSample sample_fixture(const std::string& id, TaskType type = TaskType::detail) {
  InstructionSample s;
  s.sample_id = id;
  s.paper_id = "p1";
  s.image_path = "img.png";
  s.question = "What trend is shown?";
  s.answer = "Counts decrease over time.";
  s.task_type = type;
  return s;
}

ModelAnswer answer_fixture(const std::string& id, const std::string& model) {
  ModelAnswer a;
  a.sample_id = id;
  a.model_id = model;
  a.text = "The counts go down steadily.";
  return a;
}

FigureRecord record_fixture() {
  FigureRecord r;
  r.asset = {"p1", "Figure 1", "img.png", 128, 128, "Counts versus time."};
  r.context_sentences = {"Figure 1 shows declining counts.", "The decline is monotonic."};
  return r;
}

}  // namespace

TEST_CASE("parse_score formats") {
  CHECK(parse_score("Score: 7 - mostly accurate") == 7);
  CHECK(parse_score("score:10") == 10);
  CHECK(parse_score("I'd rate this 10/10. Score: 10") == 10);
  CHECK(parse_score("Rating first mentioned as 3, then revised.") == 3);
  CHECK(parse_score("10/10, no further notes") == 10);  // standalone fallback, longest match
  CHECK(parse_score("Score: 15 is out of range, actual Score: 9") == 9);
  CHECK_THROWS_AS(parse_score("The answer is excellent."), ParseError);
  CHECK_THROWS_AS(parse_score("Score: 15"), ParseError);  // never clamped
  CHECK_THROWS_AS(parse_score(""), ParseError);
}

TEST_CASE("judge prompt contains the five blocks in fixed order") {
  InstructionSample sample = sample_fixture("p1:figure-1:detail");
  ModelAnswer answer = answer_fixture("p1:figure-1:detail", "m-a");
  FigureRecord record = record_fixture();
  JudgePrompt prompt =
      build_judge_prompt(sample, answer, &record, default_judge_system_prompt());

  const std::string& u = prompt.user_text;
  std::size_t q = u.find("[Question]");
  std::size_t ref = u.find("[Reference Answer]");
  std::size_t cap = u.find("[Figure Caption]");
  std::size_t ctx = u.find("[Figure Context]");
  std::size_t cand = u.find("[Candidate Answer]");
  REQUIRE(q != std::string::npos);
  REQUIRE(ref != std::string::npos);
  REQUIRE(cap != std::string::npos);
  REQUIRE(ctx != std::string::npos);
  REQUIRE(cand != std::string::npos);
  CHECK(q < ref);
  CHECK(ref < cap);
  CHECK(cap < ctx);
  CHECK(ctx < cand);
  CHECK(!prompt.missing_record);
  CHECK(u.find("Counts versus time.") != std::string::npos);
  CHECK(u.find("The counts go down steadily.") != std::string::npos);

  // determinism
  JudgePrompt again =
      build_judge_prompt(sample, answer, &record, default_judge_system_prompt());
  CHECK(again.user_text == prompt.user_text);
  CHECK(again.system_text == prompt.system_text);
}

TEST_CASE("judge prompt omits empty context but keeps the caption") {
  InstructionSample sample = sample_fixture("p1:figure-1:detail");
  ModelAnswer answer = answer_fixture("p1:figure-1:detail", "m-a");
  FigureRecord record = record_fixture();
  record.context_sentences.clear();
  JudgePrompt prompt =
      build_judge_prompt(sample, answer, &record, default_judge_system_prompt());
  CHECK(prompt.user_text.find("[Figure Context]") == std::string::npos);
  CHECK(prompt.user_text.find("[Figure Caption]") != std::string::npos);
}

TEST_CASE("judge prompt without a record is flagged") {
  InstructionSample sample = sample_fixture("p1:figure-1:detail");
  ModelAnswer answer = answer_fixture("p1:figure-1:detail", "m-a");
  JudgePrompt prompt =
      build_judge_prompt(sample, answer, nullptr, default_judge_system_prompt());
  CHECK(prompt.missing_record);
  CHECK(prompt.user_text.find("[Figure Caption]") == std::string::npos);
  CHECK(prompt.user_text.find("[Reference Answer]") != std::string::npos);
}

TEST_CASE("judge prompt rubric validation") {
  CHECK_THROWS_AS(
      [] {
        TempDir tmp;
        write_text_atomic(tmp.path() / "judge.txt", "Rate relevance and accuracy. Score: <n>");
        return load_judge_system_prompt(tmp.path() / "judge.txt");  // helpfulness missing
      }(),
      ConfigError);
}

TEST_CASE("sample/answer id mismatch is rejected") {
  InstructionSample sample = sample_fixture("a");
  ModelAnswer answer = answer_fixture("b", "m");
  CHECK_THROWS_AS(build_judge_prompt(sample, answer, nullptr, default_judge_system_prompt()),
                  std::invalid_argument);
}

TEST_CASE("judge_answers scores every (answer, judge) pair with checkpointing") {
  TempDir tmp;
  std::map<std::string, InstructionSample> samples;
  std::map<std::string, FigureRecord> records;
  std::vector<ModelAnswer> answers;
  for (int i = 0; i < 10; ++i) {
    std::string id = "p1:figure-" + std::to_string(i) + ":detail";
    samples.emplace(id, sample_fixture(id));
    records.emplace(id, record_fixture());
    answers.push_back(answer_fixture(id, i % 2 == 0 ? "m-a" : "m-b"));
  }

  MockOpenAiServer ja, jb;
  ja.reply = [](const nlohmann::json&, int) { return "Score: 6\nAdequate answer."; };
  jb.reply = [](const nlohmann::json&, int) { return "Score: 8\nGood answer."; };
  EndpointConfig ca, cb;
  ca.base_url = ja.url();
  ca.model_id = "judge-a";
  ca.id = "judge-a";
  cb.base_url = jb.url();
  cb.model_id = "judge-b";
  cb.id = "judge-b";
  Gateway ga(ca, GatewayMode::live), gb(cb, GatewayMode::live);

  JudgeOptions options;
  JudgeRunStats stats = judge_answers(answers, samples, records, {&ga, &gb},
                                      default_judge_system_prompt(), options, tmp.path());
  CHECK(stats.attempted == 20);
  CHECK(stats.succeeded == 20);

  JsonlFile scores_a = read_jsonl(scores_path(tmp.path(), "judge-a"));
  CHECK(scores_a.rows.size() == 10);
  for (const auto& row : scores_a.rows) CHECK(row["score"].get<int>() == 6);

  // rerun: nothing pending
  Gateway ga2(ca, GatewayMode::live), gb2(cb, GatewayMode::live);
  JudgeRunStats stats2 = judge_answers(answers, samples, records, {&ga2, &gb2},
                                       default_judge_system_prompt(), options, tmp.path());
  CHECK(stats2.attempted == 0);
}

TEST_CASE("garbage judge output triggers exactly one re-prompt") {
  TempDir tmp;
  std::map<std::string, InstructionSample> samples;
  std::map<std::string, FigureRecord> records;
  std::string id = "p1:figure-1:detail";
  samples.emplace(id, sample_fixture(id));
  std::vector<ModelAnswer> answers{answer_fixture(id, "m-a")};

  MockOpenAiServer judge;
  judge.reply = [](const nlohmann::json&, int call) {
    return call == 0 ? "unintelligible grading mumble" : "Score: 5\nSecond try.";
  };
  EndpointConfig cfg;
  cfg.base_url = judge.url();
  cfg.model_id = "judge-a";
  cfg.id = "judge-a";
  Gateway gw(cfg, GatewayMode::live);
  JudgeRunStats stats = judge_answers(answers, samples, records, {&gw},
                                      default_judge_system_prompt(), JudgeOptions{}, tmp.path());
  CHECK(stats.succeeded == 1);
  CHECK(stats.reprompted == 1);
  JsonlFile scores = read_jsonl(scores_path(tmp.path(), "judge-a"));
  REQUIRE(scores.rows.size() == 1);
  CHECK(scores.rows[0]["score"].get<int>() == 5);
}

TEST_CASE("aggregation: hand-checked pooled example") {
  std::map<std::string, TaskType> tasks;
  std::vector<JudgeScore> scores;
  auto add = [&](const std::string& id, TaskType t, int value) {
    tasks[id] = t;
    JudgeScore s;
    s.sample_id = id;
    s.model_id = "m";
    s.judge_id = "j";
    s.score = value;
    scores.push_back(s);
  };
  add("d1", TaskType::detail, 2);
  add("d2", TaskType::detail, 4);
  add("d3", TaskType::detail, 6);
  add("c1", TaskType::complex, 8);
  add("c2", TaskType::complex, 10);

  auto rows = aggregate_scores(scores, tasks);
  REQUIRE(rows.size() == 1);
  const ScoreRow& row = rows[0];
  CHECK(format_mean_std(row.detail) == "4.00 \xC2\xB1 2.00");
  CHECK(format_mean_std(row.complex_task) == "9.00 \xC2\xB1 1.41");
  CHECK(format_mean_std(row.overall) == "6.00 \xC2\xB1 3.16");
  CHECK(row.overall.n == row.detail.n + row.complex_task.n);

  // permutation invariance
  std::reverse(scores.begin(), scores.end());
  auto rows2 = aggregate_scores(scores, tasks);
  CHECK(format_mean_std(rows2[0].overall) == "6.00 \xC2\xB1 3.16");
}

TEST_CASE("aggregation degenerate cases") {
  std::map<std::string, TaskType> tasks{{"only", TaskType::detail}};
  JudgeScore s;
  s.sample_id = "only";
  s.model_id = "m";
  s.judge_id = "j";
  s.score = 7;
  auto rows = aggregate_scores({s}, tasks);
  REQUIRE(rows.size() == 1);
  CHECK(format_mean_std(rows[0].detail) == "7.00 \xC2\xB1 0.00");
  CHECK(rows[0].complex_task.n == 0);
  CHECK(format_mean_std(rows[0].complex_task) == "");

  CHECK_THROWS_AS(aggregate_scores({s}, {}), StageError);  // unknown sample
}

TEST_CASE("pooled overall matches the published-table shape with unequal counts") {
  // Integer multisets whose group stats format to the Table-1-style strings.
  std::map<std::string, TaskType> tasks;
  std::vector<JudgeScore> scores;
  int counter = 0;
  auto add_many = [&](TaskType type, int value, int count) {
    for (int i = 0; i < count; ++i) {
      std::string id = "s" + std::to_string(counter++);
      tasks[id] = type;
      JudgeScore s;
      s.sample_id = id;
      s.model_id = "base-vlm";
      s.judge_id = "judge-x";
      s.score = value;
      scores.push_back(s);
    }
  };
  // detail: n=5050, mean 1.74, sample std -> 0.79
  add_many(TaskType::detail, 0, 350);
  add_many(TaskType::detail, 1, 1283);
  add_many(TaskType::detail, 2, 2807);
  add_many(TaskType::detail, 3, 550);
  add_many(TaskType::detail, 4, 60);
  // complex: n=4300, mean 5.48, sample std -> 2.37
  add_many(TaskType::complex, 1, 129);
  add_many(TaskType::complex, 2, 379);
  add_many(TaskType::complex, 3, 574);
  add_many(TaskType::complex, 4, 600);
  add_many(TaskType::complex, 5, 284);
  add_many(TaskType::complex, 6, 794);
  add_many(TaskType::complex, 7, 635);
  add_many(TaskType::complex, 8, 416);
  add_many(TaskType::complex, 9, 292);
  add_many(TaskType::complex, 10, 197);

  auto rows = aggregate_scores(scores, tasks);
  REQUIRE(rows.size() == 1);
  CHECK(format_mean_std(rows[0].detail) == "1.74 \xC2\xB1 0.79");
  CHECK(format_mean_std(rows[0].complex_task) == "5.48 \xC2\xB1 2.37");
  CHECK(format_mean_std(rows[0].overall) == "3.46 \xC2\xB1 2.53");
  // the overall mean is NOT the mean of the two category means
  CHECK(rows[0].overall.mean != doctest::Approx((1.74 + 5.48) / 2).epsilon(1e-3));
}

TEST_CASE("pooled overall mean lies between category means") {
  std::mt19937 rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    std::map<std::string, TaskType> tasks;
    std::vector<JudgeScore> scores;
    int n_detail = 1 + int(rng() % 20);
    int n_complex = 1 + int(rng() % 20);
    for (int i = 0; i < n_detail + n_complex; ++i) {
      std::string id = "s" + std::to_string(i);
      tasks[id] = i < n_detail ? TaskType::detail : TaskType::complex;
      JudgeScore s;
      s.sample_id = id;
      s.model_id = "m";
      s.judge_id = "j";
      s.score = int(rng() % 11);
      scores.push_back(s);
    }
    auto rows = aggregate_scores(scores, tasks);
    const ScoreRow& row = rows[0];
    double lo = std::min(row.detail.mean, row.complex_task.mean);
    double hi = std::max(row.detail.mean, row.complex_task.mean);
    CHECK(row.overall.mean >= lo - 1e-12);
    CHECK(row.overall.mean <= hi + 1e-12);
    CHECK(row.overall.n == row.detail.n + row.complex_task.n);
  }
}

TEST_CASE("score table CSV shape") {
  std::map<std::string, TaskType> tasks;
  std::vector<JudgeScore> scores;
  tasks["a"] = TaskType::detail;
  JudgeScore s;
  s.sample_id = "a";
  s.model_id = "m";
  s.judge_id = "j";
  s.score = 4;
  scores.push_back(s);
  auto rows = aggregate_scores(scores, tasks);
  std::string csv = score_table_csv(rows);
  CHECK(csv.find("Judge,Model,Detail,Complex,Overall\n") == 0);
  CHECK(csv.find("j,m,4.00 \xC2\xB1 0.00,,4.00 \xC2\xB1 0.00") != std::string::npos);
  CHECK(csv.find("# n=0: j/m complex") != std::string::npos);
}
