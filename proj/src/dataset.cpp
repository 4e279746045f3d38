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
#include "vqaforge/dataset.hpp"

#include <algorithm>
#include <iostream>
#include <random>

#include "vqaforge/errors.hpp"
#include "vqaforge/text.hpp"

namespace vqaforge {

std::string to_string(TaskType t) { return t == TaskType::detail ? "detail" : "complex"; }

TaskType task_type_from_string(const std::string& s) {
  if (s == "detail") return TaskType::detail;
  if (s == "complex") return TaskType::complex;
  throw ParseError("unknown task type: " + s);
}

nlohmann::json InstructionSample::to_json() const {
  return {{"sample_id", sample_id},
          {"paper_id", paper_id},
          {"image_path", image_path},
          {"question", question},
          {"answer", answer},
          {"task_type", to_string(task_type)},
          {"provenance",
           {{"model_id", provenance.model_id}, {"prompt_hash", provenance.prompt_hash}}}};
}

InstructionSample InstructionSample::from_json(const nlohmann::json& j) {
  InstructionSample s;
  s.sample_id = j.at("sample_id").get<std::string>();
  s.paper_id = j.at("paper_id").get<std::string>();
  s.image_path = j.at("image_path").get<std::string>();
  s.question = j.at("question").get<std::string>();
  s.answer = j.at("answer").get<std::string>();
  s.task_type = task_type_from_string(j.at("task_type").get<std::string>());
  if (j.contains("provenance")) {
    s.provenance.model_id = j.at("provenance").value("model_id", "");
    s.provenance.prompt_hash = j.at("provenance").value("prompt_hash", "");
  }
  return s;
}

GenPrompts default_gen_prompts() {
  GenPrompts p;
  p.detail_system =
      "You write factual, self-contained descriptions of scientific figures. Use only the "
      "caption and context provided; do not invent content.";
  p.detail_user =
      "Figure: {{label}}\n"
      "Caption: {{caption}}\n"
      "Context:\n{{context}}\n\n"
      "Write a detailed description of this figure grounded in the caption and context.";
  p.complex_system =
      "You write one challenging reasoning question about a scientific figure, then answer it "
      "using only the caption and context provided. Reply exactly in the form:\n"
      "QUESTION: <the question>\nANSWER: <the answer>";
  p.complex_user =
      "Figure: {{label}}\n"
      "Caption: {{caption}}\n"
      "Context:\n{{context}}\n\n"
      "Produce one complex reasoning question and its answer in the required format.";
  return p;
}

GenPrompts load_gen_prompts(const std::filesystem::path& dir) {
  GenPrompts p = default_gen_prompts();
  auto load = [&](const char* name, std::string& slot) {
    std::filesystem::path f = dir / name;
    if (std::filesystem::exists(f)) slot = read_text_file(f);
  };
  load("detail_system.txt", p.detail_system);
  load("detail_user.txt", p.detail_user);
  load("complex_system.txt", p.complex_system);
  load("complex_user.txt", p.complex_user);
  return p;
}

std::string render_prompt(const std::string& prompt_template, const FigureRecord& record) {
  std::string context;
  if (record.context_sentences.empty()) {
    context = "(none)";
  } else {
    for (const auto& s : record.context_sentences) {
      context += "- ";
      context += s;
      context += '\n';
    }
    context.pop_back();
  }
  std::string out = replace_all(prompt_template, "{{label}}", record.asset.figure_label);
  out = replace_all(std::move(out), "{{caption}}", record.asset.caption);
  out = replace_all(std::move(out), "{{context}}", context);
  return out;
}

std::pair<std::string, std::string> parse_question_answer(const std::string& text) {
  std::string upper = to_lower(text);
  std::size_t q = upper.find("question:");
  if (q == std::string::npos) throw ParseError("no QUESTION: marker in generator output");
  std::size_t a = upper.find("answer:", q + 9);
  if (a == std::string::npos) throw ParseError("no ANSWER: marker in generator output");
  std::string question = trim(std::string_view(text).substr(q + 9, a - q - 9));
  std::string answer = trim(std::string_view(text).substr(a + 7));
  if (question.empty() || answer.empty()) {
    throw ParseError("empty question or answer in generator output");
  }
  return {question, answer};
}

namespace {

std::string make_sample_id(const FigureRecord& record, TaskType type) {
  return record.asset.paper_id + ":" + slugify(record.asset.figure_label) + ":" +
         to_string(type);
}

struct Generated {
  const FigureRecord* record;
  std::string text;
  Provenance provenance;
};

// Sequential generation: the gateway already bounds concurrency and the
// builder's output is order-normalized afterwards, so parallelism here only
// buys wall-clock time on live endpoints.
std::vector<Generated> generate_for_records(const std::vector<FigureRecord>& records,
                                            Gateway& gateway, const std::string& system_text,
                                            const std::string& user_template,
                                            const GenOptions& options, BuildStats& stats) {
  std::vector<Generated> out;
  for (const auto& record : records) {
    ++stats.attempted;
    std::string user_text = render_prompt(user_template, record);
    ChatRequest req;
    req.temperature = options.temperature;
    req.max_tokens = options.max_tokens;
    req.messages.push_back({"system", system_text, ""});
    req.messages.push_back({"user", user_text, ""});
    try {
      ChatResponse resp = gateway.complete(req);
      if (trim(resp.text).empty()) {
        ++stats.skipped;
        std::cerr << "[build-dataset] skipped (empty generation): "
                  << record.asset.paper_id << " / " << record.asset.figure_label << "\n";
        continue;
      }
      Generated g;
      g.record = &record;
      g.text = trim(resp.text);
      g.provenance.model_id = gateway.config().model_id;
      g.provenance.prompt_hash = sha256_hex(system_text + "\x1f" + user_text);
      out.push_back(std::move(g));
      ++stats.succeeded;
    } catch (const std::exception& e) {
      ++stats.skipped;
      std::cerr << "[build-dataset] skipped (" << e.what() << "): " << record.asset.paper_id
                << " / " << record.asset.figure_label << "\n";
    }
  }
  return out;
}

void enforce_failure_cap(const BuildStats& stats, double cap, const char* what) {
  if (stats.attempted == 0) return;
  double rate = double(stats.skipped) / double(stats.attempted);
  if (rate > cap) {
    throw StageError(std::string(what) + " generation failure rate " + std::to_string(rate) +
                     " exceeds cap " + std::to_string(cap));
  }
}

}  // namespace

std::vector<InstructionSample> build_detail_samples(const std::vector<FigureRecord>& records,
                                                    Gateway& gateway, const TemplateBank& bank,
                                                    const GenPrompts& prompts,
                                                    const GenOptions& options,
                                                    BuildStats* stats_out) {
  validate_template_bank(bank);
  BuildStats stats;
  std::vector<Generated> generated = generate_for_records(
      records, gateway, prompts.detail_system, prompts.detail_user, options, stats);
  enforce_failure_cap(stats, options.failure_rate_cap, "detail");

  std::vector<InstructionSample> samples;
  if (!generated.empty()) {
    std::vector<std::vector<std::string>> corpus;
    corpus.reserve(bank.templates.size() + generated.size());
    for (const auto& t : bank.templates) corpus.push_back(tokenize(t));
    for (const auto& g : generated) corpus.push_back(tokenize(g.text));
    TfidfModel model = fit_tfidf(corpus);

    for (const auto& g : generated) {
      TemplateMatch match = match_template(g.text, bank, model);
      if (match.zero_vector) {
        std::cerr << "[build-dataset] zero-vector match flagged for "
                  << g.record->asset.paper_id << " / " << g.record->asset.figure_label << "\n";
      }
      InstructionSample s;
      s.sample_id = make_sample_id(*g.record, TaskType::detail);
      s.paper_id = g.record->asset.paper_id;
      s.image_path = g.record->asset.image_path;
      s.question = bank.templates[std::size_t(match.index)];
      s.answer = g.text;
      s.task_type = TaskType::detail;
      s.provenance = g.provenance;
      samples.push_back(std::move(s));
    }
  }
  std::sort(samples.begin(), samples.end(),
            [](const InstructionSample& a, const InstructionSample& b) {
              return a.sample_id < b.sample_id;
            });
  if (stats_out) *stats_out = stats;
  return samples;
}

std::vector<InstructionSample> build_complex_samples(const std::vector<FigureRecord>& records,
                                                     Gateway& gateway, const GenPrompts& prompts,
                                                     const GenOptions& options,
                                                     BuildStats* stats_out) {
  BuildStats stats;
  std::vector<Generated> generated = generate_for_records(
      records, gateway, prompts.complex_system, prompts.complex_user, options, stats);

  std::vector<InstructionSample> samples;
  for (const auto& g : generated) {
    try {
      auto [question, answer] = parse_question_answer(g.text);
      InstructionSample s;
      s.sample_id = make_sample_id(*g.record, TaskType::complex);
      s.paper_id = g.record->asset.paper_id;
      s.image_path = g.record->asset.image_path;
      s.question = question;
      s.answer = answer;
      s.task_type = TaskType::complex;
      s.provenance = g.provenance;
      samples.push_back(std::move(s));
    } catch (const ParseError& e) {
      ++stats.skipped;
      --stats.succeeded;
      std::cerr << "[build-dataset] skipped (" << e.what() << "): " << g.record->asset.paper_id
                << " / " << g.record->asset.figure_label << "\n";
    }
  }
  enforce_failure_cap(stats, options.failure_rate_cap, "complex");
  std::sort(samples.begin(), samples.end(),
            [](const InstructionSample& a, const InstructionSample& b) {
              return a.sample_id < b.sample_id;
            });
  if (stats_out) *stats_out = stats;
  return samples;
}

DatasetSplit split_dataset(std::vector<InstructionSample> samples, double eval_fraction,
                           std::uint64_t seed) {
  if (samples.empty()) throw std::invalid_argument("split_dataset: no samples");
  if (!(eval_fraction > 0.0 && eval_fraction < 1.0)) {
    throw std::invalid_argument("eval_fraction must be in (0, 1)");
  }
  std::sort(samples.begin(), samples.end(),
            [](const InstructionSample& a, const InstructionSample& b) {
              return a.sample_id < b.sample_id;
            });

  const std::size_t n = samples.size();
  const std::size_t eval_count = std::size_t(round_half_up(eval_fraction * double(n)));

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  // Fisher-Yates with a multiply-shift bounded draw, identical on every
  // platform (std::shuffle's distribution is implementation-defined).
  for (std::size_t i = n - 1; i > 0; --i) {
    std::uint64_t r = rng();
    std::size_t j = std::size_t((static_cast<unsigned __int128>(r) * (i + 1)) >> 64);
    std::swap(order[i], order[j]);
  }

  DatasetSplit split;
  split.seed = seed;
  split.eval.reserve(eval_count);
  split.train.reserve(n - eval_count);
  for (std::size_t i = 0; i < n; ++i) {
    if (i < eval_count) {
      split.eval.push_back(samples[order[i]]);
    } else {
      split.train.push_back(samples[order[i]]);
    }
  }
  auto by_id = [](const InstructionSample& a, const InstructionSample& b) {
    return a.sample_id < b.sample_id;
  };
  std::sort(split.eval.begin(), split.eval.end(), by_id);
  std::sort(split.train.begin(), split.train.end(), by_id);
  return split;
}

}  // namespace vqaforge
