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
#include "vqaforge/tfidf.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

#include "vqaforge/errors.hpp"
#include "vqaforge/text.hpp"
#include "vqaforge/util.hpp"

namespace vqaforge {

TfidfModel fit_tfidf(const std::vector<std::vector<std::string>>& documents) {
  TfidfModel model;
  model.doc_count = int(documents.size());
  std::map<std::string, int> df;
  for (const auto& doc : documents) {
    std::set<std::string> seen(doc.begin(), doc.end());
    for (const auto& t : seen) ++df[t];
  }
  if (df.empty()) throw std::invalid_argument("fit_tfidf: corpus has no terms");
  int idx = 0;
  model.idf.reserve(df.size());
  for (const auto& [term, count] : df) {
    model.vocabulary.emplace(term, idx++);
    model.idf.push_back(std::log((1.0 + model.doc_count) / (1.0 + count)) + 1.0);
  }
  return model;
}

std::vector<double> vectorize(const TfidfModel& model, const std::vector<std::string>& tokens) {
  std::vector<double> v(model.vocabulary.size(), 0.0);
  for (const auto& t : tokens) {
    auto it = model.vocabulary.find(t);
    if (it != model.vocabulary.end()) v[it->second] += 1.0;
  }
  double norm_sq = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] *= model.idf[i];
    norm_sq += v[i] * v[i];
  }
  if (norm_sq > 0.0) {
    double inv = 1.0 / std::sqrt(norm_sq);
    for (double& x : v) x *= inv;
  }
  return v;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("cosine_similarity: vectors from different vocabularies");
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

TemplateBank default_template_bank() {
  return TemplateBank{{
      "Describe the contents of this image in detail",
      "What is this image about?",
      "Analyze the figure in a comprehensive manner",
      "Provide a thorough description of what the figure shows",
      "Explain the main elements shown in this figure",
      "What does this figure illustrate?",
      "Summarize the information presented in this image",
      "Walk through the components of this figure",
      "What can be observed in this image?",
      "Give a detailed account of the figure's contents",
      "Describe what is depicted in this figure",
      "What are the key features of this image?",
      "Interpret the data shown in this figure",
      "Describe the layout and content of this image",
      "What details stand out in this figure?",
      "Offer a comprehensive explanation of this image",
      "What is being presented in this figure?",
      "Describe every element visible in this image",
      "What story does this figure tell?",
      "Break down the contents of this figure step by step",
  }};
}

TemplateBank load_template_bank(const std::filesystem::path& path) {
  TemplateBank bank;
  for (const auto& line : read_lines(path)) {
    std::string t = trim(line);
    if (!t.empty()) bank.templates.push_back(std::move(t));
  }
  validate_template_bank(bank);
  return bank;
}

void validate_template_bank(const TemplateBank& bank) {
  if (bank.templates.empty()) throw ConfigError("template bank is empty");
  std::set<std::string> seen;
  for (const auto& t : bank.templates) {
    if (!seen.insert(t).second) throw ConfigError("duplicate template question: " + t);
  }
}

TemplateMatch match_template(const std::string& source_text, const TemplateBank& bank,
                             const TfidfModel& model) {
  validate_template_bank(bank);
  std::vector<double> src = vectorize(model, tokenize(source_text));
  bool src_zero = true;
  for (double x : src) {
    if (x != 0.0) {
      src_zero = false;
      break;
    }
  }
  if (src_zero) return TemplateMatch{0, 0.0, true};

  TemplateMatch best{0, -1.0, false};
  for (int i = 0; i < int(bank.templates.size()); ++i) {
    std::vector<double> tv = vectorize(model, tokenize(bank.templates[i]));
    double score = cosine_similarity(src, tv);
    if (score > best.score) {
      best.index = i;
      best.score = score;
    }
  }
  if (best.score < 0.0) best.score = 0.0;
  return best;
}

}  // namespace vqaforge
