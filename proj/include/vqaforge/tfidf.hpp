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
#include <span>
#include <string>
#include <vector>

namespace vqaforge {

// Smoothed-idf weighting: idf(t) = ln((1 + N) / (1 + df(t))) + 1.
// Document vectors are raw term count * idf, then L2-normalized.
struct TfidfModel {
  std::map<std::string, int> vocabulary;  // term -> dense index, sorted terms
  std::vector<double> idf;                // indexed by vocabulary value
  int doc_count = 0;
};

TfidfModel fit_tfidf(const std::vector<std::vector<std::string>>& documents);

// Dense tf-idf vector over the model vocabulary, L2-normalized
// (all-zero vectors stay all-zero). Unknown terms are ignored.
std::vector<double> vectorize(const TfidfModel& model, const std::vector<std::string>& tokens);

// a.b / (|a||b|); 0 when either norm is 0. Vectors must share a vocabulary.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

struct TemplateBank {
  std::vector<std::string> templates;
};

// The 20 default detail-description template questions.
TemplateBank default_template_bank();
TemplateBank load_template_bank(const std::filesystem::path& path);
void validate_template_bank(const TemplateBank& bank);

struct TemplateMatch {
  int index = 0;
  double score = 0.0;
  bool zero_vector = false;  // source shares no vocabulary with the model
};

// Argmax cosine similarity between the source text and each template.
// Ties break to the lowest template index. A zero source vector yields
// (0, 0.0) with zero_vector set.
TemplateMatch match_template(const std::string& source_text, const TemplateBank& bank,
                             const TfidfModel& model);

}  // namespace vqaforge
