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

#include <map>
#include <string>
#include <vector>

#include "json.hpp"

namespace vqaforge {

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  nlohmann::json to_json() const;
};

// Clipped n-gram overlap. Empty n-gram set on either side yields all zeros.
RougeScore rouge_n(const std::vector<std::string>& candidate,
                   const std::vector<std::string>& reference, int n);

// Longest-common-subsequence variant: P = LCS/|candidate|, R = LCS/|reference|.
RougeScore rouge_l(const std::vector<std::string>& candidate,
                   const std::vector<std::string>& reference);

std::vector<std::string> default_hedging_lexicon();

struct HedgingReport {
  std::map<std::string, long> per_term;               // lexicon term -> corpus count
  long total = 0;                                     // sum over per_term
  std::vector<std::map<std::string, long>> per_answer;  // aligned with input texts

  nlohmann::json to_json() const;
};

// Case-insensitive whole-token matching over tokenize(text).
HedgingReport hedging_count(const std::vector<std::string>& texts,
                            const std::vector<std::string>& lexicon);

// |tokenize(candidate)| / |tokenize(reference)|. Throws std::invalid_argument
// when the reference tokenizes to nothing.
double length_ratio(const std::string& candidate, const std::string& reference);

struct DistributionSummary {
  int n = 0;
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0, mean = 0;

  nlohmann::json to_json() const;
};

// Quartiles by linear interpolation between order statistics (R-7).
// Throws std::invalid_argument on empty input.
DistributionSummary summarize_distribution(std::vector<double> values);

}  // namespace vqaforge
