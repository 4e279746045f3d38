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
#include "vqaforge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "vqaforge/text.hpp"
#include "vqaforge/util.hpp"

namespace vqaforge {

nlohmann::json RougeScore::to_json() const {
  return {{"precision", precision}, {"recall", recall}, {"f1", f1}};
}

namespace {

double f1_of(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

std::map<std::vector<std::string>, long> ngram_counts(const std::vector<std::string>& tokens,
                                                      int n) {
  std::map<std::vector<std::string>, long> counts;
  if (int(tokens.size()) < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++counts[std::vector<std::string>(tokens.begin() + i, tokens.begin() + i + n)];
  }
  return counts;
}

}  // namespace

RougeScore rouge_n(const std::vector<std::string>& candidate,
                   const std::vector<std::string>& reference, int n) {
  if (n < 1) throw std::invalid_argument("rouge_n: n must be >= 1");
  auto cand = ngram_counts(candidate, n);
  auto ref = ngram_counts(reference, n);
  long cand_total = 0, ref_total = 0;
  for (const auto& [g, c] : cand) cand_total += c;
  for (const auto& [g, c] : ref) ref_total += c;
  if (cand_total == 0 || ref_total == 0) return {};
  long overlap = 0;
  for (const auto& [gram, count] : cand) {
    auto it = ref.find(gram);
    if (it != ref.end()) overlap += std::min(count, it->second);
  }
  RougeScore s;
  s.precision = double(overlap) / double(cand_total);
  s.recall = double(overlap) / double(ref_total);
  s.f1 = f1_of(s.precision, s.recall);
  return s;
}

RougeScore rouge_l(const std::vector<std::string>& candidate,
                   const std::vector<std::string>& reference) {
  const std::size_t m = candidate.size(), n = reference.size();
  if (m == 0 || n == 0) return {};
  // Row-rolling LCS table.
  std::vector<long> prev(n + 1, 0), cur(n + 1, 0);
  for (std::size_t i = 1; i <= m; ++i) {
    for (std::size_t j = 1; j <= n; ++j) {
      if (candidate[i - 1] == reference[j - 1]) {
        cur[j] = prev[j - 1] + 1;
      } else {
        cur[j] = std::max(prev[j], cur[j - 1]);
      }
    }
    std::swap(prev, cur);
  }
  long lcs = prev[n];
  RougeScore s;
  s.precision = double(lcs) / double(m);
  s.recall = double(lcs) / double(n);
  s.f1 = f1_of(s.precision, s.recall);
  return s;
}

std::vector<std::string> default_hedging_lexicon() {
  return {"appears", "seems", "likely", "possibly", "might", "may", "perhaps", "suggests"};
}

nlohmann::json HedgingReport::to_json() const {
  nlohmann::json terms = nlohmann::json::object();
  for (const auto& [term, count] : per_term) terms[term] = count;
  return {{"per_term", terms}, {"total", total}};
}

HedgingReport hedging_count(const std::vector<std::string>& texts,
                            const std::vector<std::string>& lexicon) {
  if (lexicon.empty()) throw std::invalid_argument("hedging_count: empty lexicon");
  HedgingReport report;
  std::map<std::string, long> zero;
  for (const auto& term : lexicon) zero[to_lower(term)] = 0;
  report.per_term = zero;
  report.per_answer.reserve(texts.size());
  for (const auto& text : texts) {
    std::map<std::string, long> counts = zero;
    for (const auto& token : tokenize(text)) {
      auto it = counts.find(token);
      if (it != counts.end()) ++it->second;
    }
    for (const auto& [term, count] : counts) {
      report.per_term[term] += count;
      report.total += count;
    }
    report.per_answer.push_back(std::move(counts));
  }
  return report;
}

double length_ratio(const std::string& candidate, const std::string& reference) {
  std::size_t ref_len = tokenize(reference).size();
  if (ref_len == 0) throw std::invalid_argument("length_ratio: reference has no tokens");
  return double(tokenize(candidate).size()) / double(ref_len);
}

nlohmann::json DistributionSummary::to_json() const {
  return {{"n", n},     {"min", min}, {"q1", q1},     {"median", median},
          {"q3", q3},   {"max", max}, {"mean", mean}};
}

DistributionSummary summarize_distribution(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("summarize_distribution: empty input");
  std::sort(values.begin(), values.end());
  auto quantile = [&](double p) {
    double h = p * double(values.size() - 1);
    std::size_t lo = std::size_t(std::floor(h));
    double frac = h - double(lo);
    if (lo + 1 >= values.size()) return values.back();
    return values[lo] + frac * (values[lo + 1] - values[lo]);
  };
  DistributionSummary s;
  s.n = int(values.size());
  s.min = values.front();
  s.q1 = quantile(0.25);
  s.median = quantile(0.5);
  s.q3 = quantile(0.75);
  s.max = values.back();
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / double(values.size());
  return s;
}

}  // namespace vqaforge
