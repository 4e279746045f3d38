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
#include "vqaforge/qc.hpp"

#include <stdexcept>
#include <vector>

namespace vqaforge {

std::string to_string(QcVerdict v) {
  switch (v) {
    case QcVerdict::accept:
      return "accept";
    case QcVerdict::reject_blur:
      return "reject_blur";
    case QcVerdict::reject_dimensions:
      return "reject_dimensions";
  }
  return "reject_dimensions";
}

QcVerdict qc_verdict_from_string(const std::string& s) {
  if (s == "accept") return QcVerdict::accept;
  if (s == "reject_blur") return QcVerdict::reject_blur;
  if (s == "reject_dimensions") return QcVerdict::reject_dimensions;
  throw std::invalid_argument("unknown QC verdict: " + s);
}

nlohmann::json QcReport::to_json() const {
  nlohmann::json j{
      {"width", width},
      {"height", height},
      {"verdict", to_string(verdict)},
  };
  j["variance"] = variance ? nlohmann::json(*variance) : nlohmann::json(nullptr);
  if (!notes.empty()) j["notes"] = notes;
  return j;
}

double laplacian_variance(const GrayImage& img) {
  if (img.width < 3 || img.height < 3) {
    throw std::invalid_argument("laplacian_variance requires at least a 3x3 image");
  }
  const std::size_t n = std::size_t(img.width - 2) * std::size_t(img.height - 2);
  std::vector<double> response;
  response.reserve(n);
  for (int y = 1; y < img.height - 1; ++y) {
    for (int x = 1; x < img.width - 1; ++x) {
      response.push_back(img.at(x, y - 1) + img.at(x - 1, y) + img.at(x + 1, y) +
                         img.at(x, y + 1) - 4.0 * img.at(x, y));
    }
  }
  double mean = 0.0;
  for (double r : response) mean += r;
  mean /= double(n);
  double acc = 0.0;
  for (double r : response) {
    double d = r - mean;
    acc += d * d;
  }
  return acc / double(n);
}

QcVerdict qc_verdict(int width, int height, std::optional<double> variance,
                     const QcThresholds& t) {
  if (width < t.min_width || height < t.min_height) return QcVerdict::reject_dimensions;
  // No 3x3 interior means no blur measurement; only reachable with thresholds
  // below 3, and such an image cannot be assessed.
  if (!variance) return QcVerdict::reject_dimensions;
  if (*variance < t.min_variance) return QcVerdict::reject_blur;
  return QcVerdict::accept;
}

QcReport qc_check(const GrayImage& img, const QcThresholds& t) {
  QcReport report;
  report.width = img.width;
  report.height = img.height;
  if (img.width >= 3 && img.height >= 3) {
    report.variance = laplacian_variance(img);
  }
  report.verdict = qc_verdict(img.width, img.height, report.variance, t);
  return report;
}

}  // namespace vqaforge
