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

#include <optional>
#include <string>

#include "json.hpp"
#include "vqaforge/image.hpp"

namespace vqaforge {

struct QcThresholds {
  double min_variance = 100.0;  // reject strictly below
  int min_width = 100;          // accepted at exactly min
  int min_height = 100;
};

enum class QcVerdict { accept, reject_blur, reject_dimensions };

std::string to_string(QcVerdict v);
QcVerdict qc_verdict_from_string(const std::string& s);

struct QcReport {
  std::optional<double> variance;  // absent when no 3x3 interior exists
  int width = 0;
  int height = 0;
  QcVerdict verdict = QcVerdict::reject_dimensions;
  std::string notes;

  nlohmann::json to_json() const;
};

// Variance of the 4-neighbor Laplacian ([[0,1,0],[1,-4,1],[0,1,0]]) over the
// valid interior (no padding). Population variance: divide by the response
// count. Throws std::invalid_argument when the image is smaller than 3x3.
double laplacian_variance(const GrayImage& img);

// Verdict as a pure function of measurements: dimension thresholds first,
// then blur (variance strictly below min_variance rejects).
QcVerdict qc_verdict(int width, int height, std::optional<double> variance,
                     const QcThresholds& t);

QcReport qc_check(const GrayImage& img, const QcThresholds& t);

}  // namespace vqaforge
