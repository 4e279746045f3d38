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

#include <string>
#include <string_view>
#include <vector>

namespace vqaforge {

// Lowercase tokens split on any non-alphanumeric run; empties dropped.
// Shared by TF-IDF, ROUGE, hedging counts and length ratios so they all
// agree on what a token is.
std::vector<std::string> tokenize(std::string_view text);

}  // namespace vqaforge
