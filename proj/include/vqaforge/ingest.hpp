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
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "vqaforge/qc.hpp"

namespace vqaforge {

struct ArticleDoc {
  std::string paper_id;
  std::string body;
  std::vector<std::string> sentences;
};

// Deterministic segmentation of markdown prose. Headings, table rows, image
// links and fenced code are not prose; splits happen on . ! ? followed by
// whitespace and an uppercase letter or digit, with an abbreviation guard
// ("Fig.", "et al.", "e.g.", "vs.", ...).
std::vector<std::string> segment_sentences(const std::string& markdown);

ArticleDoc make_article(std::string paper_id, std::string body);

struct FigureAsset {
  std::string paper_id;
  std::string figure_label;  // e.g. "Figure 1", "Table 2"
  std::string image_path;    // stored verbatim; resolved against an images root at use
  int width = 0;
  int height = 0;
  std::string caption;  // may be empty (flagged as a warning at ingest)

  nlohmann::json to_json() const;
  static FigureAsset from_json(const nlohmann::json& j);
};

struct FigureMetadataResult {
  std::vector<FigureAsset> assets;
  int skipped = 0;  // entries missing an image path or unusable dimensions
};

// Reads a JSON array of figure entries. Accepts our adapter schema
// ({label|figType+name, caption, image_path|renderURL, width, height});
// dimensions absent from the file are probed from the image when possible.
FigureMetadataResult parse_figure_metadata(const std::filesystem::path& meta_file,
                                           const std::string& paper_id,
                                           const std::filesystem::path& images_root = {});

struct LabelKey {
  bool is_table = false;
  int number = 0;  // base number; compound labels ("Figure 1A") normalize here
};

std::optional<LabelKey> parse_figure_label(const std::string& label);

// Case-insensitive surface forms: Figure N / Fig. N / Fig N for figures,
// Table N / Tab. N for tables. N bounded so "Figure 1" never hits "Figure 12".
bool sentence_mentions_label(const std::string& sentence, const LabelKey& key);

// All sentences mentioning the label, document order, deduplicated, capped;
// a sentence equal to the caption (whitespace/case-insensitive) is excluded.
std::vector<std::string> mine_context(const ArticleDoc& doc, const std::string& label,
                                      const std::string& caption, int cap);

struct FigureRecord {
  FigureAsset asset;
  std::vector<std::string> context_sentences;
  std::optional<QcReport> qc;

  nlohmann::json to_json() const;
  static FigureRecord from_json(const nlohmann::json& j);
};

struct BuildRecordsResult {
  std::vector<FigureRecord> records;
  int warnings = 0;  // assets without a resolvable document, empty captions
};

// One record per asset, sorted by (paper_id, figure_label).
BuildRecordsResult build_records(const std::vector<FigureAsset>& assets,
                                 const std::map<std::string, ArticleDoc>& docs, int cap);

}  // namespace vqaforge
