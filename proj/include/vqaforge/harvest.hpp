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
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "vqaforge/gateway.hpp"
#include "vqaforge/util.hpp"

namespace vqaforge {

struct KeywordSet {
  enum class Source { llm_generated, user_supplied };
  std::vector<std::string> keywords;  // deduplicated case-insensitively, trimmed, non-empty
  Source source = Source::user_supplied;
};

// Parses one keyword per line, stripping list markers ("1.", "-", "*", ...).
// Throws ParseError when nothing survives ("empty parse").
KeywordSet parse_keyword_lines(const std::string& text, int target_count,
                               KeywordSet::Source source);

KeywordSet generate_keywords(const std::vector<std::string>& seed_topics, int target_count,
                             Gateway& gateway);

KeywordSet load_keywords_file(const std::filesystem::path& path);
void save_keywords_file(const KeywordSet& set, const std::filesystem::path& path);

struct PaperMeta {
  std::string paper_id;
  std::string title;
  std::optional<std::string> abstract_text;
  std::optional<std::string> pdf_url;

  nlohmann::json to_json() const;
  static PaperMeta from_json(const nlohmann::json& j);
};

// Field names are mapped through this block so Semantic-Scholar-style APIs
// with different schemas can be adapted without code changes.
struct SearchApiConfig {
  std::string base_url;
  std::string search_path = "/graph/v1/paper/search";
  std::string query_param = "query";
  std::string offset_param = "offset";
  std::string limit_param = "limit";
  int page_size = 100;
  std::string api_key_env;  // empty = keyless
  std::string api_key_header = "x-api-key";
  std::string data_field = "data";
  std::string id_field = "paperId";
  std::string title_field = "title";
  std::string abstract_field = "abstract";
  std::string pdf_url_field = "openAccessPdf.url";  // dotted path into each entry
  std::string next_field = "next";                  // next page offset/cursor; absent = done
  double rate_limit_rps = 10.0;
  RetryPolicy retry;

  static SearchApiConfig from_json(const nlohmann::json& j);
};

// Union of paginated results across all keywords, sorted by paper_id
// (stable, so duplicate ordering is deterministic). Duplicates preserved;
// dedupe_papers is a separate step.
std::vector<PaperMeta> search_papers(const KeywordSet& keywords, const SearchApiConfig& api);

// One meta per distinct paper_id, first occurrence wins, sorted by paper_id.
std::vector<PaperMeta> dedupe_papers(const std::vector<PaperMeta>& metas);

struct ManifestEntry {
  std::string paper_id;
  bool ok = false;
  std::string local_path;  // set when ok
  std::string reason;      // set when failed

  nlohmann::json to_json() const;
};

struct HarvestManifest {
  long attempted = 0;
  long succeeded = 0;
  long failed = 0;
  std::vector<ManifestEntry> entries;  // sorted by paper_id

  nlohmann::json to_json() const;
};

struct DownloadOptions {
  RetryPolicy retry;
  int workers = 4;
  double rate_limit_rps = 10.0;
  double timeout_s = 60.0;
};

// Attempts every meta once (plus retries); per-entry failures are data, not
// errors. Metas without a pdf_url fail with reason "no url". Files land as
// <paper_id>.pdf (sanitized) under dest_dir.
HarvestManifest download_pdfs(const std::vector<PaperMeta>& metas,
                              const std::filesystem::path& dest_dir,
                              const DownloadOptions& options);

}  // namespace vqaforge
