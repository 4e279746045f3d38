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
#include "vqaforge/harvest.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <mutex>
#include <set>
#include <thread>
#include <unordered_set>

#include "httplib.h"
#include "vqaforge/errors.hpp"

namespace vqaforge {

namespace {

// "1. foo" / "- foo" / "* foo" / "3) foo" -> "foo"
std::string strip_list_marker(const std::string& line) {
  std::size_t i = 0;
  const std::size_t n = line.size();
  while (i < n && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
  std::size_t start = i;
  while (i < n && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
  if (i > start && i < n && (line[i] == '.' || line[i] == ')')) {
    ++i;
  } else {
    i = start;
    if (i < n && (line[i] == '-' || line[i] == '*' || line[i] == '+')) {
      ++i;
    } else if (line.compare(i, 3, "\xE2\x80\xA2") == 0) {  // bullet
      i += 3;
    }
  }
  std::string rest = trim(std::string_view(line).substr(i));
  // strip one layer of surrounding quotes
  if (rest.size() >= 2 && ((rest.front() == '"' && rest.back() == '"') ||
                           (rest.front() == '\'' && rest.back() == '\''))) {
    rest = trim(std::string_view(rest).substr(1, rest.size() - 2));
  }
  return rest;
}

std::string url_encode(const std::string& s) {
  static const char* hexd = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out.push_back(char(c));
    } else {
      out.push_back('%');
      out.push_back(hexd[c >> 4]);
      out.push_back(hexd[c & 15]);
    }
  }
  return out;
}

// resolve "a.b.c" into nested objects; null when any hop is absent
nlohmann::json resolve_path(const nlohmann::json& obj, const std::string& dotted) {
  const nlohmann::json* cur = &obj;
  std::size_t pos = 0;
  while (pos <= dotted.size()) {
    std::size_t dot = dotted.find('.', pos);
    std::string key =
        dot == std::string::npos ? dotted.substr(pos) : dotted.substr(pos, dot - pos);
    if (!cur->is_object() || !cur->contains(key)) return nullptr;
    cur = &cur->at(key);
    if (dot == std::string::npos) break;
    pos = dot + 1;
  }
  return *cur;
}

struct UrlParts {
  std::string authority;  // scheme://host:port
  std::string path;
};

UrlParts split_url(const std::string& url) {
  UrlParts parts{url, ""};
  std::size_t scheme = url.find("://");
  if (scheme != std::string::npos) {
    std::size_t slash = url.find('/', scheme + 3);
    if (slash != std::string::npos) {
      parts.authority = url.substr(0, slash);
      parts.path = url.substr(slash);
    }
  }
  return parts;
}

// Shared GET with the module retry policy: 5xx/transport retried with
// exponential backoff, 4xx fails immediately.
httplib::Result get_with_retries(const std::string& url, const httplib::Headers& headers,
                                 const RetryPolicy& policy, double timeout_s,
                                 RateLimiter* limiter) {
  UrlParts parts = split_url(url);
  httplib::Client client(parts.authority);
  client.set_connection_timeout(std::chrono::duration<double>(timeout_s));
  client.set_read_timeout(std::chrono::duration<double>(timeout_s));
  client.set_follow_location(true);
  std::string last_error;
  int last_status = 0;
  for (int attempt = 0; attempt <= policy.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(
          std::chrono::milliseconds(long(policy.base_delay_ms) << (attempt - 1)));
    }
    if (limiter) limiter->wait();
    httplib::Result res = client.Get(parts.path.empty() ? "/" : parts.path, headers);
    if (!res) {
      last_error = httplib::to_string(res.error());
      last_status = 0;
      continue;
    }
    if (res->status >= 500) {
      last_status = res->status;
      last_error = "server error " + std::to_string(res->status);
      continue;
    }
    return res;  // 2xx..4xx returned to the caller
  }
  throw HttpError(last_status, "retries exhausted for " + url + ": " + last_error);
}

}  // namespace

KeywordSet parse_keyword_lines(const std::string& text, int target_count,
                               KeywordSet::Source source) {
  if (target_count < 1) throw std::invalid_argument("target_count must be >= 1");
  KeywordSet set;
  set.source = source;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t pos = 0;
  while (pos <= text.size() && int(set.keywords.size()) < target_count) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) {
      line = text.substr(pos);
      pos = text.size() + 1;
    } else {
      line = text.substr(pos, nl - pos);
      pos = nl + 1;
    }
    std::string keyword = strip_list_marker(line);
    if (keyword.empty()) continue;
    if (!seen.insert(to_lower(keyword)).second) continue;
    set.keywords.push_back(std::move(keyword));
  }
  if (set.keywords.empty()) {
    throw ParseError("empty parse: no keywords extracted from response");
  }
  return set;
}

KeywordSet generate_keywords(const std::vector<std::string>& seed_topics, int target_count,
                             Gateway& gateway) {
  if (target_count < 1) throw std::invalid_argument("target_count must be >= 1");
  std::string topics;
  for (const auto& t : seed_topics) {
    if (!topics.empty()) topics += "; ";
    topics += t;
  }
  ChatRequest req;
  req.temperature = 0.7;
  req.max_tokens = 2048;
  req.messages.push_back(
      {"system",
       "You generate literature-search keyword lists. Output one keyword search string per "
       "line with no commentary.",
       ""});
  req.messages.push_back({"user",
                          "Generate " + std::to_string(target_count) +
                              " keyword search strings for finding scientific articles about: " +
                              topics,
                          ""});
  ChatResponse resp = gateway.complete(req);
  return parse_keyword_lines(resp.text, target_count, KeywordSet::Source::llm_generated);
}

KeywordSet load_keywords_file(const std::filesystem::path& path) {
  return parse_keyword_lines(read_text_file(path), std::numeric_limits<int>::max(),
                             KeywordSet::Source::user_supplied);
}

void save_keywords_file(const KeywordSet& set, const std::filesystem::path& path) {
  std::string body;
  for (const auto& k : set.keywords) {
    body += k;
    body += '\n';
  }
  write_text_atomic(path, body);
}

nlohmann::json PaperMeta::to_json() const {
  nlohmann::json j{{"paper_id", paper_id}, {"title", title}};
  j["abstract"] = abstract_text ? nlohmann::json(*abstract_text) : nlohmann::json(nullptr);
  j["pdf_url"] = pdf_url ? nlohmann::json(*pdf_url) : nlohmann::json(nullptr);
  return j;
}

PaperMeta PaperMeta::from_json(const nlohmann::json& j) {
  PaperMeta m;
  m.paper_id = j.at("paper_id").get<std::string>();
  m.title = j.value("title", "");
  if (j.contains("abstract") && !j.at("abstract").is_null()) {
    m.abstract_text = j.at("abstract").get<std::string>();
  }
  if (j.contains("pdf_url") && !j.at("pdf_url").is_null()) {
    m.pdf_url = j.at("pdf_url").get<std::string>();
  }
  return m;
}

SearchApiConfig SearchApiConfig::from_json(const nlohmann::json& j) {
  SearchApiConfig c;
  c.base_url = j.value("base_url", "");
  c.search_path = j.value("search_path", c.search_path);
  c.query_param = j.value("query_param", c.query_param);
  c.offset_param = j.value("offset_param", c.offset_param);
  c.limit_param = j.value("limit_param", c.limit_param);
  c.page_size = j.value("page_size", c.page_size);
  c.api_key_env = j.value("api_key_env", c.api_key_env);
  c.api_key_header = j.value("api_key_header", c.api_key_header);
  c.data_field = j.value("data_field", c.data_field);
  c.id_field = j.value("id_field", c.id_field);
  c.title_field = j.value("title_field", c.title_field);
  c.abstract_field = j.value("abstract_field", c.abstract_field);
  c.pdf_url_field = j.value("pdf_url_field", c.pdf_url_field);
  c.next_field = j.value("next_field", c.next_field);
  c.rate_limit_rps = j.value("rate_limit_rps", c.rate_limit_rps);
  c.retry.max_retries = j.value("max_retries", c.retry.max_retries);
  c.retry.base_delay_ms = j.value("base_delay_ms", c.retry.base_delay_ms);
  return c;
}

std::vector<PaperMeta> search_papers(const KeywordSet& keywords, const SearchApiConfig& api) {
  if (api.base_url.empty()) throw ConfigError("search API base URL not set");
  if (keywords.keywords.empty()) throw ConfigError("no keywords to search");

  httplib::Headers headers;
  if (!api.api_key_env.empty()) {
    const char* key = std::getenv(api.api_key_env.c_str());
    if (key == nullptr) {
      throw ConfigError("API key environment variable not set: " + api.api_key_env);
    }
    headers.emplace(api.api_key_header, key);
  }

  RateLimiter limiter(api.rate_limit_rps);
  std::vector<PaperMeta> metas;
  for (const auto& keyword : keywords.keywords) {
    std::string offset = "0";
    for (int page = 0; page < 100000; ++page) {  // hard stop against cursor loops
      std::string url = api.base_url + api.search_path + "?" + api.query_param + "=" +
                        url_encode(keyword) + "&" + api.offset_param + "=" + url_encode(offset) +
                        "&" + api.limit_param + "=" + std::to_string(api.page_size);
      httplib::Result res = get_with_retries(url, headers, api.retry, 60.0, &limiter);
      if (res->status >= 400) {
        throw HttpError(res->status, "search failed with HTTP " + std::to_string(res->status) +
                                         " for keyword '" + keyword + "'");
      }
      nlohmann::json body = nlohmann::json::parse(res->body, nullptr, false);
      if (body.is_discarded() || !body.is_object() || !body.contains(api.data_field) ||
          !body[api.data_field].is_array()) {
        throw ParseError("malformed search response for keyword '" + keyword + "'");
      }
      const auto& data = body[api.data_field];
      if (data.empty()) break;
      for (const auto& entry : data) {
        nlohmann::json id = resolve_path(entry, api.id_field);
        if (!id.is_string() || id.get<std::string>().empty()) continue;
        PaperMeta meta;
        meta.paper_id = id.get<std::string>();
        nlohmann::json title = resolve_path(entry, api.title_field);
        if (title.is_string()) meta.title = title.get<std::string>();
        nlohmann::json abs = resolve_path(entry, api.abstract_field);
        if (abs.is_string()) meta.abstract_text = abs.get<std::string>();
        nlohmann::json url_field = resolve_path(entry, api.pdf_url_field);
        if (url_field.is_string() && !url_field.get<std::string>().empty()) {
          meta.pdf_url = url_field.get<std::string>();
        }
        metas.push_back(std::move(meta));
      }
      if (!body.contains(api.next_field) || body[api.next_field].is_null()) break;
      const auto& next = body[api.next_field];
      std::string next_offset =
          next.is_string() ? next.get<std::string>() : std::to_string(next.get<long>());
      if (next_offset == offset) break;  // server did not advance; avoid spinning
      offset = next_offset;
    }
  }
  std::stable_sort(metas.begin(), metas.end(),
                   [](const PaperMeta& a, const PaperMeta& b) { return a.paper_id < b.paper_id; });
  return metas;
}

std::vector<PaperMeta> dedupe_papers(const std::vector<PaperMeta>& metas) {
  std::unordered_set<std::string> seen;
  std::vector<PaperMeta> out;
  out.reserve(metas.size());
  for (const auto& meta : metas) {
    if (seen.insert(meta.paper_id).second) out.push_back(meta);
  }
  std::sort(out.begin(), out.end(),
            [](const PaperMeta& a, const PaperMeta& b) { return a.paper_id < b.paper_id; });
  return out;
}

nlohmann::json ManifestEntry::to_json() const {
  nlohmann::json j{{"paper_id", paper_id}, {"ok", ok}};
  if (ok) {
    j["local_path"] = local_path;
  } else {
    j["reason"] = reason;
  }
  return j;
}

nlohmann::json HarvestManifest::to_json() const {
  nlohmann::json entries_json = nlohmann::json::array();
  for (const auto& e : entries) entries_json.push_back(e.to_json());
  return {{"attempted", attempted},
          {"succeeded", succeeded},
          {"failed", failed},
          {"entries", std::move(entries_json)}};
}

HarvestManifest download_pdfs(const std::vector<PaperMeta>& metas,
                              const std::filesystem::path& dest_dir,
                              const DownloadOptions& options) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dest_dir, ec);
  {
    // fail fast if the destination is not writable
    fs::path probe = dest_dir / ".write_probe";
    std::ofstream out(probe);
    if (!out) throw ConfigError("destination directory not writable: " + dest_dir.string());
    out.close();
    fs::remove(probe, ec);
  }

  std::vector<ManifestEntry> entries(metas.size());
  std::atomic<std::size_t> next_index{0};
  RateLimiter limiter(options.rate_limit_rps);

  auto worker = [&] {
    for (;;) {
      std::size_t i = next_index.fetch_add(1);
      if (i >= metas.size()) return;
      const PaperMeta& meta = metas[i];
      ManifestEntry entry;
      entry.paper_id = meta.paper_id;
      if (!meta.pdf_url) {
        entry.ok = false;
        entry.reason = "no url";
        entries[i] = std::move(entry);
        continue;
      }
      try {
        httplib::Result res =
            get_with_retries(*meta.pdf_url, {}, options.retry, options.timeout_s, &limiter);
        if (res->status >= 400) {
          entry.ok = false;
          entry.reason = "http " + std::to_string(res->status);
        } else {
          fs::path out_path = dest_dir / (sanitize_filename(meta.paper_id) + ".pdf");
          write_text_atomic(out_path, res->body);
          entry.ok = true;
          entry.local_path = out_path.filename().string();
        }
      } catch (const std::exception& e) {
        entry.ok = false;
        entry.reason = e.what();
      }
      entries[i] = std::move(entry);
    }
  };

  int workers = std::max(1, options.workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  std::sort(entries.begin(), entries.end(),
            [](const ManifestEntry& a, const ManifestEntry& b) { return a.paper_id < b.paper_id; });

  HarvestManifest manifest;
  manifest.attempted = long(entries.size());
  for (auto& e : entries) {
    if (e.ok) {
      ++manifest.succeeded;
    } else {
      ++manifest.failed;
    }
  }
  manifest.entries = std::move(entries);
  return manifest;
}

}  // namespace vqaforge
