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
#include "vqaforge/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "vqaforge/errors.hpp"
#include "vqaforge/image.hpp"
#include "vqaforge/util.hpp"

namespace vqaforge {

namespace {

bool is_upper_or_digit(char c) {
  unsigned char u = static_cast<unsigned char>(c);
  return std::isupper(u) || std::isdigit(u);
}

// Strip markdown constructs that are not prose, returning text whose
// remaining content is safe to split into sentences. Paragraph breaks are
// preserved as '\n'.
std::string strip_markup(const std::string& markdown) {
  std::string out;
  bool in_code_fence = false;
  std::string paragraph;
  auto flush_paragraph = [&] {
    std::string p = trim(paragraph);
    if (!p.empty()) {
      out += p;
      out += '\n';
    }
    paragraph.clear();
  };

  std::string line;
  std::size_t pos = 0;
  while (pos <= markdown.size()) {
    std::size_t nl = markdown.find('\n', pos);
    if (nl == std::string::npos) {
      line = markdown.substr(pos);
      pos = markdown.size() + 1;
    } else {
      line = markdown.substr(pos, nl - pos);
      pos = nl + 1;
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string t = trim(line);
    if (t.rfind("```", 0) == 0) {
      in_code_fence = !in_code_fence;
      flush_paragraph();
      continue;
    }
    if (in_code_fence) continue;
    if (t.empty()) {
      flush_paragraph();
      continue;
    }
    if (t[0] == '#' || t[0] == '|') {
      flush_paragraph();
      continue;
    }
    // horizontal rules / setext underlines
    if (t.find_first_not_of("-=*_ ") == std::string::npos && t.size() >= 3) {
      flush_paragraph();
      continue;
    }
    if (!paragraph.empty()) paragraph += ' ';
    paragraph += t;
  }
  flush_paragraph();

  // drop image links entirely, unwrap ordinary links to their text
  std::string cleaned;
  cleaned.reserve(out.size());
  for (std::size_t i = 0; i < out.size();) {
    if (out[i] == '!' && i + 1 < out.size() && out[i + 1] == '[') {
      std::size_t close = out.find(']', i + 2);
      if (close != std::string::npos && close + 1 < out.size() && out[close + 1] == '(') {
        std::size_t paren = out.find(')', close + 2);
        if (paren != std::string::npos) {
          i = paren + 1;
          continue;
        }
      }
    }
    if (out[i] == '[') {
      std::size_t close = out.find(']', i + 1);
      if (close != std::string::npos && close + 1 < out.size() && out[close + 1] == '(') {
        std::size_t paren = out.find(')', close + 2);
        if (paren != std::string::npos) {
          cleaned += out.substr(i + 1, close - i - 1);
          i = paren + 1;
          continue;
        }
      }
    }
    cleaned.push_back(out[i]);
    ++i;
  }
  return cleaned;
}

// Token (letters and dots) immediately preceding position `dot`, lowercased.
std::string word_before(const std::string& s, std::size_t dot) {
  std::size_t end = dot;
  std::size_t begin = end;
  while (begin > 0) {
    unsigned char c = static_cast<unsigned char>(s[begin - 1]);
    if (std::isalpha(c) || c == '.') {
      --begin;
    } else {
      break;
    }
  }
  return to_lower(std::string_view(s).substr(begin, end - begin));
}

bool is_guarded_abbreviation(const std::string& s, std::size_t dot) {
  static const std::set<std::string> kGuards = {
      "fig", "figs", "tab", "tabs", "eq",  "eqs",  "sec", "secs", "ref", "refs",
      "no",  "al",   "e.g", "i.e",  "etc", "vs",   "cf",  "ca",   "approx",
      "dr",  "mr",   "mrs", "ms",   "st",  "jr",   "sr",  "inc",  "ltd", "cm"};
  std::string w = word_before(s, dot);
  if (w.empty()) return false;
  if (kGuards.count(w) > 0) return true;
  // single-letter initials: "J. Smith"
  if (w.size() == 1 && std::isalpha(static_cast<unsigned char>(w[0]))) return true;
  return false;
}

}  // namespace

std::vector<std::string> segment_sentences(const std::string& markdown) {
  std::string prose = strip_markup(markdown);
  std::vector<std::string> sentences;
  std::string cur;
  auto flush = [&] {
    std::string s = trim(cur);
    if (!s.empty()) sentences.push_back(std::move(s));
    cur.clear();
  };

  for (std::size_t i = 0; i < prose.size(); ++i) {
    char c = prose[i];
    if (c == '\n') {  // paragraph break always terminates a sentence
      flush();
      continue;
    }
    cur.push_back(c);
    if (c != '.' && c != '!' && c != '?') continue;

    // decimal numbers: "3.5 Gy"
    if (c == '.' && i > 0 && i + 1 < prose.size() &&
        std::isdigit(static_cast<unsigned char>(prose[i - 1])) &&
        std::isdigit(static_cast<unsigned char>(prose[i + 1]))) {
      continue;
    }
    if (c == '.' && is_guarded_abbreviation(prose, i)) continue;

    // boundary requires whitespace then an uppercase letter or digit
    std::size_t j = i + 1;
    while (j < prose.size() && (prose[j] == ' ' || prose[j] == '\t')) ++j;
    bool at_break = j < prose.size() && prose[j] == '\n';
    if (j == i + 1 && !at_break && j < prose.size()) continue;  // no whitespace after terminator
    if (j >= prose.size() || at_break || is_upper_or_digit(prose[j])) {
      flush();
      i = j - 1;
    }
  }
  flush();
  return sentences;
}

ArticleDoc make_article(std::string paper_id, std::string body) {
  ArticleDoc doc;
  doc.paper_id = std::move(paper_id);
  doc.sentences = segment_sentences(body);
  doc.body = std::move(body);
  return doc;
}

nlohmann::json FigureAsset::to_json() const {
  return {{"paper_id", paper_id},   {"figure_label", figure_label},
          {"image_path", image_path}, {"width", width},
          {"height", height},        {"caption", caption}};
}

FigureAsset FigureAsset::from_json(const nlohmann::json& j) {
  FigureAsset a;
  a.paper_id = j.at("paper_id").get<std::string>();
  a.figure_label = j.at("figure_label").get<std::string>();
  a.image_path = j.at("image_path").get<std::string>();
  a.width = j.at("width").get<int>();
  a.height = j.at("height").get<int>();
  a.caption = j.value("caption", "");
  return a;
}

FigureMetadataResult parse_figure_metadata(const std::filesystem::path& meta_file,
                                           const std::string& paper_id,
                                           const std::filesystem::path& images_root) {
  nlohmann::json doc = read_json(meta_file);
  if (!doc.is_array()) {
    throw ParseError("figure metadata must be a JSON array: " + meta_file.string());
  }
  FigureMetadataResult result;
  for (const auto& entry : doc) {
    if (!entry.is_object()) {
      ++result.skipped;
      continue;
    }
    FigureAsset asset;
    asset.paper_id = paper_id;
    if (entry.contains("label")) {
      asset.figure_label = entry.at("label").get<std::string>();
    } else if (entry.contains("figType") && entry.contains("name")) {
      // pdffigures-style: {"figType": "Figure", "name": "1", ...}
      asset.figure_label =
          entry.at("figType").get<std::string>() + " " + entry.at("name").get<std::string>();
    } else {
      ++result.skipped;
      continue;
    }
    if (entry.contains("image_path")) {
      asset.image_path = entry.at("image_path").get<std::string>();
    } else if (entry.contains("renderURL")) {
      asset.image_path = entry.at("renderURL").get<std::string>();
    }
    if (asset.image_path.empty()) {
      ++result.skipped;
      continue;
    }
    asset.caption = entry.value("caption", "");
    asset.width = entry.value("width", entry.value("imageWidth", 0));
    asset.height = entry.value("height", entry.value("imageHeight", 0));
    if (asset.width < 1 || asset.height < 1) {
      // dimensions not in the metadata; probe the image itself
      try {
        std::filesystem::path p = images_root.empty()
                                      ? std::filesystem::path(asset.image_path)
                                      : images_root / asset.image_path;
        RgbImage img = decode_image(p);
        asset.width = img.width;
        asset.height = img.height;
      } catch (const std::exception&) {
        ++result.skipped;
        continue;
      }
    }
    result.assets.push_back(std::move(asset));
  }
  return result;
}

std::optional<LabelKey> parse_figure_label(const std::string& label) {
  std::string lower = to_lower(label);
  LabelKey key;
  if (lower.rfind("tab", 0) == 0) {
    key.is_table = true;
  } else if (lower.rfind("fig", 0) == 0) {
    key.is_table = false;
  } else {
    return std::nullopt;
  }
  std::size_t i = 0;
  while (i < lower.size() && !std::isdigit(static_cast<unsigned char>(lower[i]))) ++i;
  if (i == lower.size()) return std::nullopt;
  int number = 0;
  while (i < lower.size() && std::isdigit(static_cast<unsigned char>(lower[i]))) {
    number = number * 10 + (lower[i] - '0');
    ++i;
  }
  key.number = number;
  return key;
}

bool sentence_mentions_label(const std::string& sentence, const LabelKey& key) {
  std::string s = to_lower(sentence);
  const std::string full = key.is_table ? "table" : "figure";
  const std::string abbr = key.is_table ? "tab" : "fig";

  for (std::size_t i = 0; i < s.size(); ++i) {
    // word boundary before the prefix
    if (i > 0 && std::isalnum(static_cast<unsigned char>(s[i - 1]))) continue;
    std::size_t j = 0;
    if (s.compare(i, full.size(), full) == 0) {
      j = i + full.size();
    } else if (s.compare(i, abbr.size(), abbr) == 0) {
      j = i + abbr.size();
      // "Tab N" (no dot) is not a listed surface form; figures allow "Fig N".
      bool has_dot = j < s.size() && s[j] == '.';
      if (has_dot) ++j;
      if (key.is_table && !has_dot) continue;
    } else {
      continue;
    }
    // the abbreviated match must not continue into another word ("figment")
    if (j < s.size() && std::isalpha(static_cast<unsigned char>(s[j]))) continue;
    std::size_t k = j;
    while (k < s.size() && (s[k] == ' ' || s[k] == '\t')) ++k;
    if (k >= s.size() || !std::isdigit(static_cast<unsigned char>(s[k]))) continue;
    int number = 0;
    while (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) {
      number = number * 10 + (s[k] - '0');
      ++k;
    }
    if (number == key.number) return true;
  }
  return false;
}

std::vector<std::string> mine_context(const ArticleDoc& doc, const std::string& label,
                                      const std::string& caption, int cap) {
  std::vector<std::string> out;
  auto key = parse_figure_label(label);
  if (!key || cap <= 0) return out;
  std::string caption_norm = normalize_ws(caption);
  std::set<std::string> seen;
  for (const auto& sentence : doc.sentences) {
    if (int(out.size()) >= cap) break;
    if (!sentence_mentions_label(sentence, *key)) continue;
    std::string norm = normalize_ws(sentence);
    if (!caption_norm.empty() && norm == caption_norm) continue;
    if (!seen.insert(norm).second) continue;
    out.push_back(sentence);
  }
  return out;
}

nlohmann::json FigureRecord::to_json() const {
  nlohmann::json j{{"asset", asset.to_json()}, {"context_sentences", context_sentences}};
  if (qc) j["qc"] = qc->to_json();
  return j;
}

FigureRecord FigureRecord::from_json(const nlohmann::json& j) {
  FigureRecord r;
  r.asset = FigureAsset::from_json(j.at("asset"));
  r.context_sentences = j.value("context_sentences", std::vector<std::string>{});
  if (j.contains("qc") && !j.at("qc").is_null()) {
    const auto& q = j.at("qc");
    QcReport report;
    if (q.contains("variance") && !q.at("variance").is_null()) {
      report.variance = q.at("variance").get<double>();
    }
    report.width = q.value("width", 0);
    report.height = q.value("height", 0);
    report.verdict = qc_verdict_from_string(q.at("verdict").get<std::string>());
    report.notes = q.value("notes", "");
    r.qc = report;
  }
  return r;
}

BuildRecordsResult build_records(const std::vector<FigureAsset>& assets,
                                 const std::map<std::string, ArticleDoc>& docs, int cap) {
  BuildRecordsResult result;
  result.records.reserve(assets.size());
  for (const auto& asset : assets) {
    FigureRecord record;
    record.asset = asset;
    auto it = docs.find(asset.paper_id);
    if (it == docs.end()) {
      ++result.warnings;
    } else {
      record.context_sentences = mine_context(it->second, asset.figure_label, asset.caption, cap);
    }
    if (asset.caption.empty()) ++result.warnings;
    result.records.push_back(std::move(record));
  }
  std::sort(result.records.begin(), result.records.end(),
            [](const FigureRecord& a, const FigureRecord& b) {
              return std::tie(a.asset.paper_id, a.asset.figure_label) <
                     std::tie(b.asset.paper_id, b.asset.figure_label);
            });
  return result;
}

}  // namespace vqaforge
