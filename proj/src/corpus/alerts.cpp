// Copyright 2026 The h2rat Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "corpus/alerts.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <set>
#include <sstream>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "corpus/assets.hpp"

namespace h2r::corpus {
namespace {

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t end = text.find(sep, start);
    parts.emplace_back(text.substr(start, end - start));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return parts;
}

std::vector<std::string> words_of(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

const std::string& lex(const TemplateTable& table, const std::string& category,
                       const std::string& key) {
  const auto cat = table.lexicon.find(category);
  if (cat != table.lexicon.end()) {
    const auto it = cat->second.find(key);
    if (it != cat->second.end()) return it->second;
  }
  fail(ErrorCode::kMalformedData, "template table lacks lexicon " + category +
                                      "/" + key);
}

std::size_t lexicon_size(const TemplateTable& table, const std::string& category) {
  const auto cat = table.lexicon.find(category);
  return cat == table.lexicon.end() ? 0 : cat->second.size();
}

}  // namespace

TemplateTable parse_template_table(std::string_view text) {
  TemplateTable table;
  std::size_t line_no = 0;
  for (const std::string& raw : split(text, '\n')) {
    ++line_no;
    std::string line = raw;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split(line, '\t');
    if (fields[0] == "template" && fields.size() == 3) {
      const auto type = sim::parse_error_type(fields[1]);
      if (!type) {
        fail(ErrorCode::kMalformedData,
             "template table line " + std::to_string(line_no) +
                 ": unknown error type '" + fields[1] + "'");
      }
      table.templates[static_cast<std::size_t>(*type)].push_back(fields[2]);
    } else if (fields[0] == "lexicon" && fields.size() == 4) {
      table.lexicon[fields[1]][fields[2]] = fields[3];
    } else {
      fail(ErrorCode::kMalformedData,
           "template table line " + std::to_string(line_no) + ": '" + line + "'");
    }
  }
  return table;
}

const TemplateTable& builtin_templates() {
  static const TemplateTable table = parse_template_table(templates_asset());
  return table;
}

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!ids_.emplace(tokens_[i], static_cast<int>(i)).second) {
      fail(ErrorCode::kMalformedData, "duplicate vocabulary token '" + tokens_[i] + "'");
    }
  }
}

Vocabulary Vocabulary::from_lines(std::string_view text) {
  std::vector<std::string> tokens;
  for (std::string line : split(text, '\n')) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) tokens.push_back(line);
  }
  return Vocabulary(std::move(tokens));
}

int Vocabulary::id(std::string_view word) const {
  const auto it = ids_.find(word);
  return it == ids_.end() ? kUnk : it->second;
}

std::string Vocabulary::to_lines() const {
  std::string out;
  for (const std::string& t : tokens_) out += t + "\n";
  return out;
}

std::string Vocabulary::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(to_lines())));
  return buf;
}

Vocabulary build_vocab(const TemplateTable& table) {
  std::set<std::string> words;
  auto collect = [&](std::string_view text) {
    std::string plain;
    bool in_slot = false;
    for (char c : text) {
      if (c == '{') in_slot = true;
      if (!in_slot) plain += c;
      if (c == '}') {
        in_slot = false;
        plain += ' ';
      }
    }
    for (std::string& w : words_of(plain)) words.insert(std::move(w));
  };
  bool any = false;
  for (const auto& per_type : table.templates) {
    for (const std::string& t : per_type) {
      collect(t);
      any = true;
    }
  }
  for (const auto& [category, entries] : table.lexicon) {
    for (const auto& [key, text] : entries) {
      collect(text);
      any = true;
    }
  }
  // Fixed words of the location phrase patterns.
  if (any) words.insert({"the", "row", "column"});

  std::vector<std::string> tokens = {"<pad>", "<unk>", "<bos>", "<eos>"};
  tokens.insert(tokens.end(), words.begin(), words.end());
  return Vocabulary(std::move(tokens));
}

const Vocabulary& builtin_vocab() {
  static const Vocabulary vocab = Vocabulary::from_lines(vocab_asset());
  return vocab;
}

std::vector<int> tokenize(std::string_view text, const Vocabulary& vocab) {
  std::string clean;
  clean.reserve(text.size());
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      clean += static_cast<char>(std::tolower(c));
    } else if (std::isspace(c)) {
      clean += ' ';
    }
  }
  std::vector<int> ids = {kBos};
  for (const std::string& w : words_of(clean)) ids.push_back(vocab.id(w));
  ids.push_back(kEos);
  if (ids.size() > kMaxTokens) {
    ids.resize(kMaxTokens);
    ids.back() = kEos;
  }
  ids.resize(kMaxTokens, kPad);
  return ids;
}

std::string location_phrase(int region, int style, const TemplateTable& table) {
  const std::string row = std::to_string(region / sim::kRegionGrid);
  const std::string col = std::to_string(region % sim::kRegionGrid);
  if (style == 0) return lex(table, "row", row) + " " + lex(table, "col", col);
  return "row " + lex(table, "number", row) + " column " + lex(table, "number", col);
}

Alert generate_alert(const sim::Trial& trial, std::uint64_t seed,
                     const TemplateTable& table, const Vocabulary& vocab) {
  const auto& candidates = table.templates.at(static_cast<std::size_t>(trial.truth_error_type));
  if (candidates.empty()) {
    fail(ErrorCode::kMalformedData,
         "no templates for " +
             std::string(sim::to_string(static_cast<sim::ErrorType>(trial.truth_error_type))));
  }
  Rng rng(mix_seed(seed, static_cast<std::uint64_t>(trial.id)));
  const std::string& pattern = candidates[rng.below(candidates.size())];
  const std::string intj =
      lex(table, "intj", std::to_string(rng.below(lexicon_size(table, "intj"))));
  const std::string bad =
      lex(table, "bad", std::to_string(rng.below(lexicon_size(table, "bad"))));
  const std::string prep =
      lex(table, "prep", std::to_string(rng.below(lexicon_size(table, "prep"))));
  const int style = static_cast<int>(rng.below(2));

  const std::string core = location_phrase(trial.truth_region, style, table);
  const std::string loc = style == 0 ? prep + " the " + core : prep + " " + core;

  // The object the step was meant to act on.
  const sim::Cell target = trial.script.steps.at(trial.error.step_index).target_cell;
  std::string obj = "one";
  std::string thing = "one";
  for (const sim::ObjectInstance& o : trial.scene.objects) {
    if (o.cell != target) continue;
    const std::string kind(sim::to_string(o.kind));
    obj = lex(table, "noun", kind);
    thing = obj;
    if (o.color != sim::Color::kNone) {
      thing = lex(table, "color", std::string(sim::to_string(o.color))) + " " + obj;
    } else if (auto cat = table.lexicon.find("modifier"); cat != table.lexicon.end()) {
      if (auto m = cat->second.find(kind); m != cat->second.end()) {
        thing = m->second + " " + obj;
      }
    }
    break;
  }

  std::string text;
  for (std::size_t i = 0; i < pattern.size();) {
    if (pattern[i] == '{') {
      const std::size_t close = pattern.find('}', i);
      const std::string slot = pattern.substr(i + 1, close - i - 1);
      if (slot == "intj") text += intj;
      else if (slot == "bad") text += bad;
      else if (slot == "obj") text += obj;
      else if (slot == "thing") text += thing;
      else if (slot == "loc") text += loc;
      else fail(ErrorCode::kMalformedData, "unknown template slot {" + slot + "}");
      i = close + 1;
    } else {
      text += pattern[i++];
    }
  }
  return Alert{text, tokenize(text, vocab), trial.id};
}

}  // namespace h2r::corpus
