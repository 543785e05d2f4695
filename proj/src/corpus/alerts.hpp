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

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "sim/scene.hpp"

namespace h2r::corpus {

inline constexpr int kPad = 0;
inline constexpr int kUnk = 1;
inline constexpr int kBos = 2;
inline constexpr int kEos = 3;
inline constexpr std::size_t kMaxTokens = 16;

struct TemplateTable {
  /// Templates per error type, in file order.
  std::array<std::vector<std::string>, sim::kNumErrorTypes> templates;
  /// category -> key -> words, e.g. lexicon["row"]["0"] == "top".
  std::map<std::string, std::map<std::string, std::string>> lexicon;
};

/// Parses the tab-separated table format of assets/templates.txt.
/// Throws MalformedData with the offending line number.
TemplateTable parse_template_table(std::string_view text);

/// The table compiled into the library from assets/templates.txt.
const TemplateTable& builtin_templates();

class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> tokens);

  /// Parses one token per line (assets/vocab.txt format).
  static Vocabulary from_lines(std::string_view text);

  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  /// kUnk for unknown words.
  int id(std::string_view word) const;
  /// FNV-1a of the newline-joined tokens, as 16 hex digits.
  std::string hash() const;
  std::string to_lines() const;

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, int, std::less<>> ids_;
};

/// Reserved tokens first, then every word of the templates and lexicons in
/// lexicographic order.
Vocabulary build_vocab(const TemplateTable& table);

/// The vocabulary shipped as assets/vocab.txt.
const Vocabulary& builtin_vocab();

/// Lowercases, drops punctuation, splits on whitespace, maps unknown words to
/// UNK, wraps in BOS/EOS and pads with PAD to 16 ids. Overlong input keeps BOS
/// and ends with EOS at position 15.
std::vector<int> tokenize(std::string_view text, const Vocabulary& vocab);

struct Alert {
  std::string text;
  std::vector<int> tokens;
  int trial_id = 0;
};

/// Core location phrase for a region: "top left" style (style 0) or
/// "row one column one" style (style 1).
std::string location_phrase(int region, int style, const TemplateTable& table);

/// Deterministic in (trial.id, seed). The text names the error type through
/// its template and the truth region through a location phrase.
Alert generate_alert(const sim::Trial& trial, std::uint64_t seed,
                     const TemplateTable& table = builtin_templates(),
                     const Vocabulary& vocab = builtin_vocab());

}  // namespace h2r::corpus
