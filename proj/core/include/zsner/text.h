// Copyright 2026 The zsner Authors. All Rights Reserved.
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

#ifndef ZSNER_TEXT_H_
#define ZSNER_TEXT_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace zsner {

// UTF-8 helpers. All character offsets in this library count Unicode scalar
// values, never bytes.
std::u32string decode_utf8(std::string_view text);
std::string encode_utf8(std::u32string_view text);
std::string encode_utf8(char32_t c);
int32_t utf8_length(std::string_view text);

bool is_space(char32_t c);
bool is_punctuation(char32_t c);
bool is_upper(char32_t c);
bool is_digit(char32_t c);
char32_t to_lower(char32_t c);

std::string trim(std::string_view s);

// A word token with [start, end) offsets into the text it was cut from.
struct Word {
  std::string text;
  int32_t start = 0;
  int32_t end = 0;

  bool operator==(const Word&) const = default;
};

// Splits on whitespace and isolates every punctuation character as its own
// word. This is the word-level tokenizer shared by statistics, prompt
// factorization and the multi-class baseline.
class WordTokenizer {
 public:
  WordTokenizer() = default;
  explicit WordTokenizer(bool split_punctuation)
      : split_punctuation_(split_punctuation) {}

  std::vector<Word> tokenize(std::string_view text) const;
  std::vector<Word> tokenize(std::u32string_view text) const;

 private:
  bool split_punctuation_ = true;
};

}  // namespace zsner

#endif  // ZSNER_TEXT_H_
