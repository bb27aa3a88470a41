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

#include "zsner/text.h"

#include <algorithm>

#include "zsner/error.h"

namespace zsner {

std::u32string decode_utf8(std::string_view text) {
  std::u32string out;
  out.reserve(text.size());
  size_t i = 0;
  while (i < text.size()) {
    const auto lead = static_cast<unsigned char>(text[i]);
    char32_t cp = 0;
    int extra = 0;
    if (lead < 0x80) {
      cp = lead;
    } else if ((lead & 0xE0) == 0xC0) {
      cp = lead & 0x1F;
      extra = 1;
    } else if ((lead & 0xF0) == 0xE0) {
      cp = lead & 0x0F;
      extra = 2;
    } else if ((lead & 0xF8) == 0xF0) {
      cp = lead & 0x07;
      extra = 3;
    } else {
      throw DataError("invalid UTF-8 lead byte at byte " + std::to_string(i));
    }
    if (extra > 0 && i + extra >= text.size()) {
      throw DataError("truncated UTF-8 sequence at byte " + std::to_string(i));
    }
    for (int k = 1; k <= extra; ++k) {
      const auto cont = static_cast<unsigned char>(text[i + k]);
      if ((cont & 0xC0) != 0x80) {
        throw DataError("invalid UTF-8 continuation byte at byte " +
                        std::to_string(i + k));
      }
      cp = (cp << 6) | (cont & 0x3F);
    }
    static constexpr char32_t kMinForLength[] = {0, 0x80, 0x800, 0x10000};
    if (cp < kMinForLength[extra] || cp > 0x10FFFF ||
        (cp >= 0xD800 && cp <= 0xDFFF)) {
      throw DataError("invalid UTF-8 scalar value at byte " +
                      std::to_string(i));
    }
    out.push_back(cp);
    i += extra + 1;
  }
  return out;
}

std::string encode_utf8(char32_t c) {
  std::string out;
  if (c < 0x80) {
    out.push_back(static_cast<char>(c));
  } else if (c < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (c >> 6)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
  } else if (c < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (c >> 12)));
    out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (c >> 18)));
    out.push_back(static_cast<char>(0x80 | ((c >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
  }
  return out;
}

std::string encode_utf8(std::u32string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char32_t c : text) out += encode_utf8(c);
  return out;
}

int32_t utf8_length(std::string_view text) {
  return static_cast<int32_t>(decode_utf8(text).size());
}

bool is_space(char32_t c) {
  switch (c) {
    case U' ':
    case U'\t':
    case U'\n':
    case U'\r':
    case U'\v':
    case U'\f':
    case 0x00A0:
    case 0x1680:
    case 0x2028:
    case 0x2029:
    case 0x202F:
    case 0x205F:
    case 0x3000:
      return true;
    default:
      return c >= 0x2000 && c <= 0x200A;
  }
}

bool is_punctuation(char32_t c) {
  if ((c >= 33 && c <= 47) || (c >= 58 && c <= 64) || (c >= 91 && c <= 96) ||
      (c >= 123 && c <= 126)) {
    return true;
  }
  // Latin-1 punctuation, general punctuation block, CJK symbols.
  return (c >= 0x00A1 && c <= 0x00BF && c != 0x00AA && c != 0x00B5 &&
          c != 0x00BA) ||
         c == 0x00D7 || c == 0x00F7 || (c >= 0x2010 && c <= 0x2027) ||
         (c >= 0x2030 && c <= 0x205E) || (c >= 0x3001 && c <= 0x3003);
}

bool is_upper(char32_t c) {
  if (c >= U'A' && c <= U'Z') return true;
  // Latin-1 supplement and Greek capitals.
  return (c >= 0x00C0 && c <= 0x00DE && c != 0x00D7) ||
         (c >= 0x0391 && c <= 0x03A9);
}

bool is_digit(char32_t c) { return c >= U'0' && c <= U'9'; }

char32_t to_lower(char32_t c) {
  if (c >= U'A' && c <= U'Z') return c + 32;
  if ((c >= 0x00C0 && c <= 0x00DE && c != 0x00D7) ||
      (c >= 0x0391 && c <= 0x03A9 && c != 0x03A2)) {
    return c + 32;
  }
  return c;
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n\v\f");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n\v\f");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<Word> WordTokenizer::tokenize(std::string_view text) const {
  return tokenize(std::u32string_view(decode_utf8(text)));
}

std::vector<Word> WordTokenizer::tokenize(std::u32string_view text) const {
  std::vector<Word> words;
  const auto n = static_cast<int32_t>(text.size());
  int32_t i = 0;
  while (i < n) {
    if (is_space(text[i])) {
      ++i;
      continue;
    }
    if (split_punctuation_ && is_punctuation(text[i])) {
      words.push_back({encode_utf8(text[i]), i, i + 1});
      ++i;
      continue;
    }
    int32_t j = i;
    while (j < n && !is_space(text[j]) &&
           !(split_punctuation_ && is_punctuation(text[j]))) {
      ++j;
    }
    words.push_back({encode_utf8(text.substr(i, j - i)), i, j});
    i = j;
  }
  return words;
}

}  // namespace zsner
