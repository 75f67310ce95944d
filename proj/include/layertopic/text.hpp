#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

// UTF-8 tokenization: lowercased maximal runs of letters/digits, at least two
// code points long. Letters are ASCII, Latin-1/Latin Extended, Greek and
// Cyrillic; every other code point (punctuation, dashes, symbols, CJK) separates.
namespace layertopic::corpus {

namespace detail {

// Decodes one code point at `pos`, advancing it. Malformed bytes yield U+FFFD.
inline char32_t next_code_point(std::string_view s, std::size_t& pos) {
  const auto lead = static_cast<unsigned char>(s[pos]);
  auto cont = [&](std::size_t i) -> int {
    if (pos + i >= s.size()) return -1;
    const auto c = static_cast<unsigned char>(s[pos + i]);
    return (c & 0xC0u) == 0x80u ? (c & 0x3F) : -1;
  };
  if (lead < 0x80) {
    ++pos;
    return lead;
  }
  int len = 0;
  char32_t cp = 0;
  if ((lead & 0xE0u) == 0xC0u) {
    len = 2;
    cp = lead & 0x1Fu;
  } else if ((lead & 0xF0u) == 0xE0u) {
    len = 3;
    cp = lead & 0x0Fu;
  } else if ((lead & 0xF8u) == 0xF0u) {
    len = 4;
    cp = lead & 0x07u;
  } else {
    ++pos;
    return 0xFFFD;
  }
  for (int i = 1; i < len; ++i) {
    const int c = cont(static_cast<std::size_t>(i));
    if (c < 0) {
      ++pos;
      return 0xFFFD;
    }
    cp = (cp << 6) | static_cast<char32_t>(c);
  }
  pos += static_cast<std::size_t>(len);
  return cp;
}

inline void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

inline bool is_word_char(char32_t cp) {
  if (cp < 0x80) return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') || (cp >= '0' && cp <= '9');
  if (cp >= 0x00C0 && cp <= 0x024F) return cp != 0x00D7 && cp != 0x00F7;
  if (cp >= 0x0386 && cp <= 0x03FF) return cp != 0x0387;
  if (cp >= 0x0400 && cp <= 0x0481) return true;
  if (cp >= 0x048A && cp <= 0x052F) return true;
  return false;
}

inline char32_t to_lower(char32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 32;
  if (cp >= 0x00C0 && cp <= 0x00DE && cp != 0x00D7) return cp + 32;
  if (cp >= 0x0391 && cp <= 0x03AB && cp != 0x03A2) return cp + 32;
  if (cp >= 0x0410 && cp <= 0x042F) return cp + 32;
  if (cp >= 0x0400 && cp <= 0x040F) return cp + 80;
  return cp;
}

}  // namespace detail

inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  std::size_t current_len = 0;
  auto flush = [&] {
    if (current_len >= 2) tokens.push_back(current);
    current.clear();
    current_len = 0;
  };
  std::size_t pos = 0;
  while (pos < text.size()) {
    const char32_t cp = detail::next_code_point(text, pos);
    if (detail::is_word_char(cp)) {
      detail::append_utf8(current, detail::to_lower(cp));
      ++current_len;
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

/// Lowercases the whole string (same case mapping as the tokenizer).
inline std::string to_lower(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (pos < text.size()) detail::append_utf8(out, detail::to_lower(detail::next_code_point(text, pos)));
  return out;
}

}  // namespace layertopic::corpus
