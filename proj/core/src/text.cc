#include "menumt/text.h"

#include <algorithm>

#include "menumt/error.h"

namespace menumt {
namespace text {

namespace {

constexpr char32_t kReplacement = 0xFFFD;

char32_t lower_cp(char32_t c) {
  if (c >= U'A' && c <= U'Z') return c + 32;
  if (c < 0x80) return c;
  // Latin-1 supplement: À..Þ except ×.
  if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 32;
  // Latin Extended-A: pairs alternate upper/lower.
  if ((c >= 0x100 && c <= 0x137) || (c >= 0x14A && c <= 0x177)) {
    return (c % 2 == 0) ? c + 1 : c;
  }
  if ((c >= 0x139 && c <= 0x148) || (c >= 0x179 && c <= 0x17E)) {
    return (c % 2 == 1) ? c + 1 : c;
  }
  if (c == 0x178) return 0xFF;
  // Greek capitals (no final sigma slot at 0x3A2).
  if (c >= 0x391 && c <= 0x3A9 && c != 0x3A2) return c + 32;
  // Cyrillic.
  if (c >= 0x400 && c <= 0x40F) return c + 80;
  if (c >= 0x410 && c <= 0x42F) return c + 32;
  return c;
}

bool is_punct(char32_t c) {
  if (c < 0x80) {
    return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) ||
           (c >= 0x5B && c <= 0x60) || (c >= 0x7B && c <= 0x7E);
  }
  switch (c) {
    case 0xA1:    // ¡
    case 0xAB:    // «
    case 0xB7:    // ·
    case 0xBB:    // »
    case 0xBF:    // ¿
    case 0x2013:  // en dash
    case 0x2014:  // em dash
    case 0x2018:
    case 0x2019:
    case 0x201C:
    case 0x201D:
    case 0x2026:  // ellipsis
      return true;
    default:
      return false;
  }
}

}  // namespace

char32_t decode_utf8(std::string_view s, std::size_t &pos) {
  const auto b0 = static_cast<unsigned char>(s[pos]);
  if (b0 < 0x80) {
    ++pos;
    return b0;
  }
  int len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    ++pos;
    return kReplacement;
  }
  if (pos + len > s.size()) {
    ++pos;
    return kReplacement;
  }
  for (int i = 1; i < len; ++i) {
    const auto b = static_cast<unsigned char>(s[pos + i]);
    if ((b & 0xC0) != 0x80) {
      ++pos;
      return kReplacement;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  // Reject overlong forms, surrogates and out-of-range values.
  static constexpr char32_t kMin[] = {0, 0, 0x80, 0x800, 0x10000};
  if (cp < kMin[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
    ++pos;
    return kReplacement;
  }
  pos += len;
  return cp;
}

bool is_valid_utf8(std::string_view s) {
  std::size_t pos = 0;
  while (pos < s.size()) {
    const std::size_t start = pos;
    const char32_t cp = decode_utf8(s, pos);
    // A literal U+FFFD is three bytes; a decoding failure advances one.
    if (cp == kReplacement && pos - start == 1) return false;
  }
  return true;
}

void append_utf8(std::string &out, char32_t cp) {
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

bool is_space(char32_t c) {
  return (c >= 0x09 && c <= 0x0D) || c == 0x20 || c == 0x85 || c == 0xA0 ||
         c == 0x1680 || (c >= 0x2000 && c <= 0x200A) || c == 0x2028 ||
         c == 0x2029 || c == 0x202F || c == 0x205F || c == 0x3000;
}

std::string to_lower(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  std::size_t pos = 0;
  while (pos < s.size()) append_utf8(out, lower_cp(decode_utf8(s, pos)));
  return out;
}

std::vector<std::string_view> split_whitespace(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  std::size_t start = std::string_view::npos;
  while (pos < s.size()) {
    const std::size_t here = pos;
    const char32_t cp = decode_utf8(s, pos);
    if (is_space(cp)) {
      if (start != std::string_view::npos) {
        out.push_back(s.substr(start, here - start));
        start = std::string_view::npos;
      }
    } else if (start == std::string_view::npos) {
      start = here;
    }
  }
  if (start != std::string_view::npos) out.push_back(s.substr(start));
  return out;
}

std::string_view strip_punctuation(std::string_view s) {
  // Leading side.
  std::size_t begin = 0;
  while (begin < s.size()) {
    std::size_t next = begin;
    if (!is_punct(decode_utf8(s, next))) break;
    begin = next;
  }
  // Trailing side: walk back to the start byte of each code point.
  std::size_t end = s.size();
  while (end > begin) {
    std::size_t start = end - 1;
    while (start > begin && (static_cast<unsigned char>(s[start]) & 0xC0) == 0x80) {
      --start;
    }
    std::size_t probe = start;
    if (!is_punct(decode_utf8(s, probe))) break;
    end = start;
  }
  return s.substr(begin, end - begin);
}

std::string_view trim(std::string_view s) {
  const auto words = split_whitespace(s);
  if (words.empty()) return {};
  const auto *first = words.front().data();
  const auto *last = words.back().data() + words.back().size();
  return {first, static_cast<std::size_t>(last - first)};
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t at = s.find(sep, start);
    if (at == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, at - start));
    start = at + 1;
  }
}

std::string join(const Phrase &tokens, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.append(sep);
    out.append(tokens[i]);
  }
  return out;
}

bool is_joined(std::string_view token) {
  if (token.find(kJoiner) == std::string_view::npos) return false;
  for (auto part : split(token, kJoiner)) {
    if (part.empty()) return false;
  }
  return true;
}

}  // namespace text

Phrase tokenize(std::string_view s, JoinerPolicy policy) {
  if (!text::is_valid_utf8(s)) throw ParseError("invalid UTF-8");
  Phrase out;
  for (auto word : text::split_whitespace(s)) {
    if (policy == JoinerPolicy::kReject && word.find(kJoiner) != std::string_view::npos) {
      throw ParseError("reserved joiner '&' in raw token \"" + std::string(word) + "\"");
    }
    auto stripped = text::strip_punctuation(word);
    const auto joiners = [](std::string_view t) { return std::count(t.begin(), t.end(), kJoiner); };
    if (policy == JoinerPolicy::kAllowJoined && joiners(word) != 0 &&
        (joiners(word) != joiners(stripped) || !text::is_joined(stripped))) {
      throw ParseError("malformed joined token \"" + std::string(stripped) + "\"");
    }
    if (stripped.empty()) continue;
    out.push_back(text::to_lower(stripped));
  }
  return out;
}

std::string detokenize_consolidated(const Phrase &tokens) {
  std::string out = text::join(tokens, " ");
  for (char &c : out) {
    if (c == kJoiner) c = ' ';
  }
  return out;
}

}  // namespace menumt
