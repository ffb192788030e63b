#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace menumt {

using Token = std::string;
using Phrase = std::vector<Token>;

// Separator used by n-gram consolidation: "a la cubana" -> "a&la&cubana".
inline constexpr char kJoiner = '&';

namespace text {

bool is_valid_utf8(std::string_view s);

// Decodes one code point starting at `pos`, advancing `pos`. Returns
// U+FFFD on malformed input (and advances by one byte).
char32_t decode_utf8(std::string_view s, std::size_t &pos);
void append_utf8(std::string &out, char32_t cp);

bool is_space(char32_t cp);

// Lowercases Latin (incl. Latin-1 supplement and Extended-A), Greek and
// Cyrillic letters; everything else passes through. Diacritics are kept.
std::string to_lower(std::string_view s);

// Splits on Unicode whitespace. No other processing.
std::vector<std::string_view> split_whitespace(std::string_view s);

// Removes leading/trailing punctuation (ASCII punctuation plus common
// typographic marks such as inverted question marks and curly quotes).
std::string_view strip_punctuation(std::string_view s);

std::string_view trim(std::string_view s);

std::vector<std::string_view> split(std::string_view s, char sep);

std::string join(const Phrase &tokens, std::string_view sep = " ");

// True if `token` has the shape produced by consolidation: at least two
// non-empty parts separated by single joiners.
bool is_joined(std::string_view token);

}  // namespace text

enum class JoinerPolicy {
  // Raw corpora: '&' is reserved and rejected.
  kReject,
  // Consolidated corpora: '&' may appear as a joiner between words.
  kAllowJoined,
};

// Tokenization shared by every stage: split on whitespace, lowercase,
// strip surrounding punctuation. Throws ParseError if the policy forbids a
// token (line number is left 0; callers rethrow with context).
Phrase tokenize(std::string_view s, JoinerPolicy policy = JoinerPolicy::kReject);

// Replaces every joiner with a space and joins tokens with single spaces.
std::string detokenize_consolidated(const Phrase &tokens);

}  // namespace menumt
