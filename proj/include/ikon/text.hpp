#pragma once

// Shared text handling. Corpus relevance scoring, the tokenizer of the
// linguistic analysis and the search index all go through word_tokens() so
// their notion of a "word" cannot drift apart.

#include <string>
#include <string_view>
#include <vector>

namespace ikon::text {

/// Lowercases ASCII, Latin-1, Latin Extended-A and Cyrillic; other code points
/// pass through unchanged. Invalid UTF-8 bytes are copied verbatim.
std::string to_lower(std::string_view s);

bool is_valid_utf8(std::string_view s);

/// True for code points that belong inside a word: ASCII letters and digits,
/// and letters of the non-ASCII scripts listed for to_lower.
bool is_word_char(char32_t cp);

/// Splits on every non-word code point, keeping original casing.
std::vector<std::string> word_tokens(std::string_view s);

/// word_tokens() followed by to_lower() on each token.
std::vector<std::string> normalized_tokens(std::string_view s);

/// Lowercase, collapse internal whitespace to one space, trim.
std::string normalize_label(std::string_view s);

std::string_view trim(std::string_view s);

std::vector<std::string> split(std::string_view s, char sep);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// Every byte outside [A-Za-z0-9] becomes %XX (uppercase hex).
std::string percent_encode(std::string_view s);

/// Inverse of percent_encode. Returns false on a truncated or non-hex escape.
bool percent_decode(std::string_view s, std::string& out);

/// Replaces TAB, CR and LF with a single space so a value fits in one TSV field.
std::string tsv_field(std::string_view s);

/// Current UTC time as ISO-8601 with second precision, e.g. 2024-01-31T12:00:00Z.
std::string utc_timestamp();

/// Fixed-point formatting with `decimals` digits after the point.
std::string format_fixed(double value, int decimals);

}  // namespace ikon::text
