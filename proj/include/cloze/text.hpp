#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace cloze {

struct NormalizeOptions {
  // Map accented Latin letters to their base letter ("é" -> "e"). Off by
  // default: PT-BR has minimal pairs such as "e"/"é".
  bool fold_diacritics = false;
};

/// Lowercases, trims surrounding whitespace and strips leading/trailing
/// punctuation. Internal diacritics, hyphens and apostrophes are kept.
std::string normalize_token(std::string_view raw, const NormalizeOptions& opts = {});

/// Normalizes a free-text answer that may hold several words: each
/// whitespace-separated token goes through normalize_token, empty results
/// are dropped, and the remainder is joined with single spaces.
std::string normalize_answer(std::string_view raw, const NormalizeOptions& opts = {});

/// Splits on Unicode whitespace. Empty fields are never produced.
std::vector<std::string> split_whitespace(std::string_view text);

/// Leading and trailing punctuation of a token, e.g. "(casa)," -> "(" and "),".
struct TokenAffixes {
  std::string prefix;
  std::string core;
  std::string suffix;
};
TokenAffixes split_affixes(std::string_view token);

namespace utf8 {

std::u32string decode(std::string_view s);
std::string encode(std::u32string_view s);
char32_t to_lower(char32_t c);
char32_t fold_diacritic(char32_t c);
bool is_space(char32_t c);
bool is_punct(char32_t c);

}  // namespace utf8
}  // namespace cloze
