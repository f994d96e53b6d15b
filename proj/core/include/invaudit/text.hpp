#pragma once

#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace invaudit {

std::string to_lower(std::string_view s);

/// Lower-cased alphanumeric runs; everything else separates tokens.
std::vector<std::string> tokenize(std::string_view text);

/// Distinct lower-cased tokens with stopwords removed.
std::set<std::string> content_tokens(std::string_view text);

bool is_stopword(std::string_view token);

/// Case-insensitive match of `phrase` starting at a word boundary in `text`.
/// "backup" matches "Backups" but not "nobackup".
bool contains_phrase(std::string_view text, std::string_view phrase);

/// Non-empty lines with '#' comments and surrounding whitespace stripped.
std::vector<std::string> read_rule_lines(const std::string& path);

/// "pattern<TAB>severity" rows. Throws ConfigError on a bad row.
std::vector<std::pair<std::string, double>> read_weighted_rules(const std::string& path);

}  // namespace invaudit
