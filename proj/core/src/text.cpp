#include "invaudit/text.hpp"

#include <cctype>
#include <charconv>
#include <fstream>

#include "invaudit/record.hpp"

namespace invaudit {

namespace {

bool is_word_char(unsigned char c) { return std::isalnum(c) != 0; }

const std::set<std::string, std::less<>>& stopwords() {
  static const std::set<std::string, std::less<>> words = {
      "a",    "about", "after", "all",   "also", "an",    "and",   "any",  "are",  "as",
      "at",   "be",    "been",  "before", "but", "by",    "can",   "could", "do",  "does",
      "for",  "from",  "had",   "has",   "have", "how",   "i",     "if",   "in",   "into",
      "is",   "it",    "its",   "just",  "me",   "my",    "not",   "now",  "of",   "on",
      "or",   "our",   "out",   "over",  "please", "so",  "some",  "than", "that", "the",
      "their", "them", "then",  "there", "these", "they", "this",  "those", "to",  "up",
      "us",   "use",   "using", "via",   "was",  "we",    "were",  "what", "when", "which",
      "while", "who",  "will",  "with",  "would", "you",  "your"};
  return words;
}

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_word_char(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

bool is_stopword(std::string_view token) { return stopwords().contains(token); }

std::set<std::string> content_tokens(std::string_view text) {
  std::set<std::string> out;
  for (auto& t : tokenize(text)) {
    if (!is_stopword(t)) out.insert(std::move(t));
  }
  return out;
}

bool contains_phrase(std::string_view text, std::string_view phrase) {
  if (phrase.empty()) return false;
  const std::string hay = to_lower(text);
  const std::string needle = to_lower(phrase);
  std::size_t pos = hay.find(needle);
  while (pos != std::string::npos) {
    const bool at_boundary =
        pos == 0 || !is_word_char(static_cast<unsigned char>(hay[pos - 1])) ||
        !is_word_char(static_cast<unsigned char>(needle.front()));
    if (at_boundary) return true;
    pos = hay.find(needle, pos + 1);
  }
  return false;
}

std::vector<std::string> read_rule_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open rule file: " + path);
  std::vector<std::string> rules;
  std::string line;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::string t = trim(line);
    if (!t.empty()) rules.push_back(std::move(t));
  }
  return rules;
}

std::vector<std::pair<std::string, double>> read_weighted_rules(const std::string& path) {
  std::vector<std::pair<std::string, double>> rules;
  for (const auto& line : read_rule_lines(path)) {
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos) {
      throw ConfigError(path + ": expected 'pattern<TAB>severity' in line '" + line + "'");
    }
    const std::string pattern = trim(std::string_view(line).substr(0, tab));
    const std::string sev_text = trim(std::string_view(line).substr(tab + 1));
    double severity = 0.0;
    const auto [ptr, ec] =
        std::from_chars(sev_text.data(), sev_text.data() + sev_text.size(), severity);
    if (ec != std::errc{} || ptr != sev_text.data() + sev_text.size() || pattern.empty()) {
      throw ConfigError(path + ": bad severity in line '" + line + "'");
    }
    rules.emplace_back(pattern, severity);
  }
  return rules;
}

}  // namespace invaudit
