#include "invaudit/baselines.hpp"

#include <algorithm>

#include "invaudit/static_prior.hpp"
#include "invaudit/text.hpp"

namespace invaudit {

const std::vector<std::string>& default_denylist_tokens() {
  static const std::vector<std::string> tokens = {
      "shell",   "sudo",    "root",     "exfiltrate", "keylog",  "backdoor",
      "payload", "bypass",  "credential", "ransom",   "wipe",    "unrestricted"};
  return tokens;
}

const std::vector<std::pair<std::string, double>>& default_scanner_lexicon() {
  static const std::vector<std::pair<std::string, double>> lexicon = {
      {"shell", 1.0},    {"execute", 1.0},  {"arbitrary", 1.0}, {"sudo", 1.0},
      {"credential", 1.0}, {"exfiltrate", 1.0}, {"remote", 0.5}, {"upload", 0.5},
      {"token", 0.5},    {"script", 0.5},   {"delete", 0.5},    {"raw", 0.5}};
  return lexicon;
}

DenylistConfig DenylistConfig::defaults() {
  DenylistConfig cfg;
  cfg.banned_tokens = default_denylist_tokens();
  return cfg;
}

void DenylistConfig::validate() const {
  if (!(hit_score > miss_score)) throw ConfigError("denylist: hit_score must exceed miss_score");
}

double no_audit_score(const InvocationRecord& /*record*/) { return 0.0; }

double denylist_score(const InvocationRecord& record, const DenylistConfig& cfg) {
  for (Permission p : record.skill.permissions) {
    if (cfg.banned_permissions.contains(p)) return cfg.hit_score;
  }
  for (const auto& token : cfg.banned_tokens) {
    if (contains_phrase(record.skill.description, token)) return cfg.hit_score;
  }
  return cfg.miss_score;
}

double static_scanner_score(const InvocationRecord& record) {
  static const StaticPriorConfig prior = StaticPriorConfig::defaults();
  const auto& lexicon = default_scanner_lexicon();
  double total = 0.0;
  double matched = 0.0;
  for (const auto& [token, severity] : lexicon) {
    total += severity;
    if (contains_phrase(record.skill.description, token)) matched += severity;
  }
  double perm = 0.0;
  for (Permission p : record.skill.permissions) {
    perm = std::max(perm, prior.permission_weights.at(p));
  }
  const double lexical = total > 0.0 ? matched / total : 0.0;
  return std::clamp(0.5 * lexical + 0.5 * perm, 0.0, 1.0);
}

}  // namespace invaudit
