#include "invaudit/static_prior.hpp"

#include <algorithm>

#include "invaudit/text.hpp"

namespace invaudit {

const std::vector<std::string>& default_semantic_lexicon() {
  static const std::vector<std::string> lexicon = {
      "exfiltrate", "shell",     "credential", "wipe",      "delete",    "root",
      "sudo",       "password",  "secret",     "token",     "bypass",    "override",
      "execute",    "arbitrary", "script",     "inject",    "payload",   "upload",
      "forward",    "keylog",    "disable",    "firewall",  "registry",  "privilege",
      "escalate",   "backdoor",  "persist",    "obfuscate", "encrypt",   "ransom",
      "drop",       "truncate",  "format",     "kill",      "remote",    "tunnel",
      "scrape",     "harvest",   "unrestricted", "raw"};
  return lexicon;
}

StaticPriorConfig StaticPriorConfig::defaults() {
  StaticPriorConfig cfg;
  cfg.permission_weights = {
      {Permission::kCodeExecution, 1.00}, {Permission::kDatabase, 1.00},
      {Permission::kFileRead, 0.65},      {Permission::kFileWrite, 0.65},
      {Permission::kNetwork, 0.6318},     {Permission::kEmail, 0.2366},
      {Permission::kFileSystem, 0.0612}};
  cfg.provenance_weights = {{Provenance::kUnverified, 0.3396},
                            {Provenance::kOfficial, 0.0896},
                            {Provenance::kCommunity, 0.0630}};
  cfg.semantic_lexicon = default_semantic_lexicon();
  return cfg;
}

void StaticPriorConfig::validate() const {
  for (Permission p : kAllPermissions) {
    const auto it = permission_weights.find(p);
    if (it == permission_weights.end()) {
      throw ConfigError("static_prior: missing weight for permission " +
                        std::string(to_string(p)));
    }
    if (it->second < 0.0) throw ConfigError("static_prior: negative permission weight");
  }
  for (Provenance p : {Provenance::kOfficial, Provenance::kCommunity, Provenance::kUnverified}) {
    const auto it = provenance_weights.find(p);
    if (it == provenance_weights.end()) {
      throw ConfigError("static_prior: missing weight for provenance " +
                        std::string(to_string(p)));
    }
    if (it->second < 0.0) throw ConfigError("static_prior: negative provenance weight");
  }
  if (!(score_cap > 0.0 && score_cap <= 1.0)) {
    throw ConfigError("static_prior: score_cap must lie in (0, 1]");
  }
  if (perm_scale < 0.0 || semantic_scale < 0.0) {
    throw ConfigError("static_prior: scales must be non-negative");
  }
}

double semantic_fraction(const std::string& text, const std::vector<std::string>& lexicon) {
  if (lexicon.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& cue : lexicon) {
    if (contains_phrase(text, cue)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(lexicon.size());
}

double static_capability_score(const SkillMetadata& skill, const StaticPriorConfig& cfg) {
  double perm = 0.0;
  for (Permission p : skill.permissions) {
    const auto it = cfg.permission_weights.find(p);
    if (it == cfg.permission_weights.end()) {
      throw ConfigError("static_prior: no weight for permission " + std::string(to_string(p)));
    }
    perm = std::max(perm, it->second);
  }
  const auto prov = cfg.provenance_weights.find(skill.provenance);
  if (prov == cfg.provenance_weights.end()) {
    throw ConfigError("static_prior: no weight for provenance " +
                      std::string(to_string(skill.provenance)));
  }
  const double raw = cfg.perm_scale * perm +
                     cfg.semantic_scale * semantic_fraction(skill.description, cfg.semantic_lexicon) +
                     prov->second;
  return std::clamp(raw, 0.0, cfg.score_cap);
}

}  // namespace invaudit
