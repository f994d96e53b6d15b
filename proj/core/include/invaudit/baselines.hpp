#pragma once

// Request- and context-free reference scorers.

#include <set>
#include <string>
#include <utility>
#include <vector>

#include "invaudit/record.hpp"

namespace invaudit {

struct DenylistConfig {
  std::set<Permission> banned_permissions{Permission::kCodeExecution, Permission::kDatabase};
  std::vector<std::string> banned_tokens;
  double hit_score = 0.9;
  double miss_score = 0.05;

  static DenylistConfig defaults();
  void validate() const;
};

const std::vector<std::string>& default_denylist_tokens();

/// Keyword/severity table used by the manifest scanner.
const std::vector<std::pair<std::string, double>>& default_scanner_lexicon();

double no_audit_score(const InvocationRecord& record);

double denylist_score(const InvocationRecord& record, const DenylistConfig& cfg);

/// Transparent re-implementation of a manifest-style static scanner:
/// 0.5 * (matched severity / total severity) + 0.5 * max permission weight.
double static_scanner_score(const InvocationRecord& record);

}  // namespace invaudit
