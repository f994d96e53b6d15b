#pragma once

#include <map>
#include <string>
#include <vector>

#include "invaudit/record.hpp"

namespace invaudit {

struct StaticPriorConfig {
  std::map<Permission, double> permission_weights;
  std::map<Provenance, double> provenance_weights;
  double score_cap = 0.40;
  double perm_scale = 0.25;
  double semantic_scale = 0.05;
  std::vector<std::string> semantic_lexicon;

  /// Frozen reference configuration with the shipped cue lexicon.
  static StaticPriorConfig defaults();

  /// Throws ConfigError on a negative weight, missing enum entry or bad cap.
  void validate() const;
};

/// Built-in semantic cue lexicon (also shipped as data/semantic_lexicon.txt).
const std::vector<std::string>& default_semantic_lexicon();

/// Distinct lexicon entries found in `text`, divided by lexicon size.
double semantic_fraction(const std::string& text, const std::vector<std::string>& lexicon);

/// Capability prior from skill metadata alone:
///   min(cap, perm_scale * max_p w[p] + semantic_scale * semantic_fraction + w[provenance]).
double static_capability_score(const SkillMetadata& skill, const StaticPriorConfig& cfg);

}  // namespace invaudit
