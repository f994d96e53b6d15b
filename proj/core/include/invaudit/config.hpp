#pragma once

// Run configuration: one JSON document with a section per pipeline stage.

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "invaudit/baselines.hpp"
#include "invaudit/bench_gen.hpp"
#include "invaudit/fusion.hpp"
#include "invaudit/metrics.hpp"
#include "invaudit/static_prior.hpp"
#include "invaudit/trigger.hpp"

namespace invaudit {

struct PathConfig {
  std::string out_dir = "artifacts";
  // Empty = <out_dir>/<name>.
  std::string corpus_dir;
  std::string score_dir;
  std::string policy_dir;
  std::string report_dir;
  // Optional data files; empty = built-in tables.
  std::string intent_rules;
  std::string sensitive_args;
  std::string semantic_lexicon;
  std::string synonyms;

  std::string corpus() const;
  std::string scores() const;
  std::string policies() const;
  std::string reports() const;
};

enum class NormalizerMode { kFit, kFrozen };

struct FusionSettings {
  NormalizerMode normalizer = NormalizerMode::kFit;
  std::pair<double, double> probs{0.05, 0.95};
  Normalizer frozen = Normalizer::frozen_defaults();
  CandidateGrid grid = CandidateGrid::defaults();
  SelectionSettings selection = SelectionSettings::defaults();
  Selector selector = Selector::kContinuousRiskFirst;
};

struct RunConfig {
  std::uint64_t seed = 20260416;
  PathConfig paths;
  StaticPriorConfig static_prior = StaticPriorConfig::defaults();
  TriggerConfig trigger = TriggerConfig::defaults();
  FusionSettings fusion;
  MetricSettings metrics;
  std::vector<GroupKey> group_keys{GroupKey::kFamily, GroupKey::kMutationDepth};
  std::vector<double> mixes{1.0, 0.8, 0.65, 0.5, 0.2, 0.0};
  GenSpec gen;
  DenylistConfig denylist = DenylistConfig::defaults();

  /// Pushes the global seed into the generator and the tie-breaking stream.
  void apply_seed(std::uint64_t s);
  /// Throws ConfigError.
  void validate() const;
};

/// Parses a config document. Relative data-file paths resolve against
/// `base_dir`; data files are loaded into the config. Unknown keys are
/// rejected. Throws ConfigError.
RunConfig config_from_json(const nlohmann::json& doc, const std::string& base_dir = ".");
RunConfig load_config(const std::string& path);

/// Canonical form of every setting that affects artifact contents (paths
/// excluded, loaded tables included).
nlohmann::ordered_json config_to_json(const RunConfig& cfg);

/// 16 hex digits of FNV-1a over the canonical config, minus fusion.selector.
std::string config_hash(const RunConfig& cfg);

}  // namespace invaudit
