#pragma once

// Deterministic synthesis of a benchmark corpus of invocation records:
// seed cases per attack family, template mutation with lineage,
// neutralization relabeling, continuous targets and group-safe splits.

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "invaudit/record.hpp"
#include "invaudit/rng.hpp"

namespace invaudit {

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct HeuristicConfig {
  std::map<AttackFamily, double> family_base{
      {AttackFamily::kBenign, 0.05},
      {AttackFamily::kDirectMalicious, 0.75},
      {AttackFamily::kDataExfiltration, 0.85},
      {AttackFamily::kToolSelectionHijack, 0.65},
      {AttackFamily::kCapabilityAbuse, 0.70},
      {AttackFamily::kMultiTurnEscalation, 0.55},
      {AttackFamily::kIndirectPromptInjection, 0.80}};
  double tier_coef = 0.10;
  double perm_coef = 0.10;
  double context_coef = 0.10;
};

struct GenSpec {
  std::size_t total_records = 3000;
  /// train, val, test, ood; must sum to 1.
  std::array<double, kNumSplits> split_ratios{1600.0 / 3000, 500.0 / 3000, 450.0 / 3000,
                                              450.0 / 3000};
  /// Family composition of the in-distribution splits (normalized on use).
  std::map<AttackFamily, double> family_mix{
      {AttackFamily::kBenign, 1057},           {AttackFamily::kDirectMalicious, 264},
      {AttackFamily::kDataExfiltration, 249},  {AttackFamily::kToolSelectionHijack, 208},
      {AttackFamily::kCapabilityAbuse, 246},   {AttackFamily::kMultiTurnEscalation, 526}};
  /// 0 = scale 476 skills by total_records / 3000.
  std::size_t skill_pool_size = 0;
  std::uint64_t rng_seed = 20260416;
  double blend_mix = 0.65;
  /// Target fraction of records at mutation depth 1.
  double mutation_rate = 0.5623;
  /// Probability that a mutation neutralizes the attack signal.
  double neutralization_rate = 0.12;
  /// Upper bound on indirect-injection records the seed pool can supply;
  /// 0 = unbounded.
  std::size_t ipi_supply = 0;
  /// Optional "word<TAB>alt1|alt2" synonym file; empty = built-in table.
  std::string synonyms_path;
  HeuristicConfig heuristic;

  std::array<std::size_t, kNumSplits> split_sizes() const;
  std::size_t resolved_pool_size() const;
  /// Throws GenerationError when the GenSpec cannot be satisfied.
  void validate() const;
};

struct RiskTargetParts {
  double r_decision = 0.0;
  double r_heuristic = 0.0;
  double r_target = 0.0;
};

/// Anchor of a canonical action: 0.0, 0.5 or 1.0.
double decision_anchor(Action a);

/// mix * anchor + (1 - mix) * heuristic. Throws std::invalid_argument on
/// out-of-range inputs.
RiskTargetParts blend_target(Action decision, double heuristic, double mix = 0.65);

/// Within-band refinement from family, evidence tier, permission profile and
/// taint evidence.
double heuristic_risk(const InvocationRecord& record, const HeuristicConfig& cfg = {});

/// Heuristic stored with the record, or recomputed when absent.
double record_heuristic(const InvocationRecord& record, const HeuristicConfig& cfg = {});

using SynonymTable = std::map<std::string, std::vector<std::string>>;
const SynonymTable& default_synonyms();
SynonymTable read_synonyms(const std::string& path);

struct MutationOptions {
  double neutralization_rate = 0.0;
  double blend_mix = 0.65;
  const SynonymTable* synonyms = nullptr;  // null = built-in
  HeuristicConfig heuristic;
};

/// Template rewrite of a depth-0 record. The child keeps seed and group,
/// points at the parent and sits one level deeper. With probability
/// neutralization_rate the rewrite strips the attack cues and the child is
/// relabeled benign/allow (never for indirect injection, which must stay
/// in the held-out family). The child's record_id is left for the caller.
InvocationRecord mutate(const InvocationRecord& parent, Rng& rng, const MutationOptions& opts);

/// Skill pool used by the generator.
std::vector<SkillMetadata> make_skill_pool(std::size_t size, Rng& rng);

std::vector<InvocationRecord> generate_corpus(const GenSpec& spec);

/// Group-atomic split assignment: groups holding indirect-injection records go
/// to ood; the rest are ordered by a seeded hash and packed largest-first into
/// train/val/test toward the GenSpec split ratios.
std::vector<InvocationRecord> assign_splits(std::vector<InvocationRecord> records,
                                            const GenSpec& spec);

/// Re-blends every target at each mix, leaving all other fields untouched.
std::vector<std::pair<double, std::vector<InvocationRecord>>> target_mixture_sweep(
    const std::vector<InvocationRecord>& records,
    const std::vector<double>& mixes = {1.0, 0.8, 0.65, 0.5, 0.2, 0.0},
    const HeuristicConfig& cfg = {});

}  // namespace invaudit
