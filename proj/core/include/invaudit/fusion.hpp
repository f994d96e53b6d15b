#pragma once

// Quantile normalization, convex fusion and three-way thresholding of the
// static and trigger channels, plus validation-time policy selection.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "invaudit/metrics.hpp"
#include "invaudit/record.hpp"

namespace invaudit {

enum class Channel { kStatic, kTrigger };

struct ChannelRange {
  double lo = 0.0;
  double hi = 1.0;
};

struct Normalizer {
  ChannelRange static_range;
  ChannelRange trigger_range;
  std::pair<double, double> probs{0.05, 0.95};
  std::vector<std::string> warnings;

  const ChannelRange& range(Channel c) const {
    return c == Channel::kStatic ? static_range : trigger_range;
  }

  /// Reference ranges: static [0.1019, 0.4019], trigger [0, 0.3202].
  static Normalizer frozen_defaults();
};

/// Linear-interpolation empirical quantile of a sorted sample.
double empirical_quantile(std::span<const double> sorted, double p);

/// Fits per-channel quantile ranges. A constant channel has hi widened by
/// 1e-9 and a warning recorded. Throws std::invalid_argument on empty input
/// or unordered probabilities.
Normalizer fit_normalizer(std::span<const double> static_scores,
                          std::span<const double> trigger_scores,
                          std::pair<double, double> probs = {0.05, 0.95});

/// clip((score - lo) / (hi - lo), 0, 1).
double normalize(const Normalizer& n, Channel channel, double score);

struct FusionPolicy {
  Normalizer normalizer;
  double w_static = 0.55;
  double tau_esc = 0.10;
  double tau_block = 0.70;

  double w_trigger() const { return 1.0 - w_static; }
  void validate() const;
};

double fuse(const FusionPolicy& p, double r_static, double r_trigger);
Action decide(const FusionPolicy& p, double fused);

struct CandidateGrid {
  std::vector<double> w_static;
  std::vector<double> tau_esc;
  std::vector<double> tau_block;

  /// w in {0.00..1.00}, tau_esc in {0.05..0.60}, tau_block in {0.30..0.95},
  /// all in steps of 0.05.
  static CandidateGrid defaults();
};

/// Every (w, tau_esc, tau_block) with tau_block > tau_esc, ordered by w, then
/// tau_esc, then tau_block ascending.
std::vector<FusionPolicy> enumerate_candidates(const CandidateGrid& grid,
                                               const Normalizer& normalizer);

enum class Selector { kContinuousRiskFirst, kThresholdFirst };
Selector selector_from(std::string_view s);
std::string_view to_string(Selector s);

/// One comparison step of a lexicographic selection rule.
struct Criterion {
  enum class Metric {
    kHrAuprc,
    kRecallAtK,
    kPrecisionAtK,
    kSpearman,
    kEce,
    kWmae,
    kMacroF1,
    kMaliciousRecall,
    kFalseBlockRate,
    kTaskCompletion,
  };
  Metric metric;
  bool maximize = true;
  bool rounded = false;  // compare after rounding to SelectionSettings::decimals
};

Criterion::Metric criterion_metric_from(std::string_view s);
std::string_view to_string(Criterion::Metric m);

struct SelectionSettings {
  int decimals = 4;
  MetricSettings metrics;
  /// Criteria per selector; grid order is the final tie-break.
  std::vector<Criterion> continuous_risk_first;
  std::vector<Criterion> threshold_first;
  /// Worker threads for grid evaluation; 0 = hardware concurrency.
  unsigned threads = 0;

  static SelectionSettings defaults();
  const std::vector<Criterion>& rule(Selector s) const {
    return s == Selector::kContinuousRiskFirst ? continuous_risk_first : threshold_first;
  }
};

struct CandidateMetrics {
  RankMetrics rank;
  CalibrationMetrics calibration;
  DecisionMetrics decision;
};

struct PolicyChoice {
  FusionPolicy policy;
  Selector selector = Selector::kContinuousRiskFirst;
  std::size_t grid_index = 0;
  CandidateMetrics validation;
};

/// Scores every candidate on the validation records and returns per-candidate
/// metrics in candidate order.
std::vector<CandidateMetrics> evaluate_candidates(const std::vector<FusionPolicy>& candidates,
                                                  const std::vector<InvocationRecord>& val_records,
                                                  std::span<const double> static_scores,
                                                  std::span<const double> trigger_scores,
                                                  const SelectionSettings& settings);

/// Index of the winner under a selector's lexicographic rule.
std::size_t select_index(std::span<const CandidateMetrics> metrics, Selector selector,
                         const SelectionSettings& settings);

/// Throws std::invalid_argument on an empty candidate list or validation set.
PolicyChoice select_policy(const std::vector<FusionPolicy>& candidates,
                           const std::vector<InvocationRecord>& val_records,
                           std::span<const double> static_scores,
                           std::span<const double> trigger_scores, Selector selector,
                           const SelectionSettings& settings = SelectionSettings::defaults());

/// Policy file: JSON object with weights, thresholds, normalizer ranges,
/// selector, validation snapshot, config hash and seed.
std::string policy_to_json(const PolicyChoice& choice, const std::string& config_hash,
                           std::uint64_t seed);
PolicyChoice policy_from_json(const std::string& text, std::string* config_hash = nullptr);

}  // namespace invaudit
