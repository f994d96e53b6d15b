#pragma once

// Continuous-risk ranking, calibration and thresholded-decision metrics.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "invaudit/record.hpp"

namespace invaudit {

struct RankOptions {
  double hi_thresh = 0.7;  // high-risk positive: target >= hi_thresh
  double k = 0.10;         // review budget as a fraction of N
  std::uint64_t tie_seed = 0;
};

struct RankMetrics {
  double hr_auprc = 0.0;
  double recall_at_k = 0.0;
  double precision_at_k = 0.0;
  double spearman = 0.0;
  bool no_positives = false;
  bool degenerate_spearman = false;  // a constant vector forced spearman = 0
};

enum class WeightMode { kOnePlusTarget, kUniform };
WeightMode weight_mode_from(std::string_view s);
std::string_view to_string(WeightMode m);

struct CalibrationMetrics {
  double ece = 0.0;
  double wmae = 0.0;
};

struct DecisionMetrics {
  double macro_f1 = 0.0;
  double malicious_recall = 0.0;
  double false_block_rate = 0.0;
  double task_completion = 0.0;
};

/// Review cutoff ceil(k * n), at least 1 for n > 0.
std::size_t review_cutoff(std::size_t n, double k);

/// Indices sorted by score descending; ties ordered by tie_keys(n, seed).
std::vector<std::size_t> ranking_order(std::span<const double> scores, std::uint64_t tie_seed);

/// Average ranks (1-based) with ties sharing their mid-rank.
std::vector<double> mid_ranks(std::span<const double> values);

/// Pearson correlation; 0 when either input is constant.
double pearson(std::span<const double> x, std::span<const double> y);

/// Spearman rank correlation with mid-ranks; 0 when either input is constant.
double spearman(std::span<const double> x, std::span<const double> y);

/// Throws std::invalid_argument on length mismatch or empty input.
RankMetrics rank_metrics(std::span<const double> scores, std::span<const double> targets,
                         const RankOptions& opts = {});

/// Throws std::invalid_argument when bins < 1 or lengths differ.
CalibrationMetrics calibration_metrics(std::span<const double> scores,
                                       std::span<const double> targets, int bins = 10,
                                       WeightMode mode = WeightMode::kOnePlusTarget);

/// Throws std::invalid_argument on length mismatch.
DecisionMetrics decision_metrics(std::span<const Action> predicted,
                                 std::span<const Action> canonical);

enum class GroupKey { kFamily, kSkill, kMutationDepth };
GroupKey group_key_from(std::string_view s);
std::string_view to_string(GroupKey k);

struct GroupRow {
  std::string group;
  std::size_t n = 0;
  RankMetrics rank;
  CalibrationMetrics calibration;
};

struct GroupedReport {
  GroupKey key = GroupKey::kFamily;
  std::vector<GroupRow> rows;  // ordered by group name
  double weighted_wmae = 0.0;      // group-size weighted
  double weighted_spearman = 0.0;  // group-size weighted
};

struct MetricSettings {
  RankOptions rank;
  int bins = 10;
  WeightMode weight_mode = WeightMode::kOnePlusTarget;
};

GroupedReport grouped_report(const std::vector<InvocationRecord>& records,
                             std::span<const double> scores, GroupKey key,
                             const MetricSettings& settings = {});

struct EvalReport {
  std::string split;
  std::string scorer;
  RankMetrics rank;
  CalibrationMetrics calibration;
  std::optional<DecisionMetrics> decision;
  std::vector<GroupedReport> grouped;
};

/// Rank + calibration on the records' risk targets, plus decision metrics when
/// actions are given.
EvalReport evaluate_scores(const std::vector<InvocationRecord>& records,
                           std::span<const double> scores, std::string split, std::string scorer,
                           const MetricSettings& settings,
                           std::optional<std::span<const Action>> actions = std::nullopt,
                           bool with_groups = false);

}  // namespace invaudit
