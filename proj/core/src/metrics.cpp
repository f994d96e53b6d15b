#include "invaudit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include "invaudit/rng.hpp"

namespace invaudit {

namespace {

void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw std::invalid_argument(std::string(what) + ": length mismatch (" + std::to_string(a) +
                                " vs " + std::to_string(b) + ")");
  }
}

bool is_constant(std::span<const double> v) {
  return std::adjacent_find(v.begin(), v.end(), std::not_equal_to<>()) == v.end();
}

std::string group_name(const InvocationRecord& r, GroupKey key) {
  switch (key) {
    case GroupKey::kFamily: return std::string(to_string(r.attack_family));
    case GroupKey::kSkill: return r.skill.skill_id;
    case GroupKey::kMutationDepth: return "depth_" + std::to_string(r.lineage.mutation_depth);
  }
  return {};
}

}  // namespace

WeightMode weight_mode_from(std::string_view s) {
  if (s == "one_plus_target") return WeightMode::kOnePlusTarget;
  if (s == "uniform") return WeightMode::kUniform;
  throw ConfigError("unknown weight mode '" + std::string(s) + "'");
}

std::string_view to_string(WeightMode m) {
  return m == WeightMode::kUniform ? "uniform" : "one_plus_target";
}

GroupKey group_key_from(std::string_view s) {
  if (s == "family") return GroupKey::kFamily;
  if (s == "skill") return GroupKey::kSkill;
  if (s == "mutation_depth") return GroupKey::kMutationDepth;
  throw ConfigError("unknown group key '" + std::string(s) + "'");
}

std::string_view to_string(GroupKey k) {
  switch (k) {
    case GroupKey::kFamily: return "family";
    case GroupKey::kSkill: return "skill";
    case GroupKey::kMutationDepth: return "mutation_depth";
  }
  return "?";
}

std::size_t review_cutoff(std::size_t n, double k) {
  if (n == 0) return 0;
  // Guard against k * n landing a hair above an integer (0.1 * 450).
  const double raw = std::ceil(k * static_cast<double>(n) - 1e-9);
  return std::clamp<std::size_t>(static_cast<std::size_t>(std::max(raw, 1.0)), 1, n);
}

std::vector<std::size_t> ranking_order(std::span<const double> scores, std::uint64_t tie_seed) {
  const auto keys = tie_keys(scores.size(), tie_seed);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return keys[a] < keys[b];
  });
  return order;
}

std::vector<double> mid_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mid;
    i = j + 1;
  }
  return ranks;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  require_same_length(x.size(), y.size(), "pearson");
  const std::size_t n = x.size();
  if (n < 2 || is_constant(x) || is_constant(y)) return 0.0;
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double spearman(std::span<const double> x, std::span<const double> y) {
  require_same_length(x.size(), y.size(), "spearman");
  if (x.size() < 2 || is_constant(x) || is_constant(y)) return 0.0;
  const auto rx = mid_ranks(x);
  const auto ry = mid_ranks(y);
  return pearson(rx, ry);
}

RankMetrics rank_metrics(std::span<const double> scores, std::span<const double> targets,
                         const RankOptions& opts) {
  require_same_length(scores.size(), targets.size(), "rank_metrics");
  if (scores.empty()) throw std::invalid_argument("rank_metrics: empty input");
  const std::size_t n = scores.size();

  RankMetrics m;
  std::size_t total_pos = 0;
  for (double t : targets) {
    if (t >= opts.hi_thresh) ++total_pos;
  }

  const auto order = ranking_order(scores, opts.tie_seed);
  const std::size_t cutoff = review_cutoff(n, opts.k);
  std::size_t seen = 0;
  std::size_t top_hits = 0;
  double precision_sum = 0.0;
  for (std::size_t rank = 0; rank < n; ++rank) {
    if (targets[order[rank]] >= opts.hi_thresh) {
      ++seen;
      precision_sum += static_cast<double>(seen) / static_cast<double>(rank + 1);
      if (rank < cutoff) ++top_hits;
    }
  }
  if (total_pos == 0) {
    m.no_positives = true;
  } else {
    m.hr_auprc = precision_sum / static_cast<double>(total_pos);
    m.recall_at_k = static_cast<double>(top_hits) / static_cast<double>(total_pos);
  }
  m.precision_at_k = static_cast<double>(top_hits) / static_cast<double>(cutoff);
  m.degenerate_spearman = n < 2 || is_constant(scores) || is_constant(targets);
  m.spearman = m.degenerate_spearman ? 0.0 : spearman(scores, targets);
  return m;
}

CalibrationMetrics calibration_metrics(std::span<const double> scores,
                                       std::span<const double> targets, int bins,
                                       WeightMode mode) {
  if (bins < 1) throw std::invalid_argument("calibration_metrics: bins must be >= 1");
  require_same_length(scores.size(), targets.size(), "calibration_metrics");
  CalibrationMetrics m;
  const std::size_t n = scores.size();
  if (n == 0) return m;

  std::vector<double> score_sum(static_cast<std::size_t>(bins), 0.0);
  std::vector<double> target_sum(static_cast<std::size_t>(bins), 0.0);
  std::vector<std::size_t> count(static_cast<std::size_t>(bins), 0);
  double weighted_err = 0.0;
  double weight_total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = std::clamp(scores[i], 0.0, 1.0);
    const auto b = std::min<std::size_t>(static_cast<std::size_t>(bins) - 1,
                                         static_cast<std::size_t>(s * bins));
    score_sum[b] += scores[i];
    target_sum[b] += targets[i];
    ++count[b];
    const double u = mode == WeightMode::kOnePlusTarget ? 1.0 + targets[i] : 1.0;
    weighted_err += u * std::abs(scores[i] - targets[i]);
    weight_total += u;
  }
  for (std::size_t b = 0; b < count.size(); ++b) {
    if (count[b] == 0) continue;
    const double nb = static_cast<double>(count[b]);
    m.ece += nb / static_cast<double>(n) * std::abs(score_sum[b] / nb - target_sum[b] / nb);
  }
  m.wmae = weighted_err / weight_total;
  return m;
}

DecisionMetrics decision_metrics(std::span<const Action> predicted,
                                 std::span<const Action> canonical) {
  require_same_length(predicted.size(), canonical.size(), "decision_metrics");
  DecisionMetrics m;
  double f1_sum = 0.0;
  for (Action c : kAllActions) {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
      const bool p = predicted[i] == c;
      const bool t = canonical[i] == c;
      tp += p && t;
      fp += p && !t;
      fn += !p && t;
    }
    const std::size_t denom = 2 * tp + fp + fn;
    f1_sum += denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
  }
  m.macro_f1 = f1_sum / 3.0;

  std::size_t blocks = 0;
  std::size_t blocks_caught = 0;
  std::size_t allows = 0;
  std::size_t allows_blocked = 0;
  std::size_t allows_allowed = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (canonical[i] == Action::kBlock) {
      ++blocks;
      blocks_caught += predicted[i] == Action::kBlock;
    } else if (canonical[i] == Action::kAllow) {
      ++allows;
      allows_blocked += predicted[i] == Action::kBlock;
      allows_allowed += predicted[i] == Action::kAllow;
    }
  }
  if (blocks > 0) m.malicious_recall = static_cast<double>(blocks_caught) / static_cast<double>(blocks);
  if (allows > 0) {
    m.false_block_rate = static_cast<double>(allows_blocked) / static_cast<double>(allows);
    m.task_completion = static_cast<double>(allows_allowed) / static_cast<double>(allows);
  }
  return m;
}

GroupedReport grouped_report(const std::vector<InvocationRecord>& records,
                             std::span<const double> scores, GroupKey key,
                             const MetricSettings& settings) {
  require_same_length(records.size(), scores.size(), "grouped_report");
  std::map<std::string, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < records.size(); ++i) members[group_name(records[i], key)].push_back(i);

  GroupedReport report;
  report.key = key;
  double wmae_acc = 0.0;
  double spearman_acc = 0.0;
  for (const auto& [name, idx] : members) {
    std::vector<double> s;
    std::vector<double> t;
    s.reserve(idx.size());
    t.reserve(idx.size());
    for (std::size_t i : idx) {
      s.push_back(scores[i]);
      t.push_back(records[i].risk_target);
    }
    GroupRow row;
    row.group = name;
    row.n = idx.size();
    row.rank = rank_metrics(s, t, settings.rank);
    row.calibration = calibration_metrics(s, t, settings.bins, settings.weight_mode);
    wmae_acc += static_cast<double>(row.n) * row.calibration.wmae;
    spearman_acc += static_cast<double>(row.n) * row.rank.spearman;
    report.rows.push_back(std::move(row));
  }
  if (!records.empty()) {
    report.weighted_wmae = wmae_acc / static_cast<double>(records.size());
    report.weighted_spearman = spearman_acc / static_cast<double>(records.size());
  }
  return report;
}

EvalReport evaluate_scores(const std::vector<InvocationRecord>& records,
                           std::span<const double> scores, std::string split, std::string scorer,
                           const MetricSettings& settings,
                           std::optional<std::span<const Action>> actions, bool with_groups) {
  require_same_length(records.size(), scores.size(), "evaluate_scores");
  std::vector<double> targets;
  targets.reserve(records.size());
  for (const auto& r : records) targets.push_back(r.risk_target);

  EvalReport report;
  report.split = std::move(split);
  report.scorer = std::move(scorer);
  report.rank = rank_metrics(scores, targets, settings.rank);
  report.calibration = calibration_metrics(scores, targets, settings.bins, settings.weight_mode);
  if (actions) {
    std::vector<Action> canonical;
    canonical.reserve(records.size());
    for (const auto& r : records) canonical.push_back(r.canonical_action);
    report.decision = decision_metrics(*actions, canonical);
  }
  if (with_groups) {
    for (GroupKey k : {GroupKey::kFamily, GroupKey::kSkill, GroupKey::kMutationDepth}) {
      report.grouped.push_back(grouped_report(records, scores, k, settings));
    }
  }
  return report;
}

}  // namespace invaudit
