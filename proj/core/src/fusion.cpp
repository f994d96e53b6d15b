#include "invaudit/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

namespace invaudit {

namespace {

using OrderedJson = nlohmann::ordered_json;

constexpr double kThresholdEps = 1e-12;

double metric_value(const CandidateMetrics& m, Criterion::Metric metric) {
  using M = Criterion::Metric;
  switch (metric) {
    case M::kHrAuprc: return m.rank.hr_auprc;
    case M::kRecallAtK: return m.rank.recall_at_k;
    case M::kPrecisionAtK: return m.rank.precision_at_k;
    case M::kSpearman: return m.rank.spearman;
    case M::kEce: return m.calibration.ece;
    case M::kWmae: return m.calibration.wmae;
    case M::kMacroF1: return m.decision.macro_f1;
    case M::kMaliciousRecall: return m.decision.malicious_recall;
    case M::kFalseBlockRate: return m.decision.false_block_rate;
    case M::kTaskCompletion: return m.decision.task_completion;
  }
  return 0.0;
}

// Returns <0 when a is preferred, >0 when b is preferred, 0 on a tie.
int compare(const CandidateMetrics& a, const CandidateMetrics& b,
            const std::vector<Criterion>& rule, int decimals) {
  const double scale = std::pow(10.0, decimals);
  for (const auto& c : rule) {
    double va = metric_value(a, c.metric);
    double vb = metric_value(b, c.metric);
    if (c.rounded) {
      va = static_cast<double>(std::llround(va * scale));
      vb = static_cast<double>(std::llround(vb * scale));
    }
    if (va == vb) continue;
    const bool a_better = c.maximize ? va > vb : va < vb;
    return a_better ? -1 : 1;
  }
  return 0;
}

constexpr std::pair<Criterion::Metric, std::string_view> kMetricNames[] = {
    {Criterion::Metric::kHrAuprc, "hr_auprc"},
    {Criterion::Metric::kRecallAtK, "recall_at_k"},
    {Criterion::Metric::kPrecisionAtK, "precision_at_k"},
    {Criterion::Metric::kSpearman, "spearman"},
    {Criterion::Metric::kEce, "ece"},
    {Criterion::Metric::kWmae, "wmae"},
    {Criterion::Metric::kMacroF1, "macro_f1"},
    {Criterion::Metric::kMaliciousRecall, "malicious_recall"},
    {Criterion::Metric::kFalseBlockRate, "false_block_rate"},
    {Criterion::Metric::kTaskCompletion, "task_completion"},
};

OrderedJson metrics_json(const CandidateMetrics& m) {
  OrderedJson j;
  j["hr_auprc"] = m.rank.hr_auprc;
  j["recall_at_k"] = m.rank.recall_at_k;
  j["precision_at_k"] = m.rank.precision_at_k;
  j["spearman"] = m.rank.spearman;
  j["ece"] = m.calibration.ece;
  j["wmae"] = m.calibration.wmae;
  j["macro_f1"] = m.decision.macro_f1;
  j["malicious_recall"] = m.decision.malicious_recall;
  j["false_block_rate"] = m.decision.false_block_rate;
  j["task_completion"] = m.decision.task_completion;
  return j;
}

}  // namespace

Normalizer Normalizer::frozen_defaults() {
  Normalizer n;
  n.static_range = {0.1019, 0.4019};
  n.trigger_range = {0.0000, 0.3202};
  return n;
}

double empirical_quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("empirical_quantile: empty sample");
  const double h = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

Normalizer fit_normalizer(std::span<const double> static_scores,
                          std::span<const double> trigger_scores,
                          std::pair<double, double> probs) {
  if (static_scores.empty() || trigger_scores.empty()) {
    throw std::invalid_argument("fit_normalizer: empty score list");
  }
  if (!(probs.first > 0.0 && probs.first < probs.second && probs.second < 1.0)) {
    throw std::invalid_argument("fit_normalizer: probabilities must satisfy 0 < lo < hi < 1");
  }
  Normalizer n;
  n.probs = probs;
  auto fit = [&](std::span<const double> scores, const char* name) {
    std::vector<double> sorted(scores.begin(), scores.end());
    std::sort(sorted.begin(), sorted.end());
    ChannelRange r{empirical_quantile(sorted, probs.first),
                   empirical_quantile(sorted, probs.second)};
    if (!(r.hi > r.lo)) {
      r.hi = r.lo + 1e-9;
      n.warnings.push_back(std::string(name) + " channel is degenerate; widened hi by 1e-9");
    }
    return r;
  };
  n.static_range = fit(static_scores, "static");
  n.trigger_range = fit(trigger_scores, "trigger");
  return n;
}

double normalize(const Normalizer& n, Channel channel, double score) {
  const ChannelRange& r = n.range(channel);
  return std::clamp((score - r.lo) / (r.hi - r.lo), 0.0, 1.0);
}

void FusionPolicy::validate() const {
  if (!(w_static >= 0.0 && w_static <= 1.0)) {
    throw ConfigError("fusion: w_static must lie in [0, 1]");
  }
  if (!(tau_block > tau_esc)) throw ConfigError("fusion: tau_block must exceed tau_esc");
  for (Channel c : {Channel::kStatic, Channel::kTrigger}) {
    if (!(normalizer.range(c).hi > normalizer.range(c).lo)) {
      throw ConfigError("fusion: normalizer range must satisfy lo < hi");
    }
  }
}

double fuse(const FusionPolicy& p, double r_static, double r_trigger) {
  return p.w_static * normalize(p.normalizer, Channel::kStatic, r_static) +
         p.w_trigger() * normalize(p.normalizer, Channel::kTrigger, r_trigger);
}

Action decide(const FusionPolicy& p, double fused) {
  if (fused < p.tau_esc) return Action::kAllow;
  if (fused < p.tau_block) return Action::kEscalate;
  return Action::kBlock;
}

CandidateGrid CandidateGrid::defaults() {
  CandidateGrid g;
  for (int i = 0; i <= 20; ++i) g.w_static.push_back(i / 20.0);
  for (int i = 1; i <= 12; ++i) g.tau_esc.push_back(i / 20.0);
  for (int i = 6; i <= 19; ++i) g.tau_block.push_back(i / 20.0);
  return g;
}

std::vector<FusionPolicy> enumerate_candidates(const CandidateGrid& grid,
                                               const Normalizer& normalizer) {
  auto sorted = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
  };
  const auto ws = sorted(grid.w_static);
  const auto escs = sorted(grid.tau_esc);
  const auto blocks = sorted(grid.tau_block);
  std::vector<FusionPolicy> out;
  for (double w : ws) {
    for (double esc : escs) {
      for (double block : blocks) {
        if (block > esc + kThresholdEps) out.push_back({normalizer, w, esc, block});
      }
    }
  }
  return out;
}

Selector selector_from(std::string_view s) {
  if (s == "continuous_risk_first") return Selector::kContinuousRiskFirst;
  if (s == "threshold_first") return Selector::kThresholdFirst;
  throw ConfigError("unknown selector '" + std::string(s) + "'");
}

std::string_view to_string(Selector s) {
  return s == Selector::kContinuousRiskFirst ? "continuous_risk_first" : "threshold_first";
}

Criterion::Metric criterion_metric_from(std::string_view s) {
  for (const auto& [m, name] : kMetricNames) {
    if (name == s) return m;
  }
  throw ConfigError("unknown selection metric '" + std::string(s) + "'");
}

std::string_view to_string(Criterion::Metric m) {
  for (const auto& [metric, name] : kMetricNames) {
    if (metric == m) return name;
  }
  return "?";
}

SelectionSettings SelectionSettings::defaults() {
  using M = Criterion::Metric;
  SelectionSettings s;
  s.continuous_risk_first = {
      {M::kHrAuprc, true, true},       {M::kRecallAtK, true, true},
      {M::kPrecisionAtK, true, true},  {M::kSpearman, true, true},
      {M::kEce, false, false},         {M::kWmae, false, false},
      {M::kFalseBlockRate, false, false}, {M::kTaskCompletion, true, false},
  };
  s.threshold_first = {
      {M::kMacroF1, true, true},
      {M::kMaliciousRecall, true, false},
      {M::kFalseBlockRate, false, false},
  };
  return s;
}

std::vector<CandidateMetrics> evaluate_candidates(const std::vector<FusionPolicy>& candidates,
                                                  const std::vector<InvocationRecord>& val_records,
                                                  std::span<const double> static_scores,
                                                  std::span<const double> trigger_scores,
                                                  const SelectionSettings& settings) {
  const std::size_t n = val_records.size();
  if (static_scores.size() != n || trigger_scores.size() != n) {
    throw std::invalid_argument("evaluate_candidates: score/record length mismatch");
  }
  std::vector<double> targets;
  std::vector<Action> canonical;
  targets.reserve(n);
  canonical.reserve(n);
  for (const auto& r : val_records) {
    targets.push_back(r.risk_target);
    canonical.push_back(r.canonical_action);
  }

  std::vector<CandidateMetrics> out(candidates.size());
  unsigned threads = settings.threads != 0 ? settings.threads : std::thread::hardware_concurrency();
  threads = std::clamp<unsigned>(threads, 1, 16);

  // Each worker owns a contiguous slice of candidates and writes only its own
  // output slots, so the result is independent of scheduling.
  auto work = [&](std::size_t begin, std::size_t end) {
    std::vector<double> fused(n);
    std::vector<Action> predicted(n);
    const FusionPolicy* last = nullptr;
    CandidateMetrics shared;
    for (std::size_t c = begin; c < end; ++c) {
      const FusionPolicy& p = candidates[c];
      const bool same_scores = last != nullptr && last->w_static == p.w_static &&
                               last->normalizer.static_range.lo == p.normalizer.static_range.lo &&
                               last->normalizer.static_range.hi == p.normalizer.static_range.hi &&
                               last->normalizer.trigger_range.lo == p.normalizer.trigger_range.lo &&
                               last->normalizer.trigger_range.hi == p.normalizer.trigger_range.hi;
      if (!same_scores) {
        for (std::size_t i = 0; i < n; ++i) fused[i] = fuse(p, static_scores[i], trigger_scores[i]);
        shared.rank = rank_metrics(fused, targets, settings.metrics.rank);
        shared.calibration = calibration_metrics(fused, targets, settings.metrics.bins,
                                                 settings.metrics.weight_mode);
      }
      last = &p;
      for (std::size_t i = 0; i < n; ++i) predicted[i] = decide(p, fused[i]);
      out[c] = shared;
      out[c].decision = decision_metrics(predicted, canonical);
    }
  };

  const std::size_t total = candidates.size();
  if (threads == 1 || total < 64) {
    work(0, total);
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (total + threads - 1) / threads;
    for (std::size_t begin = 0; begin < total; begin += chunk) {
      pool.emplace_back(work, begin, std::min(total, begin + chunk));
    }
  }
  return out;
}

std::size_t select_index(std::span<const CandidateMetrics> metrics, Selector selector,
                         const SelectionSettings& settings) {
  if (metrics.empty()) throw std::invalid_argument("select_index: no candidates");
  const auto& rule = settings.rule(selector);
  std::size_t best = 0;
  for (std::size_t i = 1; i < metrics.size(); ++i) {
    // Strict improvement only: ties keep the earlier grid member.
    if (compare(metrics[i], metrics[best], rule, settings.decimals) < 0) best = i;
  }
  return best;
}

PolicyChoice select_policy(const std::vector<FusionPolicy>& candidates,
                           const std::vector<InvocationRecord>& val_records,
                           std::span<const double> static_scores,
                           std::span<const double> trigger_scores, Selector selector,
                           const SelectionSettings& settings) {
  if (candidates.empty()) throw std::invalid_argument("select_policy: empty candidate list");
  if (val_records.empty()) throw std::invalid_argument("select_policy: empty validation set");
  const auto metrics =
      evaluate_candidates(candidates, val_records, static_scores, trigger_scores, settings);
  const std::size_t idx = select_index(metrics, selector, settings);
  return {candidates[idx], selector, idx, metrics[idx]};
}

std::string policy_to_json(const PolicyChoice& choice, const std::string& config_hash,
                           std::uint64_t seed) {
  OrderedJson j;
  j["kind"] = "fusion_policy";
  j["selector"] = to_string(choice.selector);
  j["w_static"] = choice.policy.w_static;
  j["w_trigger"] = choice.policy.w_trigger();
  j["tau_esc"] = choice.policy.tau_esc;
  j["tau_block"] = choice.policy.tau_block;
  const Normalizer& n = choice.policy.normalizer;
  j["normalizer"] = {{"probs", {n.probs.first, n.probs.second}},
                     {"static", {n.static_range.lo, n.static_range.hi}},
                     {"trigger", {n.trigger_range.lo, n.trigger_range.hi}}};
  j["grid_index"] = choice.grid_index;
  j["validation"] = metrics_json(choice.validation);
  j["config_hash"] = config_hash;
  j["seed"] = seed;
  return j.dump(2) + "\n";
}

PolicyChoice policy_from_json(const std::string& text, std::string* config_hash) {
  const auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ConfigError("malformed policy file: not a JSON object");
  PolicyChoice c;
  try {
    c.selector = selector_from(j.at("selector").get<std::string>());
    c.policy.w_static = j.at("w_static").get<double>();
    c.policy.tau_esc = j.at("tau_esc").get<double>();
    c.policy.tau_block = j.at("tau_block").get<double>();
    const auto& n = j.at("normalizer");
    c.policy.normalizer.probs = {n.at("probs").at(0).get<double>(),
                                 n.at("probs").at(1).get<double>()};
    c.policy.normalizer.static_range = {n.at("static").at(0).get<double>(),
                                        n.at("static").at(1).get<double>()};
    c.policy.normalizer.trigger_range = {n.at("trigger").at(0).get<double>(),
                                         n.at("trigger").at(1).get<double>()};
    c.grid_index = j.value("grid_index", std::size_t{0});
    if (j.contains("validation")) {
      const auto& v = j.at("validation");
      c.validation.rank.hr_auprc = v.value("hr_auprc", 0.0);
      c.validation.rank.recall_at_k = v.value("recall_at_k", 0.0);
      c.validation.rank.precision_at_k = v.value("precision_at_k", 0.0);
      c.validation.rank.spearman = v.value("spearman", 0.0);
      c.validation.calibration.ece = v.value("ece", 0.0);
      c.validation.calibration.wmae = v.value("wmae", 0.0);
      c.validation.decision.macro_f1 = v.value("macro_f1", 0.0);
      c.validation.decision.malicious_recall = v.value("malicious_recall", 0.0);
      c.validation.decision.false_block_rate = v.value("false_block_rate", 0.0);
      c.validation.decision.task_completion = v.value("task_completion", 0.0);
    }
    if (config_hash != nullptr) *config_hash = j.value("config_hash", std::string{});
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed policy file: ") + e.what());
  }
  c.policy.validate();
  return c;
}

}  // namespace invaudit
