// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failing criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "invaudit/bench_gen.hpp"
#include "invaudit/config.hpp"
#include "invaudit/fusion.hpp"
#include "invaudit/metrics.hpp"
#include "invaudit/pipeline.hpp"
#include "invaudit/rng.hpp"
#include "invaudit/trigger.hpp"
#include "oracles.hpp"

using namespace invaudit;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, a);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<InvocationRecord> of_split(const std::vector<InvocationRecord>& rs, Split s) {
  std::vector<InvocationRecord> out;
  for (const auto& r : rs) {
    if (r.split == s) out.push_back(r);
  }
  return out;
}

std::vector<double> targets_of(const std::vector<InvocationRecord>& rs) {
  std::vector<double> t;
  for (const auto& r : rs) t.push_back(r.risk_target);
  return t;
}

double plain_pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / n;
    my += y[i] / n;
  }
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

Outcome grid_cardinality() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto c = enumerate_candidates(CandidateGrid::defaults(), Normalizer::frozen_defaults());
  const double dt = seconds_since(t0);
  return {c.size() == 2940 && dt < 1.0,
          std::to_string(c.size()) + " candidates in " + fmt("%.3f", dt) + " s"};
}

Outcome constant_scorer(const std::vector<InvocationRecord>& corpus) {
  bool ok = true;
  std::ostringstream d;
  for (Split s : kAllSplits) {
    const auto rs = of_split(corpus, s);
    const auto t = targets_of(rs);
    const auto zeros = scorer_scores("no_audit", rs, RunConfig{});
    double pos = 0;
    for (double x : t) pos += x >= 0.7;
    const double prevalence = pos / static_cast<double>(t.size());
    double sum = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      RankOptions opts;
      opts.tie_seed = seed;
      const auto m = rank_metrics(zeros, t, opts);
      ok = ok && m.spearman == 0.0;
      sum += m.hr_auprc;
    }
    const double mean = sum / 20.0;
    ok = ok && std::abs(mean - prevalence) <= 0.02;
    d << to_string(s) << " " << fmt("%.4f", mean) << "/" << fmt("%.4f", prevalence) << " ";
  }
  return {ok, "mean HR-AUPRC/prevalence: " + d.str() + "spearman 0"};
}

Outcome band_consistency(const std::vector<InvocationRecord>& corpus) {
  std::size_t outside = 0, stray_positive = 0;
  for (const auto& r : corpus) {
    const double t = r.risk_target;
    switch (r.canonical_action) {
      case Action::kAllow: outside += !(t <= 0.35 + 1e-12); break;
      case Action::kEscalate: outside += !(t >= 0.325 - 1e-12 && t <= 0.675 + 1e-12); break;
      case Action::kBlock: outside += !(t >= 0.65 - 1e-12); break;
    }
    stray_positive += t >= 0.7 && r.canonical_action != Action::kBlock;
  }
  return {outside == 0 && stray_positive == 0,
          std::to_string(corpus.size()) + " records, " + std::to_string(outside) +
              " outside band, " + std::to_string(stray_positive) + " non-block positives"};
}

Outcome anchor_correlation(const std::vector<InvocationRecord>& corpus) {
  bool ok = true;
  std::ostringstream d;
  for (Split s : kAllSplits) {
    std::vector<double> t, a;
    for (const auto& r : corpus) {
      if (r.split != s) continue;
      t.push_back(r.risk_target);
      a.push_back(r.canonical_action == Action::kAllow      ? 0.0
                  : r.canonical_action == Action::kEscalate ? 0.5
                                                            : 1.0);
    }
    const double p = plain_pearson(t, a);
    ok = ok && p >= 0.95;
    d << to_string(s) << " " << fmt("%.4f", p) << " ";
  }
  return {ok, "pearson " + d.str()};
}

Outcome metric_oracles() {
  Rng rng(5150);
  double worst_exact = 0, worst_spearman = 0;
  bool tie_ok = true;
  auto values = [&](std::size_t n, bool ties) {
    std::vector<double> v(n);
    for (auto& x : v) x = ties ? static_cast<double>(rng.index(6)) / 5.0 : rng.uniform();
    return v;
  };
  for (int iter = 0; iter < 500; ++iter) {
    const std::size_t n = 1 + rng.index(12);
    const auto s = values(n, rng.chance(0.5));
    const auto t = values(n, rng.chance(0.5));
    RankOptions opts;
    opts.tie_seed = rng.next();
    const int bins = 1 + static_cast<int>(rng.index(12));
    const auto m = rank_metrics(s, t, opts);
    const auto order = ranking_order(s, opts.tie_seed);
    tie_ok = tie_ok && oracle::is_tie_consistent(order, s);
    const auto want = oracle::rank_for_order(order, t, opts.hi_thresh, opts.k);
    const auto c = calibration_metrics(s, t, bins);
    for (double diff : {m.hr_auprc - want.ap, m.recall_at_k - want.recall,
                        m.precision_at_k - want.precision, c.ece - oracle::ece(s, t, bins),
                        c.wmae - oracle::wmae(s, t, true)}) {
      worst_exact = std::max(worst_exact, std::abs(diff));
    }
    worst_spearman = std::max(worst_spearman, std::abs(m.spearman - oracle::spearman(s, t)));
  }
  return {tie_ok && worst_exact <= 1e-12 && worst_spearman <= 1e-9,
          "500 instances, max |diff| " + fmt("%.2e", worst_exact) + " (rank, calibration), " +
              fmt("%.2e", worst_spearman) + " (spearman)"};
}

Outcome profile_reduction() {
  const auto ctx = TriggerConfig::defaults();
  const auto text = ctx.with_profile(profile_from_name("text_only"));
  const double grid[] = {0.0, 0.25, 0.5, 0.75, 1.0};
  const double gates[] = {0.08, 0.3, 0.7, 1.0};
  std::size_t checked = 0, reduction_bad = 0, monotone_bad = 0;
  FeatureVector f;
  std::function<void(std::size_t)> sweep = [&](std::size_t dim) {
    if (dim < kNumSignals) {
      for (double v : grid) {
        f.values[dim] = v;
        sweep(dim + 1);
      }
      return;
    }
    for (double g : gates) {
      ++checked;
      const double s = trigger_score(f, g, 0.0, ctx);
      if (f.prov() == 0 && f.traj() == 0 && f.taint() == 0) {
        reduction_bad += s != trigger_score(f, g, 0.0, text);
      }
      for (std::size_t d = 0; d < kNumSignals; ++d) {
        if (f.values[d] == 1.0) continue;
        auto up = f;
        up.values[d] += 0.25;
        monotone_bad += trigger_score(up, g, 0.0, ctx) < s;
      }
    }
  };
  sweep(0);
  return {reduction_bad == 0 && monotone_bad == 0,
          std::to_string(checked) + " grid points, " + std::to_string(reduction_bad) +
              " reduction mismatches, " + std::to_string(monotone_bad) + " monotonicity breaks"};
}

Outcome threshold_independence(const RunConfig& cfg, const std::vector<InvocationRecord>& val) {
  const auto ch = score_channels(val, cfg);
  const auto norm = calibration_normalizer(cfg, ch);
  const auto cands = enumerate_candidates(cfg.fusion.grid, norm);
  const auto t = targets_of(val);
  std::map<double, std::vector<RankMetrics>> by_w;
  for (const auto& p : cands) {
    std::vector<double> fused;
    for (std::size_t i = 0; i < val.size(); ++i) {
      fused.push_back(fuse(p, ch.static_scores[i], ch.trigger_scores[i]));
    }
    by_w[p.w_static].push_back(rank_metrics(fused, t, cfg.metrics.rank));
  }
  const auto batch = evaluate_candidates(cands, val, ch.static_scores, ch.trigger_scores,
                                         cfg.fusion.selection);
  bool ok = true;
  std::size_t pairs = 0;
  for (const auto& [w, ms] : by_w) {
    pairs = std::max(pairs, ms.size());
    for (const auto& m : ms) {
      ok = ok && m.hr_auprc == ms.front().hr_auprc && m.recall_at_k == ms.front().recall_at_k &&
           m.precision_at_k == ms.front().precision_at_k && m.spearman == ms.front().spearman;
    }
  }
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const auto& m = batch[i].rank;
    const auto& ref = by_w[cands[i].w_static].front();
    ok = ok && m.hr_auprc == ref.hr_auprc && m.recall_at_k == ref.recall_at_k &&
         m.precision_at_k == ref.precision_at_k && m.spearman == ref.spearman;
  }
  return {ok && pairs == 140, std::to_string(by_w.size()) + " weights x " +
                                  std::to_string(pairs) + " threshold pairs, identical rank metrics"};
}

Outcome ood_ordering() {
  bool ok = true;
  std::ostringstream d;
  for (std::uint64_t seed : {20260416ULL, 20260417ULL, 20260418ULL}) {
    RunConfig cfg;
    cfg.apply_seed(seed);
    const auto corpus = generate_corpus(cfg.gen);
    const auto val = of_split(corpus, Split::kVal);
    const auto ood = of_split(corpus, Split::kOod);
    const auto choice = calibrate(cfg, val, Selector::kContinuousRiskFirst);
    const auto rows = evaluate_methods(cfg, ood, "ood", choice.policy);
    std::map<std::string, EvalReport> by;
    for (const auto& r : rows) by[r.scorer] = r.report;
    const double best_static = std::max({by["static_prior"].rank.hr_auprc,
                                         by["denylist"].rank.hr_auprc,
                                         by["agent_audit"].rank.hr_auprc});
    const double fus = by["fusion"].rank.hr_auprc;
    const double ctx = by["contextual"].rank.hr_auprc;
    const double ece_ctx = by["contextual"].calibration.ece;
    const double ece_fus = by["fusion"].calibration.ece;
    const bool seed_ok = fus >= ctx && ctx >= best_static && ece_ctx <= ece_fus;
    ok = ok && seed_ok;
    d << "seed " << seed << ": HR fusion " << fmt("%.4f", fus) << " ctx " << fmt("%.4f", ctx)
      << " static " << fmt("%.4f", best_static) << ", ECE ctx " << fmt("%.4f", ece_ctx)
      << " fusion " << fmt("%.4f", ece_fus) << (seed_ok ? "; " : " (violated); ");
  }
  return {ok, d.str()};
}

Outcome selector_divergence(const RunConfig& cfg, const std::vector<InvocationRecord>& val) {
  const auto crf = calibrate(cfg, val, Selector::kContinuousRiskFirst);
  const auto tf = calibrate(cfg, val, Selector::kThresholdFirst);
  const auto& a = crf.validation.decision;
  const auto& b = tf.validation.decision;
  const bool ok = a.false_block_rate <= b.false_block_rate && a.task_completion >= b.task_completion;
  return {ok, "false-block " + fmt("%.4f", a.false_block_rate) + " vs " +
                  fmt("%.4f", b.false_block_rate) + ", task completion " +
                  fmt("%.4f", a.task_completion) + " vs " + fmt("%.4f", b.task_completion)};
}

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    out[fs::relative(e.path(), root).string()] = ss.str();
  }
  return out;
}

Outcome determinism() {
  const auto root = fs::temp_directory_path() / "invaudit_acceptance_det";
  RunConfig cfg;
  cfg.paths.out_dir = root.string();
  auto run = [&] {
    fs::remove_all(root);
    cmd_gen(cfg);
    for (const char* s : {"static_prior", "contextual", "text_only"}) {
      for (Split sp : kAllSplits) cmd_score(cfg, s, sp);
    }
    const auto policy = cmd_calibrate(cfg, Selector::kContinuousRiskFirst);
    cmd_score(cfg, "fusion", Split::kTest, policy);
    cmd_eval(cfg, policy, Split::kTest);
    cmd_eval(cfg, policy, Split::kOod);
    return snapshot(root);
  };
  const auto first = run();
  const auto second = run();
  fs::remove_all(root);
  std::size_t differing = 0;
  for (const auto& [name, bytes] : first) {
    const auto it = second.find(name);
    differing += it == second.end() || it->second != bytes;
  }
  return {!first.empty() && first.size() == second.size() && differing == 0,
          std::to_string(first.size()) + " artifacts, " + std::to_string(differing) + " differ"};
}

}  // namespace

int main() {
  const RunConfig cfg;
  const auto corpus = generate_corpus(cfg.gen);
  const auto val = of_split(corpus, Split::kVal);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"grid cardinality", [] { return grid_cardinality(); }},
      {"constant-scorer analytics", [&] { return constant_scorer(corpus); }},
      {"band consistency", [&] { return band_consistency(corpus); }},
      {"target-anchor correlation", [&] { return anchor_correlation(corpus); }},
      {"metric-oracle equivalence", [] { return metric_oracles(); }},
      {"profile reduction and monotonicity", [] { return profile_reduction(); }},
      {"threshold-independence of ranking", [&] { return threshold_independence(cfg, val); }},
      {"qualitative OOD ordering", [] { return ood_ordering(); }},
      {"selector divergence", [&] { return selector_divergence(cfg, val); }},
      {"determinism", [] { return determinism(); }},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s %zu %s: %s [%.2f s]\n", o.pass ? "PASS" : "FAIL", i + 1,
                criteria[i].first.c_str(), o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  return failures;
}
