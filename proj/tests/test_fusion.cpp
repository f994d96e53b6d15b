#include <gtest/gtest.h>

#include "invaudit/fusion.hpp"
#include "invaudit/rng.hpp"
#include "support.hpp"

using namespace invaudit;
using invaudit::testing::make_record;

namespace {

FusionPolicy frozen_policy(double w = 0.55, double esc = 0.10, double block = 0.70) {
  FusionPolicy p;
  p.normalizer = Normalizer::frozen_defaults();
  p.w_static = w;
  p.tau_esc = esc;
  p.tau_block = block;
  return p;
}

struct ValSet {
  std::vector<InvocationRecord> records;
  std::vector<double> static_scores;
  std::vector<double> trigger_scores;
};

// Targets follow the static channel; the trigger channel is noise.
ValSet static_driven_val(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  ValSet v;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = 0.1 + 0.3 * rng.uniform();
    const double t = (s - 0.1) / 0.3;
    const Action a = t < 0.3 ? Action::kAllow : (t < 0.75 ? Action::kEscalate : Action::kBlock);
    auto r = make_record("r" + std::to_string(i), AttackFamily::kCapabilityAbuse, a);
    r.risk_target = blend_target(a, t).r_target;
    v.records.push_back(r);
    v.static_scores.push_back(s);
    v.trigger_scores.push_back(rng.uniform() * 0.3);
  }
  return v;
}

}  // namespace

TEST(Normalizer, UniformGridQuantiles) {
  std::vector<double> grid;
  for (int i = 0; i <= 100; ++i) grid.push_back(i / 100.0);
  const auto n = fit_normalizer(grid, grid);
  EXPECT_NEAR(n.static_range.lo, 0.05, 1e-12);
  EXPECT_NEAR(n.static_range.hi, 0.95, 1e-12);
  EXPECT_TRUE(n.warnings.empty());
}

TEST(Normalizer, QuantileInterpolation) {
  // sorted {1,2,3,4}: p=0.5 sits halfway between 2 and 3
  EXPECT_DOUBLE_EQ(empirical_quantile(std::vector<double>{1, 2, 3, 4}, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(empirical_quantile(std::vector<double>{1, 2, 3, 4}, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(empirical_quantile(std::vector<double>{1, 2, 3, 4}, 1.0), 4.0);
}

TEST(Normalizer, DegenerateChannelWidened) {
  const std::vector<double> flat(10, 0.3);
  const auto n = fit_normalizer(flat, flat);
  EXPECT_NEAR(n.static_range.hi - n.static_range.lo, 1e-9, 1e-15);
  EXPECT_EQ(n.warnings.size(), 2u);
}

TEST(Normalizer, EmptyOrBadProbsThrow) {
  EXPECT_THROW(fit_normalizer({}, std::vector<double>{1.0}), std::invalid_argument);
  EXPECT_THROW(fit_normalizer(std::vector<double>{1.0}, std::vector<double>{1.0}, {0.9, 0.1}),
               std::invalid_argument);
}

TEST(Normalize, FrozenStaticRange) {
  const auto n = Normalizer::frozen_defaults();
  EXPECT_DOUBLE_EQ(normalize(n, Channel::kStatic, 0.1019), 0.0);
  EXPECT_DOUBLE_EQ(normalize(n, Channel::kStatic, 0.4019), 1.0);
  EXPECT_NEAR(normalize(n, Channel::kStatic, 0.2519), 0.5, 1e-12);
  EXPECT_DOUBLE_EQ(normalize(n, Channel::kStatic, -5.0), 0.0);
  EXPECT_DOUBLE_EQ(normalize(n, Channel::kTrigger, 9.0), 1.0);
}

TEST(Fuse, HandValues) {
  const auto p = frozen_policy();
  // normalized (0.5, 1.0)
  EXPECT_NEAR(fuse(p, 0.2519, 0.3202), 0.725, 1e-12);
  EXPECT_DOUBLE_EQ(fuse(p, 0.0, 0.0), 0.0);
  const auto w1 = frozen_policy(1.0);
  EXPECT_DOUBLE_EQ(fuse(w1, 0.3, 0.31), normalize(w1.normalizer, Channel::kStatic, 0.3));
}

TEST(Decide, DefaultThresholds) {
  const auto p = frozen_policy();
  EXPECT_EQ(decide(p, 0.05), Action::kAllow);
  EXPECT_EQ(decide(p, 0.30), Action::kEscalate);
  EXPECT_EQ(decide(p, 0.725), Action::kBlock);
  EXPECT_EQ(decide(p, 0.10), Action::kEscalate);
  EXPECT_EQ(decide(p, 0.70), Action::kBlock);
}

TEST(FusionProperty, BoundedAndMonotone) {
  Rng rng(41);
  for (int i = 0; i < 5000; ++i) {
    auto p = frozen_policy(rng.index(21) / 20.0, 0.1, 0.7);
    const double s = rng.uniform() * 0.5;
    const double t = rng.uniform() * 0.5;
    const double f = fuse(p, s, t);
    ASSERT_GE(f, 0.0);
    ASSERT_LE(f, 1.0);
    ASSERT_GE(fuse(p, s + 0.01, t), f);
    ASSERT_GE(fuse(p, s, t + 0.01), f);
    const double g = rng.uniform();
    const double h = std::min(1.0, g + rng.uniform() * 0.2);
    ASSERT_LE(static_cast<int>(decide(p, g)), static_cast<int>(decide(p, h)));
  }
}

TEST(FusionPolicy, ValidateRejectsBadOrdering) {
  EXPECT_THROW(frozen_policy(0.5, 0.7, 0.7).validate(), ConfigError);
  EXPECT_THROW(frozen_policy(1.5).validate(), ConfigError);
  EXPECT_NO_THROW(frozen_policy().validate());
}

TEST(Grid, DefaultCardinality) {
  const auto c = enumerate_candidates(CandidateGrid::defaults(), Normalizer::frozen_defaults());
  EXPECT_EQ(c.size(), 2940u);
  // count pairs directly
  std::size_t pairs = 0;
  for (int e = 1; e <= 12; ++e) {
    for (int b = 6; b <= 19; ++b) pairs += b > e;
  }
  EXPECT_EQ(pairs, 140u);
  EXPECT_EQ(c.size(), 21 * pairs);
  for (std::size_t i = 1; i < c.size(); ++i) {
    const auto& a = c[i - 1];
    const auto& b = c[i];
    ASSERT_TRUE(std::tie(a.w_static, a.tau_esc, a.tau_block) <
                std::tie(b.w_static, b.tau_esc, b.tau_block));
  }
}

TEST(Grid, TinyAndFiltered) {
  CandidateGrid g{{0.5}, {0.1}, {0.2, 0.3}};
  EXPECT_EQ(enumerate_candidates(g, Normalizer::frozen_defaults()).size(), 2u);
  CandidateGrid f{{0.0, 1.0}, {0.3, 0.6}, {0.4, 0.5}};
  // tau_esc 0.6 has no larger tau_block
  EXPECT_EQ(enumerate_candidates(f, Normalizer::frozen_defaults()).size(), 4u);
}

TEST(Select, SingleCandidateChosenByBoth) {
  const auto v = static_driven_val(60, 1);
  const std::vector<FusionPolicy> one{frozen_policy(0.3, 0.2, 0.6)};
  for (Selector s : {Selector::kContinuousRiskFirst, Selector::kThresholdFirst}) {
    const auto c = select_policy(one, v.records, v.static_scores, v.trigger_scores, s);
    EXPECT_EQ(c.grid_index, 0u);
    EXPECT_EQ(c.selector, s);
  }
}

TEST(Select, EmptyInputsThrow) {
  const auto v = static_driven_val(10, 2);
  EXPECT_THROW(select_policy({}, v.records, v.static_scores, v.trigger_scores,
                             Selector::kThresholdFirst),
               std::invalid_argument);
  EXPECT_THROW(select_policy({frozen_policy()}, {}, {}, {}, Selector::kThresholdFirst),
               std::invalid_argument);
}

TEST(Select, NoisyTriggerPushesWeightToStatic) {
  const auto v = static_driven_val(400, 3);
  const auto n = fit_normalizer(v.static_scores, v.trigger_scores);
  const auto cands = enumerate_candidates(CandidateGrid::defaults(), n);
  const auto c = select_policy(cands, v.records, v.static_scores, v.trigger_scores,
                               Selector::kContinuousRiskFirst);
  EXPECT_GE(c.policy.w_static, 0.8);
}

TEST(Select, MatchesExhaustiveLexicographicScan) {
  const auto v = static_driven_val(150, 4);
  const auto n = fit_normalizer(v.static_scores, v.trigger_scores);
  const auto cands = enumerate_candidates(CandidateGrid::defaults(), n);
  auto settings = SelectionSettings::defaults();
  const auto metrics = evaluate_candidates(cands, v.records, v.static_scores, v.trigger_scores,
                                           settings);
  // threshold-first: round macro-F1, then recall, then false-block, then grid order
  std::size_t best = 0;
  auto key = [&](std::size_t i) {
    const auto& d = metrics[i].decision;
    return std::make_tuple(std::llround(d.macro_f1 * 1e4), d.malicious_recall, -d.false_block_rate);
  };
  for (std::size_t i = 1; i < metrics.size(); ++i) {
    if (key(i) > key(best)) best = i;
  }
  EXPECT_EQ(select_index(metrics, Selector::kThresholdFirst, settings), best);
}

TEST(Select, ParallelAndSerialAgree) {
  const auto v = static_driven_val(120, 5);
  const auto n = fit_normalizer(v.static_scores, v.trigger_scores);
  const auto cands = enumerate_candidates(CandidateGrid::defaults(), n);
  auto serial = SelectionSettings::defaults();
  serial.threads = 1;
  auto parallel = SelectionSettings::defaults();
  parallel.threads = 8;
  for (Selector s : {Selector::kContinuousRiskFirst, Selector::kThresholdFirst}) {
    const auto a = select_policy(cands, v.records, v.static_scores, v.trigger_scores, s, serial);
    const auto b = select_policy(cands, v.records, v.static_scores, v.trigger_scores, s, parallel);
    EXPECT_EQ(a.grid_index, b.grid_index);
  }
}

TEST(PolicyFile, RoundTrip) {
  const auto v = static_driven_val(80, 6);
  const auto n = fit_normalizer(v.static_scores, v.trigger_scores);
  const auto cands = enumerate_candidates(CandidateGrid::defaults(), n);
  const auto c = select_policy(cands, v.records, v.static_scores, v.trigger_scores,
                               Selector::kThresholdFirst);
  const auto text = policy_to_json(c, "abc123", 77);
  std::string hash;
  const auto back = policy_from_json(text, &hash);
  EXPECT_EQ(hash, "abc123");
  EXPECT_EQ(back.selector, c.selector);
  EXPECT_EQ(back.policy.w_static, c.policy.w_static);
  EXPECT_EQ(back.policy.tau_esc, c.policy.tau_esc);
  EXPECT_EQ(back.policy.tau_block, c.policy.tau_block);
  EXPECT_EQ(back.policy.normalizer.static_range.lo, c.policy.normalizer.static_range.lo);
  EXPECT_EQ(back.validation.rank.hr_auprc, c.validation.rank.hr_auprc);
  EXPECT_EQ(policy_to_json(back, "abc123", 77), text);
  EXPECT_THROW(policy_from_json("not json"), ConfigError);
}
