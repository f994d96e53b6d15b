#pragma once

// Request-conditioned invocation risk: five invocation-time signals combined
// into a text base plus a gated contextual gain.

#include <array>
#include <cstddef>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "invaudit/record.hpp"

namespace invaudit {

enum class Signal { kIntent = 0, kArg, kProv, kTraj, kTaint };
inline constexpr std::size_t kNumSignals = 5;
inline constexpr Signal kAllSignals[] = {Signal::kIntent, Signal::kArg, Signal::kProv,
                                         Signal::kTraj, Signal::kTaint};

std::string_view to_string(Signal s);
Signal signal_from(std::string_view s);

bool is_text_signal(Signal s);

struct FeatureVector {
  std::array<double, kNumSignals> values{};

  double& operator[](Signal s) { return values[static_cast<std::size_t>(s)]; }
  double operator[](Signal s) const { return values[static_cast<std::size_t>(s)]; }

  double intent() const { return (*this)[Signal::kIntent]; }
  double arg() const { return (*this)[Signal::kArg]; }
  double prov() const { return (*this)[Signal::kProv]; }
  double traj() const { return (*this)[Signal::kTraj]; }
  double taint() const { return (*this)[Signal::kTaint]; }

  bool operator==(const FeatureVector&) const = default;
};

using Profile = std::set<Signal>;

/// Named profiles: "text_prov_graph_traj" (all five), "text_only",
/// and the leave-one-out ablations "no_prov", "no_traj", "no_taint".
Profile profile_from_name(std::string_view name);
std::string profile_name(const Profile& profile);

struct TriggerConfig {
  std::array<double, kNumSignals> feature_weights{0.1046, 0.0493, 0.2990, 0.3944, 0.1526};
  Profile profile{Signal::kIntent, Signal::kArg, Signal::kProv, Signal::kTraj, Signal::kTaint};
  double lambda = 0.25;
  double gate_floor = 0.08;
  bool cross_check_enabled = false;
  double cross_check_boost = 0.15;
  std::size_t intent_saturation = 3;
  std::size_t trajectory_saturation = 3;
  std::vector<std::string> intent_rules;
  std::vector<std::pair<std::string, double>> sensitive_arg_patterns;

  double weight(Signal s) const { return feature_weights[static_cast<std::size_t>(s)]; }

  static TriggerConfig defaults();
  TriggerConfig with_profile(Profile p) const;

  void validate() const;
};

const std::vector<std::string>& default_intent_rules();
const std::vector<std::pair<std::string, double>>& default_sensitive_arg_patterns();

/// Risk sinks that make a reachable taint source a full-strength signal.
bool is_high_risk_sink(Sink s);

/// 1.0 when a tainted step reaches the invocation and a high-risk sink is
/// pending, 0.5 when it reaches without such a sink, 0 otherwise.
double taint_signal(const InvocationRecord& record);

/// Steps whose output transitively feeds the invocation node.
std::vector<bool> reaches_invocation(const RuntimeContext& ctx);

FeatureVector extract_features(const InvocationRecord& record, const TriggerConfig& cfg);

/// Request/skill lexical alignment, floored at cfg.gate_floor.
double alignment_gate(const InvocationRecord& record, const TriggerConfig& cfg);

/// Boost applied when destructive request language meets a high-privilege
/// capability surface; 0 unless enabled in the config.
double cross_check_boost(const InvocationRecord& record, double skill_prior,
                         const TriggerConfig& cfg);

struct TriggerParts {
  double text_base = 0.0;
  double context_gain = 0.0;
  double score = 0.0;
};

TriggerParts trigger_parts(const FeatureVector& f, double gate, double boost,
                           const TriggerConfig& cfg);

/// clip(text_base + lambda * gate * context_gain + boost, 0, 1).
double trigger_score(const FeatureVector& f, double gate, double boost, const TriggerConfig& cfg);

/// Extracts features, gate and boost, then scores.
double score_invocation(const InvocationRecord& record, double skill_prior,
                        const TriggerConfig& cfg);

}  // namespace invaudit
