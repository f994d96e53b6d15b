#include "invaudit/trigger.hpp"

#include <algorithm>

#include "invaudit/text.hpp"

namespace invaudit {

namespace {

constexpr std::array<std::string_view, kNumSignals> kSignalNames = {"intent", "arg", "prov",
                                                                    "traj", "taint"};

double provenance_severity(StepLabel label) {
  switch (label) {
    case StepLabel::kTrusted: return 0.0;
    case StepLabel::kExternal: return 0.5;
    case StepLabel::kTainted: return 1.0;
  }
  return 0.0;
}

double intent_signal(const std::string& request, const TriggerConfig& cfg) {
  std::size_t hits = 0;
  for (const auto& rule : cfg.intent_rules) {
    if (contains_phrase(request, rule)) ++hits;
  }
  if (cfg.intent_saturation == 0) return hits > 0 ? 1.0 : 0.0;
  return std::min(1.0, static_cast<double>(hits) / static_cast<double>(cfg.intent_saturation));
}

double arg_signal(const std::string& request, const TriggerConfig& cfg) {
  double best = 0.0;
  for (const auto& [pattern, severity] : cfg.sensitive_arg_patterns) {
    if (severity > best && contains_phrase(request, pattern)) best = severity;
  }
  return std::clamp(best, 0.0, 1.0);
}

}  // namespace

std::string_view to_string(Signal s) { return kSignalNames[static_cast<std::size_t>(s)]; }

Signal signal_from(std::string_view s) {
  for (Signal sig : kAllSignals) {
    if (to_string(sig) == s) return sig;
  }
  throw ConfigError("unknown trigger signal '" + std::string(s) + "'");
}

bool is_text_signal(Signal s) { return s == Signal::kIntent || s == Signal::kArg; }

Profile profile_from_name(std::string_view name) {
  const Profile full{Signal::kIntent, Signal::kArg, Signal::kProv, Signal::kTraj, Signal::kTaint};
  if (name == "text_prov_graph_traj" || name == "contextual") return full;
  if (name == "text_only") return {Signal::kIntent, Signal::kArg};
  Profile p = full;
  if (name == "no_prov") {
    p.erase(Signal::kProv);
  } else if (name == "no_traj") {
    p.erase(Signal::kTraj);
  } else if (name == "no_taint") {
    p.erase(Signal::kTaint);
  } else {
    throw ConfigError("unknown feature profile '" + std::string(name) + "'");
  }
  return p;
}

std::string profile_name(const Profile& profile) {
  for (std::string_view name : {"text_prov_graph_traj", "text_only", "no_prov", "no_traj",
                                "no_taint"}) {
    if (profile_from_name(name) == profile) return std::string(name);
  }
  std::string out;
  for (Signal s : profile) {
    if (!out.empty()) out += "+";
    out += to_string(s);
  }
  return out;
}

const std::vector<std::string>& default_intent_rules() {
  static const std::vector<std::string> rules = {
      "delete",        "delete all",     "wipe",          "erase",         "destroy",
      "purge",         "rm -rf",         "drop table",    "truncate",      "disable",
      "bypass",        "ignore previous", "override",     "exfiltrate",    "leak",
      "steal",         "dump",           "encrypt all",   "shutdown",      "kill",
      "chmod 777",     "sudo",           "as root",       "without approval",
      "without telling", "silently",     "send everything", "all files",   "escalate privileges",
      "backdoor"};
  return rules;
}

const std::vector<std::pair<std::string, double>>& default_sensitive_arg_patterns() {
  static const std::vector<std::pair<std::string, double>> patterns = {
      {"/etc/passwd", 1.0},   {"/etc/shadow", 1.0},  {".ssh", 1.0},
      {"id_rsa", 1.0},        {"api_key", 1.0},      {"api key", 1.0},
      {"password", 1.0},      {"credentials", 1.0},  {"private key", 1.0},
      {".env", 1.0},          {"aws_secret", 1.0},   {"social security", 1.0},
      {"credit card", 1.0},   {"pastebin", 1.0},     {".onion", 1.0},
      {"database dump", 1.0}, {"payroll", 0.5},      {"customer list", 0.5},
      {"salary", 0.5},        {"token", 0.5},        {"http://", 0.5},
      {"https://", 0.5},      {"webhook", 0.5},      {"ftp://", 0.5},
      {"base64", 0.5},        {"/var/log", 0.5},     {"external address", 0.5},
      {"personal address", 0.5}};
  return patterns;
}

TriggerConfig TriggerConfig::defaults() {
  TriggerConfig cfg;
  cfg.intent_rules = default_intent_rules();
  cfg.sensitive_arg_patterns = default_sensitive_arg_patterns();
  return cfg;
}

TriggerConfig TriggerConfig::with_profile(Profile p) const {
  TriggerConfig out = *this;
  out.profile = std::move(p);
  return out;
}

void TriggerConfig::validate() const {
  for (double w : feature_weights) {
    if (w < 0.0) throw ConfigError("trigger: feature weights must be non-negative");
  }
  if (lambda < 0.0) throw ConfigError("trigger: lambda must be non-negative");
  if (!(gate_floor >= 0.0 && gate_floor <= 1.0)) {
    throw ConfigError("trigger: gate_floor must lie in [0, 1]");
  }
  if (!profile.contains(Signal::kIntent)) {
    throw ConfigError("trigger: profile must include the intent signal");
  }
  double text_total = 0.0;
  for (Signal s : profile) {
    if (is_text_signal(s)) text_total += weight(s);
  }
  if (!(text_total > 0.0)) throw ConfigError("trigger: active text weights sum to zero");
  for (const auto& [pattern, severity] : sensitive_arg_patterns) {
    if (severity < 0.0 || severity > 1.0) {
      throw ConfigError("trigger: severity of '" + pattern + "' outside [0, 1]");
    }
  }
}

bool is_high_risk_sink(Sink s) {
  return s == Sink::kCodeExecution || s == Sink::kFileWrite || s == Sink::kOutboundMessage;
}

std::vector<bool> reaches_invocation(const RuntimeContext& ctx) {
  const std::size_t n = ctx.trajectory.size();
  // successors[i] lists targets of edges leaving i; edges are forward-only, so
  // a reverse sweep settles reachability in one pass.
  std::vector<std::vector<std::size_t>> successors(n + 1);
  for (const auto& e : ctx.dependency_edges) {
    if (e.source < e.target && e.target <= n) successors[e.source].push_back(e.target);
  }
  std::vector<bool> reaches(n + 1, false);
  reaches[n] = true;
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t t : successors[i]) {
      if (reaches[t]) {
        reaches[i] = true;
        break;
      }
    }
  }
  reaches.pop_back();
  return reaches;
}

double taint_signal(const InvocationRecord& record) {
  const RuntimeContext& ctx = record.context;
  const auto reaches = reaches_invocation(ctx);
  bool tainted_reaches = false;
  for (std::size_t i = 0; i < reaches.size(); ++i) {
    if (reaches[i] && ctx.label_of(i) == StepLabel::kTainted) {
      tainted_reaches = true;
      break;
    }
  }
  if (!tainted_reaches) return 0.0;
  const bool sink = std::any_of(ctx.pending_sinks.begin(), ctx.pending_sinks.end(),
                                [](Sink s) { return is_high_risk_sink(s); });
  return sink ? 1.0 : 0.5;
}

FeatureVector extract_features(const InvocationRecord& record, const TriggerConfig& cfg) {
  FeatureVector f;
  f[Signal::kIntent] = intent_signal(record.request_text, cfg);
  f[Signal::kArg] = arg_signal(record.request_text, cfg);

  double prov = 0.0;
  std::size_t flagged = 0;
  const auto& steps = record.context.trajectory;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    prov = std::max(prov, provenance_severity(record.context.label_of(i)));
    if (steps[i].risk_flag) ++flagged;
  }
  f[Signal::kProv] = prov;
  f[Signal::kTraj] =
      cfg.trajectory_saturation == 0
          ? (flagged > 0 ? 1.0 : 0.0)
          : std::min(1.0, static_cast<double>(flagged) /
                              static_cast<double>(cfg.trajectory_saturation));
  f[Signal::kTaint] = taint_signal(record);
  return f;
}

double alignment_gate(const InvocationRecord& record, const TriggerConfig& cfg) {
  const auto request = content_tokens(record.request_text);
  auto skill = content_tokens(record.skill.name);
  skill.merge(content_tokens(record.skill.description));
  std::size_t shared = 0;
  for (const auto& t : request) {
    if (skill.contains(t)) ++shared;
  }
  const double denom = static_cast<double>(std::max<std::size_t>(1, std::min<std::size_t>(10, skill.size())));
  const double overlap = std::min(1.0, static_cast<double>(shared) / denom);
  return std::max(cfg.gate_floor, overlap);
}

double cross_check_boost(const InvocationRecord& record, double /*skill_prior*/,
                         const TriggerConfig& cfg) {
  if (!cfg.cross_check_enabled) return 0.0;
  if (intent_signal(record.request_text, cfg) < 0.5) return 0.0;
  const auto& perms = record.skill.permissions;
  const bool privileged = perms.contains(Permission::kCodeExecution) ||
                          perms.contains(Permission::kDatabase) ||
                          perms.contains(Permission::kFileWrite);
  return privileged ? cfg.cross_check_boost : 0.0;
}

TriggerParts trigger_parts(const FeatureVector& f, double gate, double boost,
                           const TriggerConfig& cfg) {
  double text_total = 0.0;
  double context_total = 0.0;
  for (Signal s : cfg.profile) {
    (is_text_signal(s) ? text_total : context_total) += cfg.weight(s);
  }
  if (!(text_total > 0.0)) {
    throw ConfigError("trigger: profile has no weighted request-visible signal");
  }
  TriggerParts parts;
  for (Signal s : cfg.profile) {
    if (is_text_signal(s)) {
      parts.text_base += cfg.weight(s) / text_total * f[s];
    } else if (context_total > 0.0) {
      parts.context_gain += cfg.weight(s) / context_total * f[s];
    }
  }
  parts.score =
      std::clamp(parts.text_base + cfg.lambda * gate * parts.context_gain + boost, 0.0, 1.0);
  return parts;
}

double trigger_score(const FeatureVector& f, double gate, double boost, const TriggerConfig& cfg) {
  return trigger_parts(f, gate, boost, cfg).score;
}

double score_invocation(const InvocationRecord& record, double skill_prior,
                        const TriggerConfig& cfg) {
  return trigger_score(extract_features(record, cfg), alignment_gate(record, cfg),
                       cross_check_boost(record, skill_prior, cfg), cfg);
}

}  // namespace invaudit
