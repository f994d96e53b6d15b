#include "invaudit/config.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "invaudit/rng.hpp"
#include "invaudit/text.hpp"

namespace invaudit {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string join_dir(const std::string& base, const char* leaf) {
  return (fs::path(base) / leaf).string();
}

// Strict section reader: every key must be consumed.
class Section {
 public:
  Section(const json& obj, std::string name) : obj_(obj), name_(std::move(name)) {
    if (!obj_.is_object()) throw ConfigError(name_ + ": expected an object");
  }

  ~Section() = default;

  bool has(const char* key) const { return obj_.contains(key); }

  const json& at(const char* key) {
    seen_.insert(key);
    return obj_.at(key);
  }

  template <typename T>
  void read(const char* key, T& out) {
    if (!has(key)) return;
    try {
      out = at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(path(key) + ": wrong type");
    }
  }

  double number(const char* key, double fallback) {
    if (!has(key)) return fallback;
    const json& v = at(key);
    if (!v.is_number()) throw ConfigError(path(key) + ": expected a number");
    return v.get<double>();
  }

  std::string path(const char* key) const { return name_ + "." + key; }

  void finish() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!seen_.contains(key)) throw ConfigError(name_ + ": unknown key '" + key + "'");
    }
  }

 private:
  const json& obj_;
  std::string name_;
  std::set<std::string> seen_;
};

std::vector<double> read_axis(const json& v, const std::string& where) {
  std::vector<double> out;
  if (v.is_array()) {
    for (const auto& x : v) {
      if (!x.is_number()) throw ConfigError(where + ": expected numbers");
      out.push_back(x.get<double>());
    }
    return out;
  }
  if (v.is_object()) {
    Section s(v, where);
    const double start = s.number("start", 0.0);
    const double stop = s.number("stop", 0.0);
    const double step = s.number("step", 0.0);
    s.finish();
    if (!(step > 0.0) || stop < start) throw ConfigError(where + ": bad range");
    for (long i = 0;; ++i) {
      const double value = std::round((start + static_cast<double>(i) * step) * 1e12) / 1e12;
      if (value > stop + 1e-9) break;
      out.push_back(value);
    }
    return out;
  }
  throw ConfigError(where + ": expected a list or {start, stop, step}");
}

std::vector<Criterion> read_rule(const json& v, const std::string& where) {
  if (!v.is_array()) throw ConfigError(where + ": expected a list of criteria");
  std::vector<Criterion> out;
  for (const auto& item : v) {
    if (!item.is_string()) throw ConfigError(where + ": criteria are strings");
    const std::string text = item.get<std::string>();
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ':')) parts.push_back(part);
    if (parts.size() < 2 || parts.size() > 3) {
      throw ConfigError(where + ": expected metric:max|min[:rounded], got '" + text + "'");
    }
    Criterion c{criterion_metric_from(parts[0]), true, false};
    if (parts[1] == "max") {
      c.maximize = true;
    } else if (parts[1] == "min") {
      c.maximize = false;
    } else {
      throw ConfigError(where + ": direction must be max or min in '" + text + "'");
    }
    if (parts.size() == 3) {
      if (parts[2] != "rounded") throw ConfigError(where + ": unknown flag in '" + text + "'");
      c.rounded = true;
    }
    out.push_back(c);
  }
  return out;
}

std::string criterion_text(const Criterion& c) {
  std::string s(to_string(c.metric));
  s += c.maximize ? ":max" : ":min";
  if (c.rounded) s += ":rounded";
  return s;
}

ChannelRange read_range(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    throw ConfigError(where + ": expected [lo, hi]");
  }
  return {v[0].get<double>(), v[1].get<double>()};
}

std::string resolve_data_file(const std::string& value, const std::string& base_dir,
                              const std::string& key) {
  if (value.empty()) return value;
  fs::path p(value);
  if (p.is_relative()) p = fs::path(base_dir) / p;
  if (!fs::exists(p)) throw ConfigError(key + ": file not found: " + p.string());
  return p.lexically_normal().string();
}

void read_paths(const json& v, PathConfig& paths, const std::string& base_dir) {
  Section s(v, "paths");
  s.read("out_dir", paths.out_dir);
  s.read("corpus_dir", paths.corpus_dir);
  s.read("score_dir", paths.score_dir);
  s.read("policy_dir", paths.policy_dir);
  s.read("report_dir", paths.report_dir);
  s.read("intent_rules", paths.intent_rules);
  s.read("sensitive_args", paths.sensitive_args);
  s.read("semantic_lexicon", paths.semantic_lexicon);
  s.read("synonyms", paths.synonyms);
  s.finish();
  paths.intent_rules = resolve_data_file(paths.intent_rules, base_dir, "paths.intent_rules");
  paths.sensitive_args = resolve_data_file(paths.sensitive_args, base_dir, "paths.sensitive_args");
  paths.semantic_lexicon =
      resolve_data_file(paths.semantic_lexicon, base_dir, "paths.semantic_lexicon");
  paths.synonyms = resolve_data_file(paths.synonyms, base_dir, "paths.synonyms");
}

void read_static_prior(const json& v, StaticPriorConfig& cfg) {
  Section s(v, "static_prior");
  if (s.has("permission_weights")) {
    Section w(s.at("permission_weights"), "static_prior.permission_weights");
    for (Permission p : kAllPermissions) {
      const std::string key(to_string(p));
      cfg.permission_weights[p] = w.number(key.c_str(), cfg.permission_weights[p]);
    }
    w.finish();
  }
  if (s.has("provenance_weights")) {
    Section w(s.at("provenance_weights"), "static_prior.provenance_weights");
    for (Provenance p : {Provenance::kOfficial, Provenance::kCommunity, Provenance::kUnverified}) {
      const std::string key(to_string(p));
      cfg.provenance_weights[p] = w.number(key.c_str(), cfg.provenance_weights[p]);
    }
    w.finish();
  }
  cfg.score_cap = s.number("score_cap", cfg.score_cap);
  cfg.perm_scale = s.number("perm_scale", cfg.perm_scale);
  cfg.semantic_scale = s.number("semantic_scale", cfg.semantic_scale);
  s.finish();
}

void read_trigger(const json& v, TriggerConfig& cfg) {
  Section s(v, "trigger");
  if (s.has("profile")) {
    std::string name;
    s.read("profile", name);
    cfg.profile = profile_from_name(name);
  }
  if (s.has("weights")) {
    Section w(s.at("weights"), "trigger.weights");
    for (Signal sig : kAllSignals) {
      const std::string key(to_string(sig));
      auto& slot = cfg.feature_weights[static_cast<std::size_t>(sig)];
      slot = w.number(key.c_str(), slot);
    }
    w.finish();
  }
  cfg.lambda = s.number("lambda", cfg.lambda);
  cfg.gate_floor = s.number("gate_floor", cfg.gate_floor);
  s.read("cross_check", cfg.cross_check_enabled);
  cfg.cross_check_boost = s.number("cross_check_boost", cfg.cross_check_boost);
  s.read("intent_saturation", cfg.intent_saturation);
  s.read("trajectory_saturation", cfg.trajectory_saturation);
  s.finish();
}

void read_fusion(const json& v, FusionSettings& cfg) {
  Section s(v, "fusion");
  if (s.has("normalizer")) {
    std::string mode;
    s.read("normalizer", mode);
    if (mode == "fit") {
      cfg.normalizer = NormalizerMode::kFit;
    } else if (mode == "frozen") {
      cfg.normalizer = NormalizerMode::kFrozen;
    } else {
      throw ConfigError("fusion.normalizer: expected fit or frozen");
    }
  }
  if (s.has("probs")) {
    const auto r = read_range(s.at("probs"), "fusion.probs");
    cfg.probs = {r.lo, r.hi};
  }
  if (s.has("frozen")) {
    Section f(s.at("frozen"), "fusion.frozen");
    if (f.has("static")) cfg.frozen.static_range = read_range(f.at("static"), "fusion.frozen.static");
    if (f.has("trigger")) {
      cfg.frozen.trigger_range = read_range(f.at("trigger"), "fusion.frozen.trigger");
    }
    f.finish();
  }
  if (s.has("grid")) {
    Section g(s.at("grid"), "fusion.grid");
    if (g.has("w_static")) cfg.grid.w_static = read_axis(g.at("w_static"), "fusion.grid.w_static");
    if (g.has("tau_esc")) cfg.grid.tau_esc = read_axis(g.at("tau_esc"), "fusion.grid.tau_esc");
    if (g.has("tau_block")) {
      cfg.grid.tau_block = read_axis(g.at("tau_block"), "fusion.grid.tau_block");
    }
    g.finish();
  }
  if (s.has("selector")) {
    std::string name;
    s.read("selector", name);
    cfg.selector = selector_from(name);
  }
  s.read("decimals", cfg.selection.decimals);
  s.read("threads", cfg.selection.threads);
  if (s.has("continuous_risk_first")) {
    cfg.selection.continuous_risk_first =
        read_rule(s.at("continuous_risk_first"), "fusion.continuous_risk_first");
  }
  if (s.has("threshold_first")) {
    cfg.selection.threshold_first = read_rule(s.at("threshold_first"), "fusion.threshold_first");
  }
  s.finish();
}

void read_metrics(const json& v, RunConfig& cfg) {
  Section s(v, "metrics");
  cfg.metrics.rank.hi_thresh = s.number("hi_thresh", cfg.metrics.rank.hi_thresh);
  cfg.metrics.rank.k = s.number("k", cfg.metrics.rank.k);
  s.read("bins", cfg.metrics.bins);
  if (s.has("weight_mode")) {
    std::string mode;
    s.read("weight_mode", mode);
    cfg.metrics.weight_mode = weight_mode_from(mode);
  }
  if (s.has("group_by")) {
    std::vector<std::string> keys;
    s.read("group_by", keys);
    cfg.group_keys.clear();
    for (const auto& k : keys) cfg.group_keys.push_back(group_key_from(k));
  }
  if (s.has("mixes")) cfg.mixes = read_axis(s.at("mixes"), "metrics.mixes");
  s.finish();
}

void read_gen(const json& v, GenSpec& gen) {
  Section s(v, "gen");
  s.read("total_records", gen.total_records);
  if (s.has("split_ratios")) {
    const auto ratios = read_axis(s.at("split_ratios"), "gen.split_ratios");
    if (ratios.size() != kNumSplits) throw ConfigError("gen.split_ratios: expected 4 values");
    std::copy(ratios.begin(), ratios.end(), gen.split_ratios.begin());
  }
  if (s.has("family_mix")) {
    Section m(s.at("family_mix"), "gen.family_mix");
    gen.family_mix.clear();
    for (AttackFamily f : kAllFamilies) {
      const std::string key(to_string(f));
      if (m.has(key.c_str())) gen.family_mix[f] = m.number(key.c_str(), 0.0);
    }
    m.finish();
  }
  s.read("skill_pool_size", gen.skill_pool_size);
  gen.blend_mix = s.number("blend_mix", gen.blend_mix);
  gen.mutation_rate = s.number("mutation_rate", gen.mutation_rate);
  gen.neutralization_rate = s.number("neutralization_rate", gen.neutralization_rate);
  s.read("ipi_supply", gen.ipi_supply);
  if (s.has("heuristic")) {
    Section h(s.at("heuristic"), "gen.heuristic");
    if (h.has("family_base")) {
      Section b(h.at("family_base"), "gen.heuristic.family_base");
      for (AttackFamily f : kAllFamilies) {
        const std::string key(to_string(f));
        gen.heuristic.family_base[f] = b.number(key.c_str(), gen.heuristic.family_base[f]);
      }
      b.finish();
    }
    gen.heuristic.tier_coef = h.number("tier_coef", gen.heuristic.tier_coef);
    gen.heuristic.perm_coef = h.number("perm_coef", gen.heuristic.perm_coef);
    gen.heuristic.context_coef = h.number("context_coef", gen.heuristic.context_coef);
    h.finish();
  }
  s.finish();
}

void read_baselines(const json& v, DenylistConfig& deny) {
  Section s(v, "baselines");
  if (s.has("denylist")) {
    Section d(s.at("denylist"), "baselines.denylist");
    if (d.has("banned_permissions")) {
      std::vector<std::string> names;
      d.read("banned_permissions", names);
      deny.banned_permissions.clear();
      for (const auto& n : names) {
        deny.banned_permissions.insert(permission_from(n, "baselines.denylist.banned_permissions"));
      }
    }
    d.read("banned_tokens", deny.banned_tokens);
    deny.hit_score = d.number("hit_score", deny.hit_score);
    deny.miss_score = d.number("miss_score", deny.miss_score);
    d.finish();
  }
  s.finish();
}

ordered_json range_json(const ChannelRange& r) { return ordered_json::array({r.lo, r.hi}); }

}  // namespace

std::string PathConfig::corpus() const {
  return corpus_dir.empty() ? join_dir(out_dir, "corpus") : corpus_dir;
}
std::string PathConfig::scores() const {
  return score_dir.empty() ? join_dir(out_dir, "scores") : score_dir;
}
std::string PathConfig::policies() const {
  return policy_dir.empty() ? join_dir(out_dir, "policy") : policy_dir;
}
std::string PathConfig::reports() const {
  return report_dir.empty() ? join_dir(out_dir, "reports") : report_dir;
}

void RunConfig::apply_seed(std::uint64_t s) {
  seed = s;
  gen.rng_seed = s;
  metrics.rank.tie_seed = s;
}

void RunConfig::validate() const {
  static_prior.validate();
  trigger.validate();
  denylist.validate();
  try {
    gen.validate();
  } catch (const GenerationError& e) {
    throw ConfigError(std::string("gen: ") + e.what());
  }
  if (!(fusion.probs.first > 0.0 && fusion.probs.first < fusion.probs.second &&
        fusion.probs.second < 1.0)) {
    throw ConfigError("fusion.probs: need 0 < lo < hi < 1");
  }
  if (fusion.frozen.static_range.lo >= fusion.frozen.static_range.hi ||
      fusion.frozen.trigger_range.lo >= fusion.frozen.trigger_range.hi) {
    throw ConfigError("fusion.frozen: need lo < hi per channel");
  }
  if (fusion.grid.w_static.empty() || fusion.grid.tau_esc.empty() || fusion.grid.tau_block.empty()) {
    throw ConfigError("fusion.grid: axes must be non-empty");
  }
  for (double w : fusion.grid.w_static) {
    if (!(w >= 0.0 && w <= 1.0)) throw ConfigError("fusion.grid.w_static: values must lie in [0, 1]");
  }
  if (fusion.selection.decimals < 0 || fusion.selection.decimals > 12) {
    throw ConfigError("fusion.decimals: expected 0..12");
  }
  if (metrics.bins < 1) throw ConfigError("metrics.bins must be at least 1");
  if (!(metrics.rank.k > 0.0 && metrics.rank.k <= 1.0)) throw ConfigError("metrics.k must lie in (0, 1]");
  for (double m : mixes) {
    if (!(m >= 0.0 && m <= 1.0)) throw ConfigError("metrics.mixes: values must lie in [0, 1]");
  }
}

RunConfig config_from_json(const json& doc, const std::string& base_dir) {
  RunConfig cfg;
  Section root(doc, "config");
  std::uint64_t seed = cfg.seed;
  root.read("seed", seed);
  if (root.has("paths")) read_paths(root.at("paths"), cfg.paths, base_dir);
  if (root.has("static_prior")) read_static_prior(root.at("static_prior"), cfg.static_prior);
  if (root.has("trigger")) read_trigger(root.at("trigger"), cfg.trigger);
  if (root.has("fusion")) read_fusion(root.at("fusion"), cfg.fusion);
  if (root.has("metrics")) read_metrics(root.at("metrics"), cfg);
  if (root.has("gen")) read_gen(root.at("gen"), cfg.gen);
  if (root.has("baselines")) read_baselines(root.at("baselines"), cfg.denylist);
  root.finish();

  if (!cfg.paths.intent_rules.empty()) {
    cfg.trigger.intent_rules = read_rule_lines(cfg.paths.intent_rules);
  }
  if (!cfg.paths.sensitive_args.empty()) {
    cfg.trigger.sensitive_arg_patterns = read_weighted_rules(cfg.paths.sensitive_args);
  }
  if (!cfg.paths.semantic_lexicon.empty()) {
    cfg.static_prior.semantic_lexicon = read_rule_lines(cfg.paths.semantic_lexicon);
  }
  cfg.gen.synonyms_path = cfg.paths.synonyms;
  cfg.apply_seed(seed);
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  const auto base = fs::path(path).parent_path();
  return config_from_json(doc, base.empty() ? std::string(".") : base.string());
}

ordered_json config_to_json(const RunConfig& cfg) {
  ordered_json doc;
  doc["seed"] = cfg.seed;

  ordered_json sp;
  for (const auto& [p, w] : cfg.static_prior.permission_weights) {
    sp["permission_weights"][std::string(to_string(p))] = w;
  }
  for (const auto& [p, w] : cfg.static_prior.provenance_weights) {
    sp["provenance_weights"][std::string(to_string(p))] = w;
  }
  sp["score_cap"] = cfg.static_prior.score_cap;
  sp["perm_scale"] = cfg.static_prior.perm_scale;
  sp["semantic_scale"] = cfg.static_prior.semantic_scale;
  sp["semantic_lexicon"] = cfg.static_prior.semantic_lexicon;
  doc["static_prior"] = sp;

  ordered_json tr;
  tr["profile"] = profile_name(cfg.trigger.profile);
  for (Signal s : kAllSignals) tr["weights"][std::string(to_string(s))] = cfg.trigger.weight(s);
  tr["lambda"] = cfg.trigger.lambda;
  tr["gate_floor"] = cfg.trigger.gate_floor;
  tr["cross_check"] = cfg.trigger.cross_check_enabled;
  tr["cross_check_boost"] = cfg.trigger.cross_check_boost;
  tr["intent_saturation"] = cfg.trigger.intent_saturation;
  tr["trajectory_saturation"] = cfg.trigger.trajectory_saturation;
  tr["intent_rules"] = cfg.trigger.intent_rules;
  ordered_json patterns = ordered_json::array();
  for (const auto& [p, sev] : cfg.trigger.sensitive_arg_patterns) {
    patterns.push_back(ordered_json::array({p, sev}));
  }
  tr["sensitive_arg_patterns"] = patterns;
  doc["trigger"] = tr;

  ordered_json fu;
  fu["normalizer"] = cfg.fusion.normalizer == NormalizerMode::kFit ? "fit" : "frozen";
  fu["probs"] = ordered_json::array({cfg.fusion.probs.first, cfg.fusion.probs.second});
  fu["frozen"]["static"] = range_json(cfg.fusion.frozen.static_range);
  fu["frozen"]["trigger"] = range_json(cfg.fusion.frozen.trigger_range);
  fu["grid"]["w_static"] = cfg.fusion.grid.w_static;
  fu["grid"]["tau_esc"] = cfg.fusion.grid.tau_esc;
  fu["grid"]["tau_block"] = cfg.fusion.grid.tau_block;
  fu["selector"] = std::string(to_string(cfg.fusion.selector));
  fu["decimals"] = cfg.fusion.selection.decimals;
  for (const auto& c : cfg.fusion.selection.continuous_risk_first) {
    fu["continuous_risk_first"].push_back(criterion_text(c));
  }
  for (const auto& c : cfg.fusion.selection.threshold_first) {
    fu["threshold_first"].push_back(criterion_text(c));
  }
  doc["fusion"] = fu;

  ordered_json me;
  me["hi_thresh"] = cfg.metrics.rank.hi_thresh;
  me["k"] = cfg.metrics.rank.k;
  me["bins"] = cfg.metrics.bins;
  me["weight_mode"] = std::string(to_string(cfg.metrics.weight_mode));
  me["group_by"] = ordered_json::array();
  for (GroupKey k : cfg.group_keys) me["group_by"].push_back(std::string(to_string(k)));
  me["mixes"] = cfg.mixes;
  doc["metrics"] = me;

  ordered_json ge;
  ge["total_records"] = cfg.gen.total_records;
  ge["split_ratios"] = cfg.gen.split_ratios;
  for (const auto& [f, w] : cfg.gen.family_mix) ge["family_mix"][std::string(to_string(f))] = w;
  ge["skill_pool_size"] = cfg.gen.resolved_pool_size();
  ge["blend_mix"] = cfg.gen.blend_mix;
  ge["mutation_rate"] = cfg.gen.mutation_rate;
  ge["neutralization_rate"] = cfg.gen.neutralization_rate;
  ge["ipi_supply"] = cfg.gen.ipi_supply;
  for (const auto& [f, b] : cfg.gen.heuristic.family_base) {
    ge["heuristic"]["family_base"][std::string(to_string(f))] = b;
  }
  ge["heuristic"]["tier_coef"] = cfg.gen.heuristic.tier_coef;
  ge["heuristic"]["perm_coef"] = cfg.gen.heuristic.perm_coef;
  ge["heuristic"]["context_coef"] = cfg.gen.heuristic.context_coef;
  const SynonymTable synonyms =
      cfg.gen.synonyms_path.empty() ? default_synonyms() : read_synonyms(cfg.gen.synonyms_path);
  ge["synonyms"] = synonyms;
  doc["gen"] = ge;

  ordered_json bl;
  for (Permission p : cfg.denylist.banned_permissions) {
    bl["denylist"]["banned_permissions"].push_back(std::string(to_string(p)));
  }
  bl["denylist"]["banned_tokens"] = cfg.denylist.banned_tokens;
  bl["denylist"]["hit_score"] = cfg.denylist.hit_score;
  bl["denylist"]["miss_score"] = cfg.denylist.miss_score;
  doc["baselines"] = bl;
  return doc;
}

std::string config_hash(const RunConfig& cfg) {
  // The selector names which policy file a command reads or writes; each
  // policy records its own selector.
  auto doc = config_to_json(cfg);
  doc["fusion"].erase("selector");
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(doc.dump())));
  return buf;
}

}  // namespace invaudit
