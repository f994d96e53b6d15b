#include "invaudit/pipeline.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "invaudit/baselines.hpp"
#include "invaudit/bench_gen.hpp"
#include "invaudit/rng.hpp"
#include "invaudit/static_prior.hpp"
#include "invaudit/trigger.hpp"

namespace invaudit {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

const std::map<std::string, std::string, std::less<>>& scorer_aliases() {
  static const std::map<std::string, std::string, std::less<>> aliases = {
      {"static_scanner", "agent_audit"}, {"text_prov_graph_traj", "contextual"}};
  return aliases;
}

std::string canonical_scorer(std::string_view name) {
  const auto& aliases = scorer_aliases();
  if (const auto it = aliases.find(name); it != aliases.end()) return it->second;
  for (const auto& s : scorer_names()) {
    if (s == name) return s;
  }
  std::string known;
  for (const auto& s : scorer_names()) known += (known.empty() ? "" : ", ") + s;
  throw UsageError("unknown scorer '" + std::string(name) + "' (known: " + known + ")");
}

bool is_profile_scorer(std::string_view s) {
  return s == "text_only" || s == "contextual" || s == "no_prov" || s == "no_traj" ||
         s == "no_taint";
}

std::string fmt(double v, int decimals = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

std::string pad(std::string s, std::size_t width, bool left_align) {
  if (s.size() >= width) return s;
  const std::string fill(width - s.size(), ' ');
  return left_align ? s + fill : fill + s;
}

std::string header_line(const RunConfig& cfg) {
  return "# config_hash=" + config_hash(cfg) + " seed=" + std::to_string(cfg.seed) + "\n";
}

void write_text(const std::string& path, const std::string& content) {
  fs::create_directories(fs::path(path).parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string percent_label(double k) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g%%", k * 100.0);
  return buf;
}

ordered_json rank_json(const RankMetrics& r) {
  ordered_json j;
  j["hr_auprc"] = r.hr_auprc;
  j["recall_at_k"] = r.recall_at_k;
  j["precision_at_k"] = r.precision_at_k;
  j["spearman"] = r.spearman;
  if (r.no_positives) j["no_positives"] = true;
  if (r.degenerate_spearman) j["degenerate_spearman"] = true;
  return j;
}

ordered_json report_json(const EvalReport& r) {
  ordered_json j;
  j["scorer"] = r.scorer;
  j["rank"] = rank_json(r.rank);
  j["calibration"] = {{"ece", r.calibration.ece}, {"wmae", r.calibration.wmae}};
  if (r.decision) {
    j["decision"] = {{"macro_f1", r.decision->macro_f1},
                     {"malicious_recall", r.decision->malicious_recall},
                     {"false_block_rate", r.decision->false_block_rate},
                     {"task_completion", r.decision->task_completion}};
  }
  for (const auto& g : r.grouped) {
    ordered_json gj;
    gj["weighted_wmae"] = g.weighted_wmae;
    gj["weighted_spearman"] = g.weighted_spearman;
    for (const auto& row : g.rows) {
      gj["groups"].push_back({{"group", row.group},
                              {"n", row.n},
                              {"hr_auprc", row.rank.hr_auprc},
                              {"spearman", row.rank.spearman},
                              {"ece", row.calibration.ece},
                              {"wmae", row.calibration.wmae}});
    }
    j["grouped"][std::string(to_string(g.key))] = gj;
  }
  return j;
}

std::string format_grouped(const GroupedReport& g, std::string_view scorer) {
  std::string out = "Grouped by " + std::string(to_string(g.key)) + " (" + scorer_label(scorer) +
                    ")\n";
  out += pad("Group", 24, true) + pad("N", 6, false) + pad("HR-AUPRC", 10, false) +
         pad("Spearman", 10, false) + pad("ECE", 9, false) + pad("W-MAE", 9, false) + "\n";
  for (const auto& row : g.rows) {
    out += pad(row.group, 24, true) + pad(std::to_string(row.n), 6, false) +
           pad(fmt(row.rank.hr_auprc), 10, false) + pad(fmt(row.rank.spearman), 10, false) +
           pad(fmt(row.calibration.ece), 9, false) + pad(fmt(row.calibration.wmae), 9, false) +
           "\n";
  }
  out += "size-weighted W-MAE " + fmt(g.weighted_wmae) + ", size-weighted Spearman " +
         fmt(g.weighted_spearman) + "\n";
  return out;
}

std::string format_decision(const DecisionMetrics& d) {
  std::string out = pad("Macro-F1", 10, false) + pad("Mal.Recall", 12, false) +
                    pad("FalseBlock", 12, false) + pad("TaskCompl.", 12, false) + "\n";
  out += pad(fmt(d.macro_f1), 10, false) + pad(fmt(d.malicious_recall), 12, false) +
         pad(fmt(d.false_block_rate), 12, false) + pad(fmt(d.task_completion), 12, false) + "\n";
  return out;
}

std::size_t positives(const std::vector<InvocationRecord>& records, double hi) {
  std::size_t n = 0;
  for (const auto& r : records) n += r.risk_target >= hi ? 1 : 0;
  return n;
}

std::string policy_summary(const FusionPolicy& p) {
  return "w_static=" + fmt(p.w_static, 2) + " tau_esc=" + fmt(p.tau_esc, 2) +
         " tau_block=" + fmt(p.tau_block, 2);
}

// Rows re-scored against retargeted records; scores do not depend on targets.
struct MixTable {
  double mix = 0.0;
  std::size_t positives = 0;
  std::vector<MethodRow> rows;
};

std::vector<MixTable> mixture_replay(const RunConfig& cfg,
                                     const std::vector<InvocationRecord>& records,
                                     std::string_view split, const FusionPolicy& policy) {
  std::vector<MixTable> out;
  for (auto& [mix, retargeted] : target_mixture_sweep(records, cfg.mixes, cfg.gen.heuristic)) {
    MixTable t;
    t.mix = mix;
    t.positives = positives(retargeted, cfg.metrics.rank.hi_thresh);
    t.rows = evaluate_methods(cfg, retargeted, split, policy);
    out.push_back(std::move(t));
  }
  return out;
}

std::string format_mix_tables(const std::vector<MixTable>& tables, double k) {
  std::string out;
  for (const auto& t : tables) {
    out += "\nTarget mixture " + fmt(t.mix, 2) + " (high-risk positives: " +
           std::to_string(t.positives) + ")\n";
    out += format_method_table(t.rows, k);
  }
  return out;
}

PolicyChoice read_policy(const std::string& path, const RunConfig& cfg, std::ostream* warn,
                         std::string* warning) {
  if (!fs::exists(path)) throw UsageError("policy file not found: " + path);
  std::string hash;
  PolicyChoice choice = policy_from_json(read_text(path), &hash);
  if (hash != config_hash(cfg)) {
    const std::string msg = "warning: policy config_hash " + hash +
                            " does not match the current config " + config_hash(cfg);
    if (warn != nullptr) *warn << msg << "\n";
    if (warning != nullptr) *warning = msg;
  }
  return choice;
}

}  // namespace

int run_guarded(const std::function<void()>& fn, std::ostream& err) {
  try {
    fn();
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
  } catch (const GenerationError& e) {
    err << "generation error: " << e.what() << "\n";
  } catch (const ParseError& e) {
    err << "parse error at offset " << e.offset() << ": " << e.what() << "\n";
  } catch (const SchemaError& e) {
    err << "schema error: " << e.what() << "\n";
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitUser;
}

const std::vector<std::string>& scorer_names() {
  static const std::vector<std::string> names = {
      "no_audit",   "static_prior", "denylist", "agent_audit", "text_only", "contextual",
      "no_prov",    "no_traj",      "no_taint", "fusion",      "oracle"};
  return names;
}

std::string scorer_label(std::string_view scorer) {
  static const std::map<std::string, std::string, std::less<>> labels = {
      {"no_audit", "No Audit"},     {"static_prior", "Static Prior"}, {"denylist", "Denylist"},
      {"agent_audit", "Agent-Audit"}, {"text_only", "Text-Only"},     {"contextual", "Contextual"},
      {"no_prov", "w/o Provenance"}, {"no_traj", "w/o Trajectory"},   {"no_taint", "w/o Taint"},
      {"fusion", "Fusion"},          {"oracle", "Oracle"}};
  const auto it = labels.find(scorer);
  return it == labels.end() ? std::string(scorer) : it->second;
}

ChannelScores score_channels(const std::vector<InvocationRecord>& records, const RunConfig& cfg) {
  ChannelScores out;
  out.static_scores.reserve(records.size());
  out.trigger_scores.reserve(records.size());
  for (const auto& r : records) {
    const double s = static_capability_score(r.skill, cfg.static_prior);
    out.static_scores.push_back(s);
    out.trigger_scores.push_back(score_invocation(r, s, cfg.trigger));
  }
  return out;
}

std::vector<double> scorer_scores(std::string_view scorer,
                                  const std::vector<InvocationRecord>& records,
                                  const RunConfig& cfg, const FusionPolicy* policy) {
  const std::string name = canonical_scorer(scorer);
  std::vector<double> out;
  out.reserve(records.size());
  if (name == "fusion") {
    if (policy == nullptr) throw UsageError("scorer 'fusion' needs a policy file");
    const auto ch = score_channels(records, cfg);
    for (std::size_t i = 0; i < records.size(); ++i) {
      out.push_back(fuse(*policy, ch.static_scores[i], ch.trigger_scores[i]));
    }
    return out;
  }
  if (is_profile_scorer(name)) {
    const TriggerConfig tc = cfg.trigger.with_profile(profile_from_name(name));
    for (const auto& r : records) {
      out.push_back(score_invocation(r, static_capability_score(r.skill, cfg.static_prior), tc));
    }
    return out;
  }
  for (const auto& r : records) {
    if (name == "no_audit") {
      out.push_back(no_audit_score(r));
    } else if (name == "static_prior") {
      out.push_back(static_capability_score(r.skill, cfg.static_prior));
    } else if (name == "denylist") {
      out.push_back(denylist_score(r, cfg.denylist));
    } else if (name == "agent_audit") {
      out.push_back(static_scanner_score(r));
    } else {
      out.push_back(r.risk_target);  // oracle
    }
  }
  return out;
}

std::vector<Action> fusion_actions(const FusionPolicy& policy, const ChannelScores& channels) {
  std::vector<Action> out;
  out.reserve(channels.static_scores.size());
  for (std::size_t i = 0; i < channels.static_scores.size(); ++i) {
    out.push_back(decide(policy, fuse(policy, channels.static_scores[i], channels.trigger_scores[i])));
  }
  return out;
}

Normalizer calibration_normalizer(const RunConfig& cfg, const ChannelScores& val) {
  if (cfg.fusion.normalizer == NormalizerMode::kFrozen) {
    Normalizer n = cfg.fusion.frozen;
    n.probs = cfg.fusion.probs;
    return n;
  }
  return fit_normalizer(val.static_scores, val.trigger_scores, cfg.fusion.probs);
}

PolicyChoice calibrate(const RunConfig& cfg, const std::vector<InvocationRecord>& val_records,
                       Selector selector) {
  if (val_records.empty()) throw UsageError("validation split is empty");
  const auto channels = score_channels(val_records, cfg);
  const Normalizer normalizer = calibration_normalizer(cfg, channels);
  const auto candidates = enumerate_candidates(cfg.fusion.grid, normalizer);
  if (candidates.empty()) throw ConfigError("fusion.grid: no candidate has tau_block > tau_esc");
  SelectionSettings settings = cfg.fusion.selection;
  settings.metrics = cfg.metrics;
  return select_policy(candidates, val_records, channels.static_scores, channels.trigger_scores,
                       selector, settings);
}

std::vector<MethodRow> evaluate_methods(const RunConfig& cfg,
                                        const std::vector<InvocationRecord>& records,
                                        std::string_view split, const FusionPolicy& policy,
                                        bool with_groups) {
  static const char* const kMethods[] = {"no_audit",  "static_prior", "denylist", "agent_audit",
                                         "text_only", "contextual",   "fusion",   "oracle"};
  const auto channels = score_channels(records, cfg);
  std::vector<MethodRow> rows;
  for (const char* name : kMethods) {
    std::vector<double> scores;
    if (std::string_view(name) == "fusion") {
      for (std::size_t i = 0; i < records.size(); ++i) {
        scores.push_back(fuse(policy, channels.static_scores[i], channels.trigger_scores[i]));
      }
    } else {
      scores = scorer_scores(name, records, cfg, &policy);
    }
    std::optional<std::span<const Action>> actions;
    std::vector<Action> decided;
    if (std::string_view(name) == "fusion") {
      decided = fusion_actions(policy, channels);
      actions = std::span<const Action>(decided);
    }
    MethodRow row{name, evaluate_scores(records, scores, std::string(split), name, cfg.metrics,
                                        actions, false)};
    if (with_groups && (row.scorer == "contextual" || row.scorer == "fusion")) {
      for (GroupKey k : cfg.group_keys) {
        row.report.grouped.push_back(grouped_report(records, scores, k, cfg.metrics));
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_method_table(const std::vector<MethodRow>& rows, double k) {
  const std::string pct = percent_label(k);
  std::string out = pad("Method", 16, true) + pad("HR-AUPRC", 10, false) +
                    pad("Rec@" + pct, 10, false) + pad("Prec@" + pct, 10, false) +
                    pad("Spearman", 10, false) + pad("ECE", 9, false) + pad("W-MAE", 9, false) +
                    "\n";
  for (const auto& row : rows) {
    const auto& r = row.report;
    out += pad(scorer_label(row.scorer), 16, true) + pad(fmt(r.rank.hr_auprc), 10, false) +
           pad(fmt(r.rank.recall_at_k), 10, false) + pad(fmt(r.rank.precision_at_k), 10, false) +
           pad(fmt(r.rank.spearman), 10, false) + pad(fmt(r.calibration.ece), 9, false) +
           pad(fmt(r.calibration.wmae), 9, false) + "\n";
  }
  return out;
}

std::string split_file(const RunConfig& cfg, Split split) {
  return (fs::path(cfg.paths.corpus()) / (std::string(to_string(split)) + ".jsonl")).string();
}

std::vector<InvocationRecord> load_split(const RunConfig& cfg, Split split) {
  const std::string path = split_file(cfg, split);
  if (!fs::exists(path)) throw UsageError("corpus file not found: " + path + " (run gen first)");
  return read_corpus(path);
}

std::string policy_file(const RunConfig& cfg, Selector selector) {
  return (fs::path(cfg.paths.policies()) / (std::string(to_string(selector)) + ".json")).string();
}

std::string score_file(const RunConfig& cfg, std::string_view scorer, Split split) {
  return (fs::path(cfg.paths.scores()) /
          (std::string(to_string(split)) + "." + std::string(scorer) + ".jsonl"))
      .string();
}

std::string eval_file(const RunConfig& cfg, Split split, Selector selector, std::string_view ext) {
  return (fs::path(cfg.paths.reports()) / ("eval_" + std::string(to_string(split)) + "_" +
                                          std::string(to_string(selector)) + "." +
                                          std::string(ext)))
      .string();
}

GenResult cmd_gen(const RunConfig& cfg, bool resplit) {
  std::vector<InvocationRecord> records = generate_corpus(cfg.gen);
  if (resplit) records = assign_splits(std::move(records), cfg.gen);
  for (const auto& r : records) {
    try {
      check_record_invariants(r);
    } catch (const SchemaError& e) {
      throw std::runtime_error("generated record " + r.record_id + " is invalid: " + e.what());
    }
  }
  GenResult result;
  result.report = validate_corpus(records, cfg.gen.blend_mix);
  if (!result.report.violations.empty()) {
    const auto& v = result.report.violations.front();
    throw std::runtime_error("corpus validation failed with " +
                             std::to_string(result.report.violations.size()) +
                             " violation(s); first: " + std::string(to_string(v.kind)) + " " +
                             v.subject + ": " + v.detail);
  }

  fs::create_directories(cfg.paths.corpus());
  ordered_json manifest;
  manifest["config_hash"] = config_hash(cfg);
  manifest["seed"] = cfg.seed;
  manifest["total"] = records.size();
  for (Split split : kAllSplits) {
    std::vector<InvocationRecord> part;
    for (const auto& r : records) {
      if (r.split == split) part.push_back(r);
    }
    const std::string path = split_file(cfg, split);
    write_corpus(path, part);
    manifest["files"][std::string(to_string(split))] = {
        {"file", fs::path(path).filename().string()},
        {"records", part.size()},
        {"fnv1a64", hex64(fnv1a64(read_text(path)))}};
    result.files.push_back(path);
  }
  const std::string manifest_path = (fs::path(cfg.paths.corpus()) / "manifest.json").string();
  write_text(manifest_path, manifest.dump(2) + "\n");
  result.files.push_back(manifest_path);
  const std::string stats_path = (fs::path(cfg.paths.corpus()) / "stats.txt").string();
  write_text(stats_path, header_line(cfg) + format_corpus_table(result.report));
  result.files.push_back(stats_path);
  return result;
}

std::string cmd_score(const RunConfig& cfg, std::string_view scorer, Split split,
                      const std::string& policy_path) {
  const std::string name = canonical_scorer(scorer);
  const auto records = load_split(cfg, split);
  std::optional<PolicyChoice> choice;
  if (name == "fusion") {
    const std::string path =
        policy_path.empty() ? policy_file(cfg, cfg.fusion.selector) : policy_path;
    choice = read_policy(path, cfg, nullptr, nullptr);
  }
  const auto channels = score_channels(records, cfg);
  std::vector<double> trigger = channels.trigger_scores;
  if (is_profile_scorer(name)) trigger = scorer_scores(name, records, cfg);
  const auto scores = scorer_scores(name, records, cfg, choice ? &choice->policy : nullptr);

  ordered_json header;
  header["config_hash"] = config_hash(cfg);
  header["seed"] = cfg.seed;
  header["split"] = std::string(to_string(split));
  std::string out = header.dump() + "\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    ordered_json line;
    line["record_id"] = records[i].record_id;
    line["static"] = channels.static_scores[i];
    line["trigger"] = trigger[i];
    line["score"] = scores[i];
    out += line.dump() + "\n";
  }
  const std::string path = score_file(cfg, name, split);
  write_text(path, out);
  return path;
}

std::string cmd_calibrate(const RunConfig& cfg, Selector selector) {
  const auto val = load_split(cfg, Split::kVal);
  const PolicyChoice choice = calibrate(cfg, val, selector);
  const std::string path = policy_file(cfg, selector);
  write_text(path, policy_to_json(choice, config_hash(cfg), cfg.seed));
  return path;
}

std::vector<std::string> cmd_eval(const RunConfig& cfg, const std::string& policy_path, Split split,
                                  std::ostream* warn) {
  std::string warning;
  const PolicyChoice choice = read_policy(policy_path, cfg, warn, &warning);
  const auto records = load_split(cfg, split);
  if (records.empty()) throw UsageError("split '" + std::string(to_string(split)) + "' is empty");
  const std::string split_name(to_string(split));
  const auto rows = evaluate_methods(cfg, records, split_name, choice.policy, true);
  const auto mixes = mixture_replay(cfg, records, split_name, choice.policy);

  std::string text = header_line(cfg);
  if (!warning.empty()) text += "# " + warning + "\n";
  text += "# split=" + split_name + " n=" + std::to_string(records.size()) +
          " high_risk_positives=" + std::to_string(positives(records, cfg.metrics.rank.hi_thresh)) +
          "\n";
  text += "# policy selector=" + std::string(to_string(choice.selector)) + " " +
          policy_summary(choice.policy) + "\n\n";
  text += format_method_table(rows, cfg.metrics.rank.k);
  for (const auto& row : rows) {
    if (row.report.decision) {
      text += "\nFusion decisions\n" + format_decision(*row.report.decision);
    }
  }
  for (const auto& row : rows) {
    for (const auto& g : row.report.grouped) text += "\n" + format_grouped(g, row.scorer);
  }
  text += format_mix_tables(mixes, cfg.metrics.rank.k);

  ordered_json j;
  j["config_hash"] = config_hash(cfg);
  j["seed"] = cfg.seed;
  j["split"] = split_name;
  j["records"] = records.size();
  j["policy"] = {{"selector", std::string(to_string(choice.selector))},
                 {"w_static", choice.policy.w_static},
                 {"tau_esc", choice.policy.tau_esc},
                 {"tau_block", choice.policy.tau_block}};
  if (!warning.empty()) j["warning"] = warning;
  for (const auto& row : rows) j["methods"].push_back(report_json(row.report));
  for (const auto& t : mixes) {
    ordered_json mj;
    mj["mix"] = t.mix;
    mj["positives"] = t.positives;
    for (const auto& row : t.rows) mj["methods"].push_back(report_json(row.report));
    j["mixtures"].push_back(mj);
  }

  const std::string txt_path = eval_file(cfg, split, choice.selector, "txt");
  const std::string json_path = eval_file(cfg, split, choice.selector, "json");
  write_text(txt_path, text);
  write_text(json_path, j.dump(2) + "\n");
  return {txt_path, json_path};
}

std::vector<std::string> cmd_report(const RunConfig& cfg, std::ostream* warn) {
  std::vector<std::string> files;
  std::map<Selector, PolicyChoice> choices;
  for (Selector s : {Selector::kContinuousRiskFirst, Selector::kThresholdFirst}) {
    const std::string path = policy_file(cfg, s);
    if (!fs::exists(path)) files.push_back(cmd_calibrate(cfg, s));
    choices[s] = read_policy(path, cfg, warn, nullptr);
  }
  const PolicyChoice& main = choices.at(cfg.fusion.selector);
  const double k = cfg.metrics.rank.k;

  std::string text = header_line(cfg);
  text += "# fusion policy: selector=" + std::string(to_string(main.selector)) + " " +
          policy_summary(main.policy) + "\n";

  const auto all = [&] {
    std::vector<InvocationRecord> records;
    for (Split s : kAllSplits) {
      auto part = load_split(cfg, s);
      records.insert(records.end(), part.begin(), part.end());
    }
    return records;
  }();
  text += "\nCorpus statistics\n" + format_corpus_table(validate_corpus(all, cfg.gen.blend_mix));

  for (Split split : {Split::kTest, Split::kOod}) {
    const auto records = load_split(cfg, split);
    if (records.empty()) continue;
    const std::string name(to_string(split));
    text += "\nMain results: " + name + " (n=" + std::to_string(records.size()) + ")\n";
    text += format_method_table(evaluate_methods(cfg, records, name, main.policy), k);

    std::vector<MethodRow> ablation;
    for (const char* p : {"contextual", "no_prov", "no_traj", "no_taint", "text_only"}) {
      const auto scores = scorer_scores(p, records, cfg);
      ablation.push_back({p, evaluate_scores(records, scores, name, p, cfg.metrics)});
    }
    text += "\nContext ablations: " + name + "\n" + format_method_table(ablation, k);
  }

  text += "\nValidation-selected operating points\n";
  text += pad("Selector", 24, true) + pad("w_static", 9, false) + pad("tau_esc", 9, false) +
          pad("tau_block", 10, false) + pad("HR-AUPRC", 10, false) + pad("ECE", 9, false) +
          pad("Macro-F1", 10, false) + pad("Mal.Recall", 12, false) +
          pad("FalseBlock", 12, false) + pad("TaskCompl.", 12, false) + "\n";
  for (const auto& [sel, c] : choices) {
    const auto& v = c.validation;
    text += pad(std::string(to_string(sel)), 24, true) + pad(fmt(c.policy.w_static, 2), 9, false) +
            pad(fmt(c.policy.tau_esc, 2), 9, false) + pad(fmt(c.policy.tau_block, 2), 10, false) +
            pad(fmt(v.rank.hr_auprc), 10, false) + pad(fmt(v.calibration.ece), 9, false) +
            pad(fmt(v.decision.macro_f1), 10, false) +
            pad(fmt(v.decision.malicious_recall), 12, false) +
            pad(fmt(v.decision.false_block_rate), 12, false) +
            pad(fmt(v.decision.task_completion), 12, false) + "\n";
  }

  for (Split split : {Split::kTest, Split::kOod}) {
    const auto records = load_split(cfg, split);
    if (records.empty()) continue;
    const std::string name(to_string(split));
    text += "\nTarget-mixture replay: " + name + "\n";
    text += format_mix_tables(mixture_replay(cfg, records, name, main.policy), k);
  }

  const std::string path = (fs::path(cfg.paths.reports()) / "summary.txt").string();
  write_text(path, text);
  files.push_back(path);
  return files;
}

}  // namespace invaudit
