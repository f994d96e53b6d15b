#include "invaudit/record.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace invaudit {

namespace {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

template <typename E, std::size_t N>
struct EnumTable {
  std::array<std::pair<E, std::string_view>, N> entries;

  std::string_view name(E e) const {
    for (const auto& [value, text] : entries) {
      if (value == e) return text;
    }
    return "?";
  }

  E parse(std::string_view s, const std::string& field) const {
    for (const auto& [value, text] : entries) {
      if (text == s) return value;
    }
    throw SchemaError(field, "unknown value '" + std::string(s) + "'");
  }
};

constexpr EnumTable<Permission, 7> kPermissionNames{{{
    {Permission::kCodeExecution, "code_execution"},
    {Permission::kDatabase, "database"},
    {Permission::kFileRead, "file_read"},
    {Permission::kFileWrite, "file_write"},
    {Permission::kNetwork, "network"},
    {Permission::kEmail, "email"},
    {Permission::kFileSystem, "file_system"},
}}};

constexpr EnumTable<Provenance, 3> kProvenanceNames{{{
    {Provenance::kOfficial, "official"},
    {Provenance::kCommunity, "community"},
    {Provenance::kUnverified, "unverified"},
}}};

constexpr EnumTable<StepLabel, 3> kLabelNames{{{
    {StepLabel::kTrusted, "trusted"},
    {StepLabel::kExternal, "external"},
    {StepLabel::kTainted, "tainted"},
}}};

constexpr EnumTable<Sink, 3> kSinkNames{{{
    {Sink::kCodeExecution, "code_execution"},
    {Sink::kFileWrite, "file_write"},
    {Sink::kOutboundMessage, "outbound_message"},
}}};

constexpr EnumTable<AttackFamily, 7> kFamilyNames{{{
    {AttackFamily::kBenign, "benign"},
    {AttackFamily::kDirectMalicious, "direct_malicious"},
    {AttackFamily::kDataExfiltration, "data_exfiltration"},
    {AttackFamily::kToolSelectionHijack, "tool_selection_hijack"},
    {AttackFamily::kCapabilityAbuse, "capability_abuse"},
    {AttackFamily::kMultiTurnEscalation, "multi_turn_escalation"},
    {AttackFamily::kIndirectPromptInjection, "indirect_prompt_injection"},
}}};

constexpr EnumTable<EvidenceTier, 3> kTierNames{{{
    {EvidenceTier::kRequestOnly, "request_only"},
    {EvidenceTier::kContextLight, "context_light"},
    {EvidenceTier::kContextRich, "context_rich"},
}}};

constexpr EnumTable<Action, 3> kActionNames{{{
    {Action::kAllow, "allow"},
    {Action::kEscalate, "escalate"},
    {Action::kBlock, "block"},
}}};

constexpr EnumTable<Split, 4> kSplitNames{{{
    {Split::kTrain, "train"},
    {Split::kVal, "val"},
    {Split::kTest, "test"},
    {Split::kOod, "ood"},
}}};

const std::set<std::string_view> kKnownFields = {
    "record_id",      "request_text",     "skill", "context",
    "attack_family",  "evidence_tier",    "canonical_action",
    "lineage",        "risk_target",      "split"};

const Json& require(const Json& obj, const char* key, const std::string& path) {
  const auto it = obj.find(key);
  if (it == obj.end()) {
    throw SchemaError(path.empty() ? key : path + "." + key, "missing required field");
  }
  return *it;
}

std::string get_string(const Json& obj, const char* key, const std::string& path) {
  const Json& v = require(obj, key, path);
  if (!v.is_string()) {
    throw SchemaError(path.empty() ? key : path + "." + key, "expected string");
  }
  return v.get<std::string>();
}

const Json& get_object(const Json& obj, const char* key, const std::string& path) {
  const Json& v = require(obj, key, path);
  if (!v.is_object()) {
    throw SchemaError(path.empty() ? key : path + "." + key, "expected object");
  }
  return v;
}

const Json& get_array(const Json& obj, const char* key, const std::string& path) {
  const Json& v = require(obj, key, path);
  if (!v.is_array()) {
    throw SchemaError(path.empty() ? key : path + "." + key, "expected array");
  }
  return v;
}

std::size_t get_index(const Json& v, const std::string& field) {
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw SchemaError(field, "expected non-negative integer");
  }
  return static_cast<std::size_t>(v.get<long long>());
}

SkillMetadata parse_skill(const Json& obj) {
  SkillMetadata skill;
  skill.skill_id = get_string(obj, "skill_id", "skill");
  skill.name = get_string(obj, "name", "skill");
  skill.description = get_string(obj, "description", "skill");
  for (const Json& p : get_array(obj, "permissions", "skill")) {
    if (!p.is_string()) throw SchemaError("skill.permissions", "expected string");
    skill.permissions.insert(permission_from(p.get<std::string>(), "skill.permissions"));
  }
  skill.provenance = provenance_from(get_string(obj, "provenance", "skill"), "skill.provenance");
  return skill;
}

RuntimeContext parse_context(const Json& obj) {
  RuntimeContext ctx;
  for (const Json& step : get_array(obj, "trajectory", "context")) {
    if (!step.is_object()) throw SchemaError("context.trajectory", "expected object");
    TrajectoryStep s;
    s.tool_name = get_string(step, "tool_name", "context.trajectory");
    const Json& flag = require(step, "risk_flag", "context.trajectory");
    if (!flag.is_boolean()) throw SchemaError("context.trajectory.risk_flag", "expected boolean");
    s.risk_flag = flag.get<bool>();
    s.summary = get_string(step, "summary", "context.trajectory");
    ctx.trajectory.push_back(std::move(s));
  }
  for (const auto& [key, value] : get_object(obj, "provenance_labels", "context").items()) {
    std::size_t idx = 0;
    const auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), idx);
    if (ec != std::errc{} || ptr != key.data() + key.size()) {
      throw SchemaError("context.provenance_labels", "key '" + key + "' is not a step index");
    }
    if (!value.is_string()) throw SchemaError("context.provenance_labels", "expected string");
    ctx.provenance_labels[idx] =
        step_label_from(value.get<std::string>(), "context.provenance_labels");
  }
  for (const Json& edge : get_array(obj, "dependency_edges", "context")) {
    if (!edge.is_array() || edge.size() != 2) {
      throw SchemaError("context.dependency_edges", "expected [source, target] pair");
    }
    ctx.dependency_edges.push_back({get_index(edge[0], "context.dependency_edges"),
                                    get_index(edge[1], "context.dependency_edges")});
  }
  for (const auto& [key, value] : get_object(obj, "policy_state", "context").items()) {
    if (!value.is_string()) throw SchemaError("context.policy_state", "expected string values");
    ctx.policy_state[key] = value.get<std::string>();
  }
  for (const Json& s : get_array(obj, "pending_sinks", "context")) {
    if (!s.is_string()) throw SchemaError("context.pending_sinks", "expected string");
    ctx.pending_sinks.insert(sink_from(s.get<std::string>(), "context.pending_sinks"));
  }
  return ctx;
}

Lineage parse_lineage(const Json& obj) {
  Lineage lin;
  lin.seed_id = get_string(obj, "seed_id", "lineage");
  lin.source_group = get_string(obj, "source_group", "lineage");
  const auto it = obj.find("parent_record");
  if (it != obj.end() && !it->is_null()) {
    if (!it->is_string()) throw SchemaError("lineage.parent_record", "expected string or null");
    lin.parent_record = it->get<std::string>();
  }
  const Json& depth = require(obj, "mutation_depth", "lineage");
  if (!depth.is_number_integer() || depth.get<long long>() < 0) {
    throw SchemaError("lineage.mutation_depth", "expected non-negative integer");
  }
  lin.mutation_depth = static_cast<int>(depth.get<long long>());
  return lin;
}

}  // namespace

std::string_view to_string(Permission p) { return kPermissionNames.name(p); }
std::string_view to_string(Provenance p) { return kProvenanceNames.name(p); }
std::string_view to_string(StepLabel l) { return kLabelNames.name(l); }
std::string_view to_string(Sink s) { return kSinkNames.name(s); }
std::string_view to_string(AttackFamily f) { return kFamilyNames.name(f); }
std::string_view to_string(EvidenceTier t) { return kTierNames.name(t); }
std::string_view to_string(Action a) { return kActionNames.name(a); }
std::string_view to_string(Split s) { return kSplitNames.name(s); }

Permission permission_from(std::string_view s, const std::string& field) {
  return kPermissionNames.parse(s, field);
}
Provenance provenance_from(std::string_view s, const std::string& field) {
  return kProvenanceNames.parse(s, field);
}
StepLabel step_label_from(std::string_view s, const std::string& field) {
  return kLabelNames.parse(s, field);
}
Sink sink_from(std::string_view s, const std::string& field) { return kSinkNames.parse(s, field); }
AttackFamily family_from(std::string_view s, const std::string& field) {
  return kFamilyNames.parse(s, field);
}
EvidenceTier tier_from(std::string_view s, const std::string& field) {
  return kTierNames.parse(s, field);
}
Action action_from(std::string_view s, const std::string& field) {
  return kActionNames.parse(s, field);
}
Split split_from(std::string_view s, const std::string& field) {
  return kSplitNames.parse(s, field);
}

StepLabel RuntimeContext::label_of(std::size_t step) const {
  const auto it = provenance_labels.find(step);
  return it == provenance_labels.end() ? StepLabel::kTrusted : it->second;
}

void check_record_invariants(const InvocationRecord& r) {
  if (r.record_id.empty()) throw SchemaError("record_id", "must be non-empty");
  if (!(r.risk_target >= 0.0 && r.risk_target <= 1.0)) {
    throw SchemaError("risk_target", "must lie in [0, 1]");
  }
  const bool ipi = r.attack_family == AttackFamily::kIndirectPromptInjection;
  if (r.split == Split::kOod && !ipi) {
    throw SchemaError("split", "ood split holds only indirect_prompt_injection records");
  }
  if (r.split != Split::kOod && ipi) {
    throw SchemaError("split", "indirect_prompt_injection records belong to the ood split");
  }
  if (r.attack_family == AttackFamily::kBenign && r.canonical_action != Action::kAllow) {
    throw SchemaError("canonical_action", "benign records must be allow");
  }
  if ((r.lineage.mutation_depth == 0) != !r.lineage.parent_record.has_value()) {
    throw SchemaError("lineage.parent_record",
                      "parent_record must be present exactly when mutation_depth > 0");
  }
  const std::size_t n = r.context.trajectory.size();
  for (const auto& [step, label] : r.context.provenance_labels) {
    if (step >= n) {
      throw SchemaError("context.provenance_labels",
                        "label for step " + std::to_string(step) + " beyond trajectory");
    }
  }
  for (const auto& e : r.context.dependency_edges) {
    if (e.source >= n || e.target > n) {
      throw SchemaError("context.dependency_edges",
                        "edge (" + std::to_string(e.source) + "->" + std::to_string(e.target) +
                            ") references a missing step");
    }
    if (e.source >= e.target) {
      throw SchemaError("context.dependency_edges",
                        "edge (" + std::to_string(e.source) + "->" + std::to_string(e.target) +
                            ") is not forward-only");
    }
  }
}

InvocationRecord parse_record(std::string_view line) {
  Json doc;
  try {
    doc = Json::parse(line.begin(), line.end());
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what(), e.byte);
  }
  if (!doc.is_object()) throw ParseError("record must be a JSON object", 0);

  InvocationRecord r;
  r.record_id = get_string(doc, "record_id", "");
  r.request_text = get_string(doc, "request_text", "");
  r.skill = parse_skill(get_object(doc, "skill", ""));
  r.context = parse_context(get_object(doc, "context", ""));
  r.attack_family = family_from(get_string(doc, "attack_family", ""));
  r.evidence_tier = tier_from(get_string(doc, "evidence_tier", ""));
  r.canonical_action = action_from(get_string(doc, "canonical_action", ""), "canonical_action");
  r.lineage = parse_lineage(get_object(doc, "lineage", ""));
  const Json& target = require(doc, "risk_target", "");
  if (!target.is_number()) throw SchemaError("risk_target", "expected number");
  r.risk_target = target.get<double>();
  r.split = split_from(get_string(doc, "split", ""));

  for (const auto& [key, value] : doc.items()) {
    if (!kKnownFields.contains(key)) r.extras[key] = value.dump();
  }
  check_record_invariants(r);
  return r;
}

std::string serialize_record(const InvocationRecord& r) {
  OrderedJson out;
  out["record_id"] = r.record_id;
  out["request_text"] = r.request_text;

  OrderedJson skill;
  skill["skill_id"] = r.skill.skill_id;
  skill["name"] = r.skill.name;
  skill["description"] = r.skill.description;
  skill["permissions"] = OrderedJson::array();
  for (Permission p : r.skill.permissions) skill["permissions"].push_back(to_string(p));
  skill["provenance"] = to_string(r.skill.provenance);
  out["skill"] = std::move(skill);

  OrderedJson ctx;
  ctx["trajectory"] = OrderedJson::array();
  for (const auto& s : r.context.trajectory) {
    OrderedJson step;
    step["tool_name"] = s.tool_name;
    step["risk_flag"] = s.risk_flag;
    step["summary"] = s.summary;
    ctx["trajectory"].push_back(std::move(step));
  }
  ctx["provenance_labels"] = OrderedJson::object();
  for (const auto& [step, label] : r.context.provenance_labels) {
    ctx["provenance_labels"][std::to_string(step)] = to_string(label);
  }
  ctx["dependency_edges"] = OrderedJson::array();
  for (const auto& e : r.context.dependency_edges) {
    ctx["dependency_edges"].push_back({e.source, e.target});
  }
  ctx["policy_state"] = OrderedJson::object();
  for (const auto& [k, v] : r.context.policy_state) ctx["policy_state"][k] = v;
  ctx["pending_sinks"] = OrderedJson::array();
  for (Sink s : r.context.pending_sinks) ctx["pending_sinks"].push_back(to_string(s));
  out["context"] = std::move(ctx);

  out["attack_family"] = to_string(r.attack_family);
  out["evidence_tier"] = to_string(r.evidence_tier);
  out["canonical_action"] = to_string(r.canonical_action);

  OrderedJson lin;
  lin["seed_id"] = r.lineage.seed_id;
  lin["source_group"] = r.lineage.source_group;
  lin["parent_record"] =
      r.lineage.parent_record ? OrderedJson(*r.lineage.parent_record) : OrderedJson(nullptr);
  lin["mutation_depth"] = r.lineage.mutation_depth;
  out["lineage"] = std::move(lin);

  out["risk_target"] = r.risk_target;
  out["split"] = to_string(r.split);
  for (const auto& [key, raw] : r.extras) out[key] = OrderedJson::parse(raw);
  return out.dump();
}

std::vector<InvocationRecord> read_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus file: " + path);
  std::vector<InvocationRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      records.push_back(parse_record(line));
    } catch (const ParseError& e) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what(), e.offset());
    } catch (const SchemaError& e) {
      throw SchemaError(e.field(), path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

void write_corpus(const std::string& path, const std::vector<InvocationRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write corpus file: " + path);
  for (const auto& r : records) out << serialize_record(r) << '\n';
}

std::string_view to_string(Violation::Kind k) {
  switch (k) {
    case Violation::Kind::kGroupLeak: return "group_leak";
    case Violation::Kind::kDuplicateId: return "duplicate_id";
    case Violation::Kind::kBandInconsistent: return "band_inconsistent";
  }
  return "?";
}

std::size_t CorpusReport::count(Violation::Kind kind) const {
  return static_cast<std::size_t>(std::count_if(
      violations.begin(), violations.end(), [kind](const Violation& v) { return v.kind == kind; }));
}

std::pair<double, double> action_band(Action action, double mix) {
  const double anchor = 0.5 * static_cast<int>(action);
  return {mix * anchor, mix * anchor + (1.0 - mix)};
}

CorpusReport validate_corpus(const std::vector<InvocationRecord>& records, double band_mix) {
  CorpusReport report;
  report.total = records.size();

  std::set<std::string> skills;
  std::map<std::string, std::set<Split>> group_splits;
  std::map<Split, std::set<std::string>> split_skills;
  std::map<Split, std::set<std::string>> split_groups;
  std::map<std::string, std::size_t> id_counts;

  for (const auto& r : records) {
    ++report.split_counts[r.split];
    ++report.action_counts[r.canonical_action];
    ++report.family_counts[r.attack_family];
    ++report.depth_counts[r.lineage.mutation_depth];
    skills.insert(r.skill.skill_id);
    group_splits[r.lineage.source_group].insert(r.split);
    split_skills[r.split].insert(r.skill.skill_id);
    split_groups[r.split].insert(r.lineage.source_group);
    ++id_counts[r.record_id];

    auto& row = report.rows[r.split];
    ++row.n;
    ++row.actions[r.canonical_action];
    ++row.depths[r.lineage.mutation_depth];
    ++row.families[r.attack_family];

    const auto [lo, hi] = action_band(r.canonical_action, band_mix);
    constexpr double kEps = 1e-12;
    if (r.risk_target < lo - kEps || r.risk_target > hi + kEps) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "target %.6f outside [%.4f, %.4f] for %s", r.risk_target,
                    lo, hi, std::string(to_string(r.canonical_action)).c_str());
      report.violations.push_back({Violation::Kind::kBandInconsistent, r.record_id, buf});
    }
  }
  for (auto& [split, row] : report.rows) {
    row.skills = split_skills[split].size();
    row.groups = split_groups[split].size();
  }
  report.unique_skills = skills.size();
  report.unique_groups = group_splits.size();

  for (const auto& [group, splits] : group_splits) {
    if (splits.size() < 2) continue;
    std::string detail = "group appears in splits:";
    for (Split s : splits) detail += " " + std::string(to_string(s));
    report.violations.push_back({Violation::Kind::kGroupLeak, group, detail});
  }
  for (const auto& [id, n] : id_counts) {
    if (n > 1) {
      report.violations.push_back(
          {Violation::Kind::kDuplicateId, id, "appears " + std::to_string(n) + " times"});
    }
  }
  return report;
}

std::string format_corpus_table(const CorpusReport& report) {
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "%-6s %5s %6s %6s %6s %5s %6s %5s %5s %5s %5s %5s %5s %5s %5s %5s\n", "Split",
                "N", "Skills", "Groups", "Allow", "Esc.", "Block", "D0", "D1", "Ben.", "Dir.",
                "Exf.", "Hij.", "Abus.", "MTE", "IPI");
  os << buf;
  auto emit = [&](const char* name, const CorpusReport::SplitRow& row) {
    auto at = [](const auto& m, auto key) -> std::size_t {
      const auto it = m.find(key);
      return it == m.end() ? 0 : it->second;
    };
    std::size_t deeper = 0;
    for (const auto& [d, n] : row.depths) {
      if (d >= 1) deeper += n;
    }
    std::snprintf(buf, sizeof buf,
                  "%-6s %5zu %6zu %6zu %6zu %5zu %6zu %5zu %5zu %5zu %5zu %5zu %5zu %5zu %5zu "
                  "%5zu\n",
                  name, row.n, row.skills, row.groups, at(row.actions, Action::kAllow),
                  at(row.actions, Action::kEscalate), at(row.actions, Action::kBlock),
                  at(row.depths, 0), deeper, at(row.families, AttackFamily::kBenign),
                  at(row.families, AttackFamily::kDirectMalicious),
                  at(row.families, AttackFamily::kDataExfiltration),
                  at(row.families, AttackFamily::kToolSelectionHijack),
                  at(row.families, AttackFamily::kCapabilityAbuse),
                  at(row.families, AttackFamily::kMultiTurnEscalation),
                  at(row.families, AttackFamily::kIndirectPromptInjection));
    os << buf;
  };
  const char* names[] = {"Train", "Val", "Test", "OOD"};
  for (Split s : kAllSplits) {
    const auto it = report.rows.find(s);
    emit(names[static_cast<int>(s)], it == report.rows.end() ? CorpusReport::SplitRow{} : it->second);
  }
  CorpusReport::SplitRow total;
  total.n = report.total;
  total.skills = report.unique_skills;
  total.groups = report.unique_groups;
  total.actions = report.action_counts;
  total.depths = report.depth_counts;
  total.families = report.family_counts;
  emit("Total", total);
  return os.str();
}

}  // namespace invaudit
