#pragma once

#include <string>
#include <vector>

#include "invaudit/bench_gen.hpp"
#include "invaudit/record.hpp"

namespace invaudit::testing {

inline SkillMetadata make_skill(std::set<Permission> perms = {},
                                Provenance prov = Provenance::kOfficial,
                                std::string description = "shows calendar entries") {
  SkillMetadata s;
  s.skill_id = "skill-00001";
  s.name = "calendar helper";
  s.description = std::move(description);
  s.permissions = std::move(perms);
  s.provenance = prov;
  return s;
}

inline InvocationRecord make_record(std::string id = "rec-000001",
                                    AttackFamily family = AttackFamily::kBenign,
                                    Action action = Action::kAllow) {
  InvocationRecord r;
  r.record_id = std::move(id);
  r.request_text = "please list my meetings for tomorrow";
  r.skill = make_skill();
  r.attack_family = family;
  r.canonical_action = action;
  r.evidence_tier = EvidenceTier::kRequestOnly;
  r.lineage.seed_id = "seed-00001";
  r.lineage.source_group = "grp-00001";
  r.risk_target = blend_target(action, family == AttackFamily::kBenign ? 0.05 : 0.8).r_target;
  r.split = family == AttackFamily::kIndirectPromptInjection ? Split::kOod : Split::kTrain;
  return r;
}

/// Appends a trajectory step and returns its index.
inline std::size_t add_step(RuntimeContext& ctx, StepLabel label = StepLabel::kTrusted,
                            bool risk_flag = false) {
  const std::size_t i = ctx.trajectory.size();
  ctx.trajectory.push_back({"tool_" + std::to_string(i), risk_flag, "step"});
  if (label != StepLabel::kTrusted) ctx.provenance_labels[i] = label;
  return i;
}

}  // namespace invaudit::testing
