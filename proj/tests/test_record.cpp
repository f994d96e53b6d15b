#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "invaudit/record.hpp"
#include "invaudit/rng.hpp"
#include "support.hpp"

using namespace invaudit;
using invaudit::testing::add_step;
using invaudit::testing::make_record;

namespace {

nlohmann::json minimal_json() {
  return nlohmann::json::parse(R"({
    "record_id": "r1", "request_text": "show the weather",
    "skill": {"skill_id": "s1", "name": "weather", "description": "reads forecasts",
              "permissions": [], "provenance": "official"},
    "context": {"trajectory": [], "provenance_labels": {}, "dependency_edges": [],
                "policy_state": {}, "pending_sinks": []},
    "attack_family": "benign", "evidence_tier": "request_only", "canonical_action": "allow",
    "lineage": {"seed_id": "seed1", "source_group": "g1", "parent_record": null,
                "mutation_depth": 0},
    "risk_target": 0.0175, "split": "train"})");
}

std::string field_of(const std::string& line) {
  try {
    parse_record(line);
  } catch (const SchemaError& e) {
    return e.field();
  }
  return "";
}

}  // namespace

TEST(ParseRecord, MinimalBenignRecord) {
  const auto r = parse_record(minimal_json().dump());
  EXPECT_EQ(r.canonical_action, Action::kAllow);
  EXPECT_EQ(r.lineage.mutation_depth, 0);
  EXPECT_FALSE(r.lineage.parent_record.has_value());
  EXPECT_TRUE(r.context.trajectory.empty());
}

TEST(ParseRecord, MalformedSyntaxReportsOffset) {
  try {
    parse_record(R"({"record_id": "r1", )");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_GT(e.offset(), 0u);
  }
}

TEST(ParseRecord, OodBenignIsSchemaError) {
  auto j = minimal_json();
  j["split"] = "ood";
  EXPECT_EQ(field_of(j.dump()), "split");
}

TEST(ParseRecord, IpiOutsideOodIsSchemaError) {
  auto j = minimal_json();
  j["attack_family"] = "indirect_prompt_injection";
  j["canonical_action"] = "block";
  EXPECT_EQ(field_of(j.dump()), "split");
}

TEST(ParseRecord, BackwardEdgeIsSchemaError) {
  auto j = minimal_json();
  for (int i = 0; i < 4; ++i) {
    j["context"]["trajectory"].push_back({{"tool_name", "t"}, {"risk_flag", false}, {"summary", ""}});
  }
  j["context"]["dependency_edges"] = {{3, 1}};
  EXPECT_EQ(field_of(j.dump()), "context.dependency_edges");
}

TEST(ParseRecord, EdgeToInvocationNodeAccepted) {
  auto j = minimal_json();
  j["context"]["trajectory"].push_back({{"tool_name", "t"}, {"risk_flag", false}, {"summary", ""}});
  j["context"]["dependency_edges"] = {{0, 1}};
  EXPECT_NO_THROW(parse_record(j.dump()));
}

TEST(ParseRecord, UnknownEnumNamesField) {
  auto j = minimal_json();
  j["skill"]["permissions"] = {"teleport"};
  EXPECT_EQ(field_of(j.dump()), "skill.permissions");
  j = minimal_json();
  j["evidence_tier"] = "psychic";
  EXPECT_EQ(field_of(j.dump()), "evidence_tier");
}

TEST(ParseRecord, MissingFieldNamed) {
  auto j = minimal_json();
  j.erase("risk_target");
  EXPECT_EQ(field_of(j.dump()), "risk_target");
}

TEST(ParseRecord, DepthParentMismatch) {
  auto j = minimal_json();
  j["lineage"]["mutation_depth"] = 1;
  EXPECT_EQ(field_of(j.dump()), "lineage.parent_record");
}

TEST(ParseRecord, BenignBlockRejected) {
  auto j = minimal_json();
  j["canonical_action"] = "block";
  EXPECT_EQ(field_of(j.dump()), "canonical_action");
}

TEST(ParseRecord, TargetOutOfRange) {
  auto j = minimal_json();
  j["risk_target"] = 1.5;
  EXPECT_EQ(field_of(j.dump()), "risk_target");
}

TEST(ParseRecord, UnknownFieldsPreserved) {
  auto j = minimal_json();
  j["annotator"] = "batch-7";
  j["review"] = {{"score", 3}};
  const auto r = parse_record(j.dump());
  ASSERT_EQ(r.extras.size(), 2u);
  const auto again = parse_record(serialize_record(r));
  EXPECT_EQ(again, r);
  EXPECT_EQ(nlohmann::json::parse(serialize_record(again))["review"]["score"], 3);
}

TEST(RecordRoundTrip, RandomRecordsSurviveSerialization) {
  Rng rng(7);
  for (int iter = 0; iter < 200; ++iter) {
    auto r = make_record("rec-" + std::to_string(iter));
    r.request_text = "line \"quoted\"\tüñí " + std::to_string(rng.next());
    for (Permission p : kAllPermissions) {
      if (rng.chance(0.3)) r.skill.permissions.insert(p);
    }
    r.skill.provenance = static_cast<Provenance>(rng.index(3));
    const std::size_t steps = rng.index(5);
    for (std::size_t s = 0; s < steps; ++s) {
      add_step(r.context, static_cast<StepLabel>(rng.index(3)), rng.chance(0.5));
    }
    for (std::size_t a = 0; a < steps; ++a) {
      for (std::size_t b = a + 1; b <= steps; ++b) {
        if (rng.chance(0.3)) r.context.dependency_edges.push_back({a, b});
      }
    }
    if (rng.chance(0.5)) r.context.pending_sinks.insert(Sink::kFileWrite);
    r.context.policy_state["session_turn"] = std::to_string(steps);
    if (rng.chance(0.5)) {
      r.lineage.mutation_depth = 1;
      r.lineage.parent_record = "rec-parent";
    }
    r.risk_target = rng.uniform() * 0.35;
    const auto back = parse_record(serialize_record(r));
    EXPECT_EQ(back, r);
    EXPECT_EQ(serialize_record(back), serialize_record(r));
  }
}

TEST(RuntimeContext, UnlabeledStepsAreTrusted) {
  RuntimeContext ctx;
  add_step(ctx);
  add_step(ctx, StepLabel::kTainted);
  EXPECT_EQ(ctx.label_of(0), StepLabel::kTrusted);
  EXPECT_EQ(ctx.label_of(1), StepLabel::kTainted);
  EXPECT_EQ(ctx.invocation_node(), 2u);
}

TEST(ActionBand, BlendBoundsAtDefaultMix) {
  EXPECT_NEAR(action_band(Action::kAllow).first, 0.0, 1e-12);
  EXPECT_NEAR(action_band(Action::kAllow).second, 0.35, 1e-12);
  EXPECT_NEAR(action_band(Action::kEscalate).first, 0.325, 1e-12);
  EXPECT_NEAR(action_band(Action::kEscalate).second, 0.675, 1e-12);
  EXPECT_NEAR(action_band(Action::kBlock).first, 0.65, 1e-12);
  EXPECT_NEAR(action_band(Action::kBlock).second, 1.0, 1e-12);
}

TEST(ValidateCorpus, EmptyCorpus) {
  const auto rep = validate_corpus({});
  EXPECT_EQ(rep.total, 0u);
  EXPECT_TRUE(rep.violations.empty());
  EXPECT_EQ(rep.unique_groups, 0u);
}

TEST(ValidateCorpus, OneLeakedGroup) {
  auto a = make_record("a");
  auto b = make_record("b");
  b.split = Split::kTest;
  const auto rep = validate_corpus({a, b});
  EXPECT_EQ(rep.count(Violation::Kind::kGroupLeak), 1u);
  EXPECT_EQ(rep.violations.front().subject, "grp-00001");
}

TEST(ValidateCorpus, DuplicateIdsAndBandBreaks) {
  auto a = make_record("a");
  auto b = make_record("a");
  b.risk_target = 0.5;  // allow above 0.35
  const auto rep = validate_corpus({a, b});
  EXPECT_EQ(rep.count(Violation::Kind::kDuplicateId), 1u);
  EXPECT_EQ(rep.count(Violation::Kind::kBandInconsistent), 1u);
}

TEST(ValidateCorpus, InjectedLeaksAreAllFound) {
  Rng rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<InvocationRecord> records;
    const std::size_t groups = 5 + rng.index(20);
    for (std::size_t g = 0; g < groups; ++g) {
      const Split home = static_cast<Split>(rng.index(3));
      const std::size_t members = 2 + rng.index(3);
      for (std::size_t m = 0; m < members; ++m) {
        auto r = make_record("r" + std::to_string(g) + "_" + std::to_string(m));
        r.lineage.source_group = "g" + std::to_string(g);
        r.split = home;
        records.push_back(r);
      }
    }
    // move one member of k distinct groups to another split
    const std::size_t k = rng.index(groups + 1);
    std::vector<std::size_t> ids(groups);
    for (std::size_t i = 0; i < groups; ++i) ids[i] = i;
    rng.shuffle(ids);
    for (std::size_t i = 0; i < k; ++i) {
      for (auto& r : records) {
        if (r.lineage.source_group == "g" + std::to_string(ids[i])) {
          r.split = static_cast<Split>((static_cast<int>(r.split) + 1) % 3);
          break;
        }
      }
    }
    const auto rep = validate_corpus(records);
    EXPECT_EQ(rep.count(Violation::Kind::kGroupLeak), k);
    std::size_t sum = 0;
    for (const auto& [s, c] : rep.split_counts) sum += c;
    EXPECT_EQ(sum, records.size());
  }
}

TEST(Enums, NamesRoundTrip) {
  for (Permission p : kAllPermissions) EXPECT_EQ(permission_from(to_string(p)), p);
  for (AttackFamily f : kAllFamilies) EXPECT_EQ(family_from(to_string(f)), f);
  for (Split s : kAllSplits) EXPECT_EQ(split_from(to_string(s)), s);
  for (Action a : kAllActions) EXPECT_EQ(action_from(to_string(a)), a);
  EXPECT_THROW(split_from("holdout"), SchemaError);
}
