#pragma once

// Invocation-record schema shared by every stage of the audit pipeline.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace invaudit {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class SchemaError : public std::runtime_error {
 public:
  SchemaError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Closed enums
// ---------------------------------------------------------------------------

enum class Permission {
  kCodeExecution,
  kDatabase,
  kFileRead,
  kFileWrite,
  kNetwork,
  kEmail,
  kFileSystem,
};
inline constexpr std::size_t kNumPermissions = 7;

enum class Provenance { kOfficial, kCommunity, kUnverified };
inline constexpr std::size_t kNumProvenances = 3;

enum class StepLabel { kTrusted, kExternal, kTainted };

enum class Sink { kCodeExecution, kFileWrite, kOutboundMessage };

enum class AttackFamily {
  kBenign,
  kDirectMalicious,
  kDataExfiltration,
  kToolSelectionHijack,
  kCapabilityAbuse,
  kMultiTurnEscalation,
  kIndirectPromptInjection,
};
inline constexpr std::size_t kNumFamilies = 7;

enum class EvidenceTier { kRequestOnly, kContextLight, kContextRich };

// Ordered by severity: allow < escalate < block.
enum class Action { kAllow = 0, kEscalate = 1, kBlock = 2 };

enum class Split { kTrain, kVal, kTest, kOod };
inline constexpr std::size_t kNumSplits = 4;

std::string_view to_string(Permission p);
std::string_view to_string(Provenance p);
std::string_view to_string(StepLabel l);
std::string_view to_string(Sink s);
std::string_view to_string(AttackFamily f);
std::string_view to_string(EvidenceTier t);
std::string_view to_string(Action a);
std::string_view to_string(Split s);

// Throw SchemaError naming `field` when the text is not a member of the enum.
Permission permission_from(std::string_view s, const std::string& field = "permission");
Provenance provenance_from(std::string_view s, const std::string& field = "provenance");
StepLabel step_label_from(std::string_view s, const std::string& field = "label");
Sink sink_from(std::string_view s, const std::string& field = "sink");
AttackFamily family_from(std::string_view s, const std::string& field = "attack_family");
EvidenceTier tier_from(std::string_view s, const std::string& field = "evidence_tier");
Action action_from(std::string_view s, const std::string& field = "action");
Split split_from(std::string_view s, const std::string& field = "split");

inline constexpr Permission kAllPermissions[] = {
    Permission::kCodeExecution, Permission::kDatabase, Permission::kFileRead,
    Permission::kFileWrite,     Permission::kNetwork,  Permission::kEmail,
    Permission::kFileSystem};
inline constexpr AttackFamily kAllFamilies[] = {
    AttackFamily::kBenign,
    AttackFamily::kDirectMalicious,
    AttackFamily::kDataExfiltration,
    AttackFamily::kToolSelectionHijack,
    AttackFamily::kCapabilityAbuse,
    AttackFamily::kMultiTurnEscalation,
    AttackFamily::kIndirectPromptInjection};
inline constexpr Split kAllSplits[] = {Split::kTrain, Split::kVal, Split::kTest,
                                       Split::kOod};
inline constexpr Action kAllActions[] = {Action::kAllow, Action::kEscalate,
                                         Action::kBlock};

// ---------------------------------------------------------------------------
// Record types
// ---------------------------------------------------------------------------

struct SkillMetadata {
  std::string skill_id;
  std::string name;
  std::string description;
  std::set<Permission> permissions;  // may be empty
  Provenance provenance = Provenance::kOfficial;

  bool operator==(const SkillMetadata&) const = default;
};

struct TrajectoryStep {
  std::string tool_name;
  bool risk_flag = false;
  std::string summary;

  bool operator==(const TrajectoryStep&) const = default;
};

/// Dependency edge: output of `source` feeds the input of `target`.
///
/// Node indices 0..n-1 are trajectory steps; index n (== trajectory size)
/// denotes the invocation being audited. Edges are forward-only.
struct DependencyEdge {
  std::size_t source = 0;
  std::size_t target = 0;

  bool operator==(const DependencyEdge&) const = default;
  auto operator<=>(const DependencyEdge&) const = default;
};

struct RuntimeContext {
  std::vector<TrajectoryStep> trajectory;
  std::map<std::size_t, StepLabel> provenance_labels;  // unlabeled => trusted
  std::vector<DependencyEdge> dependency_edges;
  std::map<std::string, std::string> policy_state;
  std::set<Sink> pending_sinks;

  StepLabel label_of(std::size_t step) const;
  /// Index of the node representing the current invocation.
  std::size_t invocation_node() const noexcept { return trajectory.size(); }

  bool operator==(const RuntimeContext&) const = default;
};

struct Lineage {
  std::string seed_id;
  std::string source_group;
  std::optional<std::string> parent_record;
  int mutation_depth = 0;

  bool operator==(const Lineage&) const = default;
};

struct InvocationRecord {
  std::string record_id;
  std::string request_text;
  SkillMetadata skill;
  RuntimeContext context;
  AttackFamily attack_family = AttackFamily::kBenign;
  EvidenceTier evidence_tier = EvidenceTier::kRequestOnly;
  Action canonical_action = Action::kAllow;
  Lineage lineage;
  double risk_target = 0.0;
  Split split = Split::kTrain;
  // Unknown top-level fields, name -> raw JSON text.
  std::map<std::string, std::string> extras;

  bool operator==(const InvocationRecord&) const = default;
};

// ---------------------------------------------------------------------------
// Parsing, serialization, validation
// ---------------------------------------------------------------------------

/// Parses one JSON Lines object. Throws ParseError on malformed syntax and
/// SchemaError on a missing field, bad enum or violated record invariant.
InvocationRecord parse_record(std::string_view line);

/// Serializes to a single line (no trailing newline). Field order is fixed.
std::string serialize_record(const InvocationRecord& record);

/// Structural record invariants; throws SchemaError.
void check_record_invariants(const InvocationRecord& record);

std::vector<InvocationRecord> read_corpus(const std::string& path);
void write_corpus(const std::string& path, const std::vector<InvocationRecord>& records);

struct Violation {
  enum class Kind { kGroupLeak, kDuplicateId, kBandInconsistent };
  Kind kind;
  std::string subject;  // group name or record id
  std::string detail;
};

std::string_view to_string(Violation::Kind k);

struct CorpusReport {
  std::size_t total = 0;
  std::map<Split, std::size_t> split_counts;
  std::size_t unique_skills = 0;
  std::size_t unique_groups = 0;
  std::map<Action, std::size_t> action_counts;
  std::map<AttackFamily, std::size_t> family_counts;
  std::map<int, std::size_t> depth_counts;

  // Per-split breakdown in the layout of the dataset statistics table.
  struct SplitRow {
    std::size_t n = 0;
    std::size_t skills = 0;
    std::size_t groups = 0;
    std::map<Action, std::size_t> actions;
    std::map<int, std::size_t> depths;
    std::map<AttackFamily, std::size_t> families;
  };
  std::map<Split, SplitRow> rows;

  std::vector<Violation> violations;

  std::size_t count(Violation::Kind kind) const;
};

/// Band a target must fall in for its canonical action under the given
/// decision/heuristic blend.
std::pair<double, double> action_band(Action action, double mix = 0.65);

/// Reports split geometry plus one violation per leaked group, duplicate id
/// and band-inconsistent target. Never throws.
CorpusReport validate_corpus(const std::vector<InvocationRecord>& records,
                             double band_mix = 0.65);

/// Aligned plain-text rendering with the dataset statistics columns.
std::string format_corpus_table(const CorpusReport& report);

}  // namespace invaudit
