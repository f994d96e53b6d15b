#pragma once

// End-to-end commands: gen, score, calibrate, eval, report.

#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "invaudit/config.hpp"
#include "invaudit/fusion.hpp"
#include "invaudit/metrics.hpp"
#include "invaudit/record.hpp"

namespace invaudit {

/// Bad user input that is not a config problem (missing corpus, unknown
/// scorer, empty split). Maps to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitUser = 2;

/// Runs `fn`, printing any error to `err`; returns the exit code.
int run_guarded(const std::function<void()>& fn, std::ostream& err);

// ---------------------------------------------------------------------------
// Scoring
// ---------------------------------------------------------------------------

/// Accepted --scorer names.
const std::vector<std::string>& scorer_names();
/// Display name used in tables, e.g. "Static Prior".
std::string scorer_label(std::string_view scorer);

struct ChannelScores {
  std::vector<double> static_scores;
  std::vector<double> trigger_scores;
};

/// Raw Stage A and Stage B scores under the config's trigger profile.
ChannelScores score_channels(const std::vector<InvocationRecord>& records, const RunConfig& cfg);

/// Scores of one named scorer. "fusion" requires a policy. Throws UsageError
/// on an unknown name.
std::vector<double> scorer_scores(std::string_view scorer,
                                  const std::vector<InvocationRecord>& records,
                                  const RunConfig& cfg, const FusionPolicy* policy = nullptr);

std::vector<Action> fusion_actions(const FusionPolicy& policy, const ChannelScores& channels);

/// Normalizer fit on validation channels, or the frozen ranges.
Normalizer calibration_normalizer(const RunConfig& cfg, const ChannelScores& val);

/// Full grid search on validation records.
PolicyChoice calibrate(const RunConfig& cfg, const std::vector<InvocationRecord>& val_records,
                       Selector selector);

struct MethodRow {
  std::string scorer;
  EvalReport report;
};

/// Main-table method rows on `records`: the four static baselines, text-only,
/// contextual, fusion (with decision metrics) and the oracle.
std::vector<MethodRow> evaluate_methods(const RunConfig& cfg,
                                        const std::vector<InvocationRecord>& records,
                                        std::string_view split, const FusionPolicy& policy,
                                        bool with_groups = false);

/// Aligned text table: Method, HR-AUPRC, Rec@k, Prec@k, Spearman, ECE, W-MAE.
std::string format_method_table(const std::vector<MethodRow>& rows, double k);

// ---------------------------------------------------------------------------
// Artifacts
// ---------------------------------------------------------------------------

std::string split_file(const RunConfig& cfg, Split split);
std::vector<InvocationRecord> load_split(const RunConfig& cfg, Split split);
std::string policy_file(const RunConfig& cfg, Selector selector);
std::string score_file(const RunConfig& cfg, std::string_view scorer, Split split);
std::string eval_file(const RunConfig& cfg, Split split, Selector selector, std::string_view ext);

struct GenResult {
  CorpusReport report;
  std::vector<std::string> files;
};

/// Generates, optionally re-splits, validates and writes one JSONL file per
/// split plus manifest.json and stats.txt. Throws on any violation.
GenResult cmd_gen(const RunConfig& cfg, bool resplit = false);

/// Writes <scores>/<split>.<scorer>.jsonl: a header line with config hash,
/// seed and split, then {record_id, static, trigger, score} per record.
std::string cmd_score(const RunConfig& cfg, std::string_view scorer, Split split,
                      const std::string& policy_path = "");

/// Writes <policy>/<selector>.json.
std::string cmd_calibrate(const RunConfig& cfg, Selector selector);

/// Writes eval_<split>_<selector>.{txt,json}. A config-hash mismatch with the
/// policy is reported to `warn` and in the report header.
std::vector<std::string> cmd_eval(const RunConfig& cfg, const std::string& policy_path, Split split,
                                  std::ostream* warn = nullptr);

/// Calibrates both selectors when their policy files are missing, then writes
/// summary.txt: main results on test and ood, selector comparison, context
/// ablations and the target-mixture replay.
std::vector<std::string> cmd_report(const RunConfig& cfg, std::ostream* warn = nullptr);

}  // namespace invaudit
