#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "invaudit/config.hpp"
#include "invaudit/pipeline.hpp"

namespace {

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::string split;
  std::string scorer = "contextual";
  std::string selector;
  std::string policy;
  bool resplit = false;
};

invaudit::RunConfig resolve_config(const Options& o) {
  invaudit::RunConfig cfg = o.config_path.empty() ? invaudit::RunConfig{}
                                                  : invaudit::load_config(o.config_path);
  if (o.seed) cfg.apply_seed(*o.seed);
  if (!o.out_dir.empty()) cfg.paths.out_dir = o.out_dir;
  if (!o.selector.empty()) cfg.fusion.selector = invaudit::selector_from(o.selector);
  cfg.validate();
  return cfg;
}

invaudit::Split resolve_split(const Options& o, invaudit::Split fallback) {
  if (o.split.empty()) return fallback;
  try {
    return invaudit::split_from(o.split, "--split");
  } catch (const invaudit::SchemaError& e) {
    throw invaudit::UsageError(e.what());
  }
}

void print_files(const std::vector<std::string>& files) {
  for (const auto& f : files) std::cout << f << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Invocation-time risk auditing for agent skill calls"};
  app.require_subcommand(1);
  Options o;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "global seed (overrides the config)");
    sub->add_option("--out", o.out_dir, "artifact root directory");
  };

  auto* gen = app.add_subcommand("gen", "generate the synthetic corpus");
  add_common(gen);
  gen->add_flag("--resplit", o.resplit, "reassign splits by lineage packing");

  auto* score = app.add_subcommand("score", "write per-record scores for one scorer");
  add_common(score);
  score->add_option("--split", o.split, "train|val|test|ood (default test)");
  score->add_option("--scorer", o.scorer, "scorer name")->capture_default_str();
  score->add_option("--policy", o.policy, "policy file for the fusion scorer");

  auto* calibrate = app.add_subcommand("calibrate", "grid-search a fusion policy on val");
  add_common(calibrate);
  calibrate->add_option("--selector", o.selector, "continuous_risk_first|threshold_first");

  auto* eval = app.add_subcommand("eval", "evaluate all methods on one split");
  add_common(eval);
  eval->add_option("--split", o.split, "train|val|test|ood (default test)");
  eval->add_option("--selector", o.selector, "selects the default policy file");
  eval->add_option("--policy", o.policy, "policy file (default <out>/policy/<selector>.json)");

  auto* report = app.add_subcommand("report", "write the summary report");
  add_common(report);
  report->add_option("--selector", o.selector, "policy used for the main tables");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? invaudit::kExitOk : invaudit::kExitUser;
  }

  return invaudit::run_guarded(
      [&] {
        const invaudit::RunConfig cfg = resolve_config(o);
        if (gen->parsed()) {
          const auto result = invaudit::cmd_gen(cfg, o.resplit);
          std::cout << invaudit::format_corpus_table(result.report);
          print_files(result.files);
        } else if (score->parsed()) {
          std::cout << invaudit::cmd_score(cfg, o.scorer, resolve_split(o, invaudit::Split::kTest),
                                           o.policy)
                    << "\n";
        } else if (calibrate->parsed()) {
          std::cout << invaudit::cmd_calibrate(cfg, cfg.fusion.selector) << "\n";
        } else if (eval->parsed()) {
          const std::string policy =
              o.policy.empty() ? invaudit::policy_file(cfg, cfg.fusion.selector) : o.policy;
          print_files(invaudit::cmd_eval(cfg, policy, resolve_split(o, invaudit::Split::kTest),
                                         &std::cerr));
        } else if (report->parsed()) {
          print_files(invaudit::cmd_report(cfg, &std::cerr));
        }
      },
      std::cerr);
}
