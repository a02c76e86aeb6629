#include "uturn/cli.hpp"

#include <cstdlib>
#include <functional>
#include <ostream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "uturn/common.hpp"

namespace uturn::cli {

std::string_view version() { return UTURN_VERSION; }

namespace {

std::string default_out_dir() {
  const char* env = std::getenv("UTURN_OUT_DIR");
  return env && *env ? env : "uturn_out";
}

struct CommonFlags {
  std::string out;
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
};

void add_common(CLI::App* sub, CommonFlags& flags) {
  sub->add_option("-o,--out", flags.out, "Output directory (default: $UTURN_OUT_DIR or uturn_out)");
  sub->add_option("-c,--config", flags.config, "Flat key=value configuration file");
  sub->add_option("-s,--set", flags.sets, "Override a configuration key (key=value)")
      ->allow_extra_args(false);
  sub->add_option_function<std::uint64_t>(
      "--seed", [&flags](const std::uint64_t& v) { flags.seed = v; },
      "Seed for every random step");
  sub->add_option("-j,--threads", flags.threads, "Worker threads (0 = all cores)");
}

CommonOptions to_common(const CommonFlags& flags, const std::vector<std::string>& args) {
  CommonOptions c;
  c.argv = args;
  c.out_dir = flags.out.empty() ? default_out_dir() : flags.out;
  c.config_path = flags.config;
  c.sets = flags.sets;
  c.seed = flags.seed;
  c.threads = flags.threads;
  return c;
}

template <typename T>
void optional_option(CLI::App* sub, const std::string& name, std::optional<T>& target,
                     const std::string& help) {
  sub->add_option_function<T>(name, [&target](const T& v) { target = v; }, help);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"U-Turn Test turn detection and validation statistics", "uturn"};
  app.set_version_flag("--version", std::string(version()));
  app.require_subcommand(1);

  CommonFlags flags;
  std::function<int(const CommonOptions&)> action;

  DetectArgs detect;
  auto* sub = app.add_subcommand("detect", "Detect turns and summarize each session");
  add_common(sub, flags);
  sub->add_option("inputs", detect.inputs, "Session files (.csv or .json)");
  optional_option(sub, "--rate-threshold-dps", detect.rate_threshold_dps,
                  "Trigger threshold in deg/s (overrides rate_threshold)");
  optional_option(sub, "--min-angle-deg", detect.min_angle_deg,
                  "Minimal turn angle in degrees (overrides min_angle)");
  sub->callback([&] {
    action = [&](const CommonOptions& c) { return cmd_detect(detect, c, out, err); };
  });

  ScoreArgs score;
  sub = app.add_subcommand("score", "Score detected turns against reference annotations");
  add_common(sub, flags);
  sub->add_option("--detected", score.detected_dir, "Directory of detected start_s,end_s CSVs")
      ->required();
  sub->add_option("--reference", score.reference_dir, "Directory of reference annotation CSVs")
      ->required();
  optional_option(sub, "--overlap-min", score.overlap_min, "Minimal overlap fraction");
  sub->callback([&] {
    action = [&](const CommonOptions& c) { return cmd_score(score, c, out, err); };
  });

  AgreeArgs agree;
  sub = app.add_subcommand("agree", "ICC(3,1) and Bland-Altman agreement of paired measures");
  add_common(sub, flags);
  sub->add_option("input", agree.input, "Paired CSV (participant_id,a,b)")->required();
  optional_option(sub, "--reps", agree.reps, "Bootstrap repetitions");
  sub->callback([&] {
    action = [&](const CommonOptions& c) { return cmd_agree(agree, c, out, err); };
  });

  ReliabilityArgs rel;
  sub = app.add_subcommand("reliability", "Test-retest ICC(2,1), SEM and MDC by aggregation");
  add_common(sub, flags);
  sub->add_option("input", rel.input, "Per-test results CSV from `detect`")->required();
  optional_option(sub, "--k-min", rel.k_min, "Smallest number of aggregated tests");
  optional_option(sub, "--k-max", rel.k_max, "Largest number of aggregated tests");
  optional_option(sub, "--reps", rel.reps, "Bootstrap repetitions");
  optional_option(sub, "--mode", rel.mode, "Split mode: random or chronological");
  sub->callback([&] {
    action = [&](const CommonOptions& c) { return cmd_reliability(rel, c, out, err); };
  });

  CorrelateArgs corr;
  sub = app.add_subcommand("correlate", "Spearman correlations and Mann-Whitney group tests");
  add_common(sub, flags);
  sub->add_option("aggregates", corr.aggregates, "Participant aggregates CSV")->required();
  sub->add_option("covariates", corr.covariates, "Covariates CSV")->required();
  sub->callback([&] {
    action = [&](const CommonOptions& c) { return cmd_correlate(corr, c, out, err); };
  });

  SynthArgs synth;
  sub = app.add_subcommand("synth", "Generate synthetic sessions or a cohort with ground truth");
  add_common(sub, flags);
  sub->add_option("--spec", synth.spec, "key=value spec (mode=session|cohort)");
  sub->callback([&] {
    action = [&](const CommonOptions& c) { return cmd_synth(synth, c, out, err); };
  });

  ReportArgs report;
  sub = app.add_subcommand("report", "Assemble a markdown report from command outputs");
  add_common(sub, flags);
  sub->add_option("inputs", report.input_dirs, "Directories holding command JSON outputs")
      ->required();
  sub->callback([&] {
    action = [&](const CommonOptions& c) { return cmd_report(report, c, out, err); };
  });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  try {
    return action(to_common(flags, args));
  } catch (const UsageError& e) {
    err << "uturn: " << e.what() << "\n";
    for (const auto* s : app.get_subcommands()) err << s->help();
    return kExitUsage;
  } catch (const ParseError& e) {
    err << "uturn: ";
    if (e.line() > 0) err << "line " << e.line() << ": ";
    err << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "uturn: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace uturn::cli
