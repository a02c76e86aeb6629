#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "support.hpp"
#include "uturn/cli.hpp"

namespace uturn::cli {

struct DetectArgs {
  std::vector<std::string> inputs;
  std::optional<double> rate_threshold_dps;
  std::optional<double> min_angle_deg;
};

struct ScoreArgs {
  std::string detected_dir;
  std::string reference_dir;
  std::optional<double> overlap_min;
};

struct AgreeArgs {
  std::string input;
  std::optional<std::size_t> reps;
};

struct ReliabilityArgs {
  std::string input;
  std::optional<std::size_t> k_min;
  std::optional<std::size_t> k_max;
  std::optional<std::size_t> reps;
  std::optional<std::string> mode;
};

struct CorrelateArgs {
  std::string aggregates;
  std::string covariates;
};

struct SynthArgs {
  std::string spec;
};

struct ReportArgs {
  std::vector<std::string> input_dirs;
};

int cmd_detect(const DetectArgs& args, const CommonOptions& common, std::ostream& out,
               std::ostream& err);
int cmd_score(const ScoreArgs& args, const CommonOptions& common, std::ostream& out,
              std::ostream& err);
int cmd_agree(const AgreeArgs& args, const CommonOptions& common, std::ostream& out,
              std::ostream& err);
int cmd_reliability(const ReliabilityArgs& args, const CommonOptions& common, std::ostream& out,
                    std::ostream& err);
int cmd_correlate(const CorrelateArgs& args, const CommonOptions& common, std::ostream& out,
                  std::ostream& err);
int cmd_synth(const SynthArgs& args, const CommonOptions& common, std::ostream& out,
              std::ostream& err);
int cmd_report(const ReportArgs& args, const CommonOptions& common, std::ostream& out,
               std::ostream& err);

}  // namespace uturn::cli
