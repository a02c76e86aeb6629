#include <sstream>

#include "commands.hpp"
#include "json.hpp"
#include "uturn/csv.hpp"
#include "uturn/ingest.hpp"
#include "uturn/synth.hpp"

namespace uturn::cli {
namespace {

void write_session(OutputDir& dir, const SessionSpec& spec) {
  const auto session = generate_session(spec);
  dir.write("sessions/" + spec.session_id + ".csv", serialize_stream(session.stream, StreamFormat::csv));
  dir.write("truth/" + spec.session_id + ".csv", serialize_annotations(session.truth));
}

}  // namespace

int cmd_synth(const SynthArgs& args, const CommonOptions& common, std::ostream& out,
              std::ostream&) {
  RunManifest manifest;
  manifest.command = "synth";
  manifest.argv = common.argv;

  KeyValues kv;
  if (!args.spec.empty()) {
    try {
      kv = parse_key_values(read_input(args.spec, manifest));
    } catch (const Error& e) {
      throw UsageError(std::string("spec: ") + e.what());
    }
  }
  for (auto& [k, v] : load_config(common, manifest)) kv[k] = v;
  if (common.seed) kv["seed"] = std::to_string(*common.seed);
  const std::string mode = kv.count("mode") ? kv["mode"] : "session";

  if (mode == "session") {
    SessionSpec spec;
    try {
      spec = SessionSpec::from_key_values(kv);
      spec.validate();
    } catch (const InvalidArgument& e) {
      throw UsageError(e.what());
    }
    manifest.seed = spec.seed;
    manifest.config = spec.to_key_values();
    manifest.config["mode"] = mode;
    OutputDir dir(common.out_dir, manifest);
    write_session(dir, spec);
    dir.finish();
    out << "synth: 1 session (" << spec.n_turns << " turns) in " << dir.root().string() << "\n";
    return kExitOk;
  }
  if (mode != "cohort") throw UsageError("mode must be session or cohort");

  CohortSpec spec;
  try {
    spec = CohortSpec::from_key_values(kv);
    spec.validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  manifest.seed = spec.seed;
  manifest.config = spec.to_key_values();
  manifest.config["mode"] = mode;

  const Cohort cohort = generate_cohort(spec);
  std::vector<const SessionSpec*> sessions;
  for (const auto& p : cohort.participants) {
    for (const auto& s : p.sessions) sessions.push_back(&s);
  }
  OutputDir dir(common.out_dir, manifest);
  parallel_for(sessions.size(), common.thread_count(),
               [&](std::size_t i) { write_session(dir, *sessions[i]); });
  dir.write("covariates.csv", covariates_to_csv(cohort));
  dir.finish();
  out << "synth: " << cohort.participants.size() << " participants, " << sessions.size()
      << " sessions in " << dir.root().string() << "\n";
  return kExitOk;
}

namespace {

using Json = nlohmann::json;

std::string f(const Json& v, int decimals) {
  return v.is_number() ? format_fixed(v.get<double>(), decimals) : std::string("–");
}

std::string with_ci(const Json& e, int decimals) {
  return f(e["value"], decimals) + " (" + f(e["ci"][0], decimals) + "; " +
         f(e["ci"][1], decimals) + ")";
}

void score_section(std::ostringstream& md, const Json& j) {
  md << "## Turn detection\n\n";
  md << "Overlap threshold: " << f(j["overlap_min"], 2) << " of the reference turn.\n\n";
  const auto& c = j["cohort"];
  if (c["f1_pct"].is_object()) {
    const auto& s = c["f1_pct"];
    md << "| n | Mean (95% CI) | SD | Min | P05 | Q1 | Median | Q3 | P95 | Max |\n";
    md << "|---|---|---|---|---|---|---|---|---|---|\n";
    md << "| " << s["n"].get<std::size_t>() << " | " << f(s["mean"], 1) << " (" << f(s["ci"][0], 1)
       << "; " << f(s["ci"][1], 1) << ") | " << f(s["sd"], 1) << " | " << f(s["min"], 1) << " | "
       << f(s["p05"], 1) << " | " << f(s["q1"], 1) << " | " << f(s["median"], 1) << " | "
       << f(s["q3"], 1) << " | " << f(s["p95"], 1) << " | " << f(s["max"], 1) << " |\n\n";
    md << "F1 score in percent per participant; " << c["excluded"].get<std::size_t>()
       << " participant(s) without any turns excluded.\n\n";
  }
  const auto& p = c["pooled"];
  md << "Pooled: TP " << p["tp"].get<std::size_t>() << ", FP " << p["fp"].get<std::size_t>()
     << ", FN " << p["fn"].get<std::size_t>() << "; mean overlap " << f(p["mean_overlap_pct"], 1)
     << "%; onset error " << f(p["onset_error_mean"], 2) << " ± " << f(p["onset_error_sd"], 2)
     << " s; end error " << f(p["end_error_mean"], 2) << " ± " << f(p["end_error_sd"], 2)
     << " s.\n\n";
}

void agreement_section(std::ostringstream& md, const Json& j) {
  md << "## Agreement\n\n";
  md << "| n | ICC(3,1) (95% CI) | Bias (95% CI) | LoA lower (95% CI) | LoA upper (95% CI) |\n";
  md << "|---|---|---|---|---|\n";
  md << "| " << j["n"].get<std::size_t>() << " | " << with_ci(j["icc31"], 2) << " | "
     << with_ci(j["bias"], 2) << " | " << with_ci(j["loa_lower"], 2) << " | "
     << with_ci(j["loa_upper"], 2) << " |\n\n";
  md << "Concordance: " << j["icc_band"].get<std::string>() << ".\n\n";
}

void reliability_section(std::ostringstream& md, const Json& j) {
  md << "## Test-retest reliability\n\n";
  md << "| Aggregated tests | n | ICC(2,1) (95% CI) | SEM (95% CI), rad/s | MDC (95% CI), rad/s |\n";
  md << "|---|---|---|---|---|\n";
  for (const auto& r : j["rows"]) {
    md << "| " << r["k"].get<std::size_t>() << " | " << r["n"].get<std::size_t>() << " | ";
    if (r["available"].get<bool>()) {
      md << with_ci(r["icc21"], 2) << " | " << with_ci(r["sem"], 2) << " | "
         << with_ci(r["mdc"], 2) << " |\n";
    } else {
      md << "– | – | – |\n";
    }
  }
  md << "\n";
}

void correlation_section(std::ostringstream& md, const Json& j) {
  md << "## Clinical correlations\n\n";
  md << "| Covariate | n | Spearman ρ | Strength |\n|---|---|---|---|\n";
  for (const auto& c : j["correlations"]) {
    md << "| " << c["covariate"].get<std::string>() << " | " << c["n"].get<std::size_t>() << " | "
       << f(c["rho"], 2) << " | " << (c.contains("band") ? c["band"].get<std::string>() : "–")
       << " |\n";
  }
  md << "\n";
  for (const auto& g : j["groups"]) {
    md << "### Groups by " << g["group"].get<std::string>() << "\n\n";
    md << "| Level | n | Median | Q1 | Q3 |\n|---|---|---|---|---|\n";
    for (const auto& l : g["levels"]) {
      md << "| " << l["level"].get<std::string>() << " | " << l["n"].get<std::size_t>() << " | "
         << f(l["median"], 2) << " | " << f(l["q1"], 2) << " | " << f(l["q3"], 2) << " |\n";
    }
    md << "\n| Comparison | U | p | |\n|---|---|---|---|\n";
    for (const auto& c : g["comparisons"]) {
      md << "| " << c["level_a"].get<std::string>() << " vs " << c["level_b"].get<std::string>()
         << " | " << f(c.value("u", Json()), 1) << " | ";
      if (c["p_value"].is_number()) {
        std::ostringstream p;
        p.precision(3);
        p << c["p_value"].get<double>();
        md << p.str() << " | " << c["stars"].get<std::string>() << " |\n";
      } else {
        md << "– | – |\n";
      }
    }
    md << "\n";
  }
}

}  // namespace

int cmd_report(const ReportArgs& args, const CommonOptions& common, std::ostream& out,
               std::ostream& err) {
  RunManifest manifest;
  manifest.command = "report";
  manifest.argv = common.argv;
  ConfigReader(load_config(common, manifest)).expect_consumed();

  using Section = void (*)(std::ostringstream&, const Json&);
  const std::vector<std::pair<const char*, Section>> sections{
      {"score.json", score_section},
      {"agreement.json", agreement_section},
      {"reliability.json", reliability_section},
      {"correlation.json", correlation_section},
  };
  std::ostringstream md;
  md << "# U-Turn Test analysis report\n\n";
  std::size_t found = 0;
  for (const auto& [name, render] : sections) {
    fs::path path;
    for (const auto& d : args.input_dirs) {
      std::error_code ec;
      if (fs::exists(fs::path(d) / name, ec)) {
        path = fs::path(d) / name;
        break;
      }
    }
    if (path.empty()) continue;
    try {
      render(md, Json::parse(read_input(path, manifest)));
      ++found;
    } catch (const std::exception& e) {
      err << "uturn report: " << path.string() << ": " << e.what() << "\n";
      return kExitFailure;
    }
  }
  if (found == 0) {
    err << "uturn report: no score, agreement, reliability or correlation JSON found\n";
    return kExitFailure;
  }
  OutputDir dir(common.out_dir, manifest);
  dir.write("report.md", md.str());
  dir.finish();
  out << "report: " << found << " section(s) written to " << (dir.root() / "report.md").string()
      << "\n";
  return kExitOk;
}

}  // namespace uturn::cli
