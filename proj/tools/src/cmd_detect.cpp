#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "commands.hpp"
#include "json.hpp"
#include "uturn/csv.hpp"
#include "uturn/detect.hpp"
#include "uturn/ingest.hpp"
#include "uturn/match.hpp"
#include "uturn/measures.hpp"

namespace uturn::cli {
namespace {

using Json = nlohmann::ordered_json;

struct SessionOutcome {
  std::string path;
  std::string digest;
  std::optional<TestResult> result;
  std::string error;
};

SessionOutcome process_session(const std::string& path, const DetectorConfig& config) {
  SessionOutcome s;
  s.path = path;
  try {
    const std::string text = read_file(path);
    s.digest = hex_digest(text);
    const auto format =
        fs::path(path).extension() == ".json" ? StreamFormat::json : StreamFormat::csv;
    SensorStream stream = parse_stream(text, format);
    if (stream.session_id.empty()) stream.session_id = stem_of(path);
    stream.participant_id = participant_of(stream.session_id, stream.participant_id);
    s.result = summarize_test(detect_turns(stream, config), TestMeta::from_stream(stream));
  } catch (const ParseError& e) {
    s.error = e.line() > 0 ? "line " + std::to_string(e.line()) + ": " + e.what() : e.what();
  } catch (const Error& e) {
    s.error = e.what();
  }
  return s;
}

std::string tests_csv(const std::vector<const TestResult*>& results) {
  std::string out =
      "session_id,participant_id,day,setting,wear_location,n_turns,turn_speed_median,"
      "turn_duration_median\n";
  for (const auto* r : results) {
    const auto& m = r->meta;
    out += m.session_id + "," + m.participant_id + "," +
           (m.day ? std::to_string(*m.day) : std::string()) + "," +
           std::string(to_string(m.setting)) + "," + std::string(to_string(m.wear_location)) +
           "," + std::to_string(r->n_turns) + "," + cell(r->turn_speed_median) + "," +
           cell(r->turn_duration_median) + "\n";
  }
  return out;
}

std::string participants_csv(const std::vector<const TestResult*>& results) {
  std::map<std::string, std::vector<const TestResult*>> by_participant;
  for (const auto* r : results) by_participant[r->meta.participant_id].push_back(r);
  std::string out = "participant_id,n_tests,n_eligible,turn_speed_median\n";
  for (const auto& [id, tests] : by_participant) {
    std::vector<double> medians;
    for (const auto* t : tests) {
      if (t->turn_speed_median) medians.push_back(*t->turn_speed_median);
    }
    out += id + "," + std::to_string(tests.size()) + "," + std::to_string(medians.size()) + "," +
           (medians.empty() ? std::string() : format_double(median(medians))) + "\n";
  }
  return out;
}

std::string csv_escape(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

}  // namespace

int cmd_detect(const DetectArgs& args, const CommonOptions& common, std::ostream& out,
               std::ostream& err) {
  if (args.inputs.empty()) throw UsageError("detect: no input files");

  RunManifest manifest;
  manifest.command = "detect";
  manifest.argv = common.argv;
  manifest.seed = common.seed.value_or(0);

  KeyValues kv = load_config(common, manifest);
  if (args.rate_threshold_dps) kv["rate_threshold"] = format_double(*args.rate_threshold_dps * kDegToRad);
  if (args.min_angle_deg) kv["min_angle"] = format_double(*args.min_angle_deg * kDegToRad);
  DetectorConfig config;
  try {
    config = DetectorConfig::from_key_values(kv);
    config.validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  manifest.config = config.to_key_values();

  std::vector<SessionOutcome> sessions(args.inputs.size());
  parallel_for(args.inputs.size(), common.thread_count(), [&](std::size_t i) {
    sessions[i] = process_session(args.inputs[i], config);
  });

  OutputDir dir(common.out_dir, manifest);
  std::vector<const TestResult*> ok;
  std::vector<std::pair<std::string, std::string>> errors;
  std::set<std::string> seen;
  for (auto& s : sessions) {
    if (!s.digest.empty()) manifest.inputs.emplace_back(s.path, s.digest);
    if (s.result && !seen.insert(s.result->meta.session_id).second) {
      s.error = "duplicate session_id '" + s.result->meta.session_id + "'";
      s.result.reset();
    }
    if (!s.result) {
      errors.emplace_back(s.path, s.error);
      err << "uturn detect: " << s.path << ": " << s.error << "\n";
      continue;
    }
    ok.push_back(&*s.result);
    const auto& r = *s.result;
    dir.write("turns/" + r.meta.session_id + ".csv",
              serialize_annotations(to_annotations(r.per_turn)));
    dir.write("turns/" + r.meta.session_id + ".json", turns_to_json(r.per_turn));
  }
  dir.write("tests.csv", tests_csv(ok));
  dir.write("participants.csv", participants_csv(ok));
  if (!errors.empty()) {
    std::string text = "file,error\n";
    for (const auto& [path, message] : errors) text += path + "," + csv_escape(message) + "\n";
    dir.write("errors.csv", text);
  }
  dir.finish();
  out << "detect: " << ok.size() << " session(s) processed, " << errors.size()
      << " error(s); results in " << dir.root().string() << "\n";
  return errors.empty() ? kExitOk : kExitFailure;
}

namespace {

std::map<std::string, fs::path> annotation_files(const std::string& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw UsageError("not a directory: '" + dir + "'");
  std::map<std::string, fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") {
      files[stem_of(entry.path())] = entry.path();
    }
  }
  return files;
}

Json optional_number(bool defined, double v) { return defined ? Json(v) : Json(nullptr); }

Json score_json(const DetectionScore& s) {
  Json j;
  j["tp"] = s.tp;
  j["fp"] = s.fp;
  j["fn"] = s.fn;
  j["defined"] = s.defined;
  j["precision"] = optional_number(s.defined, s.precision);
  j["recall"] = optional_number(s.defined, s.recall);
  j["f1"] = optional_number(s.defined, s.f1);
  j["mean_overlap_pct"] = optional_number(s.tp > 0, s.mean_overlap_pct);
  j["onset_error_mean"] = optional_number(s.tp > 0, s.onset_error_mean);
  j["onset_error_sd"] = optional_number(s.tp > 0, s.onset_error_sd);
  j["end_error_mean"] = optional_number(s.tp > 0, s.end_error_mean);
  j["end_error_sd"] = optional_number(s.tp > 0, s.end_error_sd);
  return j;
}

Json summary_json(const SummaryStats& s) {
  return Json{{"n", s.n},          {"mean", s.mean},     {"ci", {s.mean_ci.lower, s.mean_ci.upper}},
              {"sd", s.sd},        {"min", s.min},       {"p05", s.p05},
              {"q1", s.q1},        {"median", s.median}, {"q3", s.q3},
              {"p95", s.p95},      {"max", s.max}};
}

std::string pct(const DetectionScore& s, double v) {
  return s.defined ? format_fixed(100.0 * v, 1) : std::string();
}

}  // namespace

int cmd_score(const ScoreArgs& args, const CommonOptions& common, std::ostream& out,
              std::ostream& err) {
  RunManifest manifest;
  manifest.command = "score";
  manifest.argv = common.argv;
  manifest.seed = common.seed.value_or(0);
  ConfigReader config(load_config(common, manifest));
  double overlap_min = config.get("overlap_min", 0.20);
  if (args.overlap_min) overlap_min = *args.overlap_min;
  config.expect_consumed();
  if (!(overlap_min > 0.0 && overlap_min <= 1.0)) throw UsageError("overlap_min must be in (0, 1]");
  manifest.config = {{"overlap_min", format_double(overlap_min)}};

  const auto detected = annotation_files(args.detected_dir);
  const auto reference = annotation_files(args.reference_dir);

  std::vector<std::string> errors;
  for (const auto& [id, path] : detected) {
    if (!reference.count(id)) errors.push_back(id + ": no reference annotations");
  }
  for (const auto& [id, path] : reference) {
    if (!detected.count(id)) errors.push_back(id + ": no detected turns");
  }

  struct Session {
    std::string id;
    std::string participant;
    std::vector<MatchOutcome> outcomes;
  };
  std::vector<Session> sessions;
  for (const auto& [id, det_path] : detected) {
    const auto ref_it = reference.find(id);
    if (ref_it == reference.end()) continue;
    try {
      const auto det =
          parse_annotations(read_input(det_path, manifest), AnnotationSource::detector);
      const auto ref =
          parse_annotations(read_input(ref_it->second, manifest), AnnotationSource::reference);
      sessions.push_back({id, participant_of(id, ""), classify_turns(det, ref, overlap_min)});
    } catch (const Error& e) {
      errors.push_back(id + ": " + e.what());
    }
  }

  OutputDir dir(common.out_dir, manifest);
  Json report;
  report["overlap_min"] = overlap_min;

  std::string outcomes_text;
  Json session_rows = Json::array();
  std::map<std::string, std::vector<MatchOutcome>> by_participant;
  std::map<std::string, std::size_t> session_count;
  std::vector<MatchOutcome> pooled;
  for (const auto& s : sessions) {
    const auto csv = outcomes_to_csv(s.outcomes);
    const auto body = csv.substr(csv.find('\n') + 1);
    if (outcomes_text.empty()) outcomes_text = "session_id," + csv.substr(0, csv.find('\n') + 1);
    for (const auto line : split(body, '\n')) {
      if (!line.empty()) outcomes_text += s.id + "," + std::string(line) + "\n";
    }
    Json row = score_json(score(s.outcomes));
    row["session_id"] = s.id;
    row["participant_id"] = s.participant;
    session_rows.push_back(row);
    auto& bucket = by_participant[s.participant];
    bucket.insert(bucket.end(), s.outcomes.begin(), s.outcomes.end());
    pooled.insert(pooled.end(), s.outcomes.begin(), s.outcomes.end());
    ++session_count[s.participant];
  }
  report["sessions"] = session_rows;

  std::vector<DetectionScore> participant_scores;
  Json participant_rows = Json::array();
  std::string participants_text =
      "participant_id,n_sessions,tp,fp,fn,precision_pct,recall_pct,f1_pct,mean_overlap_pct,"
      "onset_error_mean,end_error_mean\n";
  for (const auto& [id, outcomes] : by_participant) {
    const auto s = score(outcomes);
    participant_scores.push_back(s);
    if (!s.defined) err << "uturn score: participant " << id << " has no turns; excluded\n";
    Json row = score_json(s);
    row["participant_id"] = id;
    row["n_sessions"] = session_count[id];
    participant_rows.push_back(row);
    const bool timed = s.tp > 0;
    participants_text += id + "," + std::to_string(session_count[id]) + "," +
                         std::to_string(s.tp) + "," + std::to_string(s.fp) + "," +
                         std::to_string(s.fn) + "," + pct(s, s.precision) + "," +
                         pct(s, s.recall) + "," + pct(s, s.f1) + "," +
                         (timed ? format_fixed(s.mean_overlap_pct, 1) : "") + "," +
                         (timed ? format_fixed(s.onset_error_mean, 2) : "") + "," +
                         (timed ? format_fixed(s.end_error_mean, 2) : "") + "\n";
  }
  report["participants"] = participant_rows;

  Json cohort;
  std::string summary_text = "statistic,f1_pct\n";
  try {
    const auto stats = cohort_score_stats(participant_scores);
    cohort["f1_pct"] = summary_json(stats.f1_pct);
    cohort["excluded"] = stats.excluded;
    const auto& f = stats.f1_pct;
    const std::vector<std::pair<std::string, double>> rows{
        {"mean", f.mean}, {"ci_lower", f.mean_ci.lower}, {"ci_upper", f.mean_ci.upper},
        {"sd", f.sd},     {"min", f.min},                {"p05", f.p05},
        {"q1", f.q1},     {"median", f.median},          {"q3", f.q3},
        {"p95", f.p95},   {"max", f.max}};
    summary_text += "n," + std::to_string(f.n) + "\n";
    for (const auto& [name, v] : rows) summary_text += name + "," + format_fixed(v, 1) + "\n";
  } catch (const Error& e) {
    errors.push_back(std::string("cohort summary: ") + e.what());
    cohort["f1_pct"] = nullptr;
  }
  cohort["pooled"] = score_json(score(pooled));
  report["cohort"] = cohort;
  report["errors"] = errors;

  dir.write("score.json", report.dump(2) + "\n");
  dir.write("score_participants.csv", participants_text);
  dir.write("score_summary.csv", summary_text);
  dir.write("outcomes.csv", outcomes_text.empty()
                                ? "session_id,kind,det_start,det_end,ref_start,ref_end,overlap,"
                                  "onset_err,end_err\n"
                                : outcomes_text);
  dir.finish();

  for (const auto& e : errors) err << "uturn score: " << e << "\n";
  out << "score: " << sessions.size() << " session(s), " << by_participant.size()
      << " participant(s), " << errors.size() << " error(s)\n";
  return errors.empty() ? kExitOk : kExitFailure;
}

}  // namespace uturn::cli
