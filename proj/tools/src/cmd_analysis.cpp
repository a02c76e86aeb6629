#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "commands.hpp"
#include "json.hpp"
#include "uturn/csv.hpp"
#include "uturn/match.hpp"
#include "uturn/measures.hpp"
#include "uturn/stats.hpp"

namespace uturn::cli {
namespace {

using Json = nlohmann::ordered_json;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

RunManifest start_manifest(const char* command, const CommonOptions& common) {
  RunManifest m;
  m.command = command;
  m.argv = common.argv;
  m.seed = common.seed.value_or(0);
  return m;
}

std::size_t require_column(const CsvTable& table, const std::string& name,
                           const std::string& file) {
  const auto c = table.column(name);
  if (!c) throw Error(file + ": missing column '" + name + "'");
  return *c;
}

/// Empty cells are missing values.
double number_or_nan(const CsvTable::Row& row, std::size_t col) {
  const auto f = trim(row.fields[col]);
  return f.empty() ? kNaN : parse_double(f, row.line);
}

Json estimate_json(const Estimate& e) {
  return Json{{"value", e.value}, {"ci", {e.ci.lower, e.ci.upper}}};
}

std::string fixed2(double v) { return format_fixed(v, 2); }

// --- Bland-Altman plot -----------------------------------------------------

std::string bland_altman_svg(const std::vector<double>& means, const std::vector<double>& diffs,
                             const BlandAltman& ba) {
  const double w = 640, h = 420, left = 70, right = 20, top = 20, bottom = 50;
  double x0 = *std::min_element(means.begin(), means.end());
  double x1 = *std::max_element(means.begin(), means.end());
  double y0 = std::min(*std::min_element(diffs.begin(), diffs.end()), ba.loa_lower);
  double y1 = std::max(*std::max_element(diffs.begin(), diffs.end()), ba.loa_upper);
  const double xpad = std::max(0.05 * (x1 - x0), 1e-3), ypad = std::max(0.1 * (y1 - y0), 1e-3);
  x0 -= xpad, x1 += xpad, y0 -= ypad, y1 += ypad;
  const auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * (w - left - right); };
  const auto py = [&](double y) { return top + (y1 - y) / (y1 - y0) * (h - top - bottom); };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << w - left - right
    << "\" height=\"" << h - top - bottom << "\" fill=\"none\" stroke=\"#444\"/>\n";
  const auto hline = [&](double y, const char* color, const char* dash, const std::string& label) {
    s << "<line x1=\"" << fixed2(left) << "\" x2=\"" << fixed2(w - right) << "\" y1=\""
      << fixed2(py(y)) << "\" y2=\"" << fixed2(py(y)) << "\" stroke=\"" << color
      << "\" stroke-dasharray=\"" << dash << "\"/>\n";
    s << "<text x=\"" << fixed2(w - right - 4) << "\" y=\"" << fixed2(py(y) - 4)
      << "\" text-anchor=\"end\" fill=\"" << color << "\">" << label << "</text>\n";
  };
  hline(ba.bias, "#c0392b", "0", "bias " + fixed2(ba.bias));
  hline(ba.loa_lower, "#2c3e50", "6,4", "LoA " + fixed2(ba.loa_lower));
  hline(ba.loa_upper, "#2c3e50", "6,4", "LoA " + fixed2(ba.loa_upper));
  for (std::size_t i = 0; i < means.size(); ++i) {
    s << "<circle cx=\"" << fixed2(px(means[i])) << "\" cy=\"" << fixed2(py(diffs[i]))
      << "\" r=\"3\" fill=\"#2980b9\" fill-opacity=\"0.7\"/>\n";
  }
  s << "<text x=\"" << fixed2(left + (w - left - right) / 2) << "\" y=\"" << h - 12
    << "\" text-anchor=\"middle\">mean of methods</text>\n";
  s << "<text x=\"16\" y=\"" << fixed2(top + (h - top - bottom) / 2)
    << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
    << fixed2(top + (h - top - bottom) / 2) << ")\">difference (a - b)</text>\n";
  s << "<text x=\"" << left << "\" y=\"" << h - 30 << "\">" << fixed2(x0) << "</text>\n";
  s << "<text x=\"" << w - right << "\" y=\"" << h - 30 << "\" text-anchor=\"end\">" << fixed2(x1)
    << "</text>\n";
  s << "</svg>\n";
  return s.str();
}

}  // namespace

int cmd_agree(const AgreeArgs& args, const CommonOptions& common, std::ostream& out,
              std::ostream& err) {
  RunManifest manifest = start_manifest("agree", common);
  ConfigReader config(load_config(common, manifest));
  const std::string id_col = config.get("id_col", std::string("participant_id"));
  const std::string a_col = config.get("a_col", std::string("a"));
  const std::string b_col = config.get("b_col", std::string("b"));
  BootstrapOptions boot;
  boot.n_reps = args.reps.value_or(config.get("n_reps", boot.n_reps));
  config.expect_consumed();
  boot.seed = manifest.seed;
  boot.threads = common.thread_count();
  manifest.config = {{"id_col", id_col},
                     {"a_col", a_col},
                     {"b_col", b_col},
                     {"n_reps", std::to_string(boot.n_reps)}};

  const auto table = read_csv(read_input(args.input, manifest));
  const auto ci = require_column(table, id_col, args.input);
  const auto ca = require_column(table, a_col, args.input);
  const auto cb = require_column(table, b_col, args.input);
  std::vector<std::string> ids;
  std::vector<double> a, b;
  for (const auto& row : table.rows) {
    ids.push_back(row.fields[ci]);
    a.push_back(number_or_nan(row, ca));
    b.push_back(number_or_nan(row, cb));
  }
  const auto pairs = PairedSeries::complete(ids, a, b);
  if (pairs.size() < table.rows.size()) {
    err << "uturn agree: dropped " << table.rows.size() - pairs.size() << " incomplete pair(s)\n";
  }
  const auto result = agreement(pairs, boot);
  const auto ba = bland_altman(pairs);

  OutputDir dir(common.out_dir, manifest);
  Json j;
  j["n"] = result.n;
  j["a"] = a_col;
  j["b"] = b_col;
  j["icc31"] = estimate_json(result.icc31);
  j["icc_band"] = result.icc_band;
  j["bias"] = estimate_json(result.bias);
  j["loa_lower"] = estimate_json(result.loa_lower);
  j["loa_upper"] = estimate_json(result.loa_upper);
  j["sd_difference"] = ba.sd;
  j["n_reps"] = boot.n_reps;
  dir.write("agreement.json", j.dump(2) + "\n");

  const auto est = [](const Estimate& e) {
    return fixed2(e.value) + "," + fixed2(e.ci.lower) + "," + fixed2(e.ci.upper);
  };
  dir.write("agreement.csv",
            "n,icc31,icc31_lower,icc31_upper,icc_band,bias,bias_lower,bias_upper,loa_lower,"
            "loa_lower_lower,loa_lower_upper,loa_upper,loa_upper_lower,loa_upper_upper\n" +
                std::to_string(result.n) + "," + est(result.icc31) + "," + result.icc_band +
                "," + est(result.bias) + "," + est(result.loa_lower) + "," +
                est(result.loa_upper) + "\n");

  std::vector<double> means, diffs;
  std::string points = "participant_id,a,b,mean,difference\n";
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    means.push_back(0.5 * (pairs.a[i] + pairs.b[i]));
    diffs.push_back(pairs.a[i] - pairs.b[i]);
    points += pairs.ids[i] + "," + format_double(pairs.a[i]) + "," + format_double(pairs.b[i]) +
              "," + format_double(means.back()) + "," + format_double(diffs.back()) + "\n";
  }
  dir.write("bland_altman.csv", points);
  dir.write("bland_altman.svg", bland_altman_svg(means, diffs, ba));
  dir.finish();

  out << "agree: n=" << result.n << " ICC(3,1)=" << fixed2(result.icc31.value) << " ("
      << result.icc_band << "), bias=" << fixed2(result.bias.value) << " LoA ["
      << fixed2(result.loa_lower.value) << ", " << fixed2(result.loa_upper.value) << "]\n";
  return kExitOk;
}

namespace {

struct TestRow {
  std::optional<long> day;
  std::string session_id;
  double value;
};

std::vector<ParticipantTests> load_tests(const CsvTable& table, const std::string& file,
                                         const std::string& value_col) {
  const auto cp = require_column(table, "participant_id", file);
  const auto cv = require_column(table, value_col, file);
  const auto cd = table.column("day");
  const auto cs = table.column("session_id");
  std::map<std::string, std::vector<TestRow>> grouped;
  for (const auto& row : table.rows) {
    const double v = number_or_nan(row, cv);
    if (!std::isfinite(v)) continue;  // test without turns
    TestRow t{std::nullopt, cs ? row.fields[*cs] : std::string(), v};
    if (cd && !trim(row.fields[*cd]).empty()) t.day = parse_long(trim(row.fields[*cd]), row.line);
    grouped[row.fields[cp]].push_back(std::move(t));
  }
  std::vector<ParticipantTests> cohort;
  for (auto& [id, rows] : grouped) {
    std::stable_sort(rows.begin(), rows.end(), [](const TestRow& x, const TestRow& y) {
      if (x.day.has_value() != y.day.has_value()) return x.day.has_value();
      if (x.day != y.day) return *x.day < *y.day;
      return x.session_id < y.session_id;
    });
    ParticipantTests p;
    p.participant_id = id;
    for (const auto& r : rows) p.medians.push_back(r.value);
    cohort.push_back(std::move(p));
  }
  return cohort;
}

}  // namespace

int cmd_reliability(const ReliabilityArgs& args, const CommonOptions& common, std::ostream& out,
                    std::ostream&) {
  RunManifest manifest = start_manifest("reliability", common);
  ConfigReader config(load_config(common, manifest));
  ReliabilityOptions opt;
  opt.k_min = args.k_min.value_or(config.get("k_min", opt.k_min));
  opt.k_max = args.k_max.value_or(config.get("k_max", opt.k_max));
  opt.n_reps = args.reps.value_or(config.get("n_reps", opt.n_reps));
  const std::string mode = args.mode.value_or(config.get("mode", std::string("random")));
  const std::string variance = config.get("variance", std::string("moments"));
  const std::string value_col = config.get("value_col", std::string("turn_speed_median"));
  config.expect_consumed();
  if (mode == "random") opt.mode = PartitionMode::random;
  else if (mode == "chronological") opt.mode = PartitionMode::chronological;
  else throw UsageError("mode must be random or chronological");
  if (variance == "moments") opt.variance = VarianceMethod::moments;
  else if (variance == "reml") opt.variance = VarianceMethod::reml;
  else throw UsageError("variance must be moments or reml");
  if (opt.k_min == 0 || opt.k_min > opt.k_max) throw UsageError("need 1 <= k_min <= k_max");
  opt.seed = manifest.seed;
  opt.threads = common.thread_count();
  manifest.config = {{"k_min", std::to_string(opt.k_min)}, {"k_max", std::to_string(opt.k_max)},
                     {"n_reps", std::to_string(opt.n_reps)}, {"mode", mode},
                     {"variance", variance},                 {"value_col", value_col}};

  const auto table = read_csv(read_input(args.input, manifest));
  const auto cohort = load_tests(table, args.input, value_col);
  const auto curve = reliability_curve(cohort, opt);

  OutputDir dir(common.out_dir, manifest);
  Json rows = Json::array();
  std::string csv =
      "k,n,icc21,icc21_lower,icc21_upper,sem,sem_lower,sem_upper,mdc,mdc_lower,mdc_upper\n";
  for (const auto& r : curve) {
    Json j{{"k", r.k}, {"n", r.n}, {"available", r.available}};
    csv += std::to_string(r.k) + "," + std::to_string(r.n);
    if (r.available) {
      j["icc21"] = estimate_json(r.icc21);
      j["sem"] = estimate_json(r.sem);
      j["mdc"] = estimate_json(r.mdc);
      j["var_within"] = r.var_within;
      for (const auto* e : {&r.icc21, &r.sem, &r.mdc}) {
        csv += "," + fixed2(e->value) + "," + fixed2(e->ci.lower) + "," + fixed2(e->ci.upper);
      }
    } else {
      csv += ",,,,,,,,,";
    }
    csv += "\n";
    rows.push_back(j);
  }
  Json report{{"participants", cohort.size()},
              {"n_reps", opt.n_reps},
              {"mode", mode},
              {"variance", variance},
              {"rows", rows}};
  dir.write("reliability.json", report.dump(2) + "\n");
  dir.write("reliability.csv", csv);
  dir.finish();

  out << "reliability: " << cohort.size() << " participant(s), k = " << opt.k_min << ".."
      << opt.k_max << "\n";
  return kExitOk;
}

namespace {

bool all_numeric(const std::vector<std::string>& values) {
  for (const auto& v : values) {
    try {
      parse_double(v);
    } catch (const ParseError&) {
      return false;
    }
  }
  return true;
}

}  // namespace

int cmd_correlate(const CorrelateArgs& args, const CommonOptions& common, std::ostream& out,
                  std::ostream& err) {
  RunManifest manifest = start_manifest("correlate", common);
  ConfigReader config(load_config(common, manifest));
  const std::string id_col = config.get("id_col", std::string("participant_id"));
  const std::string value_col = config.get("value_col", std::string("turn_speed_median"));
  const auto group_request = config.get_list("groups", {"fall", "aid", "level"});
  const auto covariate_request = config.get_list("covariates", {});
  config.expect_consumed();

  const auto aggregates = read_csv(read_input(args.aggregates, manifest));
  const auto covariates = read_csv(read_input(args.covariates, manifest));
  const auto a_id = require_column(aggregates, id_col, args.aggregates);
  const auto a_val = require_column(aggregates, value_col, args.aggregates);
  const auto c_id = require_column(covariates, id_col, args.covariates);

  std::map<std::string, double> speed;
  for (const auto& row : aggregates.rows) {
    const double v = number_or_nan(row, a_val);
    if (std::isfinite(v)) speed[row.fields[a_id]] = v;
  }
  std::vector<std::string> ids;
  std::vector<const CsvTable::Row*> cov_rows;
  for (const auto& row : covariates.rows) {
    if (speed.count(row.fields[c_id])) {
      ids.push_back(row.fields[c_id]);
      cov_rows.push_back(&row);
    }
  }
  if (ids.size() < speed.size()) {
    err << "uturn correlate: " << speed.size() - ids.size()
        << " participant(s) without covariates skipped\n";
  }

  std::vector<std::string> groups;
  for (const auto& g : group_request) {
    if (covariates.column(g)) groups.push_back(g);
  }
  std::vector<std::string> covs = covariate_request;
  if (covs.empty()) {
    for (const auto& name : covariates.header) {
      if (name == id_col || std::find(groups.begin(), groups.end(), name) != groups.end()) {
        continue;
      }
      std::vector<std::string> values;
      for (const auto* row : cov_rows) {
        const auto c = *covariates.column(name);
        if (!trim(row->fields[c]).empty()) values.emplace_back(trim(row->fields[c]));
      }
      if (!values.empty() && all_numeric(values)) covs.push_back(name);
    }
  }
  manifest.config = {{"id_col", id_col}, {"value_col", value_col}};
  {
    std::string g, c;
    for (const auto& s : groups) g += (g.empty() ? "" : ",") + s;
    for (const auto& s : covs) c += (c.empty() ? "" : ",") + s;
    manifest.config["groups"] = g;
    manifest.config["covariates"] = c;
  }

  std::vector<std::string> problems;
  Json correlations = Json::array();
  std::string corr_csv = "covariate,n,rho,band\n";
  for (const auto& name : covs) {
    const auto col = require_column(covariates, name, args.covariates);
    std::vector<double> x, y;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const double v = number_or_nan(*cov_rows[i], col);
      if (std::isfinite(v)) {
        x.push_back(speed[ids[i]]);
        y.push_back(v);
      }
    }
    Json j{{"covariate", name}, {"n", x.size()}};
    try {
      if (x.size() < 3) throw UndefinedStatistic("fewer than 3 participants");
      const auto r = spearman(x, y);
      j["rho"] = r.rho;
      j["band"] = r.band;
      corr_csv += name + "," + std::to_string(r.n) + "," + fixed2(r.rho) + "," + r.band + "\n";
    } catch (const Error& e) {
      j["rho"] = nullptr;
      j["error"] = e.what();
      problems.push_back(name + ": " + e.what());
      corr_csv += name + "," + std::to_string(x.size()) + ",,\n";
    }
    correlations.push_back(j);
  }

  Json group_reports = Json::array();
  std::string box_csv = "group,level,n,min,q1,median,q3,max\n";
  std::string test_csv = "group,level_a,level_b,n_a,n_b,u,p_value,stars,median_difference\n";
  for (const auto& name : groups) {
    const auto col = *covariates.column(name);
    std::map<std::string, std::vector<double>> levels;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const auto level = trim(cov_rows[i]->fields[col]);
      if (!level.empty()) levels[std::string(level)].push_back(speed[ids[i]]);
    }
    std::vector<std::string> order;
    for (const auto& [level, v] : levels) order.push_back(level);
    if (all_numeric(order)) {
      std::stable_sort(order.begin(), order.end(), [](const auto& p, const auto& q) {
        return parse_double(p) < parse_double(q);
      });
    }
    Json level_rows = Json::array();
    for (const auto& level : order) {
      auto v = levels[level];
      std::sort(v.begin(), v.end());
      const auto s = summarize(v);
      level_rows.push_back({{"level", level},
                            {"n", s.n},
                            {"min", s.min},
                            {"q1", s.q1},
                            {"median", s.median},
                            {"q3", s.q3},
                            {"max", s.max}});
      box_csv += name + "," + level + "," + std::to_string(s.n) + "," + fixed2(s.min) + "," +
                 fixed2(s.q1) + "," + fixed2(s.median) + "," + fixed2(s.q3) + "," +
                 fixed2(s.max) + "\n";
    }
    Json comparisons = Json::array();
    for (std::size_t i = 0; i < order.size(); ++i) {
      for (std::size_t k = i + 1; k < order.size(); ++k) {
        const auto& va = levels[order[i]];
        const auto& vb = levels[order[k]];
        Json c{{"level_a", order[i]}, {"level_b", order[k]}, {"n_a", va.size()},
               {"n_b", vb.size()}};
        try {
          if (va.size() + vb.size() < 4) throw UndefinedStatistic("fewer than 4 observations");
          const auto g = mann_whitney(va, vb);
          c["u"] = g.u_a;
          c["u_b"] = g.u_b;
          c["p_value"] = g.p_value;
          c["exact"] = g.exact;
          c["stars"] = std::string(p_stars(g.p_value));
          c["median_difference"] = g.median_difference;
          std::ostringstream p;
          p.precision(3);
          p << g.p_value;
          test_csv += name + "," + order[i] + "," + order[k] + "," + std::to_string(va.size()) +
                      "," + std::to_string(vb.size()) + "," + format_double(g.u_a) + "," +
                      p.str() + "," + std::string(p_stars(g.p_value)) + "," +
                      fixed2(g.median_difference) + "\n";
        } catch (const Error& e) {
          c["p_value"] = nullptr;
          c["error"] = e.what();
          problems.push_back(name + " " + order[i] + " vs " + order[k] + ": " + e.what());
        }
        comparisons.push_back(c);
      }
    }
    group_reports.push_back({{"group", name}, {"levels", level_rows}, {"comparisons", comparisons}});
  }

  OutputDir dir(common.out_dir, manifest);
  Json report{{"n", ids.size()},
              {"value", value_col},
              {"correlations", correlations},
              {"groups", group_reports},
              {"warnings", problems}};
  dir.write("correlation.json", report.dump(2) + "\n");
  dir.write("correlation.csv", corr_csv);
  dir.write("groups.csv", box_csv);
  dir.write("group_tests.csv", test_csv);
  dir.finish();

  for (const auto& p : problems) err << "uturn correlate: " << p << "\n";
  out << "correlate: n=" << ids.size() << ", " << covs.size() << " covariate(s), "
      << groups.size() << " grouping(s)\n";
  return kExitOk;
}

}  // namespace uturn::cli
