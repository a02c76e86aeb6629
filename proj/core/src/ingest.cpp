#include "uturn/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"
#include "uturn/csv.hpp"

namespace uturn {

namespace {

using nlohmann::json;

constexpr double kGapWarning = 0.2;

template <typename Enum, std::size_t N>
Enum enum_from_string(std::string_view s, const std::array<Enum, N>& values,
                      const char* what) {
  for (Enum v : values) {
    if (to_string(v) == s) return v;
  }
  throw ParseError(std::string("unknown ") + what + " '" + std::string(s) + "'");
}

double infer_rate(const std::vector<SensorSample>& samples) {
  std::vector<double> dts;
  dts.reserve(samples.size());
  for (std::size_t i = 1; i < samples.size(); ++i) {
    dts.push_back(samples[i].t - samples[i - 1].t);
  }
  auto mid = dts.begin() + static_cast<std::ptrdiff_t>(dts.size() / 2);
  std::nth_element(dts.begin(), mid, dts.end());
  // Rounded to 1e-6 Hz so that 0.02 s spacing reads as exactly 50 Hz.
  return std::round(1e6 / *mid) / 1e6;
}

void validate_samples(const std::vector<SensorSample>& samples,
                      const std::vector<std::size_t>& lines) {
  if (samples.empty()) throw ParseError("empty file");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    const std::size_t line = lines.empty() ? 0 : lines[i];
    bool finite = std::isfinite(s.t);
    for (double v : s.accel) finite = finite && std::isfinite(v);
    for (double v : s.gyro) finite = finite && std::isfinite(v);
    if (s.mag) {
      for (double v : *s.mag) finite = finite && std::isfinite(v);
    }
    if (!finite) throw ParseError("non-finite value", line);
    if (s.t < 0.0) throw ParseError("negative timestamp", line);
    if (i > 0 && !(s.t > samples[i - 1].t)) {
      throw ParseError("non-monotone timestamps", line);
    }
  }
}

void apply_metadata(SensorStream& stream,
                    const std::map<std::string, std::string>& meta,
                    bool& have_rate) {
  for (const auto& [key, value] : meta) {
    if (key == "session_id") {
      stream.session_id = value;
    } else if (key == "setting") {
      stream.setting = parse_setting(value);
    } else if (key == "wear_location") {
      stream.wear_location = parse_wear_location(value);
    } else if (key == "participant_id") {
      stream.participant_id = value;
    } else if (key == "day") {
      stream.day = static_cast<int>(parse_long(value));
    } else if (key == "nominal_rate") {
      stream.nominal_rate = parse_double(value);
      have_rate = true;
    }
  }
}

void finish_stream(SensorStream& stream, bool have_rate) {
  if (!have_rate && stream.samples.size() >= 2) {
    stream.nominal_rate = infer_rate(stream.samples);
  }
  if (!(stream.nominal_rate > 0.0) || !std::isfinite(stream.nominal_rate)) {
    throw ParseError("nominal_rate must be positive");
  }
  for (const auto& gap : find_gaps(stream, kGapWarning)) {
    stream.warnings.push_back("sampling gap of " +
                              format_double(gap.upper - gap.lower) + " s at t=" +
                              format_double(gap.lower));
  }
}

SensorStream parse_csv_stream(std::string_view text) {
  const CsvTable table = read_csv(text);
  if (table.header.empty()) throw ParseError("empty file");

  SensorStream stream;
  bool have_rate = false;
  apply_metadata(stream, table.metadata, have_rate);

  const auto require = [&](std::string_view name) {
    auto c = table.column(name);
    if (!c) throw ParseError("missing column '" + std::string(name) + "'", 1);
    return *c;
  };
  const std::size_t t_col = require("t");
  const std::array<std::size_t, 3> a_cols{require("ax"), require("ay"),
                                          require("az")};
  std::array<std::size_t, 3> g_cols{};
  std::array<double, 3> g_scale{};
  const char* g_names[] = {"gx", "gy", "gz"};
  for (int k = 0; k < 3; ++k) {
    if (auto c = table.column(g_names[k])) {
      g_cols[k] = *c;
      g_scale[k] = 1.0;
    } else {
      g_cols[k] = require(std::string(g_names[k]) + "_dps");
      g_scale[k] = kDegToRad;
    }
  }
  const auto mx = table.column("mx");
  const auto my = table.column("my");
  const auto mz = table.column("mz");
  const bool has_mag = mx && my && mz;
  if ((mx || my || mz) && !has_mag) {
    throw ParseError("magnetometer needs all of mx,my,mz", 1);
  }

  std::vector<std::size_t> lines;
  stream.samples.reserve(table.rows.size());
  lines.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    SensorSample s;
    s.t = parse_double(row.fields[t_col], row.line);
    for (int k = 0; k < 3; ++k) {
      s.accel[k] = parse_double(row.fields[a_cols[k]], row.line);
      s.gyro[k] = parse_double(row.fields[g_cols[k]], row.line) * g_scale[k];
    }
    if (has_mag) {
      s.mag = Vec3{parse_double(row.fields[*mx], row.line),
                   parse_double(row.fields[*my], row.line),
                   parse_double(row.fields[*mz], row.line)};
    }
    stream.samples.push_back(s);
    lines.push_back(row.line);
  }
  validate_samples(stream.samples, lines);
  finish_stream(stream, have_rate);
  return stream;
}

Vec3 vec_from_json(const json& j, const char* what, std::size_t index) {
  if (!j.is_array() || j.size() != 3) {
    throw ParseError(std::string("sample ") + std::to_string(index) + ": '" +
                     what + "' must be a 3-array");
  }
  return Vec3{j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

SensorStream parse_json_stream(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("session envelope must be an object");
  SensorStream stream;
  bool have_rate = false;
  try {
    std::map<std::string, std::string> meta;
    for (const char* key : {"session_id", "setting", "wear_location", "participant_id"}) {
      if (doc.contains(key)) meta[key] = doc[key].get<std::string>();
    }
    apply_metadata(stream, meta, have_rate);
    if (doc.contains("day")) stream.day = doc["day"].get<int>();
    if (doc.contains("nominal_rate")) {
      stream.nominal_rate = doc["nominal_rate"].get<double>();
      have_rate = true;
    }
    if (!doc.contains("samples") || !doc["samples"].is_array()) {
      throw ParseError("missing 'samples' array");
    }
    const auto& samples = doc["samples"];
    stream.samples.reserve(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto& js = samples[i];
      SensorSample s;
      s.t = js.at("t").get<double>();
      s.accel = vec_from_json(js.at("accel"), "accel", i);
      s.gyro = vec_from_json(js.at("gyro"), "gyro", i);
      if (js.contains("mag")) s.mag = vec_from_json(js["mag"], "mag", i);
      stream.samples.push_back(s);
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid session envelope: ") + e.what());
  }
  validate_samples(stream.samples, {});
  finish_stream(stream, have_rate);
  return stream;
}

json vec_to_json(const Vec3& v) { return json::array({v[0], v[1], v[2]}); }

}  // namespace

std::string_view to_string(WearLocation v) {
  switch (v) {
    case WearLocation::belt_front: return "belt_front";
    case WearLocation::belt_back: return "belt_back";
    case WearLocation::pocket_front_left: return "pocket_front_left";
    case WearLocation::pocket_front_right: return "pocket_front_right";
    case WearLocation::pocket_back_left: return "pocket_back_left";
    case WearLocation::pocket_back_right: return "pocket_back_right";
  }
  return "unknown";
}

std::string_view to_string(WearRole v) {
  switch (v) {
    case WearRole::belt_front: return "belt_front";
    case WearRole::belt_back: return "belt_back";
    case WearRole::pocket_front_inner: return "pocket_front_inner";
    case WearRole::pocket_front_outer: return "pocket_front_outer";
    case WearRole::pocket_back_inner: return "pocket_back_inner";
    case WearRole::pocket_back_outer: return "pocket_back_outer";
  }
  return "unknown";
}

std::string_view to_string(Setting v) {
  return v == Setting::supervised ? "supervised" : "unsupervised";
}

std::string_view to_string(TurnDirection v) {
  return v == TurnDirection::left ? "left" : "right";
}

WearLocation parse_wear_location(std::string_view s) {
  static constexpr std::array values{
      WearLocation::belt_front,         WearLocation::belt_back,
      WearLocation::pocket_front_left,  WearLocation::pocket_front_right,
      WearLocation::pocket_back_left,   WearLocation::pocket_back_right};
  return enum_from_string(s, values, "wear location");
}

Setting parse_setting(std::string_view s) {
  static constexpr std::array values{Setting::supervised, Setting::unsupervised};
  return enum_from_string(s, values, "setting");
}

SensorStream parse_stream(std::string_view text, StreamFormat format) {
  if (trim(text).empty()) throw ParseError("empty file");
  return format == StreamFormat::csv ? parse_csv_stream(text)
                                     : parse_json_stream(text);
}

std::string serialize_stream(const SensorStream& stream, StreamFormat format) {
  const bool has_mag = !stream.samples.empty() &&
                       std::all_of(stream.samples.begin(), stream.samples.end(),
                                   [](const SensorSample& s) { return s.mag.has_value(); });
  if (format == StreamFormat::json) {
    json doc;
    doc["session_id"] = stream.session_id;
    doc["setting"] = to_string(stream.setting);
    doc["wear_location"] = to_string(stream.wear_location);
    doc["nominal_rate"] = stream.nominal_rate;
    if (!stream.participant_id.empty()) doc["participant_id"] = stream.participant_id;
    if (stream.day) doc["day"] = *stream.day;
    json samples = json::array();
    for (const auto& s : stream.samples) {
      json js{{"t", s.t}, {"accel", vec_to_json(s.accel)}, {"gyro", vec_to_json(s.gyro)}};
      if (has_mag) js["mag"] = vec_to_json(*s.mag);
      samples.push_back(std::move(js));
    }
    doc["samples"] = std::move(samples);
    return doc.dump() + "\n";
  }

  std::string out;
  out.reserve(stream.samples.size() * 120 + 256);
  out += "# session_id=" + stream.session_id + "\n";
  out += "# setting=" + std::string(to_string(stream.setting)) + "\n";
  out += "# wear_location=" + std::string(to_string(stream.wear_location)) + "\n";
  out += "# nominal_rate=" + format_double(stream.nominal_rate) + "\n";
  if (!stream.participant_id.empty()) {
    out += "# participant_id=" + stream.participant_id + "\n";
  }
  if (stream.day) out += "# day=" + std::to_string(*stream.day) + "\n";
  out += has_mag ? "t,ax,ay,az,gx,gy,gz,mx,my,mz\n" : "t,ax,ay,az,gx,gy,gz\n";
  for (const auto& s : stream.samples) {
    out += format_double(s.t);
    for (double v : s.accel) (out += ',') += format_double(v);
    for (double v : s.gyro) (out += ',') += format_double(v);
    if (has_mag) {
      for (double v : *s.mag) (out += ',') += format_double(v);
    }
    out += '\n';
  }
  return out;
}

bool is_uniform(const SensorStream& stream, double rel_tol) {
  const double dt = 1.0 / stream.nominal_rate;
  for (std::size_t i = 1; i < stream.samples.size(); ++i) {
    const double step = stream.samples[i].t - stream.samples[i - 1].t;
    if (std::abs(step - dt) > rel_tol * dt) return false;
  }
  return true;
}

std::vector<Interval> find_gaps(const SensorStream& stream, double max_gap) {
  std::vector<Interval> gaps;
  for (std::size_t i = 1; i < stream.samples.size(); ++i) {
    const double a = stream.samples[i - 1].t;
    const double b = stream.samples[i].t;
    if (b - a > max_gap) gaps.push_back({a, b});
  }
  return gaps;
}

SensorStream resample_uniform(const SensorStream& stream, double rate) {
  if (!(rate > 0.0) || !std::isfinite(rate)) {
    throw InvalidArgument("resample rate must be positive");
  }
  const auto& in = stream.samples;
  if (in.size() < 2) throw InvalidArgument("resampling needs at least 2 samples");
  const double t0 = in.front().t;
  const double span = in.back().t - t0;
  if (span * rate < 2.0 - 1e-9) {
    throw InvalidArgument("stream shorter than two periods at the target rate");
  }
  const bool has_mag = std::all_of(in.begin(), in.end(),
                                   [](const SensorSample& s) { return s.mag.has_value(); });
  const auto count = static_cast<std::size_t>(std::floor(span * rate + 1e-9)) + 1;

  SensorStream out = stream;
  out.samples.clear();
  out.samples.reserve(count);
  out.nominal_rate = rate;

  const auto lerp = [](const Vec3& a, const Vec3& b, double w) {
    return Vec3{a[0] + w * (b[0] - a[0]), a[1] + w * (b[1] - a[1]),
                a[2] + w * (b[2] - a[2])};
  };

  std::size_t j = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const double t = std::min(t0 + static_cast<double>(i) / rate, in.back().t);
    while (j + 2 < in.size() && in[j + 1].t <= t) ++j;
    const auto& a = in[j];
    const auto& b = in[j + 1];
    SensorSample s;
    s.t = t0 + static_cast<double>(i) / rate;
    if (t == a.t) {
      s.accel = a.accel;
      s.gyro = a.gyro;
      s.mag = has_mag ? a.mag : std::nullopt;
    } else if (t == b.t) {
      s.accel = b.accel;
      s.gyro = b.gyro;
      s.mag = has_mag ? b.mag : std::nullopt;
    } else {
      const double w = (t - a.t) / (b.t - a.t);
      s.accel = lerp(a.accel, b.accel, w);
      s.gyro = lerp(a.gyro, b.gyro, w);
      if (has_mag) s.mag = lerp(*a.mag, *b.mag, w);
    }
    out.samples.push_back(s);
  }
  return out;
}

SensorStream shift_time(const SensorStream& stream, double dt) {
  SensorStream out = stream;
  for (auto& s : out.samples) s.t += dt;
  return out;
}

double sync_offset(const SensorStream& a, const SensorStream& b, double max_lag) {
  if (a.samples.size() < 2 || b.samples.size() < 2) {
    throw InvalidArgument("sync needs at least 2 samples per stream");
  }
  const double rate = a.nominal_rate;
  if (std::abs(b.nominal_rate - rate) > 1e-9 * rate || !is_uniform(a) ||
      !is_uniform(b)) {
    throw InvalidArgument("sync needs both streams uniform at the same rate");
  }
  if (!(max_lag >= 0.0) || max_lag >= std::min(a.duration(), b.duration())) {
    throw InvalidArgument("max_lag must be in [0, shortest span)");
  }

  const auto magnitude = [](const SensorStream& s) {
    std::vector<double> m;
    m.reserve(s.samples.size());
    for (const auto& x : s.samples) m.push_back(norm(x.gyro));
    return m;
  };
  const std::vector<double> ma = magnitude(a);
  const std::vector<double> mb = magnitude(b);
  const auto flat = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
  };
  if (flat(ma) || flat(mb)) {
    throw UndefinedStatistic("zero-variance gyroscope magnitude; correlation undefined");
  }

  const double dt = 1.0 / rate;
  const double origin = b.samples.front().t - a.samples.front().t;
  const auto na = static_cast<long>(ma.size());
  const auto nb = static_cast<long>(mb.size());

  // Index lag m pairs a[i] with b[i + m], which corresponds to the time lag
  // L = origin + m*dt under b(t) = a(t - L).
  const long m_lo = static_cast<long>(std::ceil((-max_lag - origin) * rate - 1e-9));
  const long m_hi = static_cast<long>(std::floor((max_lag - origin) * rate + 1e-9));

  double best_corr = -std::numeric_limits<double>::infinity();
  double best_lag = 0.0;
  bool found = false;
  for (long m = m_lo; m <= m_hi; ++m) {
    const long i0 = std::max(0L, -m);
    const long i1 = std::min(na, nb - m);
    const long n = i1 - i0;
    if (n < 2) continue;
    double sa = 0, sb = 0;
    for (long i = i0; i < i1; ++i) {
      sa += ma[i];
      sb += mb[i + m];
    }
    const double mean_a = sa / static_cast<double>(n);
    const double mean_b = sb / static_cast<double>(n);
    double sab = 0, saa = 0, sbb = 0;
    for (long i = i0; i < i1; ++i) {
      const double da = ma[i] - mean_a;
      const double db = mb[i + m] - mean_b;
      sab += da * db;
      saa += da * da;
      sbb += db * db;
    }
    if (saa <= 0.0 || sbb <= 0.0) continue;
    const double corr = sab / std::sqrt(saa * sbb);
    const double lag = origin + static_cast<double>(m) * dt;
    if (!found || corr > best_corr ||
        (corr == best_corr && std::abs(lag) < std::abs(best_lag))) {
      best_corr = corr;
      best_lag = lag;
      found = true;
    }
  }
  if (!found) throw UndefinedStatistic("no lag with a defined correlation");
  return best_lag;
}

WearRole resolve_wear_role(WearLocation physical, TurnDirection direction) {
  const bool left_turn = direction == TurnDirection::left;
  switch (physical) {
    case WearLocation::belt_front: return WearRole::belt_front;
    case WearLocation::belt_back: return WearRole::belt_back;
    case WearLocation::pocket_front_right:
      return left_turn ? WearRole::pocket_front_outer : WearRole::pocket_front_inner;
    case WearLocation::pocket_front_left:
      return left_turn ? WearRole::pocket_front_inner : WearRole::pocket_front_outer;
    case WearLocation::pocket_back_right:
      return left_turn ? WearRole::pocket_back_outer : WearRole::pocket_back_inner;
    case WearLocation::pocket_back_left:
      return left_turn ? WearRole::pocket_back_inner : WearRole::pocket_back_outer;
  }
  throw InvalidArgument("unknown wear location");
}

std::vector<TurnAnnotation> parse_annotations(std::string_view text,
                                              AnnotationSource source) {
  const CsvTable table = read_csv(text, false);
  std::vector<TurnAnnotation> out;
  for (const auto& row : table.rows) {
    if (row.fields.size() < 2) throw ParseError("expected start_s,end_s", row.line);
    if (out.empty() && row.fields[0] == "start_s") continue;  // header
    TurnAnnotation a;
    a.start_s = parse_double(row.fields[0], row.line);
    a.end_s = parse_double(row.fields[1], row.line);
    a.source = source;
    if (!std::isfinite(a.start_s) || !std::isfinite(a.end_s)) {
      throw ParseError("non-finite annotation time", row.line);
    }
    if (!(a.end_s > a.start_s)) throw ParseError("end before start", row.line);
    out.push_back(a);
  }
  std::sort(out.begin(), out.end(), [](const TurnAnnotation& x, const TurnAnnotation& y) {
    return x.start_s < y.start_s;
  });
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i].start_s < out[i - 1].end_s) {
      throw ParseError("overlapping annotations at " + format_double(out[i].start_s));
    }
  }
  return out;
}

std::string serialize_annotations(const std::vector<TurnAnnotation>& annotations) {
  std::string out = "start_s,end_s\n";
  for (const auto& a : annotations) {
    out += format_double(a.start_s) + "," + format_double(a.end_s) + "\n";
  }
  return out;
}

}  // namespace uturn
