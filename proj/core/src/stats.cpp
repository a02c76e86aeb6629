#include "uturn/stats.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <numeric>
#include <thread>

#include "uturn/match.hpp"

namespace uturn {

namespace {

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

Matrix two_columns(std::span<const double> a, std::span<const double> b) {
  Matrix m(a.size(), 2);
  for (std::size_t i = 0; i < a.size(); ++i) {
    m(i, 0) = a[i];
    m(i, 1) = b[i];
  }
  return m;
}

}  // namespace

TwoWayAnova two_way_anova(const Matrix& x) {
  const std::size_t n = x.rows();
  const std::size_t m = x.cols();
  if (n < 2 || m < 2) throw InvalidArgument("ANOVA needs at least 2 rows and 2 columns");
  std::vector<double> row_mean(n, 0.0), col_mean(m, 0.0);
  double grand = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      row_mean[i] += x(i, j);
      col_mean[j] += x(i, j);
      grand += x(i, j);
    }
  }
  for (auto& v : row_mean) v /= static_cast<double>(m);
  for (auto& v : col_mean) v /= static_cast<double>(n);
  grand /= static_cast<double>(n * m);

  double ss_rows = 0.0, ss_cols = 0.0, ss_total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ss_rows += (row_mean[i] - grand) * (row_mean[i] - grand);
  }
  for (std::size_t j = 0; j < m; ++j) {
    ss_cols += (col_mean[j] - grand) * (col_mean[j] - grand);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) ss_total += (x(i, j) - grand) * (x(i, j) - grand);
  }
  ss_rows *= static_cast<double>(m);
  ss_cols *= static_cast<double>(n);
  const double ss_error = std::max(0.0, ss_total - ss_rows - ss_cols);

  TwoWayAnova a;
  a.n = n;
  a.m = m;
  a.ms_rows = ss_rows / static_cast<double>(n - 1);
  a.ms_cols = ss_cols / static_cast<double>(m - 1);
  a.ms_error = ss_error / static_cast<double>((n - 1) * (m - 1));
  return a;
}

double icc_single(const Matrix& x, IccModel /*model*/, IccType type) {
  if (x.rows() < 3 || x.cols() < 2) throw InvalidArgument("ICC needs n >= 3 and m >= 2");
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) {
      if (!std::isfinite(x(i, j))) throw InvalidArgument("ICC input has missing cells");
    }
  }
  const TwoWayAnova a = two_way_anova(x);
  const auto n = static_cast<double>(a.n);
  const auto m = static_cast<double>(a.m);
  const double num = a.ms_rows - a.ms_error;
  double den = a.ms_rows + (m - 1.0) * a.ms_error;
  if (type == IccType::absolute_agreement) den += m * (a.ms_cols - a.ms_error) / n;
  if (!(den > 0.0) || (a.ms_rows == 0.0 && a.ms_cols == 0.0 && a.ms_error == 0.0)) {
    throw UndefinedStatistic("ICC undefined: no variance");
  }
  return num / den;
}

double clamp_icc(double icc) { return std::clamp(icc, -1.0, 1.0); }

PairedSeries PairedSeries::complete(std::vector<std::string> ids, std::vector<double> a,
                                    std::vector<double> b) {
  if (a.size() != b.size() || (!ids.empty() && ids.size() != a.size())) {
    throw InvalidArgument("paired series length mismatch");
  }
  PairedSeries out;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!std::isfinite(a[i]) || !std::isfinite(b[i])) continue;
    out.ids.push_back(ids.empty() ? std::to_string(i) : ids[i]);
    out.a.push_back(a[i]);
    out.b.push_back(b[i]);
  }
  return out;
}

BlandAltman bland_altman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("paired series length mismatch");
  if (a.size() < 3) throw InvalidArgument("insufficient participants");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  BlandAltman r;
  r.bias = mean_of(d);
  double ss = 0.0;
  for (double v : d) ss += (v - r.bias) * (v - r.bias);
  r.sd = std::sqrt(ss / static_cast<double>(d.size() - 1));
  r.loa_lower = r.bias - 1.96 * r.sd;
  r.loa_upper = r.bias + 1.96 * r.sd;
  return r;
}

BlandAltman bland_altman(const PairedSeries& pairs) { return bland_altman(pairs.a, pairs.b); }

std::vector<Interval> bootstrap_cis(std::size_t n_units, std::size_t n_stats,
                                    const VectorStatistic& stat,
                                    const BootstrapOptions& options) {
  if (n_units < 3) throw InvalidArgument("bootstrap needs at least 3 units");
  if (options.n_reps == 0) throw InvalidArgument("bootstrap needs at least one replicate");
  if (!(options.level > 0.0 && options.level < 1.0)) {
    throw InvalidArgument("confidence level must be in (0, 1)");
  }

  std::vector<std::optional<std::vector<double>>> results(options.n_reps);
  const auto run_range = [&](std::size_t begin, std::size_t end) {
    std::vector<std::size_t> sample(n_units);
    for (std::size_t r = begin; r < end; ++r) {
      Rng rng = Rng::derived(options.seed, r);
      for (auto& s : sample) s = rng.index(n_units);
      try {
        auto v = stat(sample, rng);
        if (v && v->size() != n_stats) {
          throw InvalidArgument("bootstrap statistic returned the wrong arity");
        }
        if (v && std::all_of(v->begin(), v->end(), [](double x) { return std::isfinite(x); })) {
          results[r] = std::move(v);
        }
      } catch (const UndefinedStatistic&) {
      }
    }
  };

  const unsigned threads = std::max(1u, std::min<unsigned>(options.threads,
                                                           static_cast<unsigned>(options.n_reps)));
  if (threads == 1) {
    run_range(0, options.n_reps);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (options.n_reps + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const std::size_t begin = t * chunk;
      const std::size_t end = std::min(options.n_reps, begin + chunk);
      if (begin < end) pool.emplace_back(run_range, begin, end);
    }
    for (auto& th : pool) th.join();
  }

  std::size_t undefined = 0;
  for (const auto& r : results) undefined += r ? 0 : 1;
  if (static_cast<double>(undefined) >
      options.max_undefined_fraction * static_cast<double>(options.n_reps)) {
    throw UndefinedStatistic("statistic undefined on " + std::to_string(undefined) + " of " +
                             std::to_string(options.n_reps) + " bootstrap replicates");
  }

  // 1 - 0.95 is not exactly 0.05; snap so that level 0.95 uses q = 0.025 / 0.975.
  const double alpha = std::round((1.0 - options.level) * 1e12) / 1e12;
  std::vector<Interval> cis(n_stats);
  std::vector<double> column;
  for (std::size_t k = 0; k < n_stats; ++k) {
    column.clear();
    for (const auto& r : results) {
      if (r) column.push_back((*r)[k]);
    }
    std::sort(column.begin(), column.end());
    cis[k] = {quantile_sorted(column, alpha / 2.0), quantile_sorted(column, 1.0 - alpha / 2.0)};
  }
  return cis;
}

Interval bootstrap_ci(std::size_t n_units, const ScalarStatistic& stat,
                      const BootstrapOptions& options) {
  const VectorStatistic wrapped = [&](std::span<const std::size_t> s,
                                      Rng& rng) -> std::optional<std::vector<double>> {
    auto v = stat(s, rng);
    if (!v) return std::nullopt;
    return std::vector<double>{*v};
  };
  return bootstrap_cis(n_units, 1, wrapped, options).front();
}

Interval bootstrap_ci(std::span<const double> data,
                      const std::function<double(std::span<const double>)>& stat,
                      const BootstrapOptions& options) {
  const ScalarStatistic wrapped = [&](std::span<const std::size_t> s,
                                      Rng&) -> std::optional<double> {
    std::vector<double> local(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) local[i] = data[s[i]];
    return stat(local);
  };
  return bootstrap_ci(data.size(), wrapped, options);
}

std::string_view classify_band(double value, BandScheme scheme) {
  if (scheme == BandScheme::icc_koo_li) {
    if (value < 0.50) return "poor";
    if (value < 0.75) return "moderate";
    if (value < 0.90) return "good";
    return "excellent";
  }
  const double r = std::abs(value);
  if (r < 0.20) return "very weak";
  if (r < 0.40) return "weak";
  if (r < 0.60) return "moderate";
  if (r < 0.80) return "strong";
  return "very strong";
}

std::string_view p_stars(double p) {
  if (p < 1e-4) return "****";
  if (p < 1e-3) return "***";
  if (p < 1e-2) return "**";
  if (p < 0.05) return "*";
  return "ns";
}

AgreementResult agreement(const PairedSeries& pairs, const BootstrapOptions& options) {
  const std::size_t n = pairs.size();
  if (n < 3) throw InvalidArgument("insufficient participants");
  AgreementResult r;
  r.n = n;
  r.icc31.value = icc_single(two_columns(pairs.a, pairs.b), IccModel::two_way_mixed_31);
  const BlandAltman ba = bland_altman(pairs);
  r.bias.value = ba.bias;
  r.loa_lower.value = ba.loa_lower;
  r.loa_upper.value = ba.loa_upper;
  r.icc_band = std::string(classify_band(r.icc31.value, BandScheme::icc_koo_li));

  const VectorStatistic stat = [&](std::span<const std::size_t> s,
                                   Rng&) -> std::optional<std::vector<double>> {
    std::vector<double> a(s.size()), b(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      a[i] = pairs.a[s[i]];
      b[i] = pairs.b[s[i]];
    }
    const double icc = icc_single(two_columns(a, b), IccModel::two_way_mixed_31);
    const BlandAltman rb = bland_altman(a, b);
    return std::vector<double>{icc, rb.bias, rb.loa_lower, rb.loa_upper};
  };
  const auto cis = bootstrap_cis(n, 4, stat, options);
  r.icc31.ci = cis[0];
  r.bias.ci = cis[1];
  r.loa_lower.ci = cis[2];
  r.loa_upper.ci = cis[3];
  return r;
}

double within_variance(const Matrix& x, VarianceMethod method) {
  const std::size_t n = x.rows();
  const std::size_t m = x.cols();
  if (n < 2 || m < 2) throw InvalidArgument("variance decomposition needs n >= 2, m >= 2");
  double grand = 0.0, ss_within = 0.0, ss_between = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < m; ++j) row += x(i, j);
    row /= static_cast<double>(m);
    grand += row;
    for (std::size_t j = 0; j < m; ++j) ss_within += (x(i, j) - row) * (x(i, j) - row);
  }
  grand /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < m; ++j) row += x(i, j);
    row /= static_cast<double>(m);
    ss_between += static_cast<double>(m) * (row - grand) * (row - grand);
  }
  const double ms_within = ss_within / static_cast<double>(n * (m - 1));
  if (method == VarianceMethod::moments) return ms_within;
  const double ms_between = ss_between / static_cast<double>(n - 1);
  if (ms_between >= ms_within) return ms_within;
  // Between-subject variance on the boundary: pooled residual variance.
  return (ss_within + ss_between) / static_cast<double>(n * m - 1);
}

double mdc_from_sem(double sem) { return kMdcFactor * sem; }

std::vector<ReliabilityResult> reliability_curve(std::span<const ParticipantTests> cohort,
                                                 const ReliabilityOptions& options) {
  if (options.k_min == 0 || options.k_min > options.k_max) {
    throw InvalidArgument("need 1 <= k_min <= k_max");
  }
  const auto with_pairs = std::count_if(cohort.begin(), cohort.end(), [](const auto& p) {
    return p.medians.size() >= 2;
  });
  if (with_pairs < 3) throw InvalidArgument("need at least 3 participants with 2 tests");

  const auto split_values = [&](const ParticipantTests& p, std::size_t k, Rng& rng) {
    return split_aggregate(p.medians, k, options.mode, rng);
  };
  const auto metrics = [&](const Matrix& x) {
    const double icc = icc_single(x, IccModel::two_way_random_21);
    const double var_w = within_variance(x, options.variance);
    const double sem = std::sqrt(var_w);
    return std::array<double, 4>{icc, sem, mdc_from_sem(sem), var_w};
  };

  std::vector<ReliabilityResult> out;
  for (std::size_t k = options.k_min; k <= options.k_max; ++k) {
    ReliabilityResult r;
    r.k = k;
    std::vector<std::size_t> retained;
    for (std::size_t i = 0; i < cohort.size(); ++i) {
      if (cohort[i].medians.size() >= 2 * k) retained.push_back(i);
    }
    r.n = retained.size();
    if (r.n < 3) {
      out.push_back(r);
      continue;
    }

    Matrix x(r.n, 2);
    for (std::size_t row = 0; row < r.n; ++row) {
      // One generator per participant, independent of k: splits are nested.
      Rng rng = Rng::derived(options.seed, retained[row]);
      const auto split = split_values(cohort[retained[row]], k, rng);
      x(row, 0) = split->first;
      x(row, 1) = split->second;
    }
    try {
      const auto point = metrics(x);
      r.icc21.value = point[0];
      r.sem.value = point[1];
      r.mdc.value = point[2];
      r.var_within = point[3];
    } catch (const UndefinedStatistic&) {
      out.push_back(r);
      continue;
    }

    BootstrapOptions boot;
    boot.n_reps = options.n_reps;
    boot.seed = mix_seed(options.seed, 0x10000 + k);
    boot.threads = options.threads;
    const VectorStatistic stat = [&](std::span<const std::size_t> s,
                                     Rng& rng) -> std::optional<std::vector<double>> {
      Matrix xb(s.size(), 2);
      for (std::size_t row = 0; row < s.size(); ++row) {
        const auto split = split_values(cohort[retained[s[row]]], k, rng);
        xb(row, 0) = split->first;
        xb(row, 1) = split->second;
      }
      const auto m = metrics(xb);
      return std::vector<double>{m[0], m[1], m[2]};
    };
    const auto cis = bootstrap_cis(r.n, 3, stat, boot);
    r.icc21.ci = cis[0];
    r.sem.ci = cis[1];
    r.mdc.ci = cis[2];
    r.available = true;
    out.push_back(r);
  }
  return out;
}

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = rank;
    i = j + 1;
  }
  return ranks;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw InvalidArgument("correlation needs equal-length inputs");
  }
  const double mx = mean_of(x);
  const double my = mean_of(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw UndefinedStatistic("correlation of a constant input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

CorrelationResult spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InvalidArgument("spearman needs equal-length inputs");
  if (x.size() < 3) throw InvalidArgument("spearman needs n >= 3");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  CorrelationResult r;
  r.rho = pearson(rx, ry);
  r.n = x.size();
  r.band = std::string(classify_band(r.rho, BandScheme::rho_swinscow));
  return r;
}

std::vector<double> mann_whitney_null_counts(std::size_t n_a, std::size_t n_b) {
  // counts[i][j] is the distribution for group sizes (i, j); U of the first
  // group grows by j when its largest element is the overall maximum.
  std::vector<std::vector<std::vector<double>>> counts(
      n_a + 1, std::vector<std::vector<double>>(n_b + 1));
  for (std::size_t i = 0; i <= n_a; ++i) {
    for (std::size_t j = 0; j <= n_b; ++j) {
      auto& dist = counts[i][j];
      dist.assign(i * j + 1, 0.0);
      if (i == 0 || j == 0) {
        dist[0] = 1.0;
        continue;
      }
      const auto& top_a = counts[i - 1][j];
      for (std::size_t u = 0; u < top_a.size(); ++u) dist[u + j] += top_a[u];
      const auto& top_b = counts[i][j - 1];
      for (std::size_t u = 0; u < top_b.size(); ++u) dist[u] += top_b[u];
    }
  }
  return counts[n_a][n_b];
}

GroupComparison mann_whitney(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty() || a.size() + b.size() < 4) {
    throw InvalidArgument("Mann-Whitney needs non-empty groups with n_a + n_b >= 4");
  }
  std::vector<double> all(a.begin(), a.end());
  all.insert(all.end(), b.begin(), b.end());
  if (std::all_of(all.begin(), all.end(), [&](double v) { return v == all.front(); })) {
    throw UndefinedStatistic("all values identical; Mann-Whitney p undefined");
  }
  const auto ranks = average_ranks(all);
  double rank_sum_a = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) rank_sum_a += ranks[i];

  GroupComparison g;
  g.n_a = a.size();
  g.n_b = b.size();
  const auto na = static_cast<double>(g.n_a);
  const auto nb = static_cast<double>(g.n_b);
  g.u_a = rank_sum_a - na * (na + 1.0) / 2.0;
  g.u_b = na * nb - g.u_a;
  g.median_difference = median(a) - median(b);

  std::vector<double> sorted = all;
  std::sort(sorted.begin(), sorted.end());
  double tie_term = 0.0;
  bool ties = false;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const auto t = static_cast<double>(j - i);
    if (j - i > 1) ties = true;
    tie_term += t * t * t - t;
    i = j;
  }

  if (!ties && g.n_a * g.n_b <= 400) {
    const auto counts = mann_whitney_null_counts(g.n_a, g.n_b);
    const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    const auto u = static_cast<std::size_t>(std::lround(g.u_a));
    double lower = 0.0, upper = 0.0;
    for (std::size_t v = 0; v < counts.size(); ++v) {
      if (v <= u) lower += counts[v];
      if (v >= u) upper += counts[v];
    }
    g.p_value = std::min(1.0, 2.0 * std::min(lower, upper) / total);
    g.exact = true;
    return g;
  }

  const double n = na + nb;
  const double mu = na * nb / 2.0;
  const double var = na * nb / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
  const double z = std::max(0.0, std::abs(g.u_a - mu) - 0.5) / std::sqrt(var);
  g.p_value = std::clamp(std::erfc(z / std::sqrt(2.0)), DBL_MIN, 1.0);
  return g;
}

}  // namespace uturn
