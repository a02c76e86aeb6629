#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "uturn/csv.hpp"
#include "uturn/stats.hpp"

using namespace uturn;

namespace {

Matrix to_matrix(const std::vector<std::vector<double>>& rows) {
  Matrix m(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return m;
}

std::vector<std::vector<double>> random_rows(Rng& rng, std::size_t n, std::size_t m) {
  std::vector<std::vector<double>> rows(n, std::vector<double>(m));
  for (auto& row : rows) {
    const double subject = rng.normal(1.4, 0.3);
    for (std::size_t j = 0; j < m; ++j) row[j] = subject + 0.05 * j + rng.normal(0.0, 0.12);
  }
  return rows;
}

std::vector<std::vector<double>> load_fixture() {
  std::ifstream in(std::string(UTURN_TEST_DATA_DIR) + "/icc_fixture.csv");
  REQUIRE(in.good());
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

TEST_SUITE("stats") {
  TEST_CASE("ICC on the Shrout-Fleiss ratings") {
    const auto rows = load_fixture();
    const auto x = to_matrix(rows);
    // Published single-rater values: ICC(2,1) = 0.29, ICC(3,1) = 0.71.
    CHECK(icc_single(x, IccModel::two_way_random_21) == doctest::Approx(0.29).epsilon(0.01));
    CHECK(icc_single(x, IccModel::two_way_mixed_31, IccType::consistency) ==
          doctest::Approx(0.71).epsilon(0.01));
    const auto o = oracle::icc(rows);
    CHECK(icc_single(x, IccModel::two_way_random_21) == doctest::Approx(o.agreement).epsilon(1e-12));
    CHECK(icc_single(x, IccModel::two_way_mixed_31, IccType::consistency) ==
          doctest::Approx(o.consistency).epsilon(1e-12));
  }

  TEST_CASE("ICC agrees with the variance-component oracle") {
    Rng rng(31);
    for (int trial = 0; trial < 100; ++trial) {
      const auto rows = random_rows(rng, 3 + rng.index(18), 2 + rng.index(3));
      const auto o = oracle::icc(rows);
      const auto x = to_matrix(rows);
      CHECK(std::abs(icc_single(x, IccModel::two_way_mixed_31) - o.agreement) <= 1e-9);
      CHECK(std::abs(icc_single(x, IccModel::two_way_random_21, IccType::consistency) -
                     o.consistency) <= 1e-9);
    }
  }

  TEST_CASE("ICC properties") {
    Rng rng(8);
    const auto rows = random_rows(rng, 12, 2);
    auto same = rows;
    for (auto& r : same) r[1] = r[0];
    CHECK(icc_single(to_matrix(same), IccModel::two_way_mixed_31) == doctest::Approx(1.0));

    const double base = icc_single(to_matrix(rows), IccModel::two_way_mixed_31);
    auto offset = rows;
    for (auto& r : offset) r[1] += 0.3;
    CHECK(icc_single(to_matrix(offset), IccModel::two_way_mixed_31) < base);
    CHECK(icc_single(to_matrix(offset), IccModel::two_way_mixed_31, IccType::consistency) ==
          doctest::Approx(icc_single(to_matrix(rows), IccModel::two_way_mixed_31,
                                     IccType::consistency)).epsilon(1e-9));

    auto shifted = rows;
    for (auto& r : shifted)
      for (auto& v : r) v += 17.0;
    CHECK(icc_single(to_matrix(shifted), IccModel::two_way_mixed_31) ==
          doctest::Approx(base).epsilon(1e-9));

    Matrix flat(5, 2, 1.0);
    CHECK_THROWS_AS(icc_single(flat, IccModel::two_way_mixed_31), UndefinedStatistic);
    CHECK_THROWS_AS(icc_single(Matrix(2, 2, 1.0), IccModel::two_way_mixed_31), InvalidArgument);
    CHECK(clamp_icc(-1.7) == -1.0);
    CHECK(clamp_icc(0.4) == 0.4);
  }

  TEST_CASE("Bland-Altman") {
    const std::vector<double> a{1.1, 1.5, 1.3, 1.8, 1.2};
    const auto same = bland_altman(a, a);
    CHECK(same.bias == 0.0);
    CHECK(same.loa_lower == 0.0);
    CHECK(same.loa_upper == 0.0);

    std::vector<double> b = a;
    for (auto& v : b) v -= 0.2;
    const auto off = bland_altman(a, b);
    CHECK(off.bias == doctest::Approx(0.2));
    CHECK(off.sd == doctest::Approx(0.0).epsilon(1e-12));

    Rng rng(4);
    std::vector<double> x(40), y(40);
    for (std::size_t i = 0; i < 40; ++i) {
      x[i] = rng.normal(1.4, 0.3);
      y[i] = x[i] - rng.normal(0.1, 0.15);
    }
    const auto ab = bland_altman(x, y);
    const auto ba = bland_altman(y, x);
    CHECK(ba.bias == doctest::Approx(-ab.bias).epsilon(1e-12));
    CHECK(ba.loa_lower == doctest::Approx(-ab.loa_upper).epsilon(1e-12));
    CHECK(ab.loa_upper - ab.loa_lower == doctest::Approx(2 * 1.96 * ab.sd).epsilon(1e-12));

    CHECK_THROWS_WITH_AS(bland_altman(std::vector<double>{1, 2}, std::vector<double>{1, 2}),
                         "insufficient participants", InvalidArgument);
  }

  TEST_CASE("Bland-Altman on a 93-pair cohort with 0.11 rad/s offset") {
    Rng rng(93);
    std::vector<double> a(93), b(93);
    for (std::size_t i = 0; i < 93; ++i) {
      b[i] = rng.normal(1.40, 0.30);
      a[i] = b[i] + 0.11 + rng.normal(0.0, 0.165);
    }
    const auto r = bland_altman(a, b);
    CHECK(r.bias == doctest::Approx(0.11).epsilon(0.35));
    CHECK(r.loa_lower == doctest::Approx(-0.22).epsilon(0.35));
    CHECK(r.loa_upper == doctest::Approx(0.43).epsilon(0.2));
  }

  TEST_CASE("paired series drops incomplete pairs") {
    const auto p = PairedSeries::complete({"a", "b", "c"}, {1.0, NAN, 3.0}, {1.0, 2.0, INFINITY});
    CHECK(p.size() == 1);
    CHECK(p.ids == std::vector<std::string>{"a"});
    CHECK_THROWS_AS(PairedSeries::complete({"a"}, {1.0, 2.0}, {1.0}), InvalidArgument);
  }

  TEST_CASE("bootstrap: constant data gives a degenerate interval") {
    const std::vector<double> v(20, 1.44);
    BootstrapOptions opt;
    opt.n_reps = 200;
    const auto ci = bootstrap_ci(v, mean_of, opt);
    CHECK(ci.lower == doctest::Approx(1.44).epsilon(1e-12));
    CHECK(ci.upper == doctest::Approx(1.44).epsilon(1e-12));
  }

  TEST_CASE("bootstrap: deterministic, thread independent, equal to the oracle") {
    Rng rng(1);
    std::vector<double> v(30);
    for (auto& x : v) x = rng.normal(1.2, 0.4);
    BootstrapOptions opt;
    opt.n_reps = 500;
    opt.seed = 42;
    const auto a = bootstrap_ci(v, mean_of, opt);
    opt.threads = 4;
    const auto b = bootstrap_ci(v, mean_of, opt);
    CHECK(a.lower == b.lower);
    CHECK(a.upper == b.upper);
    const auto [lo, hi] = oracle::bootstrap_mean_ci(v, 500, 42);
    CHECK(a.lower == lo);
    CHECK(a.upper == hi);
    opt.seed = 43;
    const auto c = bootstrap_ci(v, mean_of, opt);
    CHECK((c.lower != a.lower || c.upper != a.upper));
    CHECK(a.lower < mean_of(v));
    CHECK(a.upper > mean_of(v));
  }

  TEST_CASE("bootstrap: too many undefined replicates") {
    BootstrapOptions opt;
    opt.n_reps = 100;
    std::size_t calls = 0;
    const ScalarStatistic mostly_undefined = [&](std::span<const std::size_t>,
                                                 Rng&) -> std::optional<double> {
      return calls++ % 4 == 0 ? std::optional<double>(1.0) : std::nullopt;
    };
    CHECK_THROWS_AS(bootstrap_ci(10, mostly_undefined, opt), UndefinedStatistic);
    calls = 0;
    const ScalarStatistic few_undefined = [&](std::span<const std::size_t>,
                                              Rng&) -> std::optional<double> {
      return calls++ % 10 == 0 ? std::nullopt : std::optional<double>(1.0);
    };
    CHECK_NOTHROW(bootstrap_ci(10, few_undefined, opt));
  }

  TEST_CASE("MDC from SEM") {
    CHECK(mdc_from_sem(0.15) == doctest::Approx(0.415779).epsilon(1e-6));
    CHECK(mdc_from_sem(0.06) == doctest::Approx(0.166312).epsilon(1e-5));
    Rng rng(3);
    for (int i = 0; i < 100; ++i) {
      const double sem = rng.uniform(0.0, 1.0);
      CHECK(std::abs(mdc_from_sem(sem) - 1.96 * std::sqrt(2.0) * sem) <= 1e-12);
    }
  }

  TEST_CASE("within-subject variance") {
    Matrix x(3, 2);
    x(0, 0) = 1.0, x(0, 1) = 1.2;
    x(1, 0) = 2.0, x(1, 1) = 1.6;
    x(2, 0) = 3.0, x(2, 1) = 3.0;
    // One-way MSW: sum over subjects of within SS / (n (m - 1)).
    const double msw = (0.02 + 0.08 + 0.0) / 3.0;
    CHECK(within_variance(x) == doctest::Approx(msw).epsilon(1e-12));
    CHECK(within_variance(x, VarianceMethod::reml) == doctest::Approx(msw).epsilon(1e-12));
  }

  TEST_CASE("reliability curve on a normal cohort") {
    Rng rng(17);
    std::vector<ParticipantTests> cohort;
    for (int p = 0; p < 80; ++p) {
      ParticipantTests t;
      t.participant_id = "P" + std::to_string(p);
      const double mu = rng.normal(1.4, 0.3);
      const std::size_t n_tests = p < 40 ? 14 : 6;
      for (std::size_t i = 0; i < n_tests; ++i) t.medians.push_back(mu + rng.normal(0.0, 0.12));
      cohort.push_back(t);
    }
    ReliabilityOptions opt;
    opt.n_reps = 100;
    opt.threads = 2;
    const auto curve = reliability_curve(cohort, opt);
    REQUIRE(curve.size() == 7);
    // Single-test ICC = 0.09 / (0.09 + 0.0144).
    CHECK(curve[0].icc21.value == doctest::Approx(0.862).epsilon(0.06));
    CHECK(curve[0].n == 80);
    CHECK(curve[3].n == 40);
    CHECK(curve[6].n == 40);
    CHECK(curve[6].icc21.value > curve[0].icc21.value);
    for (const auto& r : curve) {
      CHECK(r.k >= 1);
      CHECK(r.available);
      CHECK(r.mdc.value == doctest::Approx(kMdcFactor * r.sem.value).epsilon(1e-12));
      CHECK(r.sem.value == doctest::Approx(std::sqrt(r.var_within)).epsilon(1e-12));
      CHECK(r.icc21.ci.lower <= r.icc21.ci.upper);
    }
    const auto again = reliability_curve(cohort, opt);
    for (std::size_t i = 0; i < curve.size(); ++i) {
      CHECK(again[i].icc21.value == curve[i].icc21.value);
      CHECK(again[i].icc21.ci.lower == curve[i].icc21.ci.lower);
    }
  }

  TEST_CASE("reliability marks k unavailable below three participants") {
    std::vector<ParticipantTests> cohort;
    for (int p = 0; p < 4; ++p) {
      ParticipantTests t{"P" + std::to_string(p), {}};
      const std::size_t n = p < 2 ? 10 : 4;
      for (std::size_t i = 0; i < n; ++i) t.medians.push_back(1.0 + 0.1 * p + 0.01 * i);
      cohort.push_back(t);
    }
    ReliabilityOptions opt;
    opt.k_max = 4;
    opt.n_reps = 50;
    const auto curve = reliability_curve(cohort, opt);
    CHECK(curve[1].available);
    CHECK(curve[1].n == 4);
    CHECK_FALSE(curve[2].available);
    CHECK(curve[2].n == 2);
  }

  TEST_CASE("average ranks") {
    const std::vector<double> v{3.0, 1.0, 3.0, 2.0};
    CHECK(average_ranks(v) == std::vector<double>{3.5, 1.0, 3.5, 2.0});
    Rng rng(9);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<double> x(2 + rng.index(20));
      for (auto& e : x) e = static_cast<double>(rng.index(5));
      CHECK(average_ranks(x) == oracle::count_ranks(x));
    }
  }

  TEST_CASE("Spearman") {
    const std::vector<double> x{1, 2, 3, 4, 5};
    CHECK(spearman(x, std::vector<double>{2, 4, 6, 8, 10}).rho == doctest::Approx(1.0));
    CHECK(spearman(x, std::vector<double>{5, 4, 3, 2, 1}).rho == doctest::Approx(-1.0));
    CHECK(spearman(x, std::vector<double>{2, 1, 4, 3, 5}).rho == doctest::Approx(0.8));
    CHECK(spearman(x, std::vector<double>{1, 3, 2, 5, 4}).rho == doctest::Approx(0.8));
    CHECK(spearman(x, std::vector<double>{3, 1, 2, 5, 4}).rho == doctest::Approx(0.6));
    CHECK(spearman(x, std::vector<double>{5, 4, 3, 2, 1}).band == "very strong");
    CHECK_THROWS_AS(spearman(x, std::vector<double>(5, 1.0)), UndefinedStatistic);

    Rng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<double> a(4 + rng.index(30)), b(a.size());
      for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = rng.normal();
        b[i] = std::round(2.0 * (a[i] + rng.normal())) / 2.0;
      }
      if (std::all_of(b.begin(), b.end(), [&](double v) { return v == b[0]; })) continue;
      const double rho = spearman(a, b).rho;
      CHECK(rho == doctest::Approx(oracle::spearman(a, b)).epsilon(1e-12));
      std::vector<double> ea(a.size());
      for (std::size_t i = 0; i < a.size(); ++i) ea[i] = std::exp(a[i]);
      CHECK(spearman(ea, b).rho == doctest::Approx(rho).epsilon(1e-12));
      CHECK(rho >= -1.0);
      CHECK(rho <= 1.0);
    }
  }

  TEST_CASE("band classification") {
    CHECK(classify_band(0.87, BandScheme::icc_koo_li) == "good");
    CHECK(classify_band(0.92, BandScheme::icc_koo_li) == "excellent");
    CHECK(classify_band(0.60, BandScheme::icc_koo_li) == "moderate");
    CHECK(classify_band(0.30, BandScheme::icc_koo_li) == "poor");
    CHECK(classify_band(-0.79, BandScheme::rho_swinscow) == "strong");
    CHECK(classify_band(-0.81, BandScheme::rho_swinscow) == "very strong");
    CHECK(classify_band(0.1, BandScheme::rho_swinscow) == "very weak");
    CHECK(p_stars(0.00005) == "****");
    CHECK(p_stars(0.0005) == "***");
    CHECK(p_stars(0.005) == "**");
    CHECK(p_stars(0.03) == "*");
    CHECK(p_stars(0.2) == "ns");
  }

  TEST_CASE("Mann-Whitney examples") {
    const auto r = mann_whitney(std::vector<double>{1, 2}, std::vector<double>{3, 4});
    CHECK(r.exact);
    CHECK(r.u_a == 0.0);
    CHECK(r.u_b == 4.0);
    CHECK(r.p_value == doctest::Approx(1.0 / 3.0).epsilon(1e-4));
    CHECK(r.median_difference == -2.0);

    const std::vector<double> g{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    const auto same = mann_whitney(g, g);
    CHECK(same.p_value > 0.99);
    CHECK_THROWS_AS(mann_whitney(std::vector<double>{}, g), InvalidArgument);
    CHECK_THROWS_AS(mann_whitney(std::vector<double>{2, 2}, std::vector<double>{2, 2, 2}),
                    UndefinedStatistic);
  }

  TEST_CASE("Mann-Whitney null distribution") {
    const auto counts = mann_whitney_null_counts(3, 4);
    CHECK(counts.size() == 13);
    CHECK(std::accumulate(counts.begin(), counts.end(), 0.0) == 35.0);
    for (std::size_t u = 0; u < counts.size(); ++u) CHECK(counts[u] == counts[12 - u]);
  }

  TEST_CASE("Mann-Whitney agrees with enumeration") {
    Rng rng(12);
    for (int trial = 0; trial < 60; ++trial) {
      std::vector<double> a(2 + rng.index(6)), b(2 + rng.index(6));
      for (auto& v : a) v = rng.normal(0.3, 1.0);
      for (auto& v : b) v = rng.normal();
      const auto r = mann_whitney(a, b);
      CHECK(r.exact);
      CHECK(r.u_a == oracle::mann_whitney_u(a, b));
      CHECK(r.u_a + r.u_b == static_cast<double>(a.size() * b.size()));
      CHECK(r.p_value == doctest::Approx(oracle::mann_whitney_exact_p(a, b)).epsilon(1e-12));
      const auto swapped = mann_whitney(b, a);
      CHECK(swapped.u_a == r.u_b);
      CHECK(swapped.p_value == doctest::Approx(r.p_value).epsilon(1e-12));
    }
  }

  TEST_CASE("Mann-Whitney normal approximation for large or tied samples") {
    Rng rng(6);
    std::vector<double> a(30), b(30);
    for (auto& v : a) v = std::round(rng.normal(1.0, 1.0) * 4) / 4;
    for (auto& v : b) v = std::round(rng.normal(0.0, 1.0) * 4) / 4;
    const auto r = mann_whitney(a, b);
    CHECK_FALSE(r.exact);
    CHECK(r.u_a + r.u_b == 900.0);
    CHECK(r.u_a == oracle::mann_whitney_u(a, b));
    CHECK(r.p_value < 0.01);
  }
}
