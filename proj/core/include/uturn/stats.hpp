#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "uturn/common.hpp"
#include "uturn/measures.hpp"
#include "uturn/rng.hpp"

namespace uturn {

/// Dense row-major matrix: rows are subjects, columns are measurements.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Mean squares of the two-way layout without replication.
struct TwoWayAnova {
  std::size_t n = 0;  // subjects
  std::size_t m = 0;  // measurements
  double ms_rows = 0.0;
  double ms_cols = 0.0;
  double ms_error = 0.0;
};

TwoWayAnova two_way_anova(const Matrix& x);

enum class IccModel { two_way_mixed_31, two_way_random_21 };
enum class IccType { absolute_agreement, consistency };

/// Single-measurement intraclass correlation from two-way ANOVA mean squares.
///
/// Absolute agreement: (MSR - MSE) / (MSR + (m-1) MSE + m (MSC - MSE) / n).
/// Consistency:        (MSR - MSE) / (MSR + (m-1) MSE).
/// Both models share these point formulas; the model only affects
/// interpretation. Needs n >= 3, m >= 2; throws UndefinedStatistic when the
/// matrix has no variance.
double icc_single(const Matrix& x, IccModel model,
                  IccType type = IccType::absolute_agreement);

/// ICC clamped to the reporting range [-1, 1].
double clamp_icc(double icc);

struct PairedSeries {
  std::vector<std::string> ids;
  std::vector<double> a;
  std::vector<double> b;

  /// Drops pairs with a non-finite member. Throws on length mismatch.
  static PairedSeries complete(std::vector<std::string> ids, std::vector<double> a,
                               std::vector<double> b);
  std::size_t size() const { return a.size(); }
};

struct BlandAltman {
  double bias = 0.0;
  double loa_lower = 0.0;
  double loa_upper = 0.0;
  double sd = 0.0;  // sample SD of the differences
};

/// d = a - b; bias = mean(d); limits = bias -/+ 1.96 SD(d). Needs n >= 3.
BlandAltman bland_altman(const PairedSeries& pairs);
BlandAltman bland_altman(std::span<const double> a, std::span<const double> b);

struct BootstrapOptions {
  std::size_t n_reps = 500;
  std::uint64_t seed = 0;
  double level = 0.95;
  /// Fraction of replicates allowed to be undefined before giving up.
  double max_undefined_fraction = 0.2;
  unsigned threads = 1;
};

/// Statistic on a bootstrap sample of unit indices. The generator is the
/// replicate's own stream and may be used for additional randomization.
/// Returning nullopt (or throwing UndefinedStatistic) marks the replicate
/// undefined.
using VectorStatistic =
    std::function<std::optional<std::vector<double>>(std::span<const std::size_t>, Rng&)>;
using ScalarStatistic =
    std::function<std::optional<double>(std::span<const std::size_t>, Rng&)>;

/// Percentile bootstrap over `n_units` resampled with replacement.
///
/// Replicate r draws from Rng::derived(seed, r), so results do not depend on
/// thread scheduling. Returns one interval per statistic component.
std::vector<Interval> bootstrap_cis(std::size_t n_units, std::size_t n_stats,
                                    const VectorStatistic& stat,
                                    const BootstrapOptions& options);

Interval bootstrap_ci(std::size_t n_units, const ScalarStatistic& stat,
                      const BootstrapOptions& options);

/// Convenience form for a statistic of a resampled data vector.
Interval bootstrap_ci(std::span<const double> data,
                      const std::function<double(std::span<const double>)>& stat,
                      const BootstrapOptions& options);

enum class BandScheme { icc_koo_li, rho_swinscow };

/// Qualitative label: ICC poor/moderate/good/excellent, |rho| very weak to
/// very strong.
std::string_view classify_band(double value, BandScheme scheme);

/// Significance stars: **** <1e-4, *** <1e-3, ** <1e-2, * <0.05, else "ns".
std::string_view p_stars(double p);

struct AgreementResult {
  std::size_t n = 0;
  Estimate icc31;  // absolute agreement
  Estimate bias;
  Estimate loa_lower;
  Estimate loa_upper;
  std::string icc_band;
};

/// ICC(3,1) absolute agreement plus Bland-Altman, with participant
/// bootstrap CIs for every quantity.
AgreementResult agreement(const PairedSeries& pairs, const BootstrapOptions& options);

enum class VarianceMethod {
  moments,  // one-way ANOVA method of moments
  reml,     // balanced-design REML: moments with the between variance truncated at 0
};

struct ParticipantTests {
  std::string participant_id;
  std::vector<double> medians;  // per-test turn speed medians
};

struct ReliabilityOptions {
  std::size_t k_min = 1;
  std::size_t k_max = 7;
  std::uint64_t seed = 0;
  std::size_t n_reps = 500;
  PartitionMode mode = PartitionMode::random;
  VarianceMethod variance = VarianceMethod::moments;
  unsigned threads = 1;
};

inline constexpr double kMdcFactor = 1.96 * 1.4142135623730950488;

struct ReliabilityResult {
  std::size_t k = 0;
  std::size_t n = 0;  // participants with at least 2k tests
  bool available = false;
  Estimate icc21;
  Estimate sem;
  Estimate mdc;
  double var_within = 0.0;
};

/// Within-subject residual variance of an n x m matrix.
double within_variance(const Matrix& x, VarianceMethod method = VarianceMethod::moments);

double mdc_from_sem(double sem);

/// Test-retest reliability for every k in [k_min, k_max].
///
/// For each k, participants with at least 2k tests are split into two
/// k-test aggregates; ICC(2,1), SEM and MDC are computed on the resulting
/// n x 2 matrix. CIs resample participants and redraw the splits. A k with
/// fewer than 3 retained participants is reported unavailable.
std::vector<ReliabilityResult> reliability_curve(std::span<const ParticipantTests> cohort,
                                                 const ReliabilityOptions& options);

struct CorrelationResult {
  double rho = 0.0;
  std::size_t n = 0;
  std::string band;
};

/// Average ranks (1-based) with ties sharing their mean rank.
std::vector<double> average_ranks(std::span<const double> values);

double pearson(std::span<const double> x, std::span<const double> y);

/// Spearman rank correlation; throws UndefinedStatistic on constant input.
CorrelationResult spearman(std::span<const double> x, std::span<const double> y);

struct GroupComparison {
  double u_a = 0.0;  // U of the first group; the reported statistic
  double u_b = 0.0;
  double p_value = 1.0;  // two-sided
  bool exact = false;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
  double median_difference = 0.0;  // median(a) - median(b)
};

/// Number of group assignments giving each U, for U = 0..n_a*n_b.
std::vector<double> mann_whitney_null_counts(std::size_t n_a, std::size_t n_b);

/// Mann-Whitney U test. Exact null distribution when n_a*n_b <= 400 and
/// there are no ties, otherwise the normal approximation with tie and
/// continuity corrections.
GroupComparison mann_whitney(std::span<const double> a, std::span<const double> b);

}  // namespace uturn
