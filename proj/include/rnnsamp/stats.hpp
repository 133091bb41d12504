#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "rnnsamp/matrix.hpp"

namespace rnnsamp {

// ---------------------------------------------------------------------------
// Normal distribution
//
// The standard normal CDF is evaluated as 0.5*erfc(-x/sqrt(2)) using the C
// library's erfc (correctly rounded to within a few ulp, far below 1e-12
// absolute error). The log-CDF switches to an asymptotic expansion below
// x = -35 where erfc would underflow.
// ---------------------------------------------------------------------------

double normal_cdf(double x);
double log_normal_cdf(double x);

/// log(Phi(b) - Phi(a)) for a <= b, accurate in both tails; -inf when a == b.
double log_normal_cdf_diff(double a, double b);

/// Lower floor for log-probabilities (smallest representable exponent of a double).
inline constexpr double kLogProbabilityFloor = -745.0;

// ---------------------------------------------------------------------------
// Truncated normal
// ---------------------------------------------------------------------------

struct TruncatedNormalFit {
    double mu = 0.0;
    double sigma = 1.0;
    double lower = 0.0;
    double upper = 1.0;
    bool converged = false;
    std::size_t iterations = 0;
    double log_likelihood = 0.0;

    bool operator==(const TruncatedNormalFit&) const = default;
};

/// CDF of N(mu, sigma) truncated to [lower, upper]; 0 at/below lower, 1 at/above upper.
/// Throws ParameterError when sigma <= 0 or the bounds are not ordered.
double truncnorm_cdf(double x, const TruncatedNormalFit& fit);

/// log of truncnorm_cdf computed without forming the (possibly underflowing)
/// probability; floored at kLogProbabilityFloor.
double truncnorm_log_cdf(double x, const TruncatedNormalFit& fit);

/// Log-likelihood of `samples` under the truncated normal (mu, sigma, [lower, upper]).
double truncnorm_log_likelihood(std::span<const double> samples, double mu, double sigma, double lower,
                                double upper);

struct FitOptions {
    std::size_t max_iterations = 5000;
    double tolerance = 1e-10;
};

/// Smallest scale a fit may report.
inline constexpr double kSigmaFloor = 1e-9;

/// Maximum-likelihood (mu, sigma) by a bounded Nelder-Mead search over
/// (mu, log sigma), started from the sample mean and standard deviation.
///
/// Zero-variance samples give a degenerate fit: mu = the common value,
/// sigma = kSigmaFloor, converged = false.
/// Throws ParameterError for fewer than two samples or samples outside the bounds.
TruncatedNormalFit fit_truncated_normal(std::span<const double> samples, double lower, double upper,
                                        const FitOptions& options = {});

// ---------------------------------------------------------------------------
// Descriptive statistics and correlation
// ---------------------------------------------------------------------------

double mean(std::span<const double> x);

/// Sample standard deviation (n-1 denominator); 0 for fewer than two values.
double sample_sd(std::span<const double> x);

/// Sample Pearson correlation. Throws on length mismatch, n < 3, or zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

/// 1-based ranks with ties sharing their average rank.
std::vector<double> midranks(std::span<const double> x);

struct SpearmanResult {
    double rho = 0.0;
    double p_value = 1.0;
};

/// Spearman rank correlation with a two-sided p-value from the t approximation
/// (n-2 degrees of freedom). Throws on n < 4 or an all-tied vector.
SpearmanResult spearman(std::span<const double> x, std::span<const double> y);

/// Rank-based decile labels 1..10; decile 1 holds the smallest values, or the
/// largest when `descending`. Ties keep input order. Bucket sizes differ by at most 1.
std::vector<int> assign_deciles(std::span<const double> values, bool descending);

// ---------------------------------------------------------------------------
// Ordinary least squares
// ---------------------------------------------------------------------------

struct LinearModel {
    std::vector<double> coefficients;  // intercept first
    std::vector<std::string> feature_names;
    double residual_standard_error = 0.0;
    std::size_t n_obs = 0;
    std::vector<double> fitted;
    std::vector<double> residuals;
};

/// Least squares with an intercept, solved through the normal equations
/// (Jacobi-scaled Cholesky with a rank check and one refinement step).
/// `features` is [n_obs x n_features] and may have zero columns.
/// Throws SizeError unless n_obs > n_features + 1, SingularMatrixError on rank deficiency.
LinearModel ols_fit(const Matrix& features, std::span<const double> target,
                    std::vector<std::string> feature_names = {});

std::vector<double> ols_predict(const LinearModel& model, const Matrix& features);

} // namespace rnnsamp
