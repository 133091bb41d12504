#include "rnnsamp/stats.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "rnnsamp/error.hpp"

namespace rnnsamp {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInf = std::numeric_limits<double>::infinity();
} // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

double log_normal_cdf(double x) {
    if (x > 5.0) return std::log1p(-0.5 * std::erfc(x * kInvSqrt2));
    if (x > -35.0) return std::log(0.5 * std::erfc(-x * kInvSqrt2));
    // Asymptotic series for the lower tail: Phi(x) ~ phi(x)/(-x) * (1 - 1/x^2 + 3/x^4 - 15/x^6 + 105/x^8).
    const double x2 = x * x;
    const double inv = 1.0 / x2;
    const double series = 1.0 - inv * (1.0 - 3.0 * inv * (1.0 - 5.0 * inv * (1.0 - 7.0 * inv)));
    return -0.5 * x2 - std::log(-x) - 0.5 * std::log(2.0 * std::numbers::pi) + std::log(series);
}

double log_normal_cdf_diff(double a, double b) {
    if (!(a <= b)) throw ParameterError("log_normal_cdf_diff requires a <= b");
    if (a == b) return -kInf;
    if (a >= 0.0) return log_normal_cdf_diff(-b, -a);
    if (b <= 0.0) {
        const double lb = log_normal_cdf(b);
        const double la = log_normal_cdf(a);
        return lb + std::log1p(-std::exp(la - lb));
    }
    // a < 0 < b: the mass outside [a, b] is at most 1.
    return std::log1p(-(normal_cdf(a) + normal_cdf(-b)));
}

namespace {

void check_fit(const TruncatedNormalFit& fit) {
    if (!(fit.sigma > 0.0)) throw ParameterError("truncated normal sigma must be positive");
    if (!(fit.upper > fit.lower)) throw ParameterError("truncated normal bounds must satisfy lower < upper");
}

} // namespace

double truncnorm_log_cdf(double x, const TruncatedNormalFit& fit) {
    check_fit(fit);
    if (x >= fit.upper) return 0.0;
    if (x <= fit.lower) return kLogProbabilityFloor;
    const double alpha = (fit.lower - fit.mu) / fit.sigma;
    const double beta = (fit.upper - fit.mu) / fit.sigma;
    const double xi = (x - fit.mu) / fit.sigma;
    const double v = log_normal_cdf_diff(alpha, xi) - log_normal_cdf_diff(alpha, beta);
    if (std::isnan(v)) return kLogProbabilityFloor;
    return std::clamp(v, kLogProbabilityFloor, 0.0);
}

double truncnorm_cdf(double x, const TruncatedNormalFit& fit) {
    check_fit(fit);
    if (x <= fit.lower) return 0.0;
    if (x >= fit.upper) return 1.0;
    const double alpha = (fit.lower - fit.mu) / fit.sigma;
    const double beta = (fit.upper - fit.mu) / fit.sigma;
    const double xi = (x - fit.mu) / fit.sigma;
    const double v = std::exp(log_normal_cdf_diff(alpha, xi) - log_normal_cdf_diff(alpha, beta));
    return std::clamp(std::isnan(v) ? 0.0 : v, 0.0, 1.0);
}

namespace {

// Sufficient statistics: the likelihood only depends on n, the mean and the
// centered sum of squares, so each evaluation is O(1).
struct SampleMoments {
    double n = 0.0;
    double mean = 0.0;
    double ss = 0.0;  // sum (x - mean)^2
};

SampleMoments moments(std::span<const double> x) {
    SampleMoments m;
    m.n = static_cast<double>(x.size());
    m.mean = std::accumulate(x.begin(), x.end(), 0.0) / m.n;
    for (double v : x) m.ss += (v - m.mean) * (v - m.mean);
    return m;
}

double log_likelihood(const SampleMoments& m, double mu, double sigma, double lower, double upper) {
    const double log_z = log_normal_cdf_diff((lower - mu) / sigma, (upper - mu) / sigma);
    const double sq = m.ss + m.n * (m.mean - mu) * (m.mean - mu);
    return -m.n * (0.5 * std::log(2.0 * std::numbers::pi) + std::log(sigma) + log_z) - sq / (2.0 * sigma * sigma);
}

} // namespace

double truncnorm_log_likelihood(std::span<const double> samples, double mu, double sigma, double lower,
                                double upper) {
    if (samples.empty()) return 0.0;
    if (!(sigma > 0.0)) throw ParameterError("sigma must be positive");
    return log_likelihood(moments(samples), mu, sigma, lower, upper);
}

TruncatedNormalFit fit_truncated_normal(std::span<const double> samples, double lower, double upper,
                                        const FitOptions& options) {
    if (!(upper > lower)) throw ParameterError("truncation bounds must satisfy lower < upper");
    if (samples.size() < 2) throw ParameterError("truncated normal fit needs at least two samples");
    for (double v : samples) {
        if (!(v >= lower && v <= upper)) {
            throw ParameterError("sample " + std::to_string(v) + " lies outside [" + std::to_string(lower) + ", " +
                                 std::to_string(upper) + "]");
        }
    }

    const SampleMoments m = moments(samples);
    TruncatedNormalFit fit;
    fit.lower = lower;
    fit.upper = upper;
    const auto [mn, mx] = std::minmax_element(samples.begin(), samples.end());
    if (*mn == *mx) {
        fit.mu = *mn;
        fit.sigma = kSigmaFloor;
        fit.converged = false;
        fit.log_likelihood = log_likelihood(m, fit.mu, fit.sigma, lower, upper);
        return fit;
    }

    const double sd = std::max(std::sqrt(m.ss / (m.n - 1.0)), kSigmaFloor);

    // Search box: location within ten widths of the interval, scale up to a hundred widths.
    const double width = upper - lower;
    const double mu_lo = lower - 10.0 * width, mu_hi = upper + 10.0 * width;
    const double ls_lo = std::log(kSigmaFloor), ls_hi = std::log(100.0 * width);

    using Point = std::array<double, 2>;
    auto objective = [&](const Point& p) {
        if (p[0] < mu_lo || p[0] > mu_hi || p[1] < ls_lo || p[1] > ls_hi) return kInf;
        const double v = -log_likelihood(m, p[0], std::exp(p[1]), lower, upper);
        return std::isnan(v) ? kInf : v;
    };

    // Nelder-Mead with standard coefficients; one restart around the optimum
    // guards against premature simplex collapse.
    std::array<Point, 3> simplex;
    std::array<double, 3> values{};
    Point best{m.mean, std::log(sd)};
    std::size_t iterations = 0;
    bool converged = false;
    for (int round = 0; round < 2; ++round) {
        const double step_mu = std::max(0.1 * std::exp(best[1]), 1e-6 * width);
        simplex = {best, Point{best[0] + step_mu, best[1]}, Point{best[0], best[1] + 0.2}};
        for (std::size_t k = 0; k < 3; ++k) values[k] = objective(simplex[k]);
        converged = false;
        while (iterations < options.max_iterations) {
            std::array<std::size_t, 3> order{0, 1, 2};
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
            const std::size_t ib = order[0], im = order[1], iw = order[2];

            const double spread = std::max({std::abs(simplex[im][0] - simplex[ib][0]),
                                            std::abs(simplex[iw][0] - simplex[ib][0]),
                                            std::abs(simplex[im][1] - simplex[ib][1]),
                                            std::abs(simplex[iw][1] - simplex[ib][1])});
            if (std::isfinite(values[ib]) &&
                values[iw] - values[ib] <= options.tolerance * (1.0 + std::abs(values[ib])) &&
                spread <= std::sqrt(options.tolerance) * 1e-2) {
                converged = true;
                break;
            }
            ++iterations;

            const Point centroid{(simplex[ib][0] + simplex[im][0]) / 2.0, (simplex[ib][1] + simplex[im][1]) / 2.0};
            auto along = [&](double t) {
                return Point{centroid[0] + t * (simplex[iw][0] - centroid[0]),
                             centroid[1] + t * (simplex[iw][1] - centroid[1])};
            };
            const Point reflected = along(-1.0);
            const double fr = objective(reflected);
            if (fr < values[ib]) {
                const Point expanded = along(-2.0);
                const double fe = objective(expanded);
                if (fe < fr) {
                    simplex[iw] = expanded;
                    values[iw] = fe;
                } else {
                    simplex[iw] = reflected;
                    values[iw] = fr;
                }
                continue;
            }
            if (fr < values[im]) {
                simplex[iw] = reflected;
                values[iw] = fr;
                continue;
            }
            const bool outside = fr < values[iw];
            const Point contracted = along(outside ? -0.5 : 0.5);
            const double fc = objective(contracted);
            if (fc < (outside ? fr : values[iw])) {
                simplex[iw] = contracted;
                values[iw] = fc;
                continue;
            }
            for (std::size_t k : {im, iw}) {
                simplex[k] = Point{simplex[ib][0] + 0.5 * (simplex[k][0] - simplex[ib][0]),
                                   simplex[ib][1] + 0.5 * (simplex[k][1] - simplex[ib][1])};
                values[k] = objective(simplex[k]);
            }
        }
        const auto ib = static_cast<std::size_t>(std::min_element(values.begin(), values.end()) - values.begin());
        best = simplex[ib];
        if (!converged) break;
    }

    fit.mu = best[0];
    fit.sigma = std::max(std::exp(best[1]), kSigmaFloor);
    fit.converged = converged;
    fit.iterations = iterations;
    fit.log_likelihood = log_likelihood(m, fit.mu, fit.sigma, lower, upper);
    return fit;
}

double mean(std::span<const double> x) {
    if (x.empty()) throw SizeError("mean of an empty vector");
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double sample_sd(std::span<const double> x) {
    if (x.size() < 2) return 0.0;
    const double mu = mean(x);
    double ss = 0.0;
    for (double v : x) ss += (v - mu) * (v - mu);
    return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw DimensionError("pearson: length mismatch");
    if (x.size() < 3) throw SizeError("pearson needs at least three observations");
    const double mx = mean(x), my = mean(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (!(sxx > 0.0) || !(syy > 0.0)) throw ParameterError("pearson: zero variance");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> midranks(std::span<const double> x) {
    std::vector<std::size_t> idx(x.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> ranks(x.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
        const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
        i = j + 1;
    }
    return ranks;
}

SpearmanResult spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw DimensionError("spearman: length mismatch");
    if (x.size() < 4) throw SizeError("spearman needs at least four observations");
    auto all_tied = [](std::span<const double> v) {
        return std::all_of(v.begin(), v.end(), [&](double e) { return e == v.front(); });
    };
    if (all_tied(x) || all_tied(y)) throw ParameterError("spearman: all values tied");

    const auto rx = midranks(x);
    const auto ry = midranks(y);
    SpearmanResult r;
    r.rho = pearson(rx, ry);
    const double df = static_cast<double>(x.size()) - 2.0;
    if (std::abs(r.rho) >= 1.0) {
        r.p_value = 0.0;
    } else {
        const double t = r.rho * std::sqrt(df / (1.0 - r.rho * r.rho));
        const boost::math::students_t dist(df);
        r.p_value = std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))), 0.0, 1.0);
    }
    return r;
}

std::vector<int> assign_deciles(std::span<const double> values, bool descending) {
    const std::size_t n = values.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return descending ? values[a] > values[b] : values[a] < values[b];
    });
    std::vector<int> deciles(n);
    for (std::size_t r = 0; r < n; ++r) deciles[idx[r]] = static_cast<int>(r * 10 / n) + 1;
    return deciles;
}

namespace {

// Cholesky factor of a symmetric positive definite matrix (lower triangle, row-major).
// Returns false when a pivot falls below `tol`.
bool cholesky(std::vector<double>& a, std::size_t p, double tol) {
    for (std::size_t j = 0; j < p; ++j) {
        double d = a[j * p + j];
        for (std::size_t k = 0; k < j; ++k) d -= a[j * p + k] * a[j * p + k];
        if (!(d > tol)) return false;
        const double l = std::sqrt(d);
        a[j * p + j] = l;
        for (std::size_t i = j + 1; i < p; ++i) {
            double s = a[i * p + j];
            for (std::size_t k = 0; k < j; ++k) s -= a[i * p + k] * a[j * p + k];
            a[i * p + j] = s / l;
        }
    }
    return true;
}

std::vector<double> cholesky_solve(const std::vector<double>& l, std::size_t p, std::vector<double> b) {
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t k = 0; k < i; ++k) b[i] -= l[i * p + k] * b[k];
        b[i] /= l[i * p + i];
    }
    for (std::size_t i = p; i-- > 0;) {
        for (std::size_t k = i + 1; k < p; ++k) b[i] -= l[k * p + i] * b[k];
        b[i] /= l[i * p + i];
    }
    return b;
}

double design(const Matrix& features, std::size_t r, std::size_t c) { return c == 0 ? 1.0 : features(r, c - 1); }

} // namespace

LinearModel ols_fit(const Matrix& features, std::span<const double> target, std::vector<std::string> feature_names) {
    const std::size_t n = target.size();
    if (features.rows() != n) throw DimensionError("ols_fit: feature rows do not match target length");
    const std::size_t p = features.cols() + 1;
    if (n <= p) {
        throw SizeError("ols_fit needs more observations (" + std::to_string(n) + ") than coefficients (" +
                        std::to_string(p) + ")");
    }
    if (feature_names.empty()) {
        for (std::size_t c = 0; c < features.cols(); ++c) feature_names.push_back("x" + std::to_string(c + 1));
    }
    if (feature_names.size() != features.cols()) throw DimensionError("ols_fit: feature name count mismatch");

    std::vector<double> xtx(p * p, 0.0), xty(p, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t i = 0; i < p; ++i) {
            const double xi = design(features, r, i);
            xty[i] += xi * target[r];
            for (std::size_t j = 0; j <= i; ++j) xtx[i * p + j] += xi * design(features, r, j);
        }
    }
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = i + 1; j < p; ++j) xtx[i * p + j] = xtx[j * p + i];
    }

    // Jacobi scaling makes the pivot test independent of feature units.
    std::vector<double> scale(p);
    for (std::size_t i = 0; i < p; ++i) {
        if (!(xtx[i * p + i] > 0.0)) throw SingularMatrixError("ols_fit: design matrix has a zero column");
        scale[i] = 1.0 / std::sqrt(xtx[i * p + i]);
    }
    std::vector<double> scaled(p * p);
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j < p; ++j) scaled[i * p + j] = xtx[i * p + j] * scale[i] * scale[j];
    }
    std::vector<double> factor = scaled;
    if (!cholesky(factor, p, 1e-10)) throw SingularMatrixError("ols_fit: design matrix is rank deficient");

    auto solve = [&](const std::vector<double>& rhs) {
        std::vector<double> b(p);
        for (std::size_t i = 0; i < p; ++i) b[i] = rhs[i] * scale[i];
        auto z = cholesky_solve(factor, p, std::move(b));
        for (std::size_t i = 0; i < p; ++i) z[i] *= scale[i];
        return z;
    };
    std::vector<double> beta = solve(xty);
    // One step of iterative refinement on the normal equations.
    std::vector<double> resid(p);
    for (std::size_t i = 0; i < p; ++i) {
        double s = xty[i];
        for (std::size_t j = 0; j < p; ++j) s -= xtx[i * p + j] * beta[j];
        resid[i] = s;
    }
    const auto delta = solve(resid);
    for (std::size_t i = 0; i < p; ++i) beta[i] += delta[i];

    LinearModel model;
    model.coefficients = std::move(beta);
    model.feature_names = std::move(feature_names);
    model.n_obs = n;
    model.fitted = ols_predict(model, features);
    model.residuals.resize(n);
    double rss = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        model.residuals[r] = target[r] - model.fitted[r];
        rss += model.residuals[r] * model.residuals[r];
    }
    model.residual_standard_error = std::sqrt(rss / static_cast<double>(n - p));
    return model;
}

std::vector<double> ols_predict(const LinearModel& model, const Matrix& features) {
    if (model.coefficients.empty()) throw ParameterError("ols_predict: empty model");
    if (features.cols() + 1 != model.coefficients.size()) {
        throw DimensionError("ols_predict: model expects " + std::to_string(model.coefficients.size() - 1) +
                             " features, got " + std::to_string(features.cols()));
    }
    std::vector<double> out(features.rows());
    for (std::size_t r = 0; r < features.rows(); ++r) {
        double s = model.coefficients[0];
        for (std::size_t c = 0; c < features.cols(); ++c) s += model.coefficients[c + 1] * features(r, c);
        out[r] = s;
    }
    return out;
}

} // namespace rnnsamp
