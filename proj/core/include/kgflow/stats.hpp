#ifndef KGFLOW_STATS_HPP
#define KGFLOW_STATS_HPP

#include <functional>
#include <span>
#include <vector>

namespace kgflow {

/// Sum of per-sample contributions with a batch-means standard error
/// (contiguous index batches; values need not be identically distributed,
/// only exchangeable across batches).
struct BatchStats {
    double total = 0.0;
    double se = 0.0;
};
BatchStats batch_total(std::span<const double> values, int batches);

/// One-sample Kolmogorov-Smirnov test against a continuous CDF, with the
/// asymptotic tail probability Q(lambda) = 2 sum_j (-1)^(j-1) exp(-2 j^2 lambda^2).
struct KsResult {
    double statistic = 0.0;  // sup |F_n - F|
    double p_value = 0.0;
};
KsResult ks_test(std::vector<double> samples, const std::function<double(double)>& cdf);

/// Least-squares line y = intercept + slope * x.
struct LineFit {
    double intercept = 0.0;
    double slope = 0.0;
};
LineFit fit_line(std::span<const double> x, std::span<const double> y);

/// Golden-section refinement of a minimum of a unimodal f on [a, b].
double golden_section_min(const std::function<double(double)>& f, double a, double b,
                          double tol = 1e-12);

}  // namespace kgflow

#endif
